#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metrics.hpp"

namespace convohate {

struct NamedReport {
  std::string name;
  MetricsReport report;
};

struct RenderOptions {
  bool figures = false;
};

struct RenderedReport {
  std::string json;   // {"runs": [...]}, one row per report in the given order
  std::string table;  // plain-text table: model, F1, precision, recall, accuracy, MR
  std::vector<std::pair<std::string, std::string>> figures;  // file name -> SVG
};

// Scores are rounded to 4 decimals, accuracy and percentages to 2. Output is
// a pure function of the inputs. Throws kArgument on an empty list.
RenderedReport render_report(std::span<const NamedReport> reports, const RenderOptions& options = {});

// Writes report.json, report.txt and any figures into dir. Throws kIo.
void write_report(const RenderedReport& rendered, const std::filesystem::path& dir);

}  // namespace convohate
