#include "report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "error.hpp"

namespace convohate {
namespace {

using nlohmann::ordered_json;

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, round_to(v, decimals));
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string safe_file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out.empty() ? "run" : out;
}

std::string bar_chart_svg(std::span<const NamedReport> reports) {
  const int bar_w = 60;
  const int gap = 30;
  const int plot_h = 240;
  const int left = 50;
  const int top = 30;
  const int width = left + static_cast<int>(reports.size()) * (bar_w + gap) + gap;
  const int height = top + plot_h + 70;
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg += "<text x=\"" + std::to_string(width / 2) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">Macro F1</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const int y = top + plot_h - tick * plot_h / 4;
    svg += "<line x1=\"" + std::to_string(left) + "\" y1=\"" + std::to_string(y) + "\" x2=\"" +
           std::to_string(width - 10) + "\" y2=\"" + std::to_string(y) + "\" stroke=\"#ddd\"/>\n";
    svg += "<text x=\"" + std::to_string(left - 6) + "\" y=\"" + std::to_string(y + 4) +
           "\" text-anchor=\"end\">" + fixed(tick * 0.25, 2) + "</text>\n";
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const double f1 = std::clamp(reports[i].report.macro_f1, 0.0, 1.0);
    const int h = static_cast<int>(f1 * plot_h + 0.5);
    const int x = left + gap + static_cast<int>(i) * (bar_w + gap);
    const int y = top + plot_h - h;
    svg += "<rect x=\"" + std::to_string(x) + "\" y=\"" + std::to_string(y) + "\" width=\"" +
           std::to_string(bar_w) + "\" height=\"" + std::to_string(h) + "\" fill=\"#4c72b0\"/>\n";
    svg += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" + std::to_string(y - 4) +
           "\" text-anchor=\"middle\">" + fixed(reports[i].report.macro_f1, 4) + "</text>\n";
    svg += "<text x=\"" + std::to_string(x + bar_w / 2) + "\" y=\"" + std::to_string(top + plot_h + 16) +
           "\" text-anchor=\"middle\">" + xml_escape(reports[i].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::string heatmap_svg(const NamedReport& named) {
  const auto& cm = named.report.confusion;
  std::size_t max_cell = 1;
  for (const auto& row : cm.counts)
    for (std::size_t c : row) max_cell = std::max(max_cell, c);
  const int cell = 90;
  const int left = 70;
  const int top = 50;
  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(left + 2 * cell + 20) +
      "\" height=\"" + std::to_string(top + 2 * cell + 40) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<text x=\"" + std::to_string(left + cell) + "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" +
         xml_escape(named.name) + "</text>\n";
  for (std::size_t g = 0; g < kNumClasses; ++g) {
    const auto gy = top + static_cast<int>(g) * cell;
    svg += "<text x=\"" + std::to_string(left - 8) + "\" y=\"" + std::to_string(gy + cell / 2 + 4) +
           "\" text-anchor=\"end\">" + std::string(to_string(kAllLabels[g])) + "</text>\n";
    for (std::size_t p = 0; p < kNumClasses; ++p) {
      const auto px = left + static_cast<int>(p) * cell;
      const double shade = static_cast<double>(cm.counts[g][p]) / static_cast<double>(max_cell);
      const int level = 255 - static_cast<int>(shade * 180.0 + 0.5);
      char fill[16];
      std::snprintf(fill, sizeof fill, "#%02x%02xff", level, level);
      svg += "<rect x=\"" + std::to_string(px) + "\" y=\"" + std::to_string(gy) + "\" width=\"" +
             std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" + fill +
             "\" stroke=\"#555\"/>\n";
      svg += "<text x=\"" + std::to_string(px + cell / 2) + "\" y=\"" + std::to_string(gy + cell / 2 + 4) +
             "\" text-anchor=\"middle\">" + std::to_string(cm.counts[g][p]) + "</text>\n";
    }
  }
  for (std::size_t p = 0; p < kNumClasses; ++p) {
    svg += "<text x=\"" + std::to_string(left + static_cast<int>(p) * cell + cell / 2) + "\" y=\"" +
           std::to_string(top - 8) + "\" text-anchor=\"middle\">" +
           std::string(to_string(kAllLabels[p])) + "</text>\n";
  }
  svg += "<text x=\"" + std::to_string(left + cell) + "\" y=\"" + std::to_string(top + 2 * cell + 22) +
         "\" text-anchor=\"middle\">predicted (rows: gold)</text>\n";
  svg += "</svg>\n";
  return svg;
}

}  // namespace

RenderedReport render_report(std::span<const NamedReport> reports, const RenderOptions& options) {
  if (reports.empty()) throw Error(ErrorCode::kArgument, "render_report: no reports");
  RenderedReport out;

  ordered_json runs = ordered_json::array();
  for (const auto& [name, r] : reports) {
    ordered_json row;
    row["name"] = name;
    row["macro_f1"] = round_to(r.macro_f1, 4);
    row["macro_precision"] = round_to(r.macro_precision, 4);
    row["macro_recall"] = round_to(r.macro_recall, 4);
    row["accuracy_percent"] = round_to(r.accuracy_percent, 2);
    row["confusion"] = {{r.confusion.counts[0][0], r.confusion.counts[0][1]},
                        {r.confusion.counts[1][0], r.confusion.counts[1][1]}};
    ordered_json mis = ordered_json::object();
    for (Label label : kAllLabels) {
      const auto& entry = r.misclassification.per_class[index_of(label)];
      if (!entry) continue;
      mis[std::string(to_string(label))] = {{"count", entry->count},
                                            {"percent", round_to(entry->percent, 2)}};
    }
    row["misclassification"] = mis;
    ordered_json per_class = ordered_json::object();
    for (Label label : kAllLabels) {
      const auto& s = r.per_class[index_of(label)];
      per_class[std::string(to_string(label))] = {{"precision", round_to(s.precision, 4)},
                                                  {"recall", round_to(s.recall, 4)},
                                                  {"f1", round_to(s.f1, 4)}};
    }
    row["per_class"] = per_class;
    runs.push_back(std::move(row));
  }
  out.json = ordered_json{{"runs", runs}}.dump(2) + "\n";

  std::size_t name_w = 5;
  for (const auto& nr : reports) name_w = std::max(name_w, nr.name.size());
  char line[512];
  std::snprintf(line, sizeof line, "%-*s  %-6s  %-9s  %-6s  %-8s  %-11s  %-11s\n",
                static_cast<int>(name_w), "Model", "F1", "Precision", "Recall", "Acc(%)",
                "MR HOF (%)", "MR NOT (%)");
  out.table += line;
  for (const auto& [name, r] : reports) {
    const auto rate = [&](Label l) {
      const auto& e = r.misclassification.per_class[index_of(l)];
      return e ? std::to_string(e->count) + " / " + fixed(e->percent, 2) : std::string("-");
    };
    std::snprintf(line, sizeof line, "%-*s  %-6s  %-9s  %-6s  %-8s  %-11s  %-11s\n",
                  static_cast<int>(name_w), name.c_str(), fixed(r.macro_f1, 4).c_str(),
                  fixed(r.macro_precision, 4).c_str(), fixed(r.macro_recall, 4).c_str(),
                  fixed(r.accuracy_percent, 2).c_str(), rate(Label::kHof).c_str(),
                  rate(Label::kNot).c_str());
    out.table += line;
  }

  if (options.figures) {
    out.figures.emplace_back("macro_f1.svg", bar_chart_svg(reports));
    for (const auto& nr : reports) {
      out.figures.emplace_back("confusion-" + safe_file_stem(nr.name) + ".svg", heatmap_svg(nr));
    }
  }
  return out;
}

void write_report(const RenderedReport& rendered, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  const auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + (dir / name).string());
  };
  write("report.json", rendered.json);
  write("report.txt", rendered.table);
  for (const auto& [name, svg] : rendered.figures) write(name, svg);
}

}  // namespace convohate
