#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// RFC 4180 reader/writer: comma separated, double-quoted fields may contain
// commas, quotes ("") and line breaks.
namespace convohate::csv {

struct Row {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

std::vector<Row> parse(std::string_view text);

void append_row(std::string& out, const std::vector<std::string>& fields);

}  // namespace convohate::csv
