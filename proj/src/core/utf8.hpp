#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace convohate::utf8 {

// Decodes UTF-8 into code points. Malformed sequences throw a kParse Error.
std::u32string decode(std::string_view bytes);

void append(std::string& out, char32_t cp);
std::string encode(std::u32string_view cps);

bool is_valid(std::string_view bytes) noexcept;

bool is_whitespace(char32_t cp) noexcept;

// Splits on runs of whitespace; empty pieces are dropped.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace convohate::utf8
