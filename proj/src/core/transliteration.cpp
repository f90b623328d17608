#include "transliteration.hpp"

#include <unistd.h>

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace convohate {
namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string shell_quote(const std::string& path) {
  std::string out = "'";
  for (char c : path) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

}  // namespace

DictionaryEngine::DictionaryEngine(std::map<std::string, std::string> entries, std::string id)
    : id_(std::move(id)) {
  for (auto& [roman, deva] : entries) entries_.emplace(ascii_lower(roman), std::move(deva));
}

DictionaryEngine DictionaryEngine::from_tsv(std::string_view text, std::string id) {
  std::map<std::string, std::string> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 == line.size()) {
      throw Error(ErrorCode::kParse,
                  "transliteration dictionary line " + std::to_string(line_no) +
                      ": expected 'roman<TAB>devanagari'");
    }
    entries.insert_or_assign(std::string(line.substr(0, tab)), std::string(line.substr(tab + 1)));
    if (end == text.size()) break;
  }
  return DictionaryEngine(std::move(entries), std::move(id));
}

std::optional<std::string> DictionaryEngine::transliterate_token(std::string_view token) {
  std::size_t begin = 0;
  std::size_t end = token.size();
  while (begin < end && is_ascii_punct(token[begin])) ++begin;
  while (end > begin && is_ascii_punct(token[end - 1])) --end;
  if (begin == end) return std::string(token);
  const auto it = entries_.find(ascii_lower(token.substr(begin, end - begin)));
  if (it == entries_.end()) return std::string(token);
  std::string out(token.substr(0, begin));
  out += it->second;
  out += token.substr(end);
  return out;
}

ExternalCommandEngine::ExternalCommandEngine(std::string command) : command_(std::move(command)) {
  if (command_.empty()) throw Error(ErrorCode::kArgument, "external transliteration command is empty");
}

void ExternalCommandEngine::prime(std::span<const std::string> tokens) {
  std::vector<std::string> pending;
  for (const auto& token : tokens) {
    if (cache_.find(token) == cache_.end() && token.find('\n') == std::string::npos) {
      cache_.emplace(token, std::nullopt);
      pending.push_back(token);
    }
  }
  if (!pending.empty()) run_batch(pending);
}

std::optional<std::string> ExternalCommandEngine::transliterate_token(std::string_view token) {
  const std::string key(token);
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    prime(std::span<const std::string>(&key, 1));
    it = cache_.find(key);
  }
  return it == cache_.end() ? std::nullopt : it->second;
}

void ExternalCommandEngine::run_batch(const std::vector<std::string>& tokens) {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path();
  const std::string stem = "convohate-translit-" + std::to_string(::getpid()) + "-" +
                           std::to_string(reinterpret_cast<std::uintptr_t>(this));
  const fs::path in_path = dir / (stem + ".in");
  const fs::path out_path = dir / (stem + ".out");
  {
    std::ofstream in(in_path, std::ios::binary);
    for (const auto& t : tokens) in << t << '\n';
  }
  const std::string cmd =
      command_ + " < " + shell_quote(in_path.string()) + " > " + shell_quote(out_path.string());
  const int status = std::system(cmd.c_str());
  std::vector<std::string> lines;
  if (status == 0) {
    std::ifstream out(out_path, std::ios::binary);
    std::string line;
    while (std::getline(out, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(line);
    }
  }
  std::error_code ec;
  fs::remove(in_path, ec);
  fs::remove(out_path, ec);
  // Any mismatch leaves the whole batch marked as failed (nullopt).
  if (status != 0 || lines.size() != tokens.size()) return;
  for (std::size_t i = 0; i < tokens.size(); ++i) cache_[tokens[i]] = lines[i];
}

}  // namespace convohate
