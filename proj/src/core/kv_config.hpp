#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace convohate {

// Flat "key = value" configuration. Blank lines and lines starting with '#'
// are ignored; later keys override earlier ones. Typed getters throw
// kConfiguration on malformed values.
class KvConfig {
 public:
  static KvConfig parse(std::string_view text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::optional<std::string> find(const std::string& key) const;
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;

  // Keys starting with prefix, with the prefix removed.
  KvConfig subset(std::string_view prefix) const;

  // Canonical "key=value\n" dump in key order.
  std::string canonical() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace convohate
