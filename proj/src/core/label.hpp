#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace convohate {

// Class index order is fixed everywhere: 0 = HOF, 1 = NOT.
enum class Label : std::size_t { kHof = 0, kNot = 1 };

inline constexpr std::size_t kNumClasses = 2;
inline constexpr std::array<Label, kNumClasses> kAllLabels{Label::kHof, Label::kNot};

constexpr std::size_t index_of(Label label) noexcept {
  return static_cast<std::size_t>(label);
}

constexpr std::string_view to_string(Label label) noexcept {
  return label == Label::kHof ? "HOF" : "NOT";
}

// Exact match only; "hof" or " HOF" are rejected.
constexpr std::optional<Label> parse_label(std::string_view text) noexcept {
  if (text == "HOF") return Label::kHof;
  if (text == "NOT") return Label::kNot;
  return std::nullopt;
}

}  // namespace convohate
