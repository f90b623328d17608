#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "label.hpp"

namespace convohate {

// counts[gold][pred], HOF as the positive class:
//   [[tp_hof, fn_hof], [fp_hof, tn_hof]]
struct ConfusionMatrix2 {
  std::array<std::array<std::size_t, kNumClasses>, kNumClasses> counts{};

  static ConfusionMatrix2 from_cells(std::size_t tp_hof, std::size_t fn_hof, std::size_t fp_hof,
                                     std::size_t tn_hof);

  std::size_t tp_hof() const { return counts[0][0]; }
  std::size_t fn_hof() const { return counts[0][1]; }
  std::size_t fp_hof() const { return counts[1][0]; }
  std::size_t tn_hof() const { return counts[1][1]; }
  std::size_t total() const;
  std::size_t gold_total(Label gold) const;

  ConfusionMatrix2 transposed() const;
  bool operator==(const ConfusionMatrix2&) const = default;
};

struct ClassScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

struct ClassMisclassification {
  std::size_t count = 0;
  double percent = 0;  // count / gold total of the class * 100
};

struct MisclassificationRates {
  // Empty for a class with no gold members.
  std::array<std::optional<ClassMisclassification>, kNumClasses> per_class;
  std::vector<std::string> warnings;
};

struct MetricsReport {
  ConfusionMatrix2 confusion;
  std::array<ClassScores, kNumClasses> per_class;
  double macro_precision = 0;
  double macro_recall = 0;
  double macro_f1 = 0;
  double accuracy_percent = 0;
  MisclassificationRates misclassification;
};

// Throws kAlignment when the lengths differ.
ConfusionMatrix2 confusion(std::span<const Label> gold, std::span<const Label> pred);

// Values are kept at full precision; rounding happens when rendering.
// Throws kArgument on an empty matrix.
MetricsReport compute_metrics(const ConfusionMatrix2& cm);

MisclassificationRates misclassification_rates(const ConfusionMatrix2& cm);

// Round half away from zero to the given number of decimals.
double round_to(double value, int decimals);

}  // namespace convohate
