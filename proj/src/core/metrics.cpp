#include "metrics.hpp"

#include <cmath>

#include "error.hpp"

namespace convohate {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ConfusionMatrix2 ConfusionMatrix2::from_cells(std::size_t tp_hof, std::size_t fn_hof,
                                              std::size_t fp_hof, std::size_t tn_hof) {
  ConfusionMatrix2 cm;
  cm.counts = {{{tp_hof, fn_hof}, {fp_hof, tn_hof}}};
  return cm;
}

std::size_t ConfusionMatrix2::total() const {
  std::size_t n = 0;
  for (const auto& row : counts)
    for (std::size_t c : row) n += c;
  return n;
}

std::size_t ConfusionMatrix2::gold_total(Label gold) const {
  const auto& row = counts[index_of(gold)];
  return row[0] + row[1];
}

ConfusionMatrix2 ConfusionMatrix2::transposed() const {
  ConfusionMatrix2 t;
  for (std::size_t g = 0; g < kNumClasses; ++g)
    for (std::size_t p = 0; p < kNumClasses; ++p) t.counts[p][g] = counts[g][p];
  return t;
}

ConfusionMatrix2 confusion(std::span<const Label> gold, std::span<const Label> pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorCode::kAlignment, "confusion: " + std::to_string(gold.size()) +
                                           " gold labels vs " + std::to_string(pred.size()) +
                                           " predictions");
  }
  ConfusionMatrix2 cm;
  for (std::size_t i = 0; i < gold.size(); ++i) ++cm.counts[index_of(gold[i])][index_of(pred[i])];
  return cm;
}

MisclassificationRates misclassification_rates(const ConfusionMatrix2& cm) {
  MisclassificationRates out;
  for (Label label : kAllLabels) {
    const std::size_t c = index_of(label);
    const std::size_t total = cm.gold_total(label);
    if (total == 0) {
      out.warnings.push_back("class " + std::string(to_string(label)) +
                             " has no gold instances; misclassification rate omitted");
      continue;
    }
    const std::size_t wrong = total - cm.counts[c][c];
    out.per_class[c] = ClassMisclassification{wrong, 100.0 * ratio(wrong, total)};
  }
  return out;
}

MetricsReport compute_metrics(const ConfusionMatrix2& cm) {
  const std::size_t total = cm.total();
  if (total == 0) throw Error(ErrorCode::kArgument, "compute_metrics: empty confusion matrix");

  MetricsReport report;
  report.confusion = cm;
  std::size_t correct = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::size_t tp = cm.counts[c][c];
    std::size_t predicted = 0;
    std::size_t actual = 0;
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      predicted += cm.counts[k][c];
      actual += cm.counts[c][k];
    }
    auto& s = report.per_class[c];
    s.precision = ratio(tp, predicted);
    s.recall = ratio(tp, actual);
    s.f1 = s.precision + s.recall == 0.0 ? 0.0
                                          : 2.0 * s.precision * s.recall / (s.precision + s.recall);
    report.macro_precision += s.precision / kNumClasses;
    report.macro_recall += s.recall / kNumClasses;
    report.macro_f1 += s.f1 / kNumClasses;
    correct += tp;
  }
  report.accuracy_percent = 100.0 * ratio(correct, total);
  report.misclassification = misclassification_rates(cm);
  return report;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace convohate
