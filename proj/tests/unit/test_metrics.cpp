#include <doctest.h>

#include <fstream>

#include <cmath>

#include <json.hpp>

#include "error.hpp"
#include "metrics.hpp"
#include "report.hpp"
#include "test_support.hpp"

using namespace convohate;
using namespace convohate::testing;

namespace {

std::vector<Label> random_labels(Rng& rng, std::size_t n, double p_hof) {
  std::vector<Label> out(n);
  for (auto& l : out) l = rng.uniform01() < p_hof ? Label::kHof : Label::kNot;
  return out;
}

}  // namespace

TEST_CASE("confusion cells and symmetry") {
  const std::vector<Label> g{Label::kHof, Label::kHof, Label::kNot, Label::kNot, Label::kHof};
  const std::vector<Label> p{Label::kHof, Label::kNot, Label::kHof, Label::kNot, Label::kHof};
  const auto cm = confusion(g, p);
  CHECK(cm.tp_hof() == 2);
  CHECK(cm.fn_hof() == 1);
  CHECK(cm.fp_hof() == 1);
  CHECK(cm.tn_hof() == 1);
  CHECK(confusion(p, g) == cm.transposed());
  const auto diag = confusion(g, g);
  CHECK(diag.fn_hof() == 0);
  CHECK(diag.fp_hof() == 0);
  CHECK_THROWS_AS(confusion(g, std::vector<Label>{Label::kHof}), Error);
}

TEST_CASE("hard vote matrix from published counts") {
  const auto cm = ConfusionMatrix2::from_cells(530, 165, 204, 449);
  CHECK(cm.gold_total(Label::kHof) == 695);
  CHECK(cm.gold_total(Label::kNot) == 653);
  const auto r = compute_metrics(cm);
  CHECK(std::abs(r.macro_f1 - 0.7253) < 1e-4);
  CHECK(std::abs(r.accuracy_percent - 72.62) < 0.01);
}

TEST_CASE("degenerate matrices") {
  const auto perfect = compute_metrics(ConfusionMatrix2::from_cells(5, 0, 0, 7));
  CHECK(perfect.macro_f1 == 1.0);
  CHECK(perfect.accuracy_percent == 100.0);
  const auto all_hof = compute_metrics(ConfusionMatrix2::from_cells(5, 0, 7, 0));
  CHECK(all_hof.per_class[1].precision == 0.0);
  CHECK(all_hof.per_class[1].f1 == 0.0);
  CHECK(std::isfinite(all_hof.macro_f1));
  CHECK_THROWS_AS(compute_metrics(ConfusionMatrix2{}), Error);
}

TEST_CASE("misclassification rates") {
  const auto r = misclassification_rates(ConfusionMatrix2::from_cells(533, 162, 263, 390));
  CHECK(r.per_class[0]->count == 162);
  CHECK(std::abs(r.per_class[0]->percent - 23.31) < 0.02);
  CHECK(r.per_class[1]->count == 263);
  const auto zero = misclassification_rates(ConfusionMatrix2::from_cells(4, 0, 1, 3));
  CHECK(zero.per_class[0]->percent == 0.0);
  const auto empty_class = misclassification_rates(ConfusionMatrix2::from_cells(0, 0, 2, 3));
  CHECK_FALSE(empty_class.per_class[0].has_value());
  CHECK(empty_class.warnings.size() == 1);
}

TEST_CASE("metrics agree exactly with a per-instance scorer") {
  Rng rng(4242);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng.uniform_below(60);
    const auto gold = random_labels(rng, n, rng.uniform01());
    const auto pred = random_labels(rng, n, rng.uniform01());
    const auto r = compute_metrics(confusion(gold, pred));
    const auto b = brute_force_scores(gold, pred);
    CHECK(r.macro_f1 == b.macro_f1);
    CHECK(r.macro_precision == b.macro_precision);
    CHECK(r.macro_recall == b.macro_recall);
    CHECK(r.accuracy_percent == b.accuracy_percent);
  }
}

TEST_CASE("accuracy equals one minus both misclassification counts") {
  Rng rng(99);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + rng.uniform_below(50);
    const auto cm = confusion(random_labels(rng, n, 0.5), random_labels(rng, n, 0.5));
    const auto r = compute_metrics(cm);
    std::size_t wrong = 0;
    for (const auto& c : r.misclassification.per_class) wrong += c ? c->count : 0;
    CHECK(r.accuracy_percent ==
          doctest::Approx(100.0 * static_cast<double>(n - wrong) / static_cast<double>(n)));
  }
}

TEST_CASE("macro F1 does not depend on which class is positive") {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.uniform_below(40);
    auto gold = random_labels(rng, n, 0.4);
    auto pred = random_labels(rng, n, 0.6);
    const double a = compute_metrics(confusion(gold, pred)).macro_f1;
    for (auto* v : {&gold, &pred}) {
      for (auto& l : *v) l = l == Label::kHof ? Label::kNot : Label::kHof;
    }
    CHECK(compute_metrics(confusion(gold, pred)).macro_f1 == doctest::Approx(a).epsilon(1e-15));
  }
}

TEST_CASE("round_to rounds half away from zero") {
  CHECK(round_to(0.72527, 4) == doctest::Approx(0.7253));
  CHECK(round_to(72.625, 2) == doctest::Approx(72.63));
  CHECK(round_to(23.3093, 2) == doctest::Approx(23.31));
}

TEST_CASE("report rows follow the given order and schema") {
  std::vector<NamedReport> reports;
  const char* names[] = {"a", "b", "c", "ensemble-soft", "ensemble-hard"};
  for (int i = 0; i < 5; ++i) {
    reports.push_back({names[i], compute_metrics(ConfusionMatrix2::from_cells(10 + i, 3, 4, 9))});
  }
  const auto r = render_report(reports);
  const auto doc = nlohmann::json::parse(r.json);
  REQUIRE(doc["runs"].size() == 5);
  for (int i = 0; i < 5; ++i) {
    const auto& row = doc["runs"][i];
    CHECK(row["name"] == names[i]);
    for (const char* key : {"macro_f1", "macro_precision", "macro_recall", "accuracy_percent"}) {
      CHECK(row.contains(key));
    }
    CHECK(row["confusion"][0][0] == 10 + i);
    CHECK(row["misclassification"]["HOF"]["count"] == 3);
    CHECK(row["misclassification"]["NOT"]["count"] == 4);
  }
  CHECK(r.figures.empty());
  CHECK(render_report(reports).json == r.json);
  const auto with_figs = render_report(reports, {true});
  CHECK(with_figs.figures.size() == 6);
  CHECK_THROWS_AS(render_report(std::vector<NamedReport>{}), Error);
}

TEST_CASE("report files are written and regenerate identically") {
  TempDir dir;
  std::vector<NamedReport> reports{{"m", compute_metrics(ConfusionMatrix2::from_cells(3, 1, 1, 3))}};
  write_report(render_report(reports, {true}), dir.path() / "r1");
  write_report(render_report(reports, {true}), dir.path() / "r2");
  for (const char* f : {"report.json", "report.txt", "macro_f1.svg", "confusion-m.svg"}) {
    CAPTURE(f);
    REQUIRE(std::filesystem::exists(dir.path() / "r1" / f));
    std::ifstream a(dir.path() / "r1" / f), b(dir.path() / "r2" / f);
    CHECK(std::string(std::istreambuf_iterator<char>(a), {}) == std::string(std::istreambuf_iterator<char>(b), {}));
  }
  write_report(render_report(reports), dir.path() / "r3");
  CHECK_FALSE(std::filesystem::exists(dir.path() / "r3" / "macro_f1.svg"));
}
