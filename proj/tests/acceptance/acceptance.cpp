// One line per criterion: "PASS criterion N: ..." or "FAIL criterion N: ...".
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "classifier.hpp"
#include "convohate/convohate.h"
#include "corpus.hpp"
#include "encoder.hpp"
#include "ensemble.hpp"
#include "golden_chains.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "random.hpp"
#include "synthetic.hpp"
#include "test_support.hpp"

using namespace convohate;
using namespace convohate::testing;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> problems;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      problems.push_back(what);
    }
  }
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Published test-set figures. HOF has 695 gold instances, NOT 653.
struct PublishedRow {
  const char* name;
  std::size_t mis_hof;
  double mr_hof;
  std::size_t mis_not;
  double mr_not;
  double macro_f1;
  double accuracy;
};

constexpr std::size_t kTestHof = 695;
constexpr std::size_t kTestNot = 653;

constexpr std::array<PublishedRow, 5> kPublished = {{
    {"Indic-BERT", 162, 23.30, 263, 40.27, 0.6811, 68.47},
    {"Multilingual BERT", 207, 29.78, 193, 29.55, 0.7031, 70.33},
    {"XLM-RoBERTa", 204, 29.35, 204, 31.24, 0.6970, 69.73},
    {"Soft Voting Ensemble", 168, 24.17, 205, 31.39, 0.7223, 72.32},
    {"Hard Voting Ensemble", 165, 23.74, 204, 31.24, 0.7253, 72.62},
}};

ConfusionMatrix2 published_matrix(const PublishedRow& row) {
  return ConfusionMatrix2::from_cells(kTestHof - row.mis_hof, row.mis_hof, row.mis_not,
                                      kTestNot - row.mis_not);
}

Outcome metric_reconstruction() {
  Outcome out;
  const auto start = Clock::now();
  double worst_f1 = 0;
  double worst_acc = 0;
  for (const auto& row : kPublished) {
    const auto m = compute_metrics(published_matrix(row));
    const double df1 = std::abs(m.macro_f1 - row.macro_f1);
    const double dacc = std::abs(m.accuracy_percent - row.accuracy);
    worst_f1 = std::max(worst_f1, df1);
    worst_acc = std::max(worst_acc, dacc);
    out.expect(df1 <= 1e-4, std::string(row.name) + " macro F1 " + fmt("%.6f", m.macro_f1));
    out.expect(dacc <= 0.01, std::string(row.name) + " accuracy " + fmt("%.4f", m.accuracy_percent));
  }
  const double elapsed = seconds_since(start);
  out.expect(elapsed < 1.0, "runtime " + fmt("%.3f s", elapsed));
  out.detail = "5 rows, max |dF1| " + fmt("%.2e", worst_f1) + ", max |dAcc| " + fmt("%.4f", worst_acc) +
               ", " + fmt("%.4f s", elapsed);
  return out;
}

Outcome misclassification_rates_check() {
  Outcome out;
  const auto start = Clock::now();
  double worst = 0;
  for (const auto& row : kPublished) {
    const auto rates = misclassification_rates(published_matrix(row));
    const auto& hof = rates.per_class[index_of(Label::kHof)];
    const auto& nt = rates.per_class[index_of(Label::kNot)];
    if (!hof || !nt) {
      out.expect(false, std::string(row.name) + " rate missing");
      continue;
    }
    out.expect(hof->count == row.mis_hof && nt->count == row.mis_not, std::string(row.name) + " counts");
    const double dh = std::abs(hof->percent - row.mr_hof);
    const double dn = std::abs(nt->percent - row.mr_not);
    worst = std::max({worst, dh, dn});
    out.expect(dh <= 0.02, std::string(row.name) + " HOF rate " + fmt("%.4f", hof->percent));
    out.expect(dn <= 0.02, std::string(row.name) + " NOT rate " + fmt("%.4f", nt->percent));
  }
  const double elapsed = seconds_since(start);
  out.expect(elapsed < 1.0, "runtime " + fmt("%.3f s", elapsed));
  out.detail = "10 rates, max deviation " + fmt("%.4f pp", worst) + ", " + fmt("%.4f s", elapsed);
  return out;
}

Outcome corpus_arithmetic() {
  Outcome out;
  SyntheticCorpusSpec spec;
  spec.parents = 82;
  spec.comments = 3778;
  spec.replies = 1880;
  spec.hof_count = 2841;
  const auto trees = synthesize_corpus(spec);
  const auto chains = flatten(trees);
  const auto stats = corpus_stats(chains);
  out.expect(chains.size() == 5740, "chains " + std::to_string(chains.size()));
  out.expect(stats.hof_count == 2841 && stats.not_count == 2899,
             "class counts " + std::to_string(stats.hof_count) + "/" + std::to_string(stats.not_count));
  const auto split = stratified_split(chains, 0.8, 42);
  const auto tr = corpus_stats(split.train);
  const auto va = corpus_stats(split.val);
  out.expect(tr.hof_count == 2273 && tr.not_count == 2319,
             "train " + std::to_string(tr.hof_count) + "/" + std::to_string(tr.not_count));
  out.expect(va.hof_count == 568 && va.not_count == 580,
             "val " + std::to_string(va.hof_count) + "/" + std::to_string(va.not_count));
  out.detail = std::to_string(chains.size()) + " chains; train " + std::to_string(tr.hof_count) + "/" +
               std::to_string(tr.not_count) + ", val " + std::to_string(va.hof_count) + "/" +
               std::to_string(va.not_count);
  return out;
}

Outcome voting_brute_force() {
  Outcome out;
  std::size_t hard_ok = 0;
  for (int mask = 0; mask < 8; ++mask) {
    std::array<Label, 3> labels;
    int hof = 0;
    for (int k = 0; k < 3; ++k) {
      labels[k] = (mask >> k) & 1 ? Label::kHof : Label::kNot;
      hof += (mask >> k) & 1;
    }
    const Label oracle = hof >= 2 ? Label::kHof : Label::kNot;
    if (hard_vote(labels) == oracle) ++hard_ok;
  }
  out.expect(hard_ok == 8, "hard vote " + std::to_string(hard_ok) + "/8");

  Rng rng(2024);
  std::size_t soft_ok = 0;
  const std::size_t trials = 10000;
  for (std::size_t t = 0; t < trials; ++t) {
    std::array<Probs, 3> triple;
    double s0 = 0, s1 = 0;
    for (auto& p : triple) {
      p[0] = rng.uniform01();
      p[1] = 1.0 - p[0];
      s0 += p[0];
      s1 += p[1];
    }
    const Label oracle = s0 >= s1 ? Label::kHof : Label::kNot;
    const auto result = soft_vote(triple);
    if (result.label == oracle && result.sums[0] == s0 && result.sums[1] == s1) ++soft_ok;
  }
  out.expect(soft_ok == trials, "soft vote " + std::to_string(soft_ok) + "/" + std::to_string(trials));
  out.detail = "hard " + std::to_string(hard_ok) + "/8, soft " + std::to_string(soft_ok) + "/" +
               std::to_string(trials) + " exact";
  return out;
}

Outcome preprocessing_golden() {
  Outcome out;
  DictionaryEngine dict(golden_dictionary());
  std::size_t golden_ok = 0;
  for (const auto& g : golden_chains()) {
    const auto inst = preprocess_chain(make_chain(g.name, g.texts, Label::kHof), {}, {}, dict);
    if (inst.text == g.expected) {
      ++golden_ok;
    } else {
      out.expect(false, "golden '" + g.name + "' gave '" + inst.text + "'");
    }
  }
  out.expect(golden_chains().size() == 20, "fixture count " + std::to_string(golden_chains().size()));
  Rng rng(77);
  std::size_t idem_ok = 0;
  for (int i = 0; i < 1000; ++i) {
    const std::string s = random_noisy_string(rng);
    const std::string once = clean(s);
    if (clean(once) == once) {
      ++idem_ok;
    } else {
      out.expect(false, "not idempotent on '" + s + "'");
    }
  }
  out.detail = "golden " + std::to_string(golden_ok) + "/" + std::to_string(golden_chains().size()) +
               ", idempotent " + std::to_string(idem_ok) + "/1000";
  return out;
}

double gradient_check_worst() {
  const auto data = separable_set(5, 6);
  std::vector<const ProcessedInstance*> batch;
  for (const auto& i : data) batch.push_back(&i);
  double worst = 0.0;
  for (std::uint64_t seed : {1, 2, 3}) {
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.head_init_std = 0.5;
    HashedBagConfig ecfg;
    ecfg.hidden_size = 8;
    ecfg.buckets = 257;
    ecfg.seed = seed;
    Model model(std::make_unique<HashedBagEncoder>(ecfg), cfg);
    model.zero_grad();
    model.batch_loss(batch, true);
    const double h = 1e-6;
    for (auto& block : model.parameters()) {
      for (std::size_t i = 0; i < block.values->size(); ++i) {
        const double analytic = (*block.grads)[i];
        if (analytic == 0.0 && std::string(block.name).rfind("head", 0) != 0) continue;
        const double orig = (*block.values)[i];
        (*block.values)[i] = orig + h;
        const double up = model.batch_loss(batch, false);
        (*block.values)[i] = orig - h;
        const double down = model.batch_loss(batch, false);
        (*block.values)[i] = orig;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
      }
    }
  }
  return worst;
}

std::string tree_digest(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), root));
  }
  std::sort(files.begin(), files.end());
  std::string digest;
  for (const auto& f : files) {
    digest += f.generic_string() + "\n" + read_file(root / f) + "\n";
  }
  return digest;
}

Outcome training_contract() {
  Outcome out;
  // Convergence at the published learning rate, from a zero-initialized head.
  const auto data = separable_set(1, 32);
  TrainConfig cfg;
  cfg.head_init_std = 0.0;
  HashedBagConfig ecfg;
  auto fitted = retrain_full(data, HashedBagEncoder(ecfg), cfg, 10);
  std::size_t correct = 0;
  const auto preds = fitted.model.predict(data, "m");
  for (std::size_t i = 0; i < data.size(); ++i) correct += preds[i].predicted == *data[i].label;
  out.expect(correct == data.size(), "train accuracy " + std::to_string(correct) + "/32");

  const double worst = gradient_check_worst();
  out.expect(worst < 1e-4, "gradient relative error " + fmt("%.2e", worst));

  Rng rng(8);
  std::size_t argmin_ok = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<double> losses(1 + rng.uniform_below(10));
    for (auto& l : losses) l = static_cast<double>(rng.uniform_below(5)) / 4.0 + rng.uniform01() * 1e-3 * (t % 2);
    const std::size_t oracle =
        static_cast<std::size_t>(std::min_element(losses.begin(), losses.end()) - losses.begin()) + 1;
    if (select_best_epoch(losses) == oracle) ++argmin_ok;
  }
  out.expect(argmin_ok == 100, "argmin " + std::to_string(argmin_ok) + "/100");

  // Two complete runs in separate work dirs must leave identical trees.
  TempDir dir;
  write_file(dir.path() / "train.json", write_json_trees(synthesize_corpus({})));
  const std::string conf =
      "corpus.train = train.json\nmodels = a, b, c\n"
      "model.a.learning_rate = 0.01\nmodel.b.learning_rate = 0.01\nmodel.c.learning_rate = 0.01\n"
      "model.b.encoder.seed = 2\nmodel.c.encoder.seed = 3\n";
  for (const char* w : {"run1", "run2"}) {
    auto kv = KvConfig::parse(conf);
    kv.set("workdir", w);
    Pipeline(ExperimentConfig::from_kv(kv, dir.path())).reproduce();
  }
  const bool identical = tree_digest(dir.path() / "run1") == tree_digest(dir.path() / "run2");
  out.expect(identical, "rerun differs");

  out.detail = "train acc " + std::to_string(correct) + "/32 in 10 epochs, grad rel err " + fmt("%.2e", worst) +
               ", argmin " + std::to_string(argmin_ok) + "/100, rerun " + (identical ? "identical" : "differs");
  return out;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  ch_string_free(s);
  return out;
}

Outcome pipeline_shape() {
  Outcome out;
  const auto start = Clock::now();
  TempDir dir;
  write_file(dir.path() / "train.json", write_json_trees(synthesize_corpus({})));
  SyntheticCorpusSpec test_spec;
  test_spec.seed = 11;
  test_spec.hof_count = 90;
  write_file(dir.path() / "test.json", write_json_trees(synthesize_corpus(test_spec)));
  write_file(dir.path() / "dict.tsv", synthetic_dictionary_tsv());
  const std::string conf =
      "corpus.train = train.json\ncorpus.test = test.json\nworkdir = work\n"
      "transliteration.engine = dictionary\ntransliteration.dictionary = dict.tsv\n"
      "models = standin-a, standin-b, standin-c\nensemble.methods = soft, hard\n"
      "model.standin-a.learning_rate = 1e-2\nmodel.standin-b.learning_rate = 1e-2\n"
      "model.standin-c.learning_rate = 1e-2\nmodel.standin-b.encoder.seed = 2\n"
      "model.standin-c.encoder.seed = 3\nmodel.standin-c.encoder.hidden_size = 32\n";

  ch_experiment* exp = nullptr;
  ch_status st = ch_experiment_open_text(conf.c_str(), dir.path().c_str(), &exp);
  if (st == CH_OK) st = ch_experiment_reproduce(exp);
  if (st != CH_OK) {
    out.expect(false, std::string("pipeline failed: ") + ch_last_error());
    ch_experiment_free(exp);
    out.detail = "pipeline failed";
    return out;
  }

  const std::vector<std::string> expected = {"standin-a", "standin-b", "standin-c", "ensemble-soft",
                                             "ensemble-hard"};
  std::size_t rows = 0;
  std::size_t vectors = 0;
  double worst = 0.0;
  for (const char* split : {"val", "test"}) {
    char* path = nullptr;
    ch_experiment_report_path(exp, split, &path);
    const auto doc = nlohmann::json::parse(read_file(fs::path(take(path)) / "report.json"));
    std::vector<std::string> names;
    for (const auto& run : doc["runs"]) names.push_back(run["name"]);
    out.expect(names == expected, std::string(split) + " report rows out of shape");
    rows = names.size();
    for (const auto& id : expected) {
      ch_experiment_predictions_path(exp, split, id.c_str(), &path);
      for (const auto& rec : read_predictions(read_file(take(path)))) {
        worst = std::max(worst, std::abs(rec.probs[0] + rec.probs[1] - 1.0));
        ++vectors;
      }
    }
  }
  ch_experiment_free(exp);
  out.expect(worst <= 1e-6, "probability vector off by " + fmt("%.2e", worst));
  const double elapsed = seconds_since(start);
  out.expect(elapsed < 300.0, "runtime " + fmt("%.1f s", elapsed));
  out.detail = std::to_string(rows) + "-row reports for val and test, " + std::to_string(vectors) +
               " vectors within " + fmt("%.1e", worst) + " of 1, " + fmt("%.1f s", elapsed);
  return out;
}

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria = {
      {1, "metric reconstruction", metric_reconstruction},
      {2, "misclassification rates", misclassification_rates_check},
      {3, "corpus arithmetic", corpus_arithmetic},
      {4, "voting brute-force equivalence", voting_brute_force},
      {5, "preprocessing golden fixtures", preprocessing_golden},
      {6, "training-loop contract", training_contract},
      {7, "pipeline shape", pipeline_shape},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.number != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.number, c.title, o.detail.c_str());
    for (const auto& p : o.problems) std::printf("    %s\n", p.c_str());
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
