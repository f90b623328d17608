#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "convohate/convohate.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  ch_string_free(s);
  return out;
}

struct Scratch {
  fs::path path;
  Scratch() {
    std::string tmpl = (fs::temp_directory_path() / "convohate-capi-XXXXXX").string();
    REQUIRE(mkdtemp(tmpl.data()) != nullptr);
    path = tmpl;
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void save(const fs::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::strlen(ch_version()) > 0);
  CHECK(std::string(ch_status_name(CH_OK)) == "ok");
  CHECK(std::string(ch_status_name(CH_ERR_STALE_ARTIFACT)) == "stale artifact");
  CHECK(std::string(ch_status_name(static_cast<ch_status>(77))) == "unknown");
}

TEST_CASE("metrics through the C API") {
  const ch_confusion cm{493, 202, 162, 491};
  ch_metrics m{};
  REQUIRE(ch_compute_metrics(&cm, &m) == CH_OK);
  CHECK(m.accuracy_percent == doctest::Approx(100.0 * 984 / 1348));
  CHECK(m.misclassified_present[CH_LABEL_HOF] == 1);
  CHECK(m.misclassified_count[CH_LABEL_HOF] == 202);
  CHECK(m.misclassified_count[CH_LABEL_NOT] == 162);
  const ch_confusion empty{0, 0, 0, 0};
  CHECK(ch_compute_metrics(&empty, &m) == CH_ERR_ARGUMENT);
  CHECK(std::string(ch_last_error()).find("empty") != std::string::npos);

  const int gold[] = {0, 0, 1, 1};
  const int pred[] = {0, 1, 1, 0};
  ch_confusion out{};
  REQUIRE(ch_confusion_from_labels(gold, pred, 4, &out) == CH_OK);
  CHECK(out.tp_hof == 1);
  CHECK(out.fn_hof == 1);
  CHECK(out.fp_hof == 1);
  CHECK(out.tn_hof == 1);
  const int bad[] = {0, 5};
  CHECK(ch_confusion_from_labels(bad, bad, 2, &out) == CH_ERR_LABEL);
}

TEST_CASE("voting through the C API") {
  const int labels[] = {0, 1, 1};
  int out = -1;
  REQUIRE(ch_hard_vote(labels, 3, &out) == CH_OK);
  CHECK(out == CH_LABEL_NOT);
  CHECK(ch_hard_vote(labels, 2, &out) == CH_ERR_CONFIGURATION);

  const double probs[] = {0.9, 0.1, 0.4, 0.6, 0.45, 0.55};
  double sums[2];
  REQUIRE(ch_soft_vote(probs, 3, 0, &out, sums) == CH_OK);
  CHECK(out == CH_LABEL_HOF);
  CHECK(sums[0] == doctest::Approx(1.75));
  CHECK(ch_soft_vote(probs, 1, 0, &out, nullptr) == CH_ERR_CONFIGURATION);
  CHECK(ch_soft_vote(probs, 1, 1, &out, nullptr) == CH_OK);
  const double bad[] = {0.7, 0.7, 0.5, 0.5, 0.5, 0.5};
  CHECK(ch_soft_vote(bad, 3, 0, &out, nullptr) == CH_ERR_VALIDATION);
}

TEST_CASE("preprocessing through the C API") {
  char* out = nullptr;
  REQUIRE(ch_clean("hi @user see https://x.y #tag done", nullptr, nullptr, &out) == CH_OK);
  CHECK(take(out) == "hi see done");
  ch_cleaning cfg;
  ch_cleaning_default(&cfg);
  cfg.strip_hashtags = 0;
  REQUIRE(ch_clean("a #tag", &cfg, nullptr, &out) == CH_OK);
  CHECK(take(out) == "a #tag");

  int script = -1;
  REQUIRE(ch_detect_script("नमस्ते", &script) == CH_OK);
  CHECK(script == CH_SCRIPT_DEVANAGARI);
  REQUIRE(ch_detect_script("namaste", &script) == CH_OK);
  CHECK(script == CH_SCRIPT_ROMAN);

  ch_engine* engine = nullptr;
  REQUIRE(ch_engine_dictionary("bhai\tभाई\n", &engine) == CH_OK);
  size_t failures = 99;
  REQUIRE(ch_transliterate(engine, "Bhai ji [SENSEP] bhai", "[SENSEP]", &out, &failures) == CH_OK);
  CHECK(take(out) == "भाई ji [SENSEP] भाई");
  CHECK(failures == 0);
  ch_engine_free(engine);
  CHECK(ch_engine_dictionary("broken line\n", &engine) == CH_ERR_PARSE);
}

TEST_CASE("corpus through the C API") {
  ch_synthetic_spec spec;
  ch_synthetic_default(&spec);
  spec.parents = 82;
  spec.comments = 3778;
  spec.replies = 1880;
  spec.hof_count = 2841;
  ch_corpus* corpus = nullptr;
  REQUIRE(ch_corpus_synthesize(&spec, &corpus) == CH_OK);
  CHECK(ch_corpus_chain_count(corpus) == 5740);
  ch_corpus_stats stats{};
  REQUIRE(ch_corpus_stats_get(corpus, &stats) == CH_OK);
  CHECK(stats.hof_count == 2841);
  CHECK(stats.not_count == 2899);
  ch_split_counts split{};
  char* manifest = nullptr;
  REQUIRE(ch_corpus_split(corpus, 0.8, 42, &split, &manifest) == CH_OK);
  CHECK(split.train_hof == 2273);
  CHECK(split.train_not == 2319);
  CHECK(split.val_hof == 568);
  CHECK(split.val_not == 580);
  const std::string m = take(manifest);
  CHECK(std::count(m.begin(), m.end(), '\n') == 5740);

  const char* id = nullptr;
  int label = -2;
  size_t nodes = 0;
  REQUIRE(ch_corpus_chain(corpus, 0, &id, &label, &nodes) == CH_OK);
  CHECK(nodes == 1);
  CHECK(ch_corpus_chain(corpus, 999999, &id, &label, &nodes) == CH_ERR_ARGUMENT);

  char* json = nullptr;
  REQUIRE(ch_corpus_write_json(corpus, &json) == CH_OK);
  const std::string text = take(json);
  ch_corpus* again = nullptr;
  REQUIRE(ch_corpus_parse(text.data(), text.size(), CH_FORMAT_JSON_TREE, 0, &again) == CH_OK);
  CHECK(ch_corpus_chain_count(again) == 5740);
  ch_corpus_free(again);
  ch_corpus_free(corpus);

  const char* broken = R"({"conversations": [{"id": "a", "text": "x", "label": "HOF"}]})";
  CHECK(ch_corpus_parse(broken, std::strlen(broken), CH_FORMAT_JSON_TREE, 0, &again) == CH_ERR_SCHEMA);
  CHECK(std::string(ch_last_error()).size() > 0);
}

TEST_CASE("experiment through the C API") {
  Scratch dir;
  ch_synthetic_spec spec;
  ch_synthetic_default(&spec);
  ch_corpus* corpus = nullptr;
  REQUIRE(ch_corpus_synthesize(&spec, &corpus) == CH_OK);
  char* json = nullptr;
  REQUIRE(ch_corpus_write_json(corpus, &json) == CH_OK);
  save(dir.path / "train.json", take(json));
  ch_corpus_free(corpus);

  const std::string config =
      "corpus.train = train.json\n"
      "workdir = work\n"
      "models = a, b, c\n"
      "model.a.learning_rate = 0.01\n"
      "model.b.learning_rate = 0.01\n"
      "model.b.encoder.seed = 5\n"
      "model.c.learning_rate = 0.01\n"
      "model.c.encoder.seed = 6\n";

  ch_experiment* exp = nullptr;
  REQUIRE(ch_experiment_open_text(config.c_str(), dir.path.c_str(), &exp) == CH_OK);
  std::vector<std::string> lines;
  ch_experiment_set_log(
      exp, [](const char* msg, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(msg); },
      &lines);

  CHECK(ch_experiment_train(exp, nullptr) == CH_ERR_MISSING_ARTIFACT);
  CHECK(std::string(ch_last_error()).find("prepare") != std::string::npos);
  REQUIRE(ch_experiment_reproduce(exp) == CH_OK);
  CHECK_FALSE(lines.empty());

  char* path = nullptr;
  REQUIRE(ch_experiment_report_path(exp, "val", &path) == CH_OK);
  const std::string report = slurp(fs::path(take(path)) / "report.txt");
  for (const char* name : {"a", "b", "c", "ensemble-soft", "ensemble-hard"}) {
    CHECK(report.find(name) != std::string::npos);
  }
  REQUIRE(ch_experiment_predictions_path(exp, "val", "ensemble-soft", &path) == CH_OK);
  CHECK(fs::exists(take(path)));
  CHECK(ch_experiment_predictions_path(exp, "holdout", "a", &path) == CH_ERR_ARGUMENT);

  REQUIRE(ch_experiment_set(exp, "model.a.learning_rate", "0.02") == CH_OK);
  CHECK(ch_experiment_predict(exp, "a") == CH_ERR_STALE_ARTIFACT);
  CHECK(ch_experiment_ensemble(exp, "median") == CH_ERR_ARGUMENT);

  REQUIRE(ch_experiment_workdir(exp, &path) == CH_OK);
  CHECK(take(path) == (dir.path / "work").string());

  REQUIRE(ch_experiment_set(exp, "split.ratio", "2") == CH_OK);
  CHECK(ch_experiment_prepare(exp) == CH_ERR_CONFIGURATION);
  ch_experiment_free(exp);

  CHECK(ch_experiment_open((dir.path / "missing.conf").c_str(), &exp) == CH_ERR_CONFIGURATION);
  CHECK(ch_experiment_open_text("models = a\n", dir.path.c_str(), &exp) == CH_ERR_CONFIGURATION);
  CHECK(ch_experiment_open_text(nullptr, nullptr, &exp) == CH_ERR_ARGUMENT);
}
