#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "classifier.hpp"
#include "ensemble.hpp"
#include "kv_config.hpp"
#include "preprocess.hpp"

namespace convohate {

struct ModelSpec {
  std::string id;
  KvConfig encoder;  // adapter description keys
  TrainConfig train;
};

// Experiment settings read from a flat key-value file. Relative paths are
// resolved against the directory holding the file. Keys:
//   corpus.train, corpus.test, corpus.test_labeled, corpus.format
//   workdir, seed, split.ratio
//   preprocess.separator, preprocess.strip_{hashtags,emojis,urls,mentions}
//   transliteration.engine (identity|dictionary|external),
//   transliteration.dictionary, transliteration.command
//   models = a,b,c; model.<id>.<train key>; model.<id>.encoder.<adapter key>
//   ensemble.methods = soft,hard; report.figures
struct ExperimentConfig {
  KvConfig raw;
  std::filesystem::path base_dir;

  std::filesystem::path train_corpus;
  std::optional<std::filesystem::path> test_corpus;
  bool test_labeled = true;
  std::string corpus_format = "auto";
  std::filesystem::path workdir;
  std::uint64_t seed = 42;
  double split_ratio = 0.8;
  SeparatorToken separator;
  CleaningConfig cleaning;
  std::string translit_engine = "identity";
  std::filesystem::path translit_dictionary;
  std::string translit_command;
  std::vector<ModelSpec> models;
  std::vector<VoteMethod> methods{VoteMethod::kSoft, VoteMethod::kHard};
  bool figures = false;

  // Throws kConfiguration on invalid values. workdir falls back to the
  // CONVO_HATE_WORKDIR environment variable.
  static ExperimentConfig from_kv(KvConfig kv, const std::filesystem::path& base_dir);
  static ExperimentConfig load(const std::filesystem::path& path);

  const ModelSpec& model(const std::string& id) const;
};

using Logger = std::function<void(std::string_view)>;

// Stage runner over one work directory. Each public stage takes the work
// dir lock for its duration. Artifacts carry a hash of the configuration
// that produced them; a stage refuses upstream artifacts whose hash does not
// match the current configuration (kStaleArtifact) or that are absent
// (kMissingArtifact), naming the stage to rerun.
class Pipeline {
 public:
  static constexpr int kLayoutVersion = 1;

  Pipeline(ExperimentConfig config, Logger logger = {});

  const ExperimentConfig& config() const { return config_; }

  void prepare();
  // Empty model id means every configured model.
  void train(const std::string& model_id = {});
  void predict(const std::string& model_id = {});
  void ensemble(std::optional<VoteMethod> method = std::nullopt);
  void evaluate();
  void report();
  void reproduce();

  // Paths of artifacts, for callers and tests.
  std::filesystem::path prepare_dir() const;
  std::filesystem::path model_dir(const std::string& model_id) const;
  std::filesystem::path predictions_path(const std::string& split, const std::string& model_id) const;
  std::filesystem::path report_dir(const std::string& split) const;

  // Expected content hashes for the current configuration.
  std::string prepare_hash() const;
  std::string train_hash(const std::string& model_id) const;
  std::string predict_hash(const std::string& model_id) const;
  std::string ensemble_hash(VoteMethod method) const;

 private:
  void prepare_locked();
  void train_locked(const ModelSpec& spec);
  void predict_locked(const ModelSpec& spec);
  void ensemble_locked(VoteMethod method);
  void evaluate_locked();
  void report_locked();

  void require_stage(const std::string& key, const std::string& expected,
                     const std::string& rerun_hint) const;
  void record_stage(const std::string& key, const std::string& hash);

  void log(const std::string& message) const;

  ExperimentConfig config_;
  Logger logger_;
};

// Advisory lock: the file is created exclusively and removed on destruction.
class WorkdirLock {
 public:
  explicit WorkdirLock(const std::filesystem::path& workdir);
  ~WorkdirLock();
  WorkdirLock(const WorkdirLock&) = delete;
  WorkdirLock& operator=(const WorkdirLock&) = delete;

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace convohate
