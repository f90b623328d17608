#include "pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "corpus.hpp"
#include "error.hpp"
#include "metrics.hpp"
#include "random.hpp"
#include "report.hpp"

namespace convohate {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot move " + tmp.string() + " into place: " + ec.message());
}

namespace {

constexpr const char* kManifestName = "MANIFEST.json";
constexpr const char* kSplitVal = "val";
constexpr const char* kSplitTest = "test";

std::string hex_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

CorpusFormat format_for(const fs::path& path, const std::string& declared) {
  if (declared == "json") return CorpusFormat::kJsonTree;
  if (declared == "csv") return CorpusFormat::kCsvFlat;
  if (declared != "auto") {
    throw Error(ErrorCode::kConfiguration, "corpus.format must be auto, json or csv");
  }
  return path.extension() == ".csv" ? CorpusFormat::kCsvFlat : CorpusFormat::kJsonTree;
}

ordered_json stats_json(const CorpusStats& s) {
  return {{"total_chains", s.total_chains},   {"hof", s.hof_count},
          {"not", s.not_count},               {"unlabeled", s.unlabeled_count},
          {"parents", s.parent_count},        {"comments", s.comment_count},
          {"replies", s.reply_count},         {"avg_comments_per_parent", s.avg_comments_per_parent}};
}

std::unique_ptr<TransliterationEngine> make_engine(const ExperimentConfig& cfg) {
  if (cfg.translit_engine == "identity") return std::make_unique<IdentityEngine>();
  if (cfg.translit_engine == "dictionary") {
    return std::make_unique<DictionaryEngine>(DictionaryEngine::from_tsv(
        read_file(cfg.translit_dictionary), "dictionary:" + cfg.translit_dictionary.filename().string()));
  }
  if (cfg.translit_engine == "external") {
    return std::make_unique<ExternalCommandEngine>(cfg.translit_command);
  }
  throw Error(ErrorCode::kConfiguration,
              "transliteration.engine must be identity, dictionary or external");
}

std::vector<ProcessedInstance> load_instances(const fs::path& path, const std::string& stage_hint) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingArtifact,
                path.string() + " does not exist; run '" + stage_hint + "' first");
  }
  return read_instances(read_file(path));
}

std::vector<PredictionRecord> load_predictions(const fs::path& path, const std::string& stage_hint) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingArtifact,
                path.string() + " does not exist; run '" + stage_hint + "' first");
  }
  return read_predictions(read_file(path));
}

ordered_json read_manifest(const fs::path& workdir) {
  const fs::path path = workdir / kManifestName;
  if (!fs::exists(path)) return {{"layout_version", Pipeline::kLayoutVersion}, {"stages", ordered_json::object()}};
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  if (manifest.value("layout_version", 0) != Pipeline::kLayoutVersion) {
    throw Error(ErrorCode::kConfiguration,
                path.string() + ": work dir layout version " +
                    std::to_string(manifest.value("layout_version", 0)) + " is not supported (expected " +
                    std::to_string(Pipeline::kLayoutVersion) + ")");
  }
  return manifest;
}

}  // namespace

// ---------------------------------------------------------------------------
// ExperimentConfig

ExperimentConfig ExperimentConfig::from_kv(KvConfig kv, const fs::path& base_dir) {
  ExperimentConfig c;
  c.base_dir = base_dir;

  const auto train = kv.find("corpus.train");
  if (!train || train->empty()) throw Error(ErrorCode::kConfiguration, "config lacks corpus.train");
  c.train_corpus = resolve(base_dir, *train);
  if (const auto test = kv.find("corpus.test"); test && !test->empty()) {
    c.test_corpus = resolve(base_dir, *test);
  }
  c.test_labeled = kv.get_bool("corpus.test_labeled", true);
  c.corpus_format = kv.get_string("corpus.format", "auto");

  if (const auto wd = kv.find("workdir"); wd && !wd->empty()) {
    c.workdir = resolve(base_dir, *wd);
  } else if (const char* env = std::getenv("CONVO_HATE_WORKDIR"); env && *env) {
    c.workdir = env;
  } else {
    throw Error(ErrorCode::kConfiguration,
                "no work dir: set 'workdir', pass --workdir or set CONVO_HATE_WORKDIR");
  }

  c.seed = kv.get_u64("seed", c.seed);
  c.split_ratio = kv.get_double("split.ratio", c.split_ratio);
  if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "split.ratio must lie in (0, 1)");
  }
  c.separator.literal = kv.get_string("preprocess.separator", c.separator.literal);
  if (c.separator.literal.empty()) throw Error(ErrorCode::kConfiguration, "preprocess.separator is empty");
  c.cleaning.strip_hashtags = kv.get_bool("preprocess.strip_hashtags", true);
  c.cleaning.strip_emojis = kv.get_bool("preprocess.strip_emojis", true);
  c.cleaning.strip_urls = kv.get_bool("preprocess.strip_urls", true);
  c.cleaning.strip_mentions = kv.get_bool("preprocess.strip_mentions", true);
  if (kv.has("preprocess.preserve_punctuation_and_numbers") &&
      !kv.get_bool("preprocess.preserve_punctuation_and_numbers", true)) {
    throw Error(ErrorCode::kConfiguration, "punctuation and numbers are always preserved");
  }

  c.translit_engine = kv.get_string("transliteration.engine", c.translit_engine);
  if (const auto d = kv.find("transliteration.dictionary"); d && !d->empty()) {
    c.translit_dictionary = resolve(base_dir, *d);
  }
  c.translit_command = kv.get_string("transliteration.command", "");
  if (c.translit_engine == "dictionary" && c.translit_dictionary.empty()) {
    throw Error(ErrorCode::kConfiguration, "transliteration.engine=dictionary needs transliteration.dictionary");
  }
  if (c.translit_engine == "external" && c.translit_command.empty()) {
    throw Error(ErrorCode::kConfiguration, "transliteration.engine=external needs transliteration.command");
  }

  const auto ids = kv.get_list("models");
  if (ids.empty()) throw Error(ErrorCode::kConfiguration, "config lists no models");
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw Error(ErrorCode::kConfiguration, "model '" + id + "' listed twice");
    if (id.rfind("ensemble-", 0) == 0) {
      throw Error(ErrorCode::kConfiguration, "model id '" + id + "' uses the reserved ensemble- prefix");
    }
    const KvConfig model_kv = kv.subset("model." + id + ".");
    ModelSpec spec;
    spec.id = id;
    KvConfig train_kv = model_kv;
    if (!train_kv.has("seed")) train_kv.set("seed", std::to_string(c.seed));
    spec.train = TrainConfig::from_kv(train_kv);
    spec.encoder = model_kv.subset("encoder.");
    if (!spec.encoder.has("backbone_id")) spec.encoder.set("backbone_id", id);
    spec.encoder.set("max_sequence_length", std::to_string(spec.train.max_sequence_length));
    c.models.push_back(std::move(spec));
  }

  if (kv.has("ensemble.methods")) {
    c.methods.clear();
    for (const auto& m : kv.get_list("ensemble.methods")) {
      const auto method = parse_vote_method(m);
      if (!method) throw Error(ErrorCode::kConfiguration, "unknown ensemble method '" + m + "'");
      if (std::find(c.methods.begin(), c.methods.end(), *method) == c.methods.end()) {
        c.methods.push_back(*method);
      }
    }
  }
  c.figures = kv.get_bool("report.figures", false);
  c.raw = std::move(kv);
  return c;
}

ExperimentConfig ExperimentConfig::load(const fs::path& path) {
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kConfiguration, "config file " + path.string() + " not found");
  }
  return from_kv(KvConfig::parse(read_file(path)), fs::absolute(path).parent_path());
}

const ModelSpec& ExperimentConfig::model(const std::string& id) const {
  for (const auto& m : models) {
    if (m.id == id) return m;
  }
  throw Error(ErrorCode::kConfiguration, "model '" + id + "' is not configured");
}

// ---------------------------------------------------------------------------
// WorkdirLock

WorkdirLock::WorkdirLock(const fs::path& workdir) : path_(workdir / ".lock") {
  fs::create_directories(workdir);
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw Error(ErrorCode::kLocked, "work dir " + workdir.string() +
                                        " is in use by another invocation (remove " + path_.string() +
                                        " if that process is gone)");
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkdirLock::~WorkdirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

// ---------------------------------------------------------------------------
// Pipeline

Pipeline::Pipeline(ExperimentConfig config, Logger logger)
    : config_(std::move(config)), logger_(std::move(logger)) {}

void Pipeline::log(const std::string& message) const {
  if (logger_) logger_(message);
}

fs::path Pipeline::prepare_dir() const { return config_.workdir / "prepare"; }
fs::path Pipeline::model_dir(const std::string& id) const { return config_.workdir / "models" / id; }
namespace {
const std::string& checked_split(const std::string& split) {
  if (split != "val" && split != "test") {
    throw Error(ErrorCode::kArgument, "split must be 'val' or 'test', got '" + split + "'");
  }
  return split;
}
}  // namespace

fs::path Pipeline::predictions_path(const std::string& split, const std::string& id) const {
  checked_split(split);
  return config_.workdir / "predictions" / split / (id + ".tsv");
}
fs::path Pipeline::report_dir(const std::string& split) const {
  checked_split(split);
  return config_.workdir / "report" / split;
}

std::string Pipeline::prepare_hash() const {
  std::string key = "prepare\n";
  const auto& raw = config_.raw;
  for (const auto& [k, v] : raw.values()) {
    if (k.rfind("corpus.", 0) == 0 || k.rfind("preprocess.", 0) == 0 ||
        k.rfind("transliteration.", 0) == 0 || k == "split.ratio") {
      key += k + "=" + v + "\n";
    }
  }
  key += "seed=" + std::to_string(config_.seed) + "\n";
  key += "train_corpus=" + hex_hash(fs::exists(config_.train_corpus) ? read_file(config_.train_corpus) : "") + "\n";
  if (config_.test_corpus) {
    key += "test_corpus=" + hex_hash(fs::exists(*config_.test_corpus) ? read_file(*config_.test_corpus) : "") + "\n";
  }
  if (!config_.translit_dictionary.empty() && fs::exists(config_.translit_dictionary)) {
    key += "dictionary=" + hex_hash(read_file(config_.translit_dictionary)) + "\n";
  }
  return hex_hash(key);
}

std::string Pipeline::train_hash(const std::string& model_id) const {
  const auto& spec = config_.model(model_id);
  return hex_hash("train\n" + prepare_hash() + "\n" + spec.encoder.canonical() + "\n" +
                  spec.train.to_kv().canonical());
}

std::string Pipeline::predict_hash(const std::string& model_id) const {
  return hex_hash("predict\n" + train_hash(model_id));
}

std::string Pipeline::ensemble_hash(VoteMethod method) const {
  std::string key = "ensemble\n" + std::string(to_string(method)) + "\n";
  for (const auto& m : config_.models) key += m.id + "=" + predict_hash(m.id) + "\n";
  return hex_hash(key);
}

void Pipeline::require_stage(const std::string& key, const std::string& expected,
                             const std::string& rerun_hint) const {
  const auto manifest = read_manifest(config_.workdir);
  const auto& stages = manifest["stages"];
  if (!stages.contains(key)) {
    throw Error(ErrorCode::kMissingArtifact,
                "stage '" + key + "' has not run in " + config_.workdir.string() + "; run '" + rerun_hint + "' first");
  }
  if (stages[key].get<std::string>() != expected) {
    throw Error(ErrorCode::kStaleArtifact,
                "artifacts of stage '" + key + "' were produced by a different configuration; rerun '" +
                    rerun_hint + "'");
  }
}

void Pipeline::record_stage(const std::string& key, const std::string& hash) {
  auto manifest = read_manifest(config_.workdir);
  manifest["stages"][key] = hash;
  write_file(config_.workdir / kManifestName, manifest.dump(2) + "\n");
}

void Pipeline::prepare() {
  WorkdirLock lock(config_.workdir);
  prepare_locked();
}

void Pipeline::prepare_locked() {
  if (!fs::exists(config_.train_corpus)) {
    throw Error(ErrorCode::kConfiguration, "train corpus " + config_.train_corpus.string() + " not found");
  }
  if (config_.test_corpus && !fs::exists(*config_.test_corpus)) {
    throw Error(ErrorCode::kConfiguration, "test corpus " + config_.test_corpus->string() + " not found");
  }
  const auto dir = prepare_dir();
  fs::create_directories(dir);

  const auto train_fmt = format_for(config_.train_corpus, config_.corpus_format);
  ParsedCorpus train_corpus;
  try {
    train_corpus = parse_corpus(read_file(config_.train_corpus), train_fmt);
  } catch (const Error& e) {
    throw Error(e.code(), config_.train_corpus.string() + ": " + e.what());
  }
  const auto& chains = train_corpus.chains;
  const CorpusStats train_stats = corpus_stats(chains);
  DataSplit split = stratified_split(chains, config_.split_ratio, config_.seed);
  for (const auto& w : split.warnings) log("warning: " + w);

  auto engine = make_engine(config_);
  TransliterationCounters counters;
  const auto processed = preprocess_chains(chains, config_.separator, config_.cleaning, *engine, &counters);

  std::unordered_map<std::string, bool> in_train;
  for (const auto& c : split.train) in_train[c.chain_id] = true;
  std::vector<ProcessedInstance> train_set;
  std::vector<ProcessedInstance> val_set;
  std::string manifest_tsv;
  for (const auto& inst : processed) {
    const bool is_train = in_train.count(inst.chain_id) > 0;
    (is_train ? train_set : val_set).push_back(inst);
    manifest_tsv += inst.chain_id + (is_train ? "\ttrain\n" : "\tval\n");
  }
  std::vector<ProcessedInstance> full_train = train_set;
  full_train.insert(full_train.end(), val_set.begin(), val_set.end());

  write_file(dir / "train_chains.csv", write_chain_csv(chains));
  write_file(dir / "train.tsv", write_instances(train_set));
  write_file(dir / "val.tsv", write_instances(val_set));
  write_file(dir / "full_train.tsv", write_instances(full_train));
  write_file(dir / "split_manifest.tsv", manifest_tsv);

  ordered_json stats;
  stats["train"] = stats_json(train_stats);
  const auto count_labels = [](const std::vector<ProcessedInstance>& set) {
    std::size_t hof = 0;
    for (const auto& i : set) hof += (i.label && *i.label == Label::kHof) ? 1 : 0;
    return ordered_json{{"total", set.size()}, {"hof", hof}, {"not", set.size() - hof}};
  };
  stats["split"] = {{"ratio", config_.split_ratio},
                    {"seed", config_.seed},
                    {"train", count_labels(train_set)},
                    {"val", count_labels(val_set)}};
  log("train corpus: " + std::to_string(train_stats.total_chains) + " chains (" +
      std::to_string(train_stats.hof_count) + " HOF / " + std::to_string(train_stats.not_count) +
      " NOT); split " + std::to_string(train_set.size()) + "/" + std::to_string(val_set.size()));

  if (config_.test_corpus) {
    ParseOptions opts;
    opts.allow_unlabeled = !config_.test_labeled;
    ParsedCorpus test_corpus;
    try {
      test_corpus = parse_corpus(read_file(*config_.test_corpus),
                                 format_for(*config_.test_corpus, config_.corpus_format), opts);
    } catch (const Error& e) {
      throw Error(e.code(), config_.test_corpus->string() + ": " + e.what());
    }
    const auto test_processed = preprocess_chains(test_corpus.chains, config_.separator,
                                                  config_.cleaning, *engine, &counters);
    write_file(dir / "test_chains.csv", write_chain_csv(test_corpus.chains));
    write_file(dir / "test.tsv", write_instances(test_processed));
    stats["test"] = stats_json(corpus_stats(test_corpus.chains));
  } else {
    std::error_code ec;
    fs::remove(dir / "test.tsv", ec);
    fs::remove(dir / "test_chains.csv", ec);
  }
  stats["transliteration"] = {{"engine", engine->engine_id()},
                              {"tokens", counters.tokens_seen},
                              {"roman_tokens", counters.roman_tokens},
                              {"failures", counters.failures}};
  if (counters.failures > 0) {
    log("warning: transliteration failed on " + std::to_string(counters.failures) +
        " tokens; they were kept unchanged");
  }
  write_file(dir / "stats.json", stats.dump(2) + "\n");
  record_stage("prepare", prepare_hash());
}

void Pipeline::train(const std::string& model_id) {
  WorkdirLock lock(config_.workdir);
  if (!model_id.empty()) {
    train_locked(config_.model(model_id));
    return;
  }
  for (const auto& spec : config_.models) train_locked(spec);
}

void Pipeline::train_locked(const ModelSpec& spec) {
  require_stage("prepare", prepare_hash(), "prepare");
  const auto pdir = prepare_dir();
  const auto train_set = load_instances(pdir / "train.tsv", "prepare");
  const auto val_set = load_instances(pdir / "val.tsv", "prepare");
  const auto full_train = load_instances(pdir / "full_train.tsv", "prepare");

  const auto dir = model_dir(spec.id);
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto adapter = make_adapter(spec.encoder.canonical());

  ordered_json record = {{"model_id", spec.id},
                         {"backbone_id", adapter->backbone_id()},
                         {"hidden_size", adapter->hidden_size()},
                         {"separator_mode", adapter->separator_mode() == SeparatorMode::kSingleToken
                                                ? "single-token"
                                                : "raw-text"},
                         {"status", "running"},
                         {"epochs", ordered_json::array()}};
  const auto record_path = dir / "training_record.json";
  const auto flush = [&] { write_file(record_path, record.dump(2) + "\n"); };
  flush();

  TrainOptions options;
  options.checkpoint_dir = dir / "checkpoints";
  options.on_epoch = [&](const EpochStats& e) {
    record["epochs"].push_back({{"epoch", e.epoch},
                                {"train_loss", e.train_loss},
                                {"val_loss", e.val_loss},
                                {"val_macro_f1", e.val_macro_f1},
                                {"steps", e.steps}});
    flush();
    char line[160];
    std::snprintf(line, sizeof line, "[%s] epoch %zu: train_loss %.6f val_loss %.6f val_macro_f1 %.4f",
                  spec.id.c_str(), e.epoch, e.train_loss, e.val_loss, e.val_macro_f1);
    log(line);
  };

  try {
    auto outcome = convohate::train(train_set, val_set, *adapter, spec.train, options);
    record["best_epoch"] = outcome.record.best_epoch;
    auto& refs = record["checkpoint_refs"] = ordered_json::array();
    for (const auto& ref : outcome.record.checkpoint_refs) {
      refs.push_back(fs::path(ref).lexically_relative(dir).generic_string());
    }
    record["validation_steps"] = outcome.record.total_steps;
    outcome.best_model.save(dir / "best.ckpt");

    auto retrained = retrain_full(full_train, *adapter, spec.train, outcome.record.best_epoch);
    retrained.model.save(dir / "final.ckpt");
    record["retrain"] = {{"epochs", outcome.record.best_epoch},
                         {"steps", retrained.steps},
                         {"train_losses", retrained.epoch_train_losses},
                         {"note", retrained.conformance_note}};
    record["status"] = "complete";
    flush();
    log("[" + spec.id + "] best epoch " + std::to_string(outcome.record.best_epoch) + "; " +
        retrained.conformance_note);
  } catch (const Error& e) {
    record["status"] = "failed";
    record["error"] = e.what();
    flush();
    throw;
  }
  record_stage("train:" + spec.id, train_hash(spec.id));
}

void Pipeline::predict(const std::string& model_id) {
  WorkdirLock lock(config_.workdir);
  if (!model_id.empty()) {
    predict_locked(config_.model(model_id));
    return;
  }
  for (const auto& spec : config_.models) predict_locked(spec);
}

void Pipeline::predict_locked(const ModelSpec& spec) {
  require_stage("prepare", prepare_hash(), "prepare");
  require_stage("train:" + spec.id, train_hash(spec.id), "train --models " + spec.id);
  const auto dir = model_dir(spec.id);

  const auto run = [&](const char* split, const fs::path& ckpt, const fs::path& instances_path) {
    const auto instances = load_instances(instances_path, "prepare");
    Model model = Model::load(ckpt);
    PredictStats stats;
    const auto records = model.predict(instances, spec.id, &stats);
    write_file(predictions_path(split, spec.id), write_predictions(records));
    if (stats.truncated > 0) {
      log("[" + spec.id + "] " + std::to_string(stats.truncated) + " " + split +
          " inputs truncated to max_sequence_length");
    }
  };
  run(kSplitVal, dir / "best.ckpt", prepare_dir() / "val.tsv");
  if (config_.test_corpus) run(kSplitTest, dir / "final.ckpt", prepare_dir() / "test.tsv");
  record_stage("predict:" + spec.id, predict_hash(spec.id));
}

void Pipeline::ensemble(std::optional<VoteMethod> method) {
  WorkdirLock lock(config_.workdir);
  if (method) {
    ensemble_locked(*method);
    return;
  }
  for (VoteMethod m : config_.methods) ensemble_locked(m);
}

void Pipeline::ensemble_locked(VoteMethod method) {
  for (const auto& spec : config_.models) {
    require_stage("predict:" + spec.id, predict_hash(spec.id), "predict --models " + spec.id);
  }
  std::vector<std::string> splits{kSplitVal};
  if (config_.test_corpus) splits.emplace_back(kSplitTest);
  for (const auto& split : splits) {
    std::vector<std::vector<PredictionRecord>> per_model;
    for (const auto& spec : config_.models) {
      per_model.push_back(load_predictions(predictions_path(split, spec.id), "predict"));
    }
    const auto input = EnsembleInput::from_records(per_model);
    const auto output = run_ensemble(input, method);
    write_file(predictions_path(split, ensemble_model_id(method)),
               write_predictions(output.to_records()));
  }
  record_stage("ensemble:" + std::string(to_string(method)), ensemble_hash(method));
}

void Pipeline::evaluate() {
  WorkdirLock lock(config_.workdir);
  evaluate_locked();
}

void Pipeline::evaluate_locked() {
  std::vector<std::string> splits{kSplitVal};
  if (config_.test_corpus) splits.emplace_back(kSplitTest);

  std::vector<std::string> run_ids;
  for (const auto& spec : config_.models) {
    require_stage("predict:" + spec.id, predict_hash(spec.id), "predict --models " + spec.id);
    run_ids.push_back(spec.id);
  }
  for (VoteMethod m : config_.methods) {
    require_stage("ensemble:" + std::string(to_string(m)), ensemble_hash(m),
                  "ensemble --methods " + std::string(to_string(m)));
    run_ids.push_back(ensemble_model_id(m));
  }

  for (const auto& split : splits) {
    const auto gold_instances = load_instances(prepare_dir() / (split + ".tsv"), "prepare");
    std::unordered_map<std::string, Label> gold;
    bool has_gold = true;
    for (const auto& inst : gold_instances) {
      if (!inst.label) {
        has_gold = false;
        break;
      }
      gold.emplace(inst.chain_id, *inst.label);
    }
    if (!has_gold) {
      log(split + " set has no gold labels; report omitted (predictions are in " +
          (config_.workdir / "predictions" / split).string() + ")");
      std::error_code ec;
      fs::remove(config_.workdir / "evaluation" / (split + ".json"), ec);
      continue;
    }

    ordered_json eval = {{"split", split}, {"runs", ordered_json::array()}};
    for (const auto& id : run_ids) {
      const auto records = load_predictions(predictions_path(split, id), "predict");
      if (records.size() != gold.size()) {
        throw Error(ErrorCode::kAlignment, id + " has " + std::to_string(records.size()) +
                                               " predictions for " + std::to_string(gold.size()) +
                                               " " + split + " instances");
      }
      std::vector<Label> g;
      std::vector<Label> p;
      for (const auto& r : records) {
        const auto it = gold.find(r.chain_id);
        if (it == gold.end()) {
          throw Error(ErrorCode::kAlignment, id + " predicts unknown " + split + " id '" + r.chain_id + "'");
        }
        if (std::abs(r.probs[0] + r.probs[1] - 1.0) > kNormalizationTolerance) {
          throw Error(ErrorCode::kValidation, id + ": probabilities for '" + r.chain_id + "' do not sum to 1");
        }
        g.push_back(it->second);
        p.push_back(r.predicted);
      }
      const auto cm = confusion(g, p);
      eval["runs"].push_back({{"name", id},
                              {"confusion", {{cm.counts[0][0], cm.counts[0][1]},
                                             {cm.counts[1][0], cm.counts[1][1]}}}});
    }
    write_file(config_.workdir / "evaluation" / (split + ".json"), eval.dump(2) + "\n");
  }
  record_stage("evaluate", hex_hash("evaluate\n" + [&] {
                 std::string k;
                 for (const auto& s : config_.models) k += predict_hash(s.id);
                 for (VoteMethod m : config_.methods) k += ensemble_hash(m);
                 return k;
               }()));
  report_locked();
}

void Pipeline::report() {
  WorkdirLock lock(config_.workdir);
  report_locked();
}

void Pipeline::report_locked() {
  bool any = false;
  for (const char* split : {kSplitVal, kSplitTest}) {
    const auto path = config_.workdir / "evaluation" / (std::string(split) + ".json");
    if (!fs::exists(path)) continue;
    const auto eval = ordered_json::parse(read_file(path));
    std::vector<NamedReport> reports;
    for (const auto& run : eval["runs"]) {
      const auto& c = run["confusion"];
      const auto cm = ConfusionMatrix2::from_cells(c[0][0].get<std::size_t>(), c[0][1].get<std::size_t>(),
                                                   c[1][0].get<std::size_t>(), c[1][1].get<std::size_t>());
      reports.push_back({run["name"].get<std::string>(), compute_metrics(cm)});
    }
    const auto rendered = render_report(reports, RenderOptions{config_.figures});
    const auto dir = report_dir(split);
    fs::remove_all(dir);
    write_report(rendered, dir);
    log(std::string(split) + " report (" + (dir / "report.json").string() + "):\n" + rendered.table);
    any = true;
  }
  if (!any) {
    throw Error(ErrorCode::kMissingArtifact, "no evaluation results in " + config_.workdir.string() +
                                                 "; run 'evaluate' first");
  }
}

void Pipeline::reproduce() {
  WorkdirLock lock(config_.workdir);
  prepare_locked();
  for (const auto& spec : config_.models) train_locked(spec);
  for (const auto& spec : config_.models) predict_locked(spec);
  for (VoteMethod m : config_.methods) ensemble_locked(m);
  evaluate_locked();
}

}  // namespace convohate
