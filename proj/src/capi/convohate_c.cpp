#include "convohate/convohate.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <new>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corpus.hpp"
#include "ensemble.hpp"
#include "error.hpp"
#include "kv_config.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "preprocess.hpp"
#include "synthetic.hpp"
#include "transliteration.hpp"

struct ch_engine {
  std::unique_ptr<convohate::TransliterationEngine> impl;
};

struct ch_corpus {
  convohate::ParsedCorpus parsed;
};

struct ch_experiment {
  convohate::KvConfig kv;
  std::filesystem::path base_dir;
  ch_log_fn log_fn = nullptr;
  void* log_user = nullptr;
  std::optional<convohate::Pipeline> pipeline;  // rebuilt after overrides
};

namespace {

using convohate::Error;
using convohate::ErrorCode;

thread_local std::string g_last_error;

ch_status fail(ch_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

template <typename Fn>
ch_status guarded(Fn&& fn) noexcept {
  try {
    fn();
    return CH_OK;
  } catch (const Error& e) {
    return fail(static_cast<ch_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(CH_ERR_PARSE, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CH_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return fail(CH_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(CH_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CH_ERR_INTERNAL, "unknown exception");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

convohate::Label to_label(int value) {
  if (value != CH_LABEL_HOF && value != CH_LABEL_NOT) {
    throw Error(ErrorCode::kLabel, "label value " + std::to_string(value) + " is neither HOF (0) nor NOT (1)");
  }
  return static_cast<convohate::Label>(value);
}

convohate::CleaningConfig to_cleaning(const ch_cleaning* cfg) {
  convohate::CleaningConfig c;
  if (cfg) {
    c.strip_hashtags = cfg->strip_hashtags != 0;
    c.strip_emojis = cfg->strip_emojis != 0;
    c.strip_urls = cfg->strip_urls != 0;
    c.strip_mentions = cfg->strip_mentions != 0;
  }
  return c;
}

convohate::SeparatorToken to_separator(const char* sep) {
  convohate::SeparatorToken s;
  if (sep) {
    require(*sep != '\0', "separator is empty");
    s.literal = sep;
  }
  return s;
}

convohate::ConfusionMatrix2 to_matrix(const ch_confusion& c) {
  return convohate::ConfusionMatrix2::from_cells(c.tp_hof, c.fn_hof, c.fp_hof, c.tn_hof);
}

ch_confusion from_matrix(const convohate::ConfusionMatrix2& m) {
  return {m.tp_hof(), m.fn_hof(), m.fp_hof(), m.tn_hof()};
}

convohate::Pipeline& pipeline_of(ch_experiment* exp) {
  if (!exp->pipeline) {
    auto config = convohate::ExperimentConfig::from_kv(exp->kv, exp->base_dir);
    convohate::Logger logger;
    if (exp->log_fn) {
      logger = [fn = exp->log_fn, user = exp->log_user](std::string_view msg) {
        const std::string s(msg);
        fn(s.c_str(), user);
      };
    }
    exp->pipeline.emplace(std::move(config), std::move(logger));
  }
  return *exp->pipeline;
}

ch_status open_experiment(convohate::KvConfig kv, std::filesystem::path base, ch_experiment** out) {
  auto exp = std::make_unique<ch_experiment>();
  exp->kv = std::move(kv);
  exp->base_dir = std::move(base);
  pipeline_of(exp.get());  // validate eagerly
  *out = exp.release();
  return CH_OK;
}

}  // namespace

extern "C" {

const char* ch_version(void) { return "0.1.0"; }

const char* ch_last_error(void) { return g_last_error.c_str(); }

const char* ch_status_name(ch_status status) {
  if (status == CH_OK) return "ok";
  if (status == CH_ERR_INTERNAL) return "internal";
  if (status >= CH_ERR_ARGUMENT && status <= CH_ERR_LOCKED) {
    return convohate::error_code_name(static_cast<ErrorCode>(status));
  }
  return "unknown";
}

void ch_string_free(char* s) { std::free(s); }

// ---- metrics

ch_status ch_confusion_from_labels(const int* gold, const int* pred, size_t n, ch_confusion* out) {
  return guarded([&] {
    require(out && (n == 0 || (gold && pred)), "null argument");
    std::vector<convohate::Label> g(n);
    std::vector<convohate::Label> p(n);
    for (size_t i = 0; i < n; ++i) {
      g[i] = to_label(gold[i]);
      p[i] = to_label(pred[i]);
    }
    *out = from_matrix(convohate::confusion(g, p));
  });
}

ch_status ch_compute_metrics(const ch_confusion* cm, ch_metrics* out) {
  return guarded([&] {
    require(cm && out, "null argument");
    const auto r = convohate::compute_metrics(to_matrix(*cm));
    ch_metrics m{};
    m.confusion = from_matrix(r.confusion);
    for (size_t c = 0; c < 2; ++c) {
      m.per_class[c] = {r.per_class[c].precision, r.per_class[c].recall, r.per_class[c].f1};
      const auto& mis = r.misclassification.per_class[c];
      m.misclassified_present[c] = mis.has_value() ? 1 : 0;
      m.misclassified_count[c] = mis ? mis->count : 0;
      m.misclassified_percent[c] = mis ? mis->percent : 0.0;
    }
    m.macro_precision = r.macro_precision;
    m.macro_recall = r.macro_recall;
    m.macro_f1 = r.macro_f1;
    m.accuracy_percent = r.accuracy_percent;
    *out = m;
  });
}

// ---- voting

ch_status ch_hard_vote(const int* labels, size_t n, int* out_label) {
  return guarded([&] {
    require(out_label && (n == 0 || labels), "null argument");
    std::vector<convohate::Label> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = to_label(labels[i]);
    *out_label = static_cast<int>(convohate::hard_vote(v));
  });
}

ch_status ch_soft_vote(const double* probs, size_t n, int allow_single, int* out_label, double* out_sums) {
  return guarded([&] {
    require(out_label && (n == 0 || probs), "null argument");
    std::vector<convohate::Probs> v(n);
    for (size_t i = 0; i < n; ++i) v[i] = {probs[2 * i], probs[2 * i + 1]};
    const auto r = convohate::soft_vote(v, {}, allow_single != 0);
    *out_label = static_cast<int>(r.label);
    if (out_sums) {
      out_sums[0] = r.sums[0];
      out_sums[1] = r.sums[1];
    }
  });
}

// ---- preprocessing

void ch_cleaning_default(ch_cleaning* cfg) {
  if (cfg) *cfg = {1, 1, 1, 1};
}

ch_status ch_clean(const char* text, const ch_cleaning* cfg, const char* separator, char** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = dup_string(convohate::clean(text, to_cleaning(cfg), to_separator(separator)));
  });
}

ch_status ch_detect_script(const char* token, int* out_script) {
  return guarded([&] {
    require(token && out_script, "null argument");
    *out_script = static_cast<int>(convohate::detect_script(token));
  });
}

ch_status ch_engine_identity(ch_engine** out) {
  return guarded([&] {
    require(out, "null argument");
    *out = new ch_engine{std::make_unique<convohate::IdentityEngine>()};
  });
}

ch_status ch_engine_dictionary(const char* tsv, ch_engine** out) {
  return guarded([&] {
    require(tsv && out, "null argument");
    *out = new ch_engine{
        std::make_unique<convohate::DictionaryEngine>(convohate::DictionaryEngine::from_tsv(tsv))};
  });
}

ch_status ch_engine_external(const char* command, ch_engine** out) {
  return guarded([&] {
    require(command && *command && out, "null or empty argument");
    *out = new ch_engine{std::make_unique<convohate::ExternalCommandEngine>(command)};
  });
}

void ch_engine_free(ch_engine* engine) { delete engine; }

ch_status ch_transliterate(ch_engine* engine, const char* text, const char* separator, char** out,
                           size_t* out_failures) {
  return guarded([&] {
    require(engine && text && out, "null argument");
    convohate::TransliterationCounters counters;
    *out = dup_string(convohate::transliterate(text, *engine->impl, to_separator(separator), &counters));
    if (out_failures) *out_failures = counters.failures;
  });
}

// ---- corpus

void ch_synthetic_default(ch_synthetic_spec* spec) {
  if (!spec) return;
  const convohate::SyntheticCorpusSpec d;
  *spec = {d.parents, d.comments, d.replies, d.hof_count, d.seed, d.lexical_noise};
}

ch_status ch_corpus_synthesize(const ch_synthetic_spec* spec, ch_corpus** out) {
  return guarded([&] {
    require(spec && out, "null argument");
    convohate::SyntheticCorpusSpec s;
    s.parents = spec->parents;
    s.comments = spec->comments;
    s.replies = spec->replies;
    s.hof_count = spec->hof_count;
    s.seed = spec->seed;
    s.lexical_noise = spec->lexical_noise;
    auto corpus = std::make_unique<ch_corpus>();
    corpus->parsed.trees = convohate::synthesize_corpus(s);
    corpus->parsed.chains = convohate::flatten(corpus->parsed.trees);
    *out = corpus.release();
  });
}

ch_status ch_corpus_parse(const char* data, size_t len, int format, int allow_unlabeled, ch_corpus** out) {
  return guarded([&] {
    require(out && (len == 0 || data), "null argument");
    require(format == CH_FORMAT_JSON_TREE || format == CH_FORMAT_CSV_FLAT,
            "format must be CH_FORMAT_JSON_TREE or CH_FORMAT_CSV_FLAT");
    convohate::ParseOptions opts;
    opts.allow_unlabeled = allow_unlabeled != 0;
    auto corpus = std::make_unique<ch_corpus>();
    corpus->parsed = convohate::parse_corpus(std::string_view(data ? data : "", len),
                                             static_cast<convohate::CorpusFormat>(format), opts);
    *out = corpus.release();
  });
}

ch_status ch_corpus_load(const char* path, int format, int allow_unlabeled, ch_corpus** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const std::filesystem::path p(path);
    if (!std::filesystem::exists(p)) throw Error(ErrorCode::kIo, std::string("corpus ") + path + " not found");
    if (format == CH_FORMAT_AUTO) format = p.extension() == ".csv" ? CH_FORMAT_CSV_FLAT : CH_FORMAT_JSON_TREE;
    const std::string data = convohate::read_file(p);
    const ch_status st = ch_corpus_parse(data.data(), data.size(), format, allow_unlabeled, out);
    if (st != CH_OK) throw Error(static_cast<ErrorCode>(st), std::string(path) + ": " + g_last_error);
  });
}

void ch_corpus_free(ch_corpus* corpus) { delete corpus; }

size_t ch_corpus_chain_count(const ch_corpus* corpus) {
  return corpus ? corpus->parsed.chains.size() : 0;
}

ch_status ch_corpus_chain(const ch_corpus* corpus, size_t index, const char** chain_id, int* label,
                          size_t* node_count) {
  return guarded([&] {
    require(corpus, "null corpus");
    require(index < corpus->parsed.chains.size(), "chain index out of range");
    const auto& c = corpus->parsed.chains[index];
    if (chain_id) *chain_id = c.chain_id.c_str();
    if (label) *label = c.label ? static_cast<int>(*c.label) : -1;
    if (node_count) *node_count = c.nodes.size();
  });
}

ch_status ch_corpus_stats_get(const ch_corpus* corpus, ch_corpus_stats* out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    const auto s = convohate::corpus_stats(corpus->parsed.chains);
    *out = {s.total_chains, s.hof_count,     s.not_count,   s.unlabeled_count,
            s.parent_count, s.comment_count, s.reply_count, s.avg_comments_per_parent};
  });
}

ch_status ch_corpus_split(const ch_corpus* corpus, double ratio, uint64_t seed, ch_split_counts* out,
                          char** manifest_tsv) {
  return guarded([&] {
    require(corpus && out, "null argument");
    const auto split = convohate::stratified_split(corpus->parsed.chains, ratio, seed);
    ch_split_counts counts{};
    std::string manifest;
    for (const auto& c : split.train) {
      (c.label == convohate::Label::kHof ? counts.train_hof : counts.train_not)++;
      manifest += c.chain_id + "\ttrain\n";
    }
    for (const auto& c : split.val) {
      (c.label == convohate::Label::kHof ? counts.val_hof : counts.val_not)++;
      manifest += c.chain_id + "\tval\n";
    }
    *out = counts;
    if (manifest_tsv) *manifest_tsv = dup_string(manifest);
  });
}

ch_status ch_corpus_write_json(const ch_corpus* corpus, char** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    if (corpus->parsed.trees.empty() && !corpus->parsed.chains.empty()) {
      throw Error(ErrorCode::kArgument, "corpus was read from flat chains and has no trees");
    }
    *out = dup_string(convohate::write_json_trees(corpus->parsed.trees));
  });
}

ch_status ch_corpus_write_csv(const ch_corpus* corpus, char** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    *out = dup_string(convohate::write_chain_csv(corpus->parsed.chains));
  });
}

ch_status ch_corpus_preprocess(const ch_corpus* corpus, const ch_cleaning* cfg, const char* separator,
                               ch_engine* engine, char** out) {
  return guarded([&] {
    require(corpus && out, "null argument");
    convohate::IdentityEngine identity;
    convohate::TransliterationEngine& e = engine ? *engine->impl : identity;
    const auto instances = convohate::preprocess_chains(corpus->parsed.chains, to_separator(separator),
                                                        to_cleaning(cfg), e);
    *out = dup_string(convohate::write_instances(instances));
  });
}

// ---- experiment

ch_status ch_experiment_open(const char* config_path, ch_experiment** out) {
  return guarded([&] {
    require(config_path && out, "null argument");
    const std::filesystem::path p(config_path);
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::kConfiguration, std::string("config file ") + config_path + " not found");
    }
    open_experiment(convohate::KvConfig::parse(convohate::read_file(p)),
                    std::filesystem::absolute(p).parent_path(), out);
  });
}

ch_status ch_experiment_open_text(const char* config_text, const char* base_dir, ch_experiment** out) {
  return guarded([&] {
    require(config_text && out, "null argument");
    open_experiment(convohate::KvConfig::parse(config_text),
                    base_dir ? std::filesystem::path(base_dir) : std::filesystem::current_path(), out);
  });
}

ch_status ch_experiment_set(ch_experiment* exp, const char* key, const char* value) {
  return guarded([&] {
    require(exp && key && value, "null argument");
    exp->kv.set(key, value);
    exp->pipeline.reset();
  });
}

void ch_experiment_set_log(ch_experiment* exp, ch_log_fn fn, void* user) {
  if (!exp) return;
  exp->log_fn = fn;
  exp->log_user = user;
  exp->pipeline.reset();
}

void ch_experiment_free(ch_experiment* exp) { delete exp; }

ch_status ch_experiment_prepare(ch_experiment* exp) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).prepare();
  });
}

ch_status ch_experiment_train(ch_experiment* exp, const char* model_id) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).train(model_id ? model_id : "");
  });
}

ch_status ch_experiment_predict(ch_experiment* exp, const char* model_id) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).predict(model_id ? model_id : "");
  });
}

ch_status ch_experiment_ensemble(ch_experiment* exp, const char* method) {
  return guarded([&] {
    require(exp, "null experiment");
    std::optional<convohate::VoteMethod> m;
    if (method) {
      m = convohate::parse_vote_method(method);
      if (!m) throw Error(ErrorCode::kArgument, std::string("unknown ensemble method '") + method + "'");
    }
    pipeline_of(exp).ensemble(m);
  });
}

ch_status ch_experiment_evaluate(ch_experiment* exp) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).evaluate();
  });
}

ch_status ch_experiment_report(ch_experiment* exp) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).report();
  });
}

ch_status ch_experiment_reproduce(ch_experiment* exp) {
  return guarded([&] {
    require(exp, "null experiment");
    pipeline_of(exp).reproduce();
  });
}

ch_status ch_experiment_workdir(ch_experiment* exp, char** out) {
  return guarded([&] {
    require(exp && out, "null argument");
    *out = dup_string(pipeline_of(exp).config().workdir.string());
  });
}

ch_status ch_experiment_predictions_path(ch_experiment* exp, const char* split, const char* model_id,
                                         char** out) {
  return guarded([&] {
    require(exp && split && model_id && out, "null argument");
    *out = dup_string(pipeline_of(exp).predictions_path(split, model_id).string());
  });
}

ch_status ch_experiment_report_path(ch_experiment* exp, const char* split, char** out) {
  return guarded([&] {
    require(exp && split && out, "null argument");
    *out = dup_string(pipeline_of(exp).report_dir(split).string());
  });
}

}  // extern "C"
