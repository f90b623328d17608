#ifndef CONVOHATE_H
#define CONVOHATE_H

#include <stddef.h>
#include <stdint.h>

#if defined(CONVOHATE_BUILDING)
#define CH_API __attribute__((visibility("default")))
#else
#define CH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every fallible call returns a status. On failure the message is kept
 * per thread until the next failing call on that thread. */
typedef enum ch_status {
  CH_OK = 0,
  CH_ERR_ARGUMENT = 1,
  CH_ERR_PARSE = 2,
  CH_ERR_SCHEMA = 3,
  CH_ERR_LABEL = 4,
  CH_ERR_MISSING_LABEL = 5,
  CH_ERR_EMPTY_CORPUS = 6,
  CH_ERR_SHAPE = 7,
  CH_ERR_DIVERGENCE = 8,
  CH_ERR_CONFIGURATION = 9,
  CH_ERR_VALIDATION = 10,
  CH_ERR_ALIGNMENT = 11,
  CH_ERR_IO = 12,
  CH_ERR_STALE_ARTIFACT = 13,
  CH_ERR_MISSING_ARTIFACT = 14,
  CH_ERR_LOCKED = 15,
  CH_ERR_INTERNAL = 100
} ch_status;

typedef enum ch_label { CH_LABEL_HOF = 0, CH_LABEL_NOT = 1 } ch_label;
typedef enum ch_script { CH_SCRIPT_DEVANAGARI = 0, CH_SCRIPT_ROMAN = 1, CH_SCRIPT_OTHER = 2 } ch_script;
typedef enum ch_format { CH_FORMAT_AUTO = -1, CH_FORMAT_JSON_TREE = 0, CH_FORMAT_CSV_FLAT = 1 } ch_format;

CH_API const char* ch_version(void);
CH_API const char* ch_last_error(void);
CH_API const char* ch_status_name(ch_status status);
/* Frees strings returned through char** out parameters. NULL is ignored. */
CH_API void ch_string_free(char* s);

/* ---- metrics ---- */

typedef struct ch_confusion {
  uint64_t tp_hof; /* gold HOF, predicted HOF */
  uint64_t fn_hof; /* gold HOF, predicted NOT */
  uint64_t fp_hof; /* gold NOT, predicted HOF */
  uint64_t tn_hof; /* gold NOT, predicted NOT */
} ch_confusion;

typedef struct ch_class_scores {
  double precision;
  double recall;
  double f1;
} ch_class_scores;

typedef struct ch_metrics {
  ch_confusion confusion;
  ch_class_scores per_class[2]; /* indexed by ch_label */
  double macro_precision;
  double macro_recall;
  double macro_f1;
  double accuracy_percent;
  /* misclassified gold members per class; present is 0 for an empty class */
  int misclassified_present[2];
  uint64_t misclassified_count[2];
  double misclassified_percent[2];
} ch_metrics;

CH_API ch_status ch_confusion_from_labels(const int* gold, const int* pred, size_t n, ch_confusion* out);
CH_API ch_status ch_compute_metrics(const ch_confusion* cm, ch_metrics* out);

/* ---- voting ---- */

/* n must be odd and at least 3. */
CH_API ch_status ch_hard_vote(const int* labels, size_t n, int* out_label);
/* probs holds n rows of (p_HOF, p_NOT). A single row is accepted only when
 * allow_single is nonzero. out_sums may be NULL. */
CH_API ch_status ch_soft_vote(const double* probs, size_t n, int allow_single, int* out_label,
                              double* out_sums);

/* ---- preprocessing ---- */

typedef struct ch_cleaning {
  int strip_hashtags;
  int strip_emojis;
  int strip_urls;
  int strip_mentions;
} ch_cleaning;

CH_API void ch_cleaning_default(ch_cleaning* cfg);
/* cfg and separator may be NULL for the defaults. */
CH_API ch_status ch_clean(const char* text, const ch_cleaning* cfg, const char* separator, char** out);
CH_API ch_status ch_detect_script(const char* token, int* out_script);

typedef struct ch_engine ch_engine;

CH_API ch_status ch_engine_identity(ch_engine** out);
/* Tab-separated roman<TAB>devanagari lines. */
CH_API ch_status ch_engine_dictionary(const char* tsv, ch_engine** out);
/* Shell command reading one token per line on stdin, writing one per line. */
CH_API ch_status ch_engine_external(const char* command, ch_engine** out);
CH_API void ch_engine_free(ch_engine* engine);
CH_API ch_status ch_transliterate(ch_engine* engine, const char* text, const char* separator,
                                  char** out, size_t* out_failures);

/* ---- corpus ---- */

typedef struct ch_corpus ch_corpus;

typedef struct ch_corpus_stats {
  uint64_t total_chains;
  uint64_t hof_count;
  uint64_t not_count;
  uint64_t unlabeled_count;
  uint64_t parent_count;
  uint64_t comment_count;
  uint64_t reply_count;
  uint64_t avg_comments_per_parent;
} ch_corpus_stats;

typedef struct ch_split_counts {
  uint64_t train_hof;
  uint64_t train_not;
  uint64_t val_hof;
  uint64_t val_not;
} ch_split_counts;

typedef struct ch_synthetic_spec {
  uint64_t parents;
  uint64_t comments;
  uint64_t replies;
  uint64_t hof_count;
  uint64_t seed;
  double lexical_noise;
} ch_synthetic_spec;

CH_API void ch_synthetic_default(ch_synthetic_spec* spec);
CH_API ch_status ch_corpus_synthesize(const ch_synthetic_spec* spec, ch_corpus** out);
CH_API ch_status ch_corpus_parse(const char* data, size_t len, int format, int allow_unlabeled,
                                 ch_corpus** out);
/* CH_FORMAT_AUTO picks CSV for a .csv extension and JSON otherwise. */
CH_API ch_status ch_corpus_load(const char* path, int format, int allow_unlabeled, ch_corpus** out);
CH_API void ch_corpus_free(ch_corpus* corpus);

CH_API size_t ch_corpus_chain_count(const ch_corpus* corpus);
/* Borrowed pointers stay valid until the corpus is freed. label is -1 when absent. */
CH_API ch_status ch_corpus_chain(const ch_corpus* corpus, size_t index, const char** chain_id,
                                 int* label, size_t* node_count);
CH_API ch_status ch_corpus_stats_get(const ch_corpus* corpus, ch_corpus_stats* out);
/* manifest_tsv (chain_id<TAB>train|val per line) may be NULL. */
CH_API ch_status ch_corpus_split(const ch_corpus* corpus, double ratio, uint64_t seed,
                                 ch_split_counts* out, char** manifest_tsv);
/* JSON trees for synthesized or JSON-parsed corpora. */
CH_API ch_status ch_corpus_write_json(const ch_corpus* corpus, char** out);
CH_API ch_status ch_corpus_write_csv(const ch_corpus* corpus, char** out);
/* Processed instances as chain_id<TAB>label<TAB>text lines. cfg and
 * separator may be NULL; engine NULL means identity. */
CH_API ch_status ch_corpus_preprocess(const ch_corpus* corpus, const ch_cleaning* cfg,
                                      const char* separator, ch_engine* engine, char** out);

/* ---- experiment pipeline ---- */

typedef struct ch_experiment ch_experiment;
typedef void (*ch_log_fn)(const char* message, void* user);

CH_API ch_status ch_experiment_open(const char* config_path, ch_experiment** out);
/* Config given as text; relative paths resolve against base_dir. */
CH_API ch_status ch_experiment_open_text(const char* config_text, const char* base_dir,
                                         ch_experiment** out);
/* Overrides one config key. The configuration is revalidated at the next stage. */
CH_API ch_status ch_experiment_set(ch_experiment* exp, const char* key, const char* value);
CH_API void ch_experiment_set_log(ch_experiment* exp, ch_log_fn fn, void* user);
CH_API void ch_experiment_free(ch_experiment* exp);

CH_API ch_status ch_experiment_prepare(ch_experiment* exp);
/* model_id NULL means every configured model. */
CH_API ch_status ch_experiment_train(ch_experiment* exp, const char* model_id);
CH_API ch_status ch_experiment_predict(ch_experiment* exp, const char* model_id);
/* method "hard", "soft" or NULL for the configured list. */
CH_API ch_status ch_experiment_ensemble(ch_experiment* exp, const char* method);
CH_API ch_status ch_experiment_evaluate(ch_experiment* exp);
CH_API ch_status ch_experiment_report(ch_experiment* exp);
CH_API ch_status ch_experiment_reproduce(ch_experiment* exp);

CH_API ch_status ch_experiment_workdir(ch_experiment* exp, char** out);
/* split is "val" or "test". */
CH_API ch_status ch_experiment_predictions_path(ch_experiment* exp, const char* split,
                                                const char* model_id, char** out);
/* Directory holding report.json, report.txt and any figures. */
CH_API ch_status ch_experiment_report_path(ch_experiment* exp, const char* split, char** out);

#ifdef __cplusplus
}
#endif

#endif
