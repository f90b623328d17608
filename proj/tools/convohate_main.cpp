#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convohate/convohate.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int exit_code_for(ch_status st) {
  if (st == CH_OK) return kExitOk;
  if (st == CH_ERR_ARGUMENT || st == CH_ERR_CONFIGURATION) return kExitUsage;
  return kExitRuntime;
}

int report_failure(ch_status st) {
  std::cerr << "convohate: error [" << ch_status_name(st) << "]: " << ch_last_error() << "\n";
  return exit_code_for(st);
}

void log_line(const char* message, void*) { std::cerr << message << "\n"; }

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

struct PipelineFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> models;
  std::vector<std::string> methods;
  bool figures = false;
  std::string workdir;
};

// Applies command-line overrides on top of the config file.
ch_status apply_flags(ch_experiment* exp, const PipelineFlags& f) {
  ch_status st = CH_OK;
  if (f.seed) st = ch_experiment_set(exp, "seed", std::to_string(*f.seed).c_str());
  if (st == CH_OK && !f.models.empty()) st = ch_experiment_set(exp, "models", join(f.models).c_str());
  if (st == CH_OK && !f.methods.empty()) st = ch_experiment_set(exp, "ensemble.methods", join(f.methods).c_str());
  if (st == CH_OK && f.figures) st = ch_experiment_set(exp, "report.figures", "true");
  if (st == CH_OK && !f.workdir.empty()) {
    st = ch_experiment_set(exp, "workdir", std::filesystem::absolute(f.workdir).string().c_str());
  }
  return st;
}

int run_stage(const std::string& stage, const PipelineFlags& flags) {
  if (flags.config.empty()) {
    std::cerr << "convohate: --config is required for '" << stage << "'\n";
    return kExitUsage;
  }
  ch_experiment* exp = nullptr;
  if (ch_status st = ch_experiment_open(flags.config.c_str(), &exp); st != CH_OK) {
    return report_failure(st);
  }
  ch_experiment_set_log(exp, log_line, nullptr);
  ch_status st = apply_flags(exp, flags);
  if (st == CH_OK) {
    if (stage == "prepare") {
      st = ch_experiment_prepare(exp);
    } else if (stage == "train") {
      st = ch_experiment_train(exp, nullptr);
    } else if (stage == "predict") {
      st = ch_experiment_predict(exp, nullptr);
    } else if (stage == "ensemble") {
      st = ch_experiment_ensemble(exp, nullptr);
    } else if (stage == "evaluate") {
      st = ch_experiment_evaluate(exp);
    } else if (stage == "report") {
      st = ch_experiment_report(exp);
    } else {
      st = ch_experiment_reproduce(exp);
    }
  }
  ch_experiment_free(exp);
  return st == CH_OK ? kExitOk : report_failure(st);
}

int write_text(const std::string& path, const char* text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) {
    std::cerr << "convohate: cannot write " << path << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

struct SynthFlags {
  std::string out;
  std::string csv_out;
  ch_synthetic_spec spec{};
};

int run_synth(const SynthFlags& f) {
  ch_corpus* corpus = nullptr;
  if (ch_status st = ch_corpus_synthesize(&f.spec, &corpus); st != CH_OK) return report_failure(st);
  char* text = nullptr;
  ch_status st = f.csv_out.empty() ? CH_OK : ch_corpus_write_csv(corpus, &text);
  int rc = kExitOk;
  if (st == CH_OK && text) rc = write_text(f.csv_out, text);
  ch_string_free(text);
  text = nullptr;
  if (st == CH_OK && rc == kExitOk) st = ch_corpus_write_json(corpus, &text);
  if (st == CH_OK && rc == kExitOk) rc = write_text(f.out, text);
  ch_string_free(text);
  if (st == CH_OK && rc == kExitOk) {
    ch_corpus_stats s{};
    ch_corpus_stats_get(corpus, &s);
    std::cerr << "wrote " << f.out << ": " << s.total_chains << " chains (" << s.hof_count << " HOF / "
              << s.not_count << " NOT)\n";
  }
  ch_corpus_free(corpus);
  return st == CH_OK ? rc : report_failure(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hate speech detection over conversation chains"};
  app.set_version_flag("--version", ch_version());
  app.require_subcommand(1);

  PipelineFlags flags;
  const auto add_pipeline_flags = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "Experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "Override the experiment seed");
    sub->add_option("--models", flags.models, "Comma-separated subset of model ids")->delimiter(',');
    sub->add_option("--methods", flags.methods, "Ensemble methods (hard, soft)")
        ->delimiter(',')
        ->check(CLI::IsMember({"hard", "soft"}));
    sub->add_flag("--figures", flags.figures, "Write SVG figures with the report");
    sub->add_option("--workdir", flags.workdir, "Work directory (overrides config and CONVO_HATE_WORKDIR)");
  };

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"prepare", "Flatten, split and preprocess the corpus"},
      {"train", "Train each model and retrain on the full training data"},
      {"predict", "Write per-model prediction files"},
      {"ensemble", "Combine model predictions by voting"},
      {"evaluate", "Score predictions against gold labels and write the report"},
      {"report", "Re-render the report from stored evaluation results"},
      {"reproduce", "Run every stage in order"},
  };
  for (const auto& [name, help] : stages) add_pipeline_flags(app.add_subcommand(name, help));

  SynthFlags synth;
  ch_synthetic_default(&synth.spec);
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic labeled conversation corpus");
  synth_cmd->add_option("--out", synth.out, "Output JSON path")->required();
  synth_cmd->add_option("--csv-out", synth.csv_out, "Also write flattened chains as CSV");
  synth_cmd->add_option("--parents", synth.spec.parents)->capture_default_str();
  synth_cmd->add_option("--comments", synth.spec.comments)->capture_default_str();
  synth_cmd->add_option("--replies", synth.spec.replies)->capture_default_str();
  synth_cmd->add_option("--hof", synth.spec.hof_count, "Number of HOF-labelled nodes")->capture_default_str();
  synth_cmd->add_option("--seed", synth.spec.seed)->capture_default_str();
  synth_cmd->add_option("--noise", synth.spec.lexical_noise, "Probability of a label-flipping word")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  if (synth_cmd->parsed()) return run_synth(synth);
  for (const auto& [name, help] : stages) {
    if (app.got_subcommand(name)) return run_stage(name, flags);
  }
  return kExitUsage;
}
