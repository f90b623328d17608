#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "encoder.hpp"
#include "kv_config.hpp"
#include "label.hpp"
#include "optimizer.hpp"
#include "preprocess.hpp"
#include "random.hpp"

namespace convohate {

using Probs = std::array<double, kNumClasses>;

struct TrainConfig {
  double learning_rate = 2e-5;
  AdamWSettings optimizer{};
  std::size_t warmup_steps = 0;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 42;
  double dropout_rate = 0.1;
  std::size_t max_sequence_length = 256;
  double head_init_std = 0.02;

  // Keys match the field names (optimizer fields are weight_decay, beta1,
  // beta2, epsilon). Unknown keys are ignored so one file can also carry
  // adapter settings.
  static TrainConfig from_kv(const KvConfig& kv);
  KvConfig to_kv() const;
  void validate() const;  // throws kConfiguration
};

// Stable two-class softmax (max logit subtracted first).
Probs softmax(const Probs& logits);

// Index 0 = HOF, 1 = NOT; ties go to HOF.
Label argmax_label(const Probs& probs);

class ClassificationHead {
 public:
  ClassificationHead(std::size_t hidden_size, double dropout_rate);

  void initialize(Rng& rng, double init_std);

  std::size_t hidden_size() const { return hidden_; }
  double dropout_rate() const { return dropout_rate_; }

  // weight . repr + bias. Throws kShape on a dimension mismatch.
  Probs logits(std::span<const double> repr) const;

  // weight is kNumClasses x hidden, row c holds class c.
  std::vector<double> weight;
  std::vector<double> bias;
  std::vector<double> weight_grad;
  std::vector<double> bias_grad;

 private:
  std::size_t hidden_;
  double dropout_rate_;
};

// Dropout (inverted, scaled by 1/(1-rate)) is applied to repr only when
// training is set, in which case rng must be non-null.
Probs head_forward(std::span<const double> repr, const ClassificationHead& head, bool training,
                   Rng* rng = nullptr);

struct PredictionRecord {
  std::string chain_id;
  std::string model_id;
  Probs probs{};
  Label predicted = Label::kHof;
};

struct PredictStats {
  std::size_t truncated = 0;
};

// Encoder plus head. Copies are deep.
class Model {
 public:
  Model(std::unique_ptr<EncoderAdapter> adapter, const TrainConfig& cfg);
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept = default;
  Model& operator=(Model&&) noexcept = default;

  EncoderAdapter& adapter() { return *adapter_; }
  const EncoderAdapter& adapter() const { return *adapter_; }
  ClassificationHead& head() { return head_; }
  const ClassificationHead& head() const { return head_; }
  const TrainConfig& config() const { return config_; }

  std::vector<ParamBlock> parameters();
  void zero_grad();

  // Mean cross-entropy over the batch. With compute_grads set, gradients of
  // that mean are accumulated into parameters(). dropout_rng enables dropout.
  double batch_loss(std::span<const ProcessedInstance* const> batch, bool compute_grads,
                    Rng* dropout_rng = nullptr);

  // Mean cross-entropy over a labeled set, dropout off.
  double evaluate_loss(std::span<const ProcessedInstance> instances);

  std::vector<PredictionRecord> predict(std::span<const ProcessedInstance> instances,
                                        const std::string& model_id,
                                        PredictStats* stats = nullptr);

  std::string serialize() const;
  static Model deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static Model load(const std::filesystem::path& path);

 private:
  std::unique_ptr<EncoderAdapter> adapter_;
  TrainConfig config_;
  ClassificationHead head_;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_macro_f1 = 0;
  std::size_t steps = 0;
};

struct TrainingRecord {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  std::vector<std::string> checkpoint_refs;
  std::size_t total_steps = 0;
};

struct TrainOptions {
  // When set, every epoch's model is written to epoch-NN.ckpt under this
  // directory and the paths become the checkpoint refs.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const EpochStats&)> on_epoch;
};

struct TrainOutcome {
  TrainingRecord record;
  Model best_model;
};

// First index (1-based) of the minimum; throws kArgument on an empty list.
std::size_t select_best_epoch(std::span<const double> val_losses);

std::size_t steps_per_epoch(std::size_t instances, std::size_t batch_size);

// Fine-tunes a copy of the adapter for cfg.max_epochs epochs, tracking the
// validation loss after each, and returns the minimum-loss checkpoint.
TrainOutcome train(std::span<const ProcessedInstance> train_set,
                   std::span<const ProcessedInstance> val_set, const EncoderAdapter& adapter,
                   const TrainConfig& cfg, const TrainOptions& options = {});

struct RetrainOutcome {
  Model model;
  std::size_t steps = 0;
  std::vector<double> epoch_train_losses;
  std::string conformance_note;
};

// Trains a fresh copy of the adapter for exactly best_epoch epochs with no
// checkpoint selection.
RetrainOutcome retrain_full(std::span<const ProcessedInstance> full_train_set,
                            const EncoderAdapter& adapter, const TrainConfig& cfg,
                            std::size_t best_epoch);

// Prediction file: chain_id, model_id, p_HOF, p_NOT, predicted label,
// tab-separated, probabilities with 6 decimals.
std::string write_predictions(std::span<const PredictionRecord> records);
std::vector<PredictionRecord> read_predictions(std::string_view text);

}  // namespace convohate
