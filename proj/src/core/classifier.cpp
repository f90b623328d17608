#include "classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numeric>
#include <sstream>

#include "error.hpp"
#include "metrics.hpp"

namespace convohate {
namespace {

constexpr std::string_view kModelMagic = "CONVOHATE-MODEL-1\n";

void write_string(std::string& out, std::string_view s) {
  write_u64(out, s.size());
  out.append(s);
}

std::string read_string(std::string_view& in) {
  const std::uint64_t n = read_u64(in);
  if (in.size() < n) throw Error(ErrorCode::kParse, "checkpoint truncated");
  std::string s(in.substr(0, n));
  in.remove_prefix(n);
  return s;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// log(sum(exp(z))) - z_y
double cross_entropy(const Probs& logits, Label gold) {
  const double m = std::max(logits[0], logits[1]);
  const double lse = m + std::log(std::exp(logits[0] - m) + std::exp(logits[1] - m));
  return lse - logits[index_of(gold)];
}

}  // namespace

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.optimizer.weight_decay = kv.get_double("weight_decay", c.optimizer.weight_decay);
  c.optimizer.beta1 = kv.get_double("beta1", c.optimizer.beta1);
  c.optimizer.beta2 = kv.get_double("beta2", c.optimizer.beta2);
  c.optimizer.epsilon = kv.get_double("epsilon", c.optimizer.epsilon);
  c.warmup_steps = kv.get_size("warmup_steps", c.warmup_steps);
  c.batch_size = kv.get_size("batch_size", c.batch_size);
  c.max_epochs = kv.get_size("max_epochs", c.max_epochs);
  c.seed = kv.get_u64("seed", c.seed);
  c.dropout_rate = kv.get_double("dropout_rate", c.dropout_rate);
  c.max_sequence_length = kv.get_size("max_sequence_length", c.max_sequence_length);
  c.head_init_std = kv.get_double("head_init_std", c.head_init_std);
  const std::string schedule = kv.get_string("schedule", "linear");
  if (schedule != "linear") {
    throw Error(ErrorCode::kConfiguration, "only the linear schedule is supported, got '" + schedule + "'");
  }
  const std::string optimizer = kv.get_string("optimizer", "adamw");
  if (optimizer != "adamw") {
    throw Error(ErrorCode::kConfiguration, "only the adamw optimizer is supported, got '" + optimizer + "'");
  }
  c.validate();
  return c;
}

KvConfig TrainConfig::to_kv() const {
  KvConfig kv;
  kv.set("learning_rate", format_double(learning_rate));
  kv.set("optimizer", "adamw");
  kv.set("schedule", "linear");
  kv.set("weight_decay", format_double(optimizer.weight_decay));
  kv.set("beta1", format_double(optimizer.beta1));
  kv.set("beta2", format_double(optimizer.beta2));
  kv.set("epsilon", format_double(optimizer.epsilon));
  kv.set("warmup_steps", std::to_string(warmup_steps));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("max_epochs", std::to_string(max_epochs));
  kv.set("seed", std::to_string(seed));
  kv.set("dropout_rate", format_double(dropout_rate));
  kv.set("max_sequence_length", std::to_string(max_sequence_length));
  kv.set("head_init_std", format_double(head_init_std));
  return kv;
}

void TrainConfig::validate() const {
  const auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfiguration, what); };
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (batch_size == 0) fail("batch_size must be positive");
  if (max_epochs == 0) fail("max_epochs must be positive");
  if (max_sequence_length == 0) fail("max_sequence_length must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (optimizer.weight_decay < 0.0) fail("weight_decay must be non-negative");
  if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0) ||
      !(optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0)) {
    fail("beta1 and beta2 must lie in [0, 1)");
  }
  if (!(optimizer.epsilon > 0.0)) fail("epsilon must be positive");
  if (head_init_std < 0.0) fail("head_init_std must be non-negative");
}

Probs softmax(const Probs& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

Label argmax_label(const Probs& probs) { return probs[0] >= probs[1] ? Label::kHof : Label::kNot; }

ClassificationHead::ClassificationHead(std::size_t hidden_size, double dropout_rate)
    : weight(kNumClasses * hidden_size, 0.0),
      bias(kNumClasses, 0.0),
      weight_grad(kNumClasses * hidden_size, 0.0),
      bias_grad(kNumClasses, 0.0),
      hidden_(hidden_size),
      dropout_rate_(dropout_rate) {
  if (hidden_size == 0) throw Error(ErrorCode::kShape, "classification head needs hidden_size > 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw Error(ErrorCode::kArgument, "dropout rate must lie in [0, 1)");
  }
}

void ClassificationHead::initialize(Rng& rng, double init_std) {
  for (auto& w : weight) w = init_std == 0.0 ? 0.0 : rng.normal(0.0, init_std);
  std::fill(bias.begin(), bias.end(), 0.0);
}

Probs ClassificationHead::logits(std::span<const double> repr) const {
  if (repr.size() != hidden_) {
    throw Error(ErrorCode::kShape, "head expects a " + std::to_string(hidden_) +
                                       "-dim representation, got " + std::to_string(repr.size()));
  }
  Probs z{bias[0], bias[1]};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const double* w = weight.data() + c * hidden_;
    z[c] += std::inner_product(repr.begin(), repr.end(), w, 0.0);
  }
  return z;
}

Probs head_forward(std::span<const double> repr, const ClassificationHead& head, bool training,
                   Rng* rng) {
  if (!training || head.dropout_rate() == 0.0) return softmax(head.logits(repr));
  if (rng == nullptr) throw Error(ErrorCode::kArgument, "head_forward: training needs an rng");
  const double keep = 1.0 - head.dropout_rate();
  std::vector<double> dropped(repr.begin(), repr.end());
  for (auto& v : dropped) v = rng->uniform01() < head.dropout_rate() ? 0.0 : v / keep;
  return softmax(head.logits(dropped));
}

Model::Model(std::unique_ptr<EncoderAdapter> adapter, const TrainConfig& cfg)
    : adapter_(std::move(adapter)), config_(cfg), head_(adapter_->hidden_size(), cfg.dropout_rate) {
  config_.validate();
  Rng rng(config_.seed ^ 0x9e3779b97f4a7c15ULL);
  head_.initialize(rng, config_.head_init_std);
}

Model::Model(const Model& other)
    : adapter_(other.adapter_->clone()), config_(other.config_), head_(other.head_) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    adapter_ = other.adapter_->clone();
    config_ = other.config_;
    head_ = other.head_;
  }
  return *this;
}

std::vector<ParamBlock> Model::parameters() {
  auto blocks = adapter_->parameters();
  blocks.push_back({"head.weight", &head_.weight, &head_.weight_grad, true});
  blocks.push_back({"head.bias", &head_.bias, &head_.bias_grad, false});
  return blocks;
}

void Model::zero_grad() {
  for (auto& b : parameters()) std::fill(b.grads->begin(), b.grads->end(), 0.0);
}

double Model::batch_loss(std::span<const ProcessedInstance* const> batch, bool compute_grads,
                         Rng* dropout_rng) {
  if (batch.empty()) throw Error(ErrorCode::kArgument, "batch_loss: empty batch");
  std::vector<std::string> texts;
  texts.reserve(batch.size());
  for (const auto* inst : batch) {
    if (!inst->label) {
      throw Error(ErrorCode::kMissingLabel, "instance '" + inst->chain_id + "' has no label");
    }
    texts.push_back(inst->text);
  }
  const Matrix pooled = adapter_->encode(texts);
  const std::size_t h = head_.hidden_size();
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  const bool dropout = dropout_rng != nullptr && head_.dropout_rate() > 0.0;
  const double keep = 1.0 - head_.dropout_rate();

  Matrix grad_pooled(compute_grads ? batch.size() : 0, h);
  std::vector<double> x(h);
  std::vector<double> mask(h, 1.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto repr = pooled.row(i);
    for (std::size_t k = 0; k < h; ++k) {
      mask[k] = dropout ? (dropout_rng->uniform01() < head_.dropout_rate() ? 0.0 : 1.0 / keep) : 1.0;
      x[k] = repr[k] * mask[k];
    }
    const Probs z = head_.logits(x);
    const Label gold = *batch[i]->label;
    loss += cross_entropy(z, gold) * inv_batch;
    if (!compute_grads) continue;

    const Probs p = softmax(z);
    Probs dz{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      dz[c] = (p[c] - (c == index_of(gold) ? 1.0 : 0.0)) * inv_batch;
      head_.bias_grad[c] += dz[c];
      double* wg = head_.weight_grad.data() + c * h;
      for (std::size_t k = 0; k < h; ++k) wg[k] += dz[c] * x[k];
    }
    auto g = grad_pooled.row(i);
    for (std::size_t k = 0; k < h; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < kNumClasses; ++c) s += dz[c] * head_.weight[c * h + k];
      g[k] = s * mask[k];
    }
  }
  if (compute_grads) adapter_->backward(grad_pooled);
  return loss;
}

double Model::evaluate_loss(std::span<const ProcessedInstance> instances) {
  if (instances.empty()) throw Error(ErrorCode::kArgument, "evaluate_loss: empty set");
  double total = 0.0;
  const std::size_t bs = config_.batch_size;
  std::vector<const ProcessedInstance*> batch;
  for (std::size_t start = 0; start < instances.size(); start += bs) {
    batch.clear();
    for (std::size_t i = start; i < std::min(instances.size(), start + bs); ++i) {
      batch.push_back(&instances[i]);
    }
    total += batch_loss(batch, false) * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(instances.size());
}

std::vector<PredictionRecord> Model::predict(std::span<const ProcessedInstance> instances,
                                             const std::string& model_id, PredictStats* stats) {
  std::vector<PredictionRecord> out;
  out.reserve(instances.size());
  const std::size_t bs = config_.batch_size;
  std::vector<std::string> texts;
  for (std::size_t start = 0; start < instances.size(); start += bs) {
    const std::size_t end = std::min(instances.size(), start + bs);
    texts.clear();
    for (std::size_t i = start; i < end; ++i) texts.push_back(instances[i].text);
    EncodeStats enc;
    const Matrix pooled = adapter_->encode(texts, &enc);
    if (stats) stats->truncated += enc.truncated;
    for (std::size_t i = start; i < end; ++i) {
      PredictionRecord rec;
      rec.chain_id = instances[i].chain_id;
      rec.model_id = model_id;
      rec.probs = head_forward(pooled.row(i - start), head_, false);
      rec.predicted = argmax_label(rec.probs);
      out.push_back(std::move(rec));
    }
  }
  return out;
}

std::string Model::serialize() const {
  std::string out(kModelMagic);
  write_string(out, adapter_->describe());
  write_string(out, config_.to_kv().canonical());
  write_doubles(out, head_.weight);
  write_doubles(out, head_.bias);
  adapter_->save_state(out);
  return out;
}

Model Model::deserialize(std::string_view bytes) {
  if (bytes.substr(0, kModelMagic.size()) != kModelMagic) {
    throw Error(ErrorCode::kParse, "not a model checkpoint (bad magic)");
  }
  bytes.remove_prefix(kModelMagic.size());
  auto adapter = make_adapter(read_string(bytes));
  const TrainConfig cfg = TrainConfig::from_kv(KvConfig::parse(read_string(bytes)));
  Model model(std::move(adapter), cfg);
  read_doubles(bytes, model.head_.weight);
  read_doubles(bytes, model.head_.bias);
  model.adapter_->load_state(bytes);
  if (!bytes.empty()) throw Error(ErrorCode::kParse, "trailing bytes after model checkpoint");
  return model;
}

void Model::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::string bytes = serialize();
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write model to " + path.string());
}

Model Model::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read model from " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

std::size_t select_best_epoch(std::span<const double> val_losses) {
  if (val_losses.empty()) throw Error(ErrorCode::kArgument, "select_best_epoch: no epochs");
  std::size_t best = 0;
  for (std::size_t i = 1; i < val_losses.size(); ++i) {
    if (val_losses[i] < val_losses[best]) best = i;
  }
  return best + 1;
}

std::size_t steps_per_epoch(std::size_t instances, std::size_t batch_size) {
  return (instances + batch_size - 1) / batch_size;
}

namespace {

struct EpochRunner {
  Model& model;
  AdamW optimizer;
  Rng order_rng;
  Rng dropout_rng;
  std::size_t total_steps;
  std::size_t step = 0;

  // One pass over the data in a seeded order; returns mean training loss.
  double run_epoch(std::span<const ProcessedInstance> data, std::size_t epoch) {
    const auto& cfg = model.config();
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    order_rng.shuffle(std::span(order));
    std::vector<const ProcessedInstance*> batch;
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      batch.clear();
      for (std::size_t i = start; i < std::min(order.size(), start + cfg.batch_size); ++i) {
        batch.push_back(&data[order[i]]);
      }
      model.zero_grad();
      const double loss = model.batch_loss(batch, true, &dropout_rng);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergence, "non-finite training loss at epoch " +
                                                std::to_string(epoch) + ", step " +
                                                std::to_string(step + 1));
      }
      const double lr = linear_schedule_lr(cfg.learning_rate, step, total_steps, cfg.warmup_steps);
      optimizer.step(model.parameters(), lr);
      ++step;
      loss_sum += loss * static_cast<double>(batch.size());
    }
    return loss_sum / static_cast<double>(data.size());
  }
};

void require_labeled(std::span<const ProcessedInstance> set, const char* what) {
  if (set.empty()) throw Error(ErrorCode::kArgument, std::string(what) + " set is empty");
  for (const auto& inst : set) {
    if (!inst.label) {
      throw Error(ErrorCode::kMissingLabel,
                  std::string(what) + " instance '" + inst.chain_id + "' has no label");
    }
  }
}

Model fresh_model(const EncoderAdapter& adapter, const TrainConfig& cfg) {
  if (!adapter.trainable()) {
    throw Error(ErrorCode::kArgument, "adapter '" + adapter.backbone_id() + "' is not trainable");
  }
  return Model(adapter.clone(), cfg);
}

}  // namespace

TrainOutcome train(std::span<const ProcessedInstance> train_set,
                   std::span<const ProcessedInstance> val_set, const EncoderAdapter& adapter,
                   const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  require_labeled(train_set, "train");
  require_labeled(val_set, "validation");

  Model model = fresh_model(adapter, cfg);
  EpochRunner runner{model, AdamW(cfg.optimizer), Rng(cfg.seed), Rng(cfg.seed + 1),
                     cfg.max_epochs * steps_per_epoch(train_set.size(), cfg.batch_size)};

  TrainingRecord record;
  std::optional<Model> best;
  double best_loss = 0.0;
  std::vector<Label> gold;
  for (const auto& inst : val_set) gold.push_back(*inst.label);

  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const std::size_t step_before = runner.step;
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = runner.run_epoch(train_set, epoch);
    stats.steps = runner.step - step_before;
    stats.val_loss = model.evaluate_loss(val_set);
    if (!std::isfinite(stats.val_loss)) {
      throw Error(ErrorCode::kDivergence,
                  "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    std::vector<Label> pred;
    for (const auto& rec : model.predict(val_set, "val")) pred.push_back(rec.predicted);
    stats.val_macro_f1 = compute_metrics(confusion(gold, pred)).macro_f1;

    if (options.checkpoint_dir) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch-%02zu.ckpt", epoch);
      const auto path = *options.checkpoint_dir / name;
      model.save(path);
      record.checkpoint_refs.push_back(path.string());
    } else {
      record.checkpoint_refs.push_back("memory:epoch-" + std::to_string(epoch));
    }
    if (!best || stats.val_loss < best_loss) {
      best = model;
      best_loss = stats.val_loss;
    }
    record.epochs.push_back(stats);
    if (options.on_epoch) options.on_epoch(stats);
  }

  std::vector<double> losses;
  for (const auto& e : record.epochs) losses.push_back(e.val_loss);
  record.best_epoch = select_best_epoch(losses);
  record.total_steps = runner.step;
  return TrainOutcome{std::move(record), std::move(*best)};
}

RetrainOutcome retrain_full(std::span<const ProcessedInstance> full_train_set,
                            const EncoderAdapter& adapter, const TrainConfig& cfg,
                            std::size_t best_epoch) {
  cfg.validate();
  if (best_epoch < 1 || best_epoch > cfg.max_epochs) {
    throw Error(ErrorCode::kArgument, "best_epoch must lie in [1, " +
                                          std::to_string(cfg.max_epochs) + "], got " +
                                          std::to_string(best_epoch));
  }
  require_labeled(full_train_set, "full train");

  Model model = fresh_model(adapter, cfg);
  EpochRunner runner{model, AdamW(cfg.optimizer), Rng(cfg.seed), Rng(cfg.seed + 1),
                     best_epoch * steps_per_epoch(full_train_set.size(), cfg.batch_size)};
  std::vector<double> losses;
  for (std::size_t epoch = 1; epoch <= best_epoch; ++epoch) {
    losses.push_back(runner.run_epoch(full_train_set, epoch));
  }
  std::string note = "best epoch " + std::to_string(best_epoch) +
                     (best_epoch >= 3 && best_epoch <= 6 ? " is inside" : " is outside") +
                     " the 3-6 band reported for the transformer backbones";
  return RetrainOutcome{std::move(model), runner.step, std::move(losses), std::move(note)};
}

std::string write_predictions(std::span<const PredictionRecord> records) {
  std::string out;
  char buf[64];
  for (const auto& r : records) {
    // p_NOT is written as the complement in millionths so each line sums to
    // exactly 1.000000.
    const auto micro_hof = static_cast<long long>(std::llround(r.probs[0] * 1e6));
    const long long micro_not = 1000000 - micro_hof;
    out += r.chain_id;
    out += '\t';
    out += r.model_id;
    std::snprintf(buf, sizeof buf, "\t%lld.%06lld\t%lld.%06lld\t", micro_hof / 1000000,
                  micro_hof % 1000000, micro_not / 1000000, micro_not % 1000000);
    out += buf;
    out += to_string(r.predicted);
    out += '\n';
  }
  return out;
}

std::vector<PredictionRecord> read_predictions(std::string_view text) {
  std::vector<PredictionRecord> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t s = 0;
    while (true) {
      const auto t = line.find('\t', s);
      f.push_back(line.substr(s, t == std::string_view::npos ? std::string_view::npos : t - s));
      if (t == std::string_view::npos) break;
      s = t + 1;
    }
    const std::string where = "prediction file line " + std::to_string(line_no);
    if (f.size() != 5) throw Error(ErrorCode::kParse, where + ": expected 5 tab-separated fields");
    PredictionRecord r;
    r.chain_id = std::string(f[0]);
    r.model_id = std::string(f[1]);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
      const std::string field(f[2 + c]);
      char* endp = nullptr;
      r.probs[c] = std::strtod(field.c_str(), &endp);
      if (field.empty() || *endp != '\0') {
        throw Error(ErrorCode::kParse, where + ": bad probability '" + field + "'");
      }
    }
    const auto label = parse_label(f[4]);
    if (!label) throw Error(ErrorCode::kLabel, where + ": unknown label '" + std::string(f[4]) + "'");
    r.predicted = *label;
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace convohate
