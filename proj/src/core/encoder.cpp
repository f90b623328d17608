#include "encoder.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <sstream>

#include "error.hpp"
#include "kv_config.hpp"
#include "random.hpp"
#include "utf8.hpp"

namespace convohate {

void EncoderAdapter::zero_grad() {
  for (auto& block : parameters()) std::fill(block.grads->begin(), block.grads->end(), 0.0);
}

void write_u64(std::string& out, std::uint64_t value) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

std::uint64_t read_u64(std::string_view& in) {
  if (in.size() < 8) throw Error(ErrorCode::kParse, "checkpoint truncated");
  std::uint64_t value = 0;
  for (int i = 0; i < 8; ++i) {
    value |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  }
  in.remove_prefix(8);
  return value;
}

void write_doubles(std::string& out, const std::vector<double>& values) {
  write_u64(out, values.size());
  for (double v : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    write_u64(out, bits);
  }
}

void read_doubles(std::string_view& in, std::vector<double>& values) {
  const std::uint64_t n = read_u64(in);
  if (n != values.size()) {
    throw Error(ErrorCode::kShape, "checkpoint tensor has " + std::to_string(n) +
                                       " values, expected " + std::to_string(values.size()));
  }
  for (auto& v : values) {
    const std::uint64_t bits = read_u64(in);
    std::memcpy(&v, &bits, sizeof v);
  }
}

HashedBagEncoder::HashedBagEncoder(HashedBagConfig config) : config_(std::move(config)) {
  if (config_.hidden_size == 0 || config_.buckets == 0 || config_.max_sequence_length == 0) {
    throw Error(ErrorCode::kConfiguration,
                "hashed-bow: hidden_size, buckets and max_sequence_length must be positive");
  }
  table_.resize(config_.buckets * config_.hidden_size);
  grad_.assign(table_.size(), 0.0);
  Rng rng(config_.seed);
  for (auto& v : table_) v = rng.normal(0.0, config_.init_scale);
}

std::size_t HashedBagEncoder::bucket_of(std::string_view token) const {
  std::string lowered(token);
  for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return static_cast<std::size_t>(fnv1a64(lowered) % config_.buckets);
}

Matrix HashedBagEncoder::encode(std::span<const std::string> texts, EncodeStats* stats) {
  const std::size_t h = config_.hidden_size;
  Matrix pooled(texts.size(), h);
  last_buckets_.assign(texts.size(), {});
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto tokens = utf8::split_whitespace(texts[i]);
    if (tokens.size() > config_.max_sequence_length) {
      tokens.resize(config_.max_sequence_length);
      if (stats) ++stats->truncated;
    }
    auto& buckets = last_buckets_[i];
    buckets.reserve(tokens.size());
    for (const auto& t : tokens) buckets.push_back(bucket_of(t));
    if (buckets.empty()) continue;
    auto out = pooled.row(i);
    for (std::size_t b : buckets) {
      const double* src = table_.data() + b * h;
      for (std::size_t k = 0; k < h; ++k) out[k] += src[k];
    }
    const double inv = 1.0 / static_cast<double>(buckets.size());
    for (double& v : out) v *= inv;
  }
  return pooled;
}

void HashedBagEncoder::backward(const Matrix& grad_pooled) {
  const std::size_t h = config_.hidden_size;
  if (grad_pooled.rows != last_buckets_.size() || grad_pooled.cols != h) {
    throw Error(ErrorCode::kShape, "hashed-bow backward: gradient shape does not match last batch");
  }
  for (std::size_t i = 0; i < last_buckets_.size(); ++i) {
    const auto& buckets = last_buckets_[i];
    if (buckets.empty()) continue;
    const double inv = 1.0 / static_cast<double>(buckets.size());
    const auto g = grad_pooled.row(i);
    for (std::size_t b : buckets) {
      double* dst = grad_.data() + b * h;
      for (std::size_t k = 0; k < h; ++k) dst[k] += g[k] * inv;
    }
  }
}

std::vector<ParamBlock> HashedBagEncoder::parameters() {
  return {ParamBlock{"embeddings", &table_, &grad_, true}};
}

std::string HashedBagEncoder::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind=hashed-bow\n"
     << "backbone_id=" << config_.backbone_id << '\n'
     << "hidden_size=" << config_.hidden_size << '\n'
     << "buckets=" << config_.buckets << '\n'
     << "max_sequence_length=" << config_.max_sequence_length << '\n'
     << "seed=" << config_.seed << '\n'
     << "init_scale=" << config_.init_scale << '\n';
  return os.str();
}

void HashedBagEncoder::save_state(std::string& out) const { write_doubles(out, table_); }

void HashedBagEncoder::load_state(std::string_view& in) { read_doubles(in, table_); }

std::unique_ptr<EncoderAdapter> HashedBagEncoder::clone() const {
  auto copy = std::make_unique<HashedBagEncoder>(*this);
  std::fill(copy->grad_.begin(), copy->grad_.end(), 0.0);
  copy->last_buckets_.clear();
  return copy;
}

std::unique_ptr<EncoderAdapter> make_adapter(std::string_view description) {
  const KvConfig kv = KvConfig::parse(description);
  const std::string kind = kv.get_string("kind", "hashed-bow");

  static constexpr std::array<std::string_view, 6> kTransformerBackbones = {
      "indic-bert", "ai4bharat/indic-bert", "mbert", "bert-base-multilingual-cased",
      "xlm-roberta", "xlm-roberta-base"};
  if (std::find(kTransformerBackbones.begin(), kTransformerBackbones.end(), kind) !=
      kTransformerBackbones.end()) {
    throw Error(ErrorCode::kConfiguration,
                "backbone '" + kind +
                    "' needs a transformer runtime, which this build does not include; "
                    "implement EncoderAdapter for it or use kind=hashed-bow");
  }
  if (kind != "hashed-bow") {
    throw Error(ErrorCode::kConfiguration, "unknown encoder kind '" + kind + "'");
  }
  HashedBagConfig cfg;
  cfg.backbone_id = kv.get_string("backbone_id", cfg.backbone_id);
  cfg.hidden_size = kv.get_size("hidden_size", cfg.hidden_size);
  cfg.buckets = kv.get_size("buckets", cfg.buckets);
  cfg.max_sequence_length = kv.get_size("max_sequence_length", cfg.max_sequence_length);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.init_scale = kv.get_double("init_scale", cfg.init_scale);
  return std::make_unique<HashedBagEncoder>(std::move(cfg));
}

}  // namespace convohate
