#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tensor.hpp"

namespace convohate {

// How the concatenation separator reaches the backbone.
enum class SeparatorMode {
  kSingleToken,  // registered as one vocabulary item
  kRawText,      // left to the backbone's own tokenizer
};

struct EncodeStats {
  std::size_t truncated = 0;  // inputs cut to max_sequence_length
};

// Pooled-representation producer the classification head sits on. Training
// is forward (encode) followed by backward on the same batch; backward
// accumulates into the gradients exposed by parameters().
class EncoderAdapter {
 public:
  virtual ~EncoderAdapter() = default;

  virtual std::string backbone_id() const = 0;
  virtual std::size_t hidden_size() const = 0;
  virtual std::size_t max_sequence_length() const = 0;
  virtual bool trainable() const = 0;
  virtual SeparatorMode separator_mode() const = 0;

  // One row of hidden_size() per input text.
  virtual Matrix encode(std::span<const std::string> texts, EncodeStats* stats = nullptr) = 0;
  virtual void backward(const Matrix& grad_pooled) = 0;

  virtual std::vector<ParamBlock> parameters() = 0;

  // Adapter configuration as "key=value" lines, enough to rebuild an
  // untrained instance through make_adapter().
  virtual std::string describe() const = 0;
  virtual void save_state(std::string& out) const = 0;
  virtual void load_state(std::string_view& in) = 0;

  virtual std::unique_ptr<EncoderAdapter> clone() const = 0;

  void zero_grad();
};

struct HashedBagConfig {
  std::string backbone_id = "standin";
  std::size_t hidden_size = 64;
  std::size_t buckets = 2048;
  std::size_t max_sequence_length = 256;
  std::uint64_t seed = 1;
  double init_scale = 1.0;
};

// Test-scale backbone: each whitespace token (ASCII-lowercased) is hashed into
// a bucket of a seeded embedding table; the pooled representation is the mean
// of the bucket rows. Tokens past max_sequence_length are dropped. An empty
// input pools to zeros.
class HashedBagEncoder final : public EncoderAdapter {
 public:
  explicit HashedBagEncoder(HashedBagConfig config);

  std::string backbone_id() const override { return config_.backbone_id; }
  std::size_t hidden_size() const override { return config_.hidden_size; }
  std::size_t max_sequence_length() const override { return config_.max_sequence_length; }
  bool trainable() const override { return true; }
  SeparatorMode separator_mode() const override { return SeparatorMode::kSingleToken; }

  Matrix encode(std::span<const std::string> texts, EncodeStats* stats = nullptr) override;
  void backward(const Matrix& grad_pooled) override;
  std::vector<ParamBlock> parameters() override;

  std::string describe() const override;
  void save_state(std::string& out) const override;
  void load_state(std::string_view& in) override;
  std::unique_ptr<EncoderAdapter> clone() const override;

  const HashedBagConfig& config() const { return config_; }
  std::size_t bucket_of(std::string_view token) const;

 private:
  HashedBagConfig config_;
  std::vector<double> table_;
  std::vector<double> grad_;
  std::vector<std::vector<std::size_t>> last_buckets_;
};

// Builds an adapter from "key=value" lines (the describe() format). Known
// kinds: "hashed-bow". Transformer backbone ids are recognised and rejected
// with a kConfiguration error, since this build carries no transformer
// runtime.
std::unique_ptr<EncoderAdapter> make_adapter(std::string_view description);

// Binary helpers shared by checkpoint writers.
void write_doubles(std::string& out, const std::vector<double>& values);
void read_doubles(std::string_view& in, std::vector<double>& values);
void write_u64(std::string& out, std::uint64_t value);
std::uint64_t read_u64(std::string_view& in);

}  // namespace convohate
