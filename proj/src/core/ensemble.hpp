#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "classifier.hpp"
#include "label.hpp"

namespace convohate {

enum class VoteMethod { kHard, kSoft };

std::string_view to_string(VoteMethod method) noexcept;
std::optional<VoteMethod> parse_vote_method(std::string_view text) noexcept;

// Model id written into ensemble prediction files.
std::string ensemble_model_id(VoteMethod method);

// Majority label. Requires an odd number (>= 3) of voters; an even count is
// refused with kConfiguration rather than resolved by a tie rule.
Label hard_vote(std::span<const Label> labels);

struct SoftVoteResult {
  Label label = Label::kHof;
  Probs sums{};  // component-wise sum of the inputs, not renormalized
};

// Sums the probability vectors and takes the argmax; an exact tie goes to
// HOF. Each vector must sum to 1 within 1e-6 (kValidation otherwise, naming
// the offending model when model_ids is given). Needs >= 2 vectors unless
// allow_single is set.
SoftVoteResult soft_vote(std::span<const Probs> prob_vectors,
                         std::span<const std::string> model_ids = {},
                         bool allow_single = false);

inline constexpr double kNormalizationTolerance = 1e-6;

struct EnsembleInput {
  std::vector<std::string> ids;
  // model_id -> records; each model must cover every id exactly once.
  std::map<std::string, std::vector<PredictionRecord>> per_model;

  // Ids taken from the first model's file order.
  static EnsembleInput from_records(std::span<const std::vector<PredictionRecord>> per_model_records);
};

struct EnsembleItem {
  std::string id;
  Label label = Label::kHof;
  std::optional<Probs> scores;  // SOFT only: the summed vector
  std::size_t hof_votes = 0;    // HARD only
};

struct EnsembleOutput {
  VoteMethod method = VoteMethod::kHard;
  std::size_t model_count = 0;
  std::vector<EnsembleItem> items;

  // Prediction records with model_id "ensemble-hard"/"ensemble-soft". The
  // written probabilities are vote fractions (HARD) or the summed scores
  // divided by the model count (SOFT).
  std::vector<PredictionRecord> to_records() const;
};

// Throws kAlignment listing ids some model does not cover (or covers twice).
// A single model is accepted for SOFT only.
EnsembleOutput run_ensemble(const EnsembleInput& input, VoteMethod method);

}  // namespace convohate
