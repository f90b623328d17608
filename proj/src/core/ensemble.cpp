#include "ensemble.hpp"

#include <cmath>
#include <unordered_map>

#include "error.hpp"

namespace convohate {

std::string_view to_string(VoteMethod method) noexcept {
  return method == VoteMethod::kHard ? "hard" : "soft";
}

std::optional<VoteMethod> parse_vote_method(std::string_view text) noexcept {
  if (text == "hard") return VoteMethod::kHard;
  if (text == "soft") return VoteMethod::kSoft;
  return std::nullopt;
}

std::string ensemble_model_id(VoteMethod method) {
  return "ensemble-" + std::string(to_string(method));
}

Label hard_vote(std::span<const Label> labels) {
  if (labels.size() < 3 || labels.size() % 2 == 0) {
    throw Error(ErrorCode::kConfiguration,
                "hard voting needs an odd number of at least 3 voters, got " +
                    std::to_string(labels.size()));
  }
  std::size_t hof = 0;
  for (Label l : labels) hof += l == Label::kHof ? 1 : 0;
  return 2 * hof > labels.size() ? Label::kHof : Label::kNot;
}

SoftVoteResult soft_vote(std::span<const Probs> prob_vectors, std::span<const std::string> model_ids,
                         bool allow_single) {
  if (prob_vectors.size() < (allow_single ? 1u : 2u)) {
    throw Error(ErrorCode::kConfiguration, "soft voting needs at least 2 probability vectors");
  }
  SoftVoteResult result;
  for (std::size_t m = 0; m < prob_vectors.size(); ++m) {
    const Probs& p = prob_vectors[m];
    const bool finite = std::isfinite(p[0]) && std::isfinite(p[1]);
    if (!finite || p[0] < 0.0 || p[1] < 0.0 ||
        std::abs(p[0] + p[1] - 1.0) > kNormalizationTolerance) {
      const std::string who = m < model_ids.size() ? "model '" + model_ids[m] + "'"
                                                   : "vector " + std::to_string(m);
      throw Error(ErrorCode::kValidation, "soft voting: " + who + " is not a normalized distribution");
    }
    result.sums[0] += p[0];
    result.sums[1] += p[1];
  }
  result.label = argmax_label(result.sums);
  return result;
}

EnsembleInput EnsembleInput::from_records(
    std::span<const std::vector<PredictionRecord>> per_model_records) {
  EnsembleInput input;
  for (const auto& records : per_model_records) {
    if (records.empty()) continue;
    const std::string& model_id = records.front().model_id;
    if (input.per_model.count(model_id)) {
      throw Error(ErrorCode::kConfiguration, "duplicate model id '" + model_id + "' in ensemble input");
    }
    input.per_model[model_id] = records;
  }
  if (!per_model_records.empty()) {
    for (const auto& r : per_model_records.front()) input.ids.push_back(r.chain_id);
  }
  return input;
}

std::vector<PredictionRecord> EnsembleOutput::to_records() const {
  std::vector<PredictionRecord> out;
  out.reserve(items.size());
  const double n = static_cast<double>(model_count);
  for (const auto& item : items) {
    PredictionRecord r;
    r.chain_id = item.id;
    r.model_id = ensemble_model_id(method);
    if (method == VoteMethod::kSoft) {
      r.probs = {(*item.scores)[0] / n, (*item.scores)[1] / n};
    } else {
      const double hof = static_cast<double>(item.hof_votes) / n;
      r.probs = {hof, 1.0 - hof};
    }
    r.predicted = item.label;
    out.push_back(std::move(r));
  }
  return out;
}

EnsembleOutput run_ensemble(const EnsembleInput& input, VoteMethod method) {
  const std::size_t models = input.per_model.size();
  if (models == 0) throw Error(ErrorCode::kConfiguration, "ensemble needs at least one model");
  if (method == VoteMethod::kHard && (models < 3 || models % 2 == 0)) {
    throw Error(ErrorCode::kConfiguration,
                "hard voting needs an odd number of at least 3 models, got " + std::to_string(models));
  }

  // Per model: id -> record index.
  std::vector<std::string> model_ids;
  std::vector<const std::vector<PredictionRecord>*> records;
  std::vector<std::unordered_map<std::string, std::size_t>> index(models);
  std::string problems;
  std::size_t m = 0;
  for (const auto& [model_id, recs] : input.per_model) {
    model_ids.push_back(model_id);
    records.push_back(&recs);
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (!index[m].emplace(recs[i].chain_id, i).second) {
        problems += " " + model_id + " repeats '" + recs[i].chain_id + "';";
      }
    }
    if (index[m].size() != input.ids.size()) {
      problems += " " + model_id + " covers " + std::to_string(index[m].size()) + " of " +
                  std::to_string(input.ids.size()) + " ids;";
    }
    ++m;
  }
  for (const auto& id : input.ids) {
    for (std::size_t k = 0; k < models; ++k) {
      if (!index[k].count(id)) problems += " " + model_ids[k] + " missing '" + id + "';";
    }
    if (problems.size() > 2000) break;
  }
  if (!problems.empty()) throw Error(ErrorCode::kAlignment, "ensemble id coverage mismatch:" + problems);

  EnsembleOutput out;
  out.method = method;
  out.model_count = models;
  out.items.reserve(input.ids.size());
  std::vector<Label> labels(models);
  std::vector<Probs> probs(models);
  for (const auto& id : input.ids) {
    EnsembleItem item;
    item.id = id;
    for (std::size_t k = 0; k < models; ++k) {
      const auto& rec = (*records[k])[index[k].at(id)];
      labels[k] = rec.predicted;
      probs[k] = rec.probs;
    }
    if (method == VoteMethod::kHard) {
      item.label = hard_vote(labels);
      for (Label l : labels) item.hof_votes += l == Label::kHof ? 1 : 0;
    } else {
      const auto sv = soft_vote(probs, model_ids, /*allow_single=*/true);
      item.label = sv.label;
      item.scores = sv.sums;
    }
    out.items.push_back(std::move(item));
  }
  return out;
}

}  // namespace convohate
