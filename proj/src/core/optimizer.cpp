#include "optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "error.hpp"

namespace convohate {

void AdamW::step(const std::vector<ParamBlock>& blocks, double learning_rate) {
  if (m_.empty()) {
    for (const auto& b : blocks) {
      m_.emplace_back(b.values->size(), 0.0);
      v_.emplace_back(b.values->size(), 0.0);
    }
  }
  if (m_.size() != blocks.size()) {
    throw Error(ErrorCode::kShape, "AdamW: parameter block count changed between steps");
  }
  ++step_;
  const double b1 = settings_.beta1;
  const double b2 = settings_.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double step_size = learning_rate / bc1;
  const double sqrt_bc2 = std::sqrt(bc2);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    auto& p = *blocks[k].values;
    const auto& g = *blocks[k].grads;
    auto& m = m_[k];
    auto& v = v_[k];
    const double decay = blocks[k].decay ? 1.0 - learning_rate * settings_.weight_decay : 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] *= decay;
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      p[i] -= step_size * m[i] / (std::sqrt(v[i]) / sqrt_bc2 + settings_.epsilon);
    }
  }
}

double linear_schedule_lr(double base_lr, std::size_t step, std::size_t total_steps,
                          std::size_t warmup_steps) {
  if (step < warmup_steps) {
    return base_lr * static_cast<double>(step) / static_cast<double>(std::max<std::size_t>(1, warmup_steps));
  }
  if (total_steps <= warmup_steps) return 0.0;
  const double remaining = static_cast<double>(total_steps) - static_cast<double>(step);
  return base_lr * std::max(0.0, remaining / static_cast<double>(total_steps - warmup_steps));
}

}  // namespace convohate
