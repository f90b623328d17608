#pragma once

#include <cstddef>
#include <vector>

#include "tensor.hpp"

namespace convohate {

struct AdamWSettings {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
};

// Adam with decoupled weight decay: p <- p - lr * wd * p, then the
// bias-corrected moment step. Blocks with decay == false skip the decay term.
class AdamW {
 public:
  explicit AdamW(AdamWSettings settings) : settings_(settings) {}

  void step(const std::vector<ParamBlock>& blocks, double learning_rate);

  std::size_t steps_taken() const { return step_; }

 private:
  AdamWSettings settings_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Linear decay from base_lr to 0 over total_steps with optional warmup;
// step is the number of optimizer steps already taken.
double linear_schedule_lr(double base_lr, std::size_t step, std::size_t total_steps,
                          std::size_t warmup_steps = 0);

}  // namespace convohate
