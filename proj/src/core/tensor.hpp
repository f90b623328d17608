#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace convohate {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// A trainable tensor viewed as a flat vector. Biases are excluded from
// weight decay.
struct ParamBlock {
  const char* name;
  std::vector<double>* values;
  std::vector<double>* grads;
  bool decay = true;
};

}  // namespace convohate
