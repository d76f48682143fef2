#pragma once

#include <cstddef>
#include <vector>

#include "secl/matrix.hpp"
#include "secl/rng.hpp"

namespace secl {

/// Affine map y = x W^T + b with W (out x in) and b (1 x out).
struct Linear {
  Matrix weight;
  Matrix bias;

  Linear() = default;
  Linear(std::size_t in, std::size_t out) : weight(out, in), bias(1, out) {}

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  Matrix forward(const Matrix& x) const;

  struct Grads {
    Matrix weight;
    Matrix bias;
    Matrix input;  // d(loss)/d(x)
  };
  /// Gradients given the forward input and d(loss)/d(y). The input gradient
  /// is left empty when `need_input` is false.
  Grads backward(const Matrix& x, const Matrix& grad_out, bool need_input = true) const;

  std::vector<Matrix*> params() { return {&weight, &bias}; }

  static Linear random(std::size_t in, std::size_t out, double stddev, RngStream& rng);
};

}  // namespace secl
