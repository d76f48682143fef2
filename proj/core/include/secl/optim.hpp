#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "secl/matrix.hpp"

namespace secl {

enum class OptimKind { sgd, adam };

/// Optimizer hyperparameters plus whatever per-parameter state the kind needs.
/// Moment buffers are allocated on the first step and bound to the parameter
/// shapes seen then.
struct OptimState {
  OptimKind kind = OptimKind::sgd;
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;

  static OptimState make(OptimKind kind, double lr) {
    OptimState s;
    s.kind = kind;
    s.lr = lr;
    return s;
  }
  static OptimState sgd(double lr) { return make(OptimKind::sgd, lr); }
  static OptimState adam(double lr) { return make(OptimKind::adam, lr); }
};

/// One update of every parameter in `params` from the matching gradient.
void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                    OptimState& state);

}  // namespace secl
