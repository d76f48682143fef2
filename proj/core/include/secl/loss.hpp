#pragma once

#include <span>

#include "secl/matrix.hpp"

namespace secl {

struct LossAndGrad {
  double loss = 0.0;
  Matrix grad;  // d(loss)/d(logits), same shape as the logits
};

/// Mean softmax cross-entropy over rows. Uses max-subtraction, so any finite
/// logits give finite loss and gradient.
LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets);

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

/// Index of the largest entry per row; ties go to the lowest index.
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace secl
