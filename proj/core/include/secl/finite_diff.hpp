#pragma once

#include <functional>

#include "secl/matrix.hpp"

namespace secl {

/// Central-difference gradient of a scalar field, one entry at a time.
/// Throws if the field evaluates to a non-finite value.
Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double h);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, 1e-6)
double max_relative_error(const Matrix& a, const Matrix& b);

}  // namespace secl
