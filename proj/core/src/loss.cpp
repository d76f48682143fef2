#include "secl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "secl/error.hpp"

namespace secl {

LossAndGrad softmax_cross_entropy(const Matrix& logits, std::span<const int> targets) {
  require(targets.size() == logits.rows(), "softmax_cross_entropy: target count mismatch");
  require(logits.rows() > 0, "softmax_cross_entropy: empty batch");
  const std::size_t n = logits.rows();
  const std::size_t c = logits.cols();
  LossAndGrad out{0.0, Matrix(n, c)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int t = targets[i];
    if (t < 0 || static_cast<std::size_t>(t) >= c) {
      throw Error("softmax_cross_entropy: target " + std::to_string(t) + " out of range [0, " +
                  std::to_string(c) + ")");
    }
    auto z = logits.row(i);
    auto g = out.grad.row(i);
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      g[j] = std::exp(z[j] - zmax);
      sum += g[j];
    }
    const double log_sum = std::log(sum);
    out.loss += (log_sum - (z[static_cast<std::size_t>(t)] - zmax)) * inv_n;
    for (std::size_t j = 0; j < c; ++j) g[j] = g[j] / sum * inv_n;
    g[static_cast<std::size_t>(t)] -= inv_n;
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    auto z = logits.row(i);
    auto p = out.row(i);
    if (z.empty()) continue;
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      p[j] = std::exp(z[j] - zmax);
      sum += p[j];
    }
    for (double& v : p) v /= sum;
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows(), 0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < r.size(); ++j) {
      if (r[j] > r[best]) best = j;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

}  // namespace secl
