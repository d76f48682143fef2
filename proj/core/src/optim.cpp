#include "secl/optim.hpp"

#include <cmath>

#include "secl/error.hpp"

namespace secl {

void optimizer_step(std::span<Matrix* const> params, std::span<const Matrix* const> grads,
                    OptimState& state) {
  require(params.size() == grads.size(), "optimizer_step: parameter/gradient count mismatch");
  require(state.lr > 0.0, "optimizer_step: learning rate must be positive");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(params[i]->same_shape(*grads[i]), "optimizer_step: gradient shape mismatch");
  }
  ++state.step;

  if (state.kind == OptimKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto p = params[i]->values();
      auto g = grads[i]->values();
      for (std::size_t j = 0; j < p.size(); ++j) p[j] -= state.lr * g[j];
    }
    return;
  }

  if (state.first_moment.empty()) {
    for (const Matrix* p : params) {
      state.first_moment.emplace_back(p->rows(), p->cols());
      state.second_moment.emplace_back(p->rows(), p->cols());
    }
  }
  require(state.first_moment.size() == params.size(), "optimizer_step: parameter set changed");
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    require(state.first_moment[i].same_shape(*params[i]), "optimizer_step: parameter shape changed");
    auto p = params[i]->values();
    auto g = grads[i]->values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bc1;
      const double v_hat = v[j] / bc2;
      p[j] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
  }
}

}  // namespace secl
