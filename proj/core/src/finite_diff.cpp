#include "secl/finite_diff.hpp"

#include <algorithm>
#include <cmath>

#include "secl/error.hpp"

namespace secl {

Matrix finite_diff_grad(const std::function<double(const Matrix&)>& f, const Matrix& at,
                        double h) {
  require(h > 0.0, "finite_diff_grad: step must be positive");
  Matrix grad(at.rows(), at.cols());
  Matrix x = at;
  auto xv = x.values();
  auto gv = grad.values();
  for (std::size_t i = 0; i < xv.size(); ++i) {
    const double orig = xv[i];
    xv[i] = orig + h;
    const double fp = f(x);
    xv[i] = orig - h;
    const double fm = f(x);
    xv[i] = orig;
    require(std::isfinite(fp) && std::isfinite(fm), "finite_diff_grad: non-finite evaluation");
    gv[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(const Matrix& a, const Matrix& b) {
  require(a.same_shape(b), "max_relative_error: shape mismatch");
  double worst = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double scale = std::max({1e-6, std::abs(av[i]), std::abs(bv[i])});
    worst = std::max(worst, std::abs(av[i] - bv[i]) / scale);
  }
  return worst;
}

}  // namespace secl
