#include "secl/linear.hpp"

#include "secl/error.hpp"

namespace secl {

Matrix Linear::forward(const Matrix& x) const {
  require(x.cols() == in_dim(), "Linear: input dim " + std::to_string(x.cols()) + " != " +
                                    std::to_string(in_dim()));
  Matrix y = matmul_nt(x, weight);
  add_row_bias(y, bias);
  return y;
}

Linear::Grads Linear::backward(const Matrix& x, const Matrix& grad_out, bool need_input) const {
  require(grad_out.rows() == x.rows() && grad_out.cols() == out_dim(),
          "Linear::backward: gradient shape mismatch");
  return {matmul_tn(grad_out, x), column_sums(grad_out), need_input ? matmul(grad_out, weight) : Matrix()};
}

Linear Linear::random(std::size_t in, std::size_t out, double stddev, RngStream& rng) {
  Linear l;
  l.weight = random_normal(out, in, stddev, rng);
  l.bias = Matrix(1, out);
  return l;
}

}  // namespace secl
