#include "secl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "secl/error.hpp"

namespace secl {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, "Matrix: data length " + std::to_string(data_.size()) +
                                             " does not match " + std::to_string(rows_) + "x" +
                                             std::to_string(cols_));
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    require(r.size() == cols_, "Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::gather_rows(std::span<const std::size_t> idx) const {
  Matrix out(idx.size(), cols_);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < rows_, "gather_rows: index out of range");
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(idx[i] * cols_), cols_,
                out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols_));
  }
  return out;
}

void Matrix::append_rows(const Matrix& other) {
  if (other.rows_ == 0) return;
  if (rows_ == 0 && cols_ == 0) cols_ = other.cols_;
  require(cols_ == other.cols_, "append_rows: column mismatch");
  data_.insert(data_.end(), other.data_.begin(), other.data_.end());
  rows_ += other.rows_;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  require(same_shape(o), "Matrix +=: shape mismatch");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

// The kernels are cloned for AVX2 with a runtime dispatch. FMA is not
// enabled, so every clone performs the same roundings in the same order.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define SECL_KERNEL __attribute__((target_clones("avx2", "default")))
#else
#define SECL_KERNEL
#endif

SECL_KERNEL Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  const std::size_t n = a.rows(), inner = a.cols(), m = b.cols();
  Matrix out(n, m);
  const double* bp = b.values().data();
  std::size_t i = 0;
  // Four output rows at a time share each row of b. Every element still
  // accumulates over k in ascending order.
  for (; i + 4 <= n; i += 4) {
    double* d0 = out.row(i).data();
    double* d1 = out.row(i + 1).data();
    double* d2 = out.row(i + 2).data();
    double* d3 = out.row(i + 3).data();
    const double* a0 = a.row(i).data();
    const double* a1 = a.row(i + 1).data();
    const double* a2 = a.row(i + 2).data();
    const double* a3 = a.row(i + 3).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double* src = bp + k * m;
      const double x0 = a0[k], x1 = a1[k], x2 = a2[k], x3 = a3[k];
      for (std::size_t j = 0; j < m; ++j) {
        const double v = src[j];
        d0[j] += x0 * v;
        d1[j] += x1 * v;
        d2[j] += x2 * v;
        d3[j] += x3 * v;
      }
    }
  }
  for (; i < n; ++i) {
    double* dst = out.row(i).data();
    const double* ar = a.row(i).data();
    for (std::size_t k = 0; k < inner; ++k) {
      const double aik = ar[k];
      const double* src = bp + k * m;
      for (std::size_t j = 0; j < m; ++j) dst[j] += aik * src[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_nt: inner dimension mismatch");
  // Transposing b once lets the row-times-matrix kernel run with a
  // vectorisable inner loop instead of a serial dot-product reduction.
  Matrix bt(b.cols(), b.rows());
  for (std::size_t i = 0; i < b.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) bt(j, i) = b(i, j);
  }
  return matmul(a, bt);
}

SECL_KERNEL Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_tn: row count mismatch");
  Matrix out(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ar = a.row(i);
    auto br = b.row(i);
    for (std::size_t c = 0; c < ar.size(); ++c) {
      const double s = ar[c];
      if (s == 0.0) continue;
      double* dst = out.row(c).data();
      for (std::size_t j = 0; j < br.size(); ++j) dst[j] += s * br[j];
    }
  }
  return out;
}

void add_row_bias(Matrix& m, const Matrix& bias) {
  require(bias.rows() == 1 && bias.cols() == m.cols(), "add_row_bias: shape mismatch");
  auto b = bias.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
}

Matrix column_sums(const Matrix& m) {
  Matrix out(1, m.cols());
  auto dst = out.row(0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) dst[j] += r[j];
  }
  return out;
}

}  // namespace secl
