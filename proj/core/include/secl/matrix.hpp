#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace secl {

/// Dense row-major matrix of doubles. Feature batches, weights and gradients
/// all use this type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool all_finite() const;

  /// Rows selected by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> idx) const;
  /// Appends the rows of `other` (column counts must agree).
  void append_rows(const Matrix& other);

  Matrix& operator+=(const Matrix& o);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a (n x k) * b (k x m)
Matrix matmul(const Matrix& a, const Matrix& b);
/// a (n x k) * b^T where b is (m x k). The common "inputs times weights" form.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// a^T * b where a is (n x m), b is (n x k). Used for weight gradients.
Matrix matmul_tn(const Matrix& a, const Matrix& b);

/// Adds a 1 x cols bias row to every row of m.
void add_row_bias(Matrix& m, const Matrix& bias);
/// Column sums as a 1 x cols matrix.
Matrix column_sums(const Matrix& m);

}  // namespace secl
