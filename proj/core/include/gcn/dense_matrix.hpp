#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gcn {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Row-major dense matrix of doubles. Holds node features, activations and
/// weights alike.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);
  /// Builds from nested rows; every row must have the same length.
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  void fill(double v);
  bool all_finite() const noexcept;
  DenseMatrix transposed() const;

  bool same_shape(const DenseMatrix& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// C = A * B. Zero entries of A are skipped, which makes bag-of-words
/// feature matrices cheap without a separate sparse path.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// C = A^T * B without materializing the transpose.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);
/// C = A * B^T without materializing the transpose.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

void add_inplace(DenseMatrix& dst, const DenseMatrix& src);
void axpy_inplace(DenseMatrix& dst, double alpha, const DenseMatrix& src);
DenseMatrix scaled(const DenseMatrix& m, double alpha);

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace gcn
