#include "gcn/dense_matrix.hpp"

#include <algorithm>
#include <cmath>

namespace gcn {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeError("DenseMatrix: " + std::to_string(values_.size()) + " values for a " +
                     std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> values;
  values.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw ShapeError("DenseMatrix::from_rows: ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return DenseMatrix(rows.size(), cols, std::move(values));
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::transposed() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

std::string DenseMatrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  DenseMatrix c(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t out_cols = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* c_row = c.data() + i * out_cols;
    const double* a_row = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double a_ik = a_row[k];
      if (a_ik == 0.0) continue;
      const double* b_row = b.data() + k * out_cols;
      for (std::size_t j = 0; j < out_cols; ++j) c_row[j] += a_ik * b_row[j];
    }
  }
  return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_at_b: " + a.shape_string() + "^T * " + b.shape_string());
  }
  DenseMatrix c(a.cols(), b.cols());
  const std::size_t out_cols = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* a_row = a.data() + k * a.cols();
    const double* b_row = b.data() + k * out_cols;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double a_ki = a_row[i];
      if (a_ki == 0.0) continue;
      double* c_row = c.data() + i * out_cols;
      for (std::size_t j = 0; j < out_cols; ++j) c_row[j] += a_ki * b_row[j];
    }
  }
  return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_a_bt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  DenseMatrix c(a.rows(), b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = a.data() + i * inner;
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = b.data() + j * inner;
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k) acc += a_row[k] * b_row[k];
      c(i, j) = acc;
    }
  }
  return c;
}

void add_inplace(DenseMatrix& dst, const DenseMatrix& src) {
  if (!dst.same_shape(src)) {
    throw ShapeError("add: " + dst.shape_string() + " + " + src.shape_string());
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

void axpy_inplace(DenseMatrix& dst, double alpha, const DenseMatrix& src) {
  if (!dst.same_shape(src)) {
    throw ShapeError("axpy: " + dst.shape_string() + " + a*" + src.shape_string());
  }
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += alpha * s[i];
}

DenseMatrix scaled(const DenseMatrix& m, double alpha) {
  DenseMatrix out = m;
  for (double& v : out.values()) v *= alpha;
  return out;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (!a.same_shape(b)) {
    throw ShapeError("max_abs_diff: " + a.shape_string() + " vs " + b.shape_string());
  }
  double worst = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) worst = std::max(worst, std::abs(av[i] - bv[i]));
  return worst;
}

}  // namespace gcn
