#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "gcn/dense_matrix.hpp"

namespace gcn {

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when power iteration does not reach the requested residual.
/// Carries the last Rayleigh-quotient estimate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double last_estimate)
      : std::runtime_error(what), last_estimate_(last_estimate) {}
  double last_estimate() const noexcept { return last_estimate_; }

 private:
  double last_estimate_;
};

struct Edge {
  std::size_t src = 0;
  std::size_t dst = 0;
  double weight = 1.0;
};

/// Square compressed-sparse-row matrix. Column indices are strictly
/// increasing inside each row and no explicit zeros are stored.
struct CsrMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }
  std::size_t row_begin(std::size_t i) const noexcept { return row_ptr[i]; }
  std::size_t row_end(std::size_t i) const noexcept { return row_ptr[i + 1]; }
  /// Stored value at (i, j) or 0.
  double at(std::size_t i, std::size_t j) const noexcept;

  CsrMatrix transposed() const;
  DenseMatrix to_dense() const;
  /// Exact structural and bitwise value equality with the transpose.
  bool is_symmetric() const;
};

/// Weighted adjacency without self-loops.
struct SparseGraph {
  CsrMatrix adjacency;
  bool symmetric = true;

  std::size_t node_count() const noexcept { return adjacency.n; }
  /// Number of undirected edges (stored entries / 2) for symmetric graphs,
  /// stored entries otherwise.
  std::size_t edge_count() const noexcept {
    return symmetric ? adjacency.nnz() / 2 : adjacency.nnz();
  }
  std::span<const std::size_t> neighbors(std::size_t i) const noexcept {
    return {adjacency.col_idx.data() + adjacency.row_ptr[i],
            adjacency.row_ptr[i + 1] - adjacency.row_ptr[i]};
  }
};

enum class OperatorKind {
  Renormalized,         // D~^-1/2 (A + lambda I) D~^-1/2
  NormalizedLaplacian,  // I - D^-1/2 A D^-1/2
  ScaledLaplacian,      // 2 L / lambda_max - I
  FirstOrder,           // D^-1/2 A D^-1/2
  SingleParam,          // I + D^-1/2 A D^-1/2
  Identity,
};

std::string_view to_string(OperatorKind kind) noexcept;

struct SparseOperator {
  CsrMatrix matrix;
  OperatorKind kind = OperatorKind::Identity;

  std::size_t dim() const noexcept { return matrix.n; }
};

/// Duplicates are merged by max weight and self-loops dropped. With
/// `symmetrize`, every (i, j) is mirrored to (j, i).
SparseGraph from_edge_list(std::span<const Edge> edges, std::size_t n, bool symmetrize);

/// Row sums of the adjacency; zero for isolated nodes.
std::vector<double> degree_vector(const SparseGraph& g);

SparseOperator identity_operator(std::size_t n);
SparseOperator renormalized_adjacency(const SparseGraph& g, double lambda_self = 1.0);
SparseOperator normalized_laplacian(const SparseGraph& g);
SparseOperator first_order_operator(const SparseGraph& g);
SparseOperator single_param_operator(const SparseGraph& g);
SparseOperator scaled_laplacian(const SparseOperator& laplacian, double lambda_max);

/// Largest-magnitude eigenvalue of a symmetric operator by power iteration,
/// stopping once the residual norm |Mv - rho v|_2 drops to `tol`.
double estimate_lambda_max(const SparseOperator& op, double tol = 1e-6,
                           std::size_t max_iter = 1000);

/// Y = M X. Per-row accumulation follows column-index order.
DenseMatrix spmm(const CsrMatrix& m, const DenseMatrix& x);
DenseMatrix spmm(const SparseOperator& op, const DenseMatrix& x);
/// Y = M^T X by row scatter, for adjoints of non-symmetric operators.
DenseMatrix spmm_transposed(const CsrMatrix& m, const DenseMatrix& x);

/// Tab-separated `src dst [weight]` lines; `#` lines and blank lines skipped.
std::vector<Edge> read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, std::span<const Edge> edges);

}  // namespace gcn
