#include "gcn/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace gcn {

double CsrMatrix::at(std::size_t i, std::size_t j) const noexcept {
  const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
  const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values[static_cast<std::size_t>(it - col_idx.begin())];
}

CsrMatrix CsrMatrix::transposed() const {
  CsrMatrix t;
  t.n = n;
  t.row_ptr.assign(n + 1, 0);
  for (std::size_t c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < n; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows are visited in increasing order, so each transposed row stays sorted.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
      const std::size_t dst = cursor[col_idx[p]]++;
      t.col_idx[dst] = i;
      t.values[dst] = values[p];
    }
  }
  return t;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) d(i, col_idx[p]) = values[p];
  return d;
}

bool CsrMatrix::is_symmetric() const {
  const CsrMatrix t = transposed();
  return t.row_ptr == row_ptr && t.col_idx == col_idx && t.values == values;
}

std::string_view to_string(OperatorKind kind) noexcept {
  switch (kind) {
    case OperatorKind::Renormalized: return "renormalized";
    case OperatorKind::NormalizedLaplacian: return "normalized_laplacian";
    case OperatorKind::ScaledLaplacian: return "scaled_laplacian";
    case OperatorKind::FirstOrder: return "first_order";
    case OperatorKind::SingleParam: return "single_param";
    case OperatorKind::Identity: return "identity";
  }
  return "unknown";
}

SparseGraph from_edge_list(std::span<const Edge> edges, std::size_t n, bool symmetrize) {
  std::vector<Edge> entries;
  entries.reserve(symmetrize ? 2 * edges.size() : edges.size());
  for (const Edge& e : edges) {
    if (e.src >= n || e.dst >= n) {
      throw GraphError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                       ") out of range for " + std::to_string(n) + " nodes");
    }
    if (!std::isfinite(e.weight) || e.weight <= 0.0) {
      throw GraphError("edge (" + std::to_string(e.src) + ", " + std::to_string(e.dst) +
                       ") has non-positive or non-finite weight");
    }
    if (e.src == e.dst) continue;
    entries.push_back(e);
    if (symmetrize) entries.push_back({e.dst, e.src, e.weight});
  }
  std::sort(entries.begin(), entries.end(), [](const Edge& a, const Edge& b) {
    return a.src != b.src ? a.src < b.src : a.dst < b.dst;
  });

  SparseGraph g;
  g.adjacency.n = n;
  g.adjacency.row_ptr.assign(n + 1, 0);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const Edge& e = entries[k];
    if (k > 0 && entries[k - 1].src == e.src && entries[k - 1].dst == e.dst) {
      double& w = g.adjacency.values.back();
      w = std::max(w, e.weight);
      continue;
    }
    g.adjacency.col_idx.push_back(e.dst);
    g.adjacency.values.push_back(e.weight);
    ++g.adjacency.row_ptr[e.src + 1];
  }
  for (std::size_t i = 0; i < n; ++i) g.adjacency.row_ptr[i + 1] += g.adjacency.row_ptr[i];
  g.symmetric = symmetrize || g.adjacency.is_symmetric();
  return g;
}

std::vector<double> degree_vector(const SparseGraph& g) {
  const CsrMatrix& a = g.adjacency;
  std::vector<double> deg(a.n, 0.0);
  for (std::size_t i = 0; i < a.n; ++i)
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) deg[i] += a.values[p];
  return deg;
}

namespace {

// Builds diag_value * I + offdiag_scale * S A S where S = diag(scale), with
// the diagonal merged into its sorted position. Entries equal to zero are
// dropped. Each off-diagonal value is a_ij * scale_i * scale_j evaluated as
// a_ij * (scale_i * scale_j), which is bitwise symmetric.
CsrMatrix scaled_with_diagonal(const CsrMatrix& a, std::span<const double> scale,
                               double offdiag_scale, std::span<const double> diag) {
  CsrMatrix m;
  m.n = a.n;
  m.row_ptr.assign(a.n + 1, 0);
  m.col_idx.reserve(a.nnz() + a.n);
  m.values.reserve(a.nnz() + a.n);
  auto push = [&](std::size_t col, double v) {
    if (v == 0.0) return;
    m.col_idx.push_back(col);
    m.values.push_back(v);
  };
  for (std::size_t i = 0; i < a.n; ++i) {
    bool diag_done = false;
    for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
      const std::size_t j = a.col_idx[p];
      if (!diag_done && j > i) {
        push(i, diag[i]);
        diag_done = true;
      }
      push(j, offdiag_scale * (a.values[p] * (scale[i] * scale[j])));
    }
    if (!diag_done) push(i, diag[i]);
    m.row_ptr[i + 1] = m.values.size();
  }
  return m;
}

std::vector<double> inv_sqrt_degrees(const SparseGraph& g) {
  std::vector<double> d = degree_vector(g);
  for (double& v : d) v = v > 0.0 ? 1.0 / std::sqrt(v) : 0.0;
  return d;
}

}  // namespace

SparseOperator identity_operator(std::size_t n) {
  SparseOperator op;
  op.kind = OperatorKind::Identity;
  op.matrix.n = n;
  op.matrix.row_ptr.resize(n + 1);
  op.matrix.col_idx.resize(n);
  op.matrix.values.assign(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    op.matrix.row_ptr[i + 1] = i + 1;
    op.matrix.col_idx[i] = i;
  }
  return op;
}

SparseOperator renormalized_adjacency(const SparseGraph& g, double lambda_self) {
  if (!(lambda_self > 0.0) || !std::isfinite(lambda_self)) {
    throw GraphError("renormalized_adjacency: lambda_self must be positive and finite");
  }
  std::vector<double> deg = degree_vector(g);
  std::vector<double> scale(deg.size());
  std::vector<double> diag(deg.size());
  for (std::size_t i = 0; i < deg.size(); ++i) {
    const double d_tilde = deg[i] + lambda_self;
    scale[i] = 1.0 / std::sqrt(d_tilde);
    diag[i] = lambda_self / d_tilde;
  }
  return {scaled_with_diagonal(g.adjacency, scale, 1.0, diag), OperatorKind::Renormalized};
}

SparseOperator first_order_operator(const SparseGraph& g) {
  const std::vector<double> scale = inv_sqrt_degrees(g);
  const std::vector<double> diag(g.node_count(), 0.0);
  return {scaled_with_diagonal(g.adjacency, scale, 1.0, diag), OperatorKind::FirstOrder};
}

SparseOperator single_param_operator(const SparseGraph& g) {
  const std::vector<double> scale = inv_sqrt_degrees(g);
  const std::vector<double> diag(g.node_count(), 1.0);
  return {scaled_with_diagonal(g.adjacency, scale, 1.0, diag), OperatorKind::SingleParam};
}

SparseOperator normalized_laplacian(const SparseGraph& g) {
  const std::vector<double> scale = inv_sqrt_degrees(g);
  const std::vector<double> diag(g.node_count(), 1.0);
  return {scaled_with_diagonal(g.adjacency, scale, -1.0, diag),
          OperatorKind::NormalizedLaplacian};
}

SparseOperator scaled_laplacian(const SparseOperator& laplacian, double lambda_max) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) {
    throw GraphError("scaled_laplacian: lambda_max must be positive and finite");
  }
  const double s = 2.0 / lambda_max;
  const CsrMatrix& l = laplacian.matrix;
  SparseOperator out;
  out.kind = OperatorKind::ScaledLaplacian;
  out.matrix.n = l.n;
  out.matrix.row_ptr.assign(l.n + 1, 0);
  for (std::size_t i = 0; i < l.n; ++i) {
    bool diag_done = false;
    auto push = [&](std::size_t col, double v) {
      if (v == 0.0) return;
      out.matrix.col_idx.push_back(col);
      out.matrix.values.push_back(v);
    };
    for (std::size_t p = l.row_ptr[i]; p < l.row_ptr[i + 1]; ++p) {
      const std::size_t j = l.col_idx[p];
      if (!diag_done && j >= i) {
        diag_done = true;
        if (j == i) {
          push(i, s * l.values[p] - 1.0);
          continue;
        }
        push(i, -1.0);
      }
      push(j, s * l.values[p]);
    }
    if (!diag_done) push(i, -1.0);
    out.matrix.row_ptr[i + 1] = out.matrix.values.size();
  }
  return out;
}

DenseMatrix spmm(const CsrMatrix& m, const DenseMatrix& x) {
  if (m.n != x.rows()) {
    throw ShapeError("spmm: operator " + std::to_string(m.n) + "x" + std::to_string(m.n) +
                     " times " + x.shape_string());
  }
  const std::size_t cols = x.cols();
  DenseMatrix y(m.n, cols);
  for (std::size_t i = 0; i < m.n; ++i) {
    double* y_row = y.data() + i * cols;
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
      const double w = m.values[p];
      const double* x_row = x.data() + m.col_idx[p] * cols;
      for (std::size_t c = 0; c < cols; ++c) y_row[c] += w * x_row[c];
    }
  }
  return y;
}

DenseMatrix spmm(const SparseOperator& op, const DenseMatrix& x) { return spmm(op.matrix, x); }

DenseMatrix spmm_transposed(const CsrMatrix& m, const DenseMatrix& x) {
  if (m.n != x.rows()) {
    throw ShapeError("spmm_transposed: operator " + std::to_string(m.n) + " times " +
                     x.shape_string());
  }
  const std::size_t cols = x.cols();
  DenseMatrix y(m.n, cols);
  for (std::size_t i = 0; i < m.n; ++i) {
    const double* x_row = x.data() + i * cols;
    for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
      const double w = m.values[p];
      double* y_row = y.data() + m.col_idx[p] * cols;
      for (std::size_t c = 0; c < cols; ++c) y_row[c] += w * x_row[c];
    }
  }
  return y;
}

double estimate_lambda_max(const SparseOperator& op, double tol, std::size_t max_iter) {
  const std::size_t n = op.dim();
  if (n == 0) throw GraphError("estimate_lambda_max: empty operator");
  // Deterministic, non-degenerate start vector.
  DenseMatrix v(n, 1);
  std::uint64_t state = 0x9E3779B97F4A7C15ull;
  for (std::size_t i = 0; i < n; ++i) {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    v(i, 0) = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
  }
  auto normalize = [](DenseMatrix& x) {
    double s = 0.0;
    for (double e : x.values()) s += e * e;
    const double inv = 1.0 / std::sqrt(s);
    for (double& e : x.values()) e *= inv;
    return std::sqrt(s);
  };
  normalize(v);
  double rho = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    DenseMatrix w = spmm(op, v);
    rho = 0.0;
    for (std::size_t i = 0; i < n; ++i) rho += v(i, 0) * w(i, 0);
    double res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = w(i, 0) - rho * v(i, 0);
      res += r * r;
    }
    if (std::sqrt(res) <= tol) return rho;
    if (normalize(w) == 0.0) return 0.0;
    v = std::move(w);
  }
  throw ConvergenceError("estimate_lambda_max: no convergence after " +
                             std::to_string(max_iter) + " iterations",
                         rho);
}

std::vector<Edge> read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    Edge e;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    auto fail = [&]() {
      throw GraphError("edge list line " + std::to_string(line_no) + ": malformed '" + line + "'");
    };
    auto r1 = std::from_chars(p, end, e.src);
    if (r1.ec != std::errc{} || r1.ptr == end || *r1.ptr != '\t') fail();
    auto r2 = std::from_chars(r1.ptr + 1, end, e.dst);
    if (r2.ec != std::errc{}) fail();
    if (r2.ptr != end) {
      if (*r2.ptr != '\t') fail();
      auto r3 = std::from_chars(r2.ptr + 1, end, e.weight);
      if (r3.ec != std::errc{} || r3.ptr != end) fail();
    }
    edges.push_back(e);
  }
  return edges;
}

void write_edge_list(std::ostream& out, std::span<const Edge> edges) {
  char buf[64];
  for (const Edge& e : edges) {
    out << e.src << '\t' << e.dst;
    if (e.weight != 1.0) {
      auto r = std::to_chars(buf, buf + sizeof buf, e.weight);
      out << '\t' << std::string_view(buf, static_cast<std::size_t>(r.ptr - buf));
    }
    out << '\n';
  }
}

}  // namespace gcn
