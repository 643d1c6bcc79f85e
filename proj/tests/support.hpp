#pragma once

// Shared fixtures for the unit tests: random instances drawn from a
// std::mt19937 (independent of the library's own generator) and dense
// reference implementations written straight from the definitions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gcn/dense_matrix.hpp>
#include <gcn/graph.hpp>

namespace testing {

using gcn::DenseMatrix;
using gcn::Edge;
using gcn::SparseGraph;

inline DenseMatrix random_dense(std::size_t r, std::size_t c, std::mt19937& gen,
                                double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  DenseMatrix m(r, c);
  for (double& v : m.values()) v = u(gen);
  return m;
}

/// Erdos-Renyi edge list; with `weighted`, weights are drawn from [0.5, 2].
inline std::vector<Edge> random_edges(std::size_t n, double p, std::mt19937& gen,
                                      bool weighted = false) {
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> w(0.5, 2.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(gen)) edges.push_back({i, j, weighted ? w(gen) : 1.0});
  return edges;
}

inline SparseGraph random_graph(std::size_t n, double p, std::mt19937& gen,
                                bool weighted = false) {
  const auto edges = random_edges(n, p, gen, weighted);
  return gcn::from_edge_list(edges, n, true);
}

/// Random graph guaranteed connected: a random spanning path plus extra edges.
inline SparseGraph random_connected_graph(std::size_t n, double p, std::mt19937& gen) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), gen);
  auto edges = random_edges(n, p, gen);
  for (std::size_t k = 1; k < n; ++k) edges.push_back({order[k - 1], order[k], 1.0});
  return gcn::from_edge_list(edges, n, true);
}

inline DenseMatrix dense_adjacency(const SparseGraph& g) {
  DenseMatrix a(g.node_count(), g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i)
    for (std::size_t k = g.adjacency.row_begin(i); k < g.adjacency.row_end(i); ++k)
      a(i, g.adjacency.col_idx[k]) = g.adjacency.values[k];
  return a;
}

/// D^-1/2 A D^-1/2 by the textbook formula with the zero-degree convention.
inline DenseMatrix dense_sym_normalized(const DenseMatrix& a) {
  const std::size_t n = a.rows();
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    s[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }
  DenseMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out(i, j) = s[i] * a(i, j) * s[j];
  return out;
}

inline DenseMatrix dense_identity_plus(const DenseMatrix& m, double diag) {
  DenseMatrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) out(i, i) += diag;
  return out;
}

inline DenseMatrix dense_renormalized(const DenseMatrix& a, double lambda = 1.0) {
  return dense_sym_normalized(dense_identity_plus(a, lambda));
}

inline DenseMatrix dense_laplacian(const DenseMatrix& a) {
  DenseMatrix l = dense_sym_normalized(a);
  for (double& v : l.values()) v = -v;
  // Isolated nodes keep a 1 on the diagonal as well.
  return dense_identity_plus(l, 1.0);
}

inline DenseMatrix naive_matmul(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline std::vector<double> eigenvalues(const DenseMatrix& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(m), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

inline double max_abs(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

/// Relabels node i as perm[i].
inline SparseGraph permute(const SparseGraph& g, const std::vector<std::size_t>& perm) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < g.node_count(); ++i)
    for (std::size_t k = g.adjacency.row_begin(i); k < g.adjacency.row_end(i); ++k)
      edges.push_back({perm[i], perm[g.adjacency.col_idx[k]], g.adjacency.values[k]});
  return gcn::from_edge_list(edges, g.node_count(), false);
}

inline DenseMatrix permute_rows(const DenseMatrix& m, const std::vector<std::size_t>& perm) {
  DenseMatrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t c = 0; c < m.cols(); ++c) out(perm[i], c) = m(i, c);
  return out;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, std::mt19937& gen) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::shuffle(p.begin(), p.end(), gen);
  return p;
}

/// Hop distance from `src` by breadth-first search; SIZE_MAX if unreachable.
inline std::vector<std::size_t> hop_distances(const SparseGraph& g, std::size_t src) {
  std::vector<std::size_t> dist(g.node_count(), static_cast<std::size_t>(-1));
  std::vector<std::size_t> queue{src};
  dist[src] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const std::size_t u = queue[h];
    for (std::size_t v : g.neighbors(u)) {
      if (dist[v] == static_cast<std::size_t>(-1)) {
        dist[v] = dist[u] + 1;
        queue.push_back(v);
      }
    }
  }
  return dist;
}

}  // namespace testing
