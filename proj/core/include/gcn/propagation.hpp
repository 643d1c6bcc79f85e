#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gcn/autodiff.hpp"
#include "gcn/dense_matrix.hpp"
#include "gcn/graph.hpp"

namespace gcn {

/// Per-layer propagation rule. One value of this type stands for one row of
/// the propagation-model comparison: Chebyshev filters of order K, the
/// two-parameter first-order model, the single-parameter model, the
/// renormalized adjacency (with self-loop weight), the first-order term on
/// its own, and the plain MLP.
struct PropagationKind {
  enum class Variant { Chebyshev, FirstOrder, SingleParam, Renormalized, FirstOrderTermOnly, Mlp };

  static constexpr int kMaxChebyshevOrder = 8;

  Variant variant = Variant::Renormalized;
  int order = 0;             // Chebyshev K
  double lambda_self = 1.0;  // Renormalized self-loop weight

  static PropagationKind chebyshev(int k);
  static PropagationKind first_order() { return {Variant::FirstOrder}; }
  static PropagationKind single_param() { return {Variant::SingleParam}; }
  static PropagationKind renormalized(double lambda_self = 1.0);
  static PropagationKind first_order_term_only() { return {Variant::FirstOrderTermOnly}; }
  static PropagationKind mlp() { return {Variant::Mlp}; }

  /// Parses `renorm[:lambda]`, `cheb:K`, `first-order`, `single`,
  /// `first-term` or `mlp`. Throws std::invalid_argument otherwise.
  static PropagationKind parse(std::string_view text);
  std::string to_string() const;

  /// Number of weight matrices one layer of this kind carries.
  std::size_t weight_count() const noexcept;

  friend bool operator==(const PropagationKind&, const PropagationKind&) = default;
};

/// How lambda_max is obtained for the scaled Laplacian.
enum class LambdaMaxMode { PowerIteration, FixedTwo };

/// Sparse operators a propagation kind needs, computed once per graph.
struct OperatorSet {
  std::size_t n = 0;
  std::optional<SparseOperator> renormalized;
  std::optional<SparseOperator> first_order;
  std::optional<SparseOperator> single_param;
  std::optional<SparseOperator> scaled_laplacian;
  double lambda_max = 2.0;
};

/// Precomputes the operators for every kind in `kinds`. In power-iteration
/// mode lambda_max is estimated with tol 1e-6 and at most 1000 iterations;
/// if that does not converge the last Rayleigh quotient is used.
OperatorSet prepare_operators(const SparseGraph& g, std::span<const PropagationKind> kinds,
                              LambdaMaxMode mode = LambdaMaxMode::PowerIteration);
OperatorSet prepare_operators(const SparseGraph& g, const PropagationKind& kind,
                              LambdaMaxMode mode = LambdaMaxMode::PowerIteration);

/// terms[k] = T_k(L~) X for k = 0..K.
struct ChebBasis {
  std::vector<DenseMatrix> terms;
};

ChebBasis chebyshev_basis(const SparseOperator& scaled_laplacian, const DenseMatrix& x, int order);

/// Records one layer's pre-activation on `tape`. `input` is the layer input
/// H, or std::nullopt when H is the identity (featureless input), in which
/// case H * Theta is just Theta and no N x N matrix is formed.
Var propagate(Tape& tape, const PropagationKind& kind, const OperatorSet& ops,
              std::optional<Var> input, std::span<const Var> weights);

/// Value-only form of the above.
DenseMatrix propagate(const PropagationKind& kind, const OperatorSet& ops, const DenseMatrix& h,
                      std::span<const DenseMatrix> weights);

}  // namespace gcn
