#include "gcn/propagation.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace gcn {

using Variant = PropagationKind::Variant;

PropagationKind PropagationKind::chebyshev(int k) {
  if (k < 1 || k > kMaxChebyshevOrder) {
    throw std::invalid_argument("Chebyshev order must lie in [1, 8], got " + std::to_string(k));
  }
  PropagationKind p{Variant::Chebyshev};
  p.order = k;
  return p;
}

PropagationKind PropagationKind::renormalized(double lambda_self) {
  if (!(lambda_self > 0.0) || !std::isfinite(lambda_self)) {
    throw std::invalid_argument("renormalized: lambda must be positive");
  }
  PropagationKind p{Variant::Renormalized};
  p.lambda_self = lambda_self;
  return p;
}

PropagationKind PropagationKind::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? "" : text.substr(colon + 1);
  auto bad = [&]() {
    return std::invalid_argument("unknown propagation model '" + std::string(text) +
                                 "' (expected renorm[:lambda], cheb:K, first-order, single, "
                                 "first-term or mlp)");
  };
  auto no_arg = [&](PropagationKind k) {
    if (colon != std::string_view::npos) throw bad();
    return k;
  };
  if (head == "renorm") {
    if (colon == std::string_view::npos) return renormalized(1.0);
    double lambda = 0.0;
    auto r = std::from_chars(arg.data(), arg.data() + arg.size(), lambda);
    if (r.ec != std::errc{} || r.ptr != arg.data() + arg.size()) throw bad();
    return renormalized(lambda);
  }
  if (head == "cheb") {
    int k = 0;
    auto r = std::from_chars(arg.data(), arg.data() + arg.size(), k);
    if (arg.empty() || r.ec != std::errc{} || r.ptr != arg.data() + arg.size()) throw bad();
    return chebyshev(k);
  }
  if (head == "first-order") return no_arg(first_order());
  if (head == "single") return no_arg(single_param());
  if (head == "first-term") return no_arg(first_order_term_only());
  if (head == "mlp") return no_arg(mlp());
  throw bad();
}

std::string PropagationKind::to_string() const {
  switch (variant) {
    case Variant::Chebyshev: return "cheb:" + std::to_string(order);
    case Variant::FirstOrder: return "first-order";
    case Variant::SingleParam: return "single";
    case Variant::Renormalized: {
      if (lambda_self == 1.0) return "renorm";
      char buf[32];
      auto r = std::to_chars(buf, buf + sizeof buf, lambda_self);
      return "renorm:" + std::string(buf, r.ptr);
    }
    case Variant::FirstOrderTermOnly: return "first-term";
    case Variant::Mlp: return "mlp";
  }
  return "?";
}

std::size_t PropagationKind::weight_count() const noexcept {
  switch (variant) {
    case Variant::Chebyshev: return static_cast<std::size_t>(order) + 1;
    case Variant::FirstOrder: return 2;
    default: return 1;
  }
}

OperatorSet prepare_operators(const SparseGraph& g, std::span<const PropagationKind> kinds,
                              LambdaMaxMode mode) {
  OperatorSet ops;
  ops.n = g.node_count();
  for (const PropagationKind& k : kinds) {
    switch (k.variant) {
      case Variant::Renormalized:
        if (!ops.renormalized)
          ops.renormalized = renormalized_adjacency(g, k.lambda_self);
        break;
      case Variant::FirstOrder:
      case Variant::FirstOrderTermOnly:
        if (!ops.first_order) ops.first_order = first_order_operator(g);
        break;
      case Variant::SingleParam:
        if (!ops.single_param) ops.single_param = single_param_operator(g);
        break;
      case Variant::Chebyshev:
        if (!ops.scaled_laplacian) {
          const SparseOperator lap = normalized_laplacian(g);
          double lambda_max = 2.0;
          if (mode == LambdaMaxMode::PowerIteration) {
            try {
              lambda_max = estimate_lambda_max(lap, 1e-6, 1000);
            } catch (const ConvergenceError& e) {
              lambda_max = e.last_estimate();
            }
            // An edgeless graph has L = I; anything non-positive would be
            // rejected by scaled_laplacian.
            if (!(lambda_max > 0.0)) lambda_max = 2.0;
          }
          ops.lambda_max = lambda_max;
          ops.scaled_laplacian = scaled_laplacian(lap, lambda_max);
        }
        break;
      case Variant::Mlp:
        break;
    }
  }
  return ops;
}

OperatorSet prepare_operators(const SparseGraph& g, const PropagationKind& kind,
                              LambdaMaxMode mode) {
  return prepare_operators(g, std::span<const PropagationKind>(&kind, 1), mode);
}

ChebBasis chebyshev_basis(const SparseOperator& scaled_laplacian, const DenseMatrix& x,
                          int order) {
  if (order < 1) throw std::invalid_argument("chebyshev_basis: order must be >= 1");
  if (scaled_laplacian.dim() != x.rows()) {
    throw ShapeError("chebyshev_basis: operator dimension " +
                     std::to_string(scaled_laplacian.dim()) + " vs signal " + x.shape_string());
  }
  ChebBasis basis;
  basis.terms.reserve(static_cast<std::size_t>(order) + 1);
  basis.terms.push_back(x);
  basis.terms.push_back(spmm(scaled_laplacian, x));
  for (int k = 2; k <= order; ++k) {
    DenseMatrix next = spmm(scaled_laplacian, basis.terms[k - 1]);
    const auto prev = basis.terms[k - 2].values();
    auto out = next.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * out[i] + (-1.0) * prev[i];
    basis.terms.push_back(std::move(next));
  }
  return basis;
}

namespace {

const SparseOperator& require(const std::optional<SparseOperator>& op, const char* name,
                              std::size_t n) {
  if (!op) throw std::invalid_argument(std::string("propagate: operator '") + name +
                                       "' was not precomputed");
  if (op->dim() != n) throw ShapeError(std::string("propagate: operator '") + name +
                                       "' has the wrong dimension");
  return *op;
}

// H * Theta, or Theta itself for identity input.
Var project(Tape& tape, std::optional<Var> input, Var weight) {
  return input ? tape.matmul(*input, weight) : weight;
}

// sum_k T_k(L~) C_k by Clenshaw's recurrence on the already projected
// coefficients C_k = H Theta_k. Needs K sparse products on N x F blocks.
Var chebyshev_clenshaw(Tape& tape, const SparseOperator& lt, std::span<const Var> coeffs) {
  const std::size_t order = coeffs.size() - 1;
  // b_K = C_K, b_{K-1} = C_{K-1} + 2 L~ b_K, b_k = C_k + 2 L~ b_{k+1} - b_{k+2}
  Var b1 = coeffs[order];
  std::optional<Var> b2;
  for (std::size_t k = order; k-- > 1;) {
    Var two_lb = tape.scale(tape.spmm(lt, b1), 2.0);
    Var next = tape.add(coeffs[k], two_lb);
    if (b2) next = tape.axpby(1.0, next, -1.0, *b2);
    b2 = b1;
    b1 = next;
  }
  // y = C_0 + L~ b_1 - b_2
  Var y = tape.add(coeffs[0], tape.spmm(lt, b1));
  if (b2) y = tape.axpby(1.0, y, -1.0, *b2);
  return y;
}

Var chebyshev_basis_path(Tape& tape, const SparseOperator& lt, Var h,
                         std::span<const Var> weights) {
  std::vector<Var> terms;
  terms.push_back(h);
  terms.push_back(tape.spmm(lt, h));
  for (std::size_t k = 2; k < weights.size(); ++k)
    terms.push_back(tape.axpby(2.0, tape.spmm(lt, terms[k - 1]), -1.0, terms[k - 2]));
  Var z = tape.matmul(terms[0], weights[0]);
  for (std::size_t k = 1; k < weights.size(); ++k)
    z = tape.add(z, tape.matmul(terms[k], weights[k]));
  return z;
}

}  // namespace

Var propagate(Tape& tape, const PropagationKind& kind, const OperatorSet& ops,
              std::optional<Var> input, std::span<const Var> weights) {
  if (weights.size() != kind.weight_count()) {
    throw ShapeError("propagate: " + kind.to_string() + " expects " +
                     std::to_string(kind.weight_count()) + " weight matrices, got " +
                     std::to_string(weights.size()));
  }
  const std::size_t in_dim = input ? tape.value(*input).cols() : ops.n;
  const std::size_t n = input ? tape.value(*input).rows() : ops.n;
  for (Var w : weights) {
    if (tape.value(w).rows() != in_dim || tape.value(w).cols() != tape.value(weights[0]).cols()) {
      throw ShapeError("propagate: weight " + tape.value(w).shape_string() +
                       " does not match layer input width " + std::to_string(in_dim));
    }
  }
  switch (kind.variant) {
    case Variant::Mlp:
      return project(tape, input, weights[0]);
    case Variant::Renormalized:
      return tape.spmm(require(ops.renormalized, "renormalized", n),
                       project(tape, input, weights[0]));
    case Variant::SingleParam:
      return tape.spmm(require(ops.single_param, "single_param", n),
                       project(tape, input, weights[0]));
    case Variant::FirstOrderTermOnly:
      return tape.spmm(require(ops.first_order, "first_order", n),
                       project(tape, input, weights[0]));
    case Variant::FirstOrder: {
      const SparseOperator& a = require(ops.first_order, "first_order", n);
      return tape.add(project(tape, input, weights[0]),
                      tape.spmm(a, project(tape, input, weights[1])));
    }
    case Variant::Chebyshev: {
      const SparseOperator& lt = require(ops.scaled_laplacian, "scaled_laplacian", n);
      const std::size_t out_dim = tape.value(weights[0]).cols();
      if (input && in_dim <= out_dim) return chebyshev_basis_path(tape, lt, *input, weights);
      std::vector<Var> coeffs;
      coeffs.reserve(weights.size());
      for (Var w : weights) coeffs.push_back(project(tape, input, w));
      return chebyshev_clenshaw(tape, lt, coeffs);
    }
  }
  throw std::logic_error("propagate: unhandled variant");
}

DenseMatrix propagate(const PropagationKind& kind, const OperatorSet& ops, const DenseMatrix& h,
                      std::span<const DenseMatrix> weights) {
  Tape tape;
  const Var in = tape.constant_ref(h);
  std::vector<Var> ws;
  ws.reserve(weights.size());
  for (const DenseMatrix& w : weights) ws.push_back(tape.constant_ref(w));
  return tape.value(propagate(tape, kind, ops, in, ws));
}

}  // namespace gcn
