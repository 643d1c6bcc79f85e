#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gcn/dense_matrix.hpp"
#include "gcn/graph.hpp"
#include "gcn/rng.hpp"

namespace gcn {

/// Trainable weight matrix with its gradient slot.
struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;

  Parameter() = default;
  Parameter(std::string n, DenseMatrix v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
};

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;
  std::size_t index() const noexcept { return index_; }
  friend bool operator==(Var, Var) = default;

 private:
  friend class Tape;
  explicit Var(std::size_t i) : index_(i) {}
  std::size_t index_ = static_cast<std::size_t>(-1);
};

/// Records a forward pass over dense matrices and replays hand-written
/// adjoints in reverse.
///
/// Nodes are appended in evaluation order, which is already a topological
/// order, so backward is a single reverse sweep. Constants and parameters
/// passed by reference are not copied; they (and any SparseOperator given to
/// spmm) must outlive the tape. Gradients are only propagated into inputs
/// that depend on a parameter, so e.g. the feature matrix never gets an
/// N x C adjoint.
///
/// A tape supports exactly one backward pass. Build a new tape for the next
/// forward pass.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(DenseMatrix value);
  /// Borrowed constant; `value` must outlive the tape.
  Var constant_ref(const DenseMatrix& value);
  /// Leaf whose adjoint is accumulated into `p.grad` on backward.
  Var parameter(Parameter& p);

  Var matmul(Var a, Var b);
  Var spmm(const SparseOperator& op, Var x);
  Var relu(Var a);
  Var tanh(Var a);
  Var add(Var a, Var b);
  /// alpha * a + beta * b
  Var axpby(double alpha, Var a, double beta, Var b);
  Var scale(Var a, double alpha);
  /// Inverted dropout: kept entries scaled by 1/(1-p). Identity when
  /// `training` is false or p == 0.
  Var dropout(Var a, double p, bool training, Rng& rng);
  /// out[r][c] = a[r][c] * factors[r].
  Var scale_rows(Var a, std::vector<double> factors);
  Var softmax_rows(Var a);
  /// -sum_{l in mask} sum_f Y_lf ln max(Z_lf, 1e-12), as a 1x1 value.
  Var masked_cross_entropy(Var probs, const DenseMatrix& one_hot,
                           std::span<const std::size_t> mask);
  /// 0.5 * sum of squared entries over all listed vars, as a 1x1 value.
  Var l2_penalty(std::span<const Var> vars);
  /// Sum of all entries, as a 1x1 value.
  Var sum(Var a);

  const DenseMatrix& value(Var v) const;
  double scalar(Var v) const;
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Zeroes the grad of every parameter on this tape, then back-propagates
  /// from the 1x1 `loss`.
  void backward(Var loss);

 private:
  struct Node {
    DenseMatrix owned;
    const DenseMatrix* borrowed = nullptr;
    Parameter* param = nullptr;
    bool requires_grad = false;
    // Adds input adjoints given this node's adjoint.
    std::function<void(Tape&, const DenseMatrix&)> adjoint;

    const DenseMatrix& value() const { return borrowed ? *borrowed : owned; }
  };

  Var push(Node n);
  Node& node(Var v);
  const Node& node(Var v) const;
  void accumulate(Var v, DenseMatrix g);
  void accumulate(Var v, const DenseMatrix& g, double alpha);

  std::vector<Node> nodes_;
  std::vector<DenseMatrix> grads_;
  bool consumed_ = false;
};

/// Reference gradient by central differences, (f(w+eps) - f(w-eps)) / 2eps
/// for every entry of every parameter. `loss` must be deterministic.
std::vector<DenseMatrix> finite_difference_gradient(const std::function<double()>& loss,
                                                    std::span<Parameter* const> params,
                                                    double eps = 1e-5);

}  // namespace gcn
