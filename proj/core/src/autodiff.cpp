#include "gcn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace gcn {

namespace {

constexpr double kLogClamp = 1e-12;

DenseMatrix scalar_matrix(double v) { return DenseMatrix(1, 1, v); }

}  // namespace

Var Tape::push(Node n) {
  if (consumed_) throw TapeError("tape already consumed by backward");
  nodes_.push_back(std::move(n));
  return Var(nodes_.size() - 1);
}

Tape::Node& Tape::node(Var v) {
  if (v.index_ >= nodes_.size()) throw TapeError("Var does not belong to this tape");
  return nodes_[v.index_];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.index_ >= nodes_.size()) throw TapeError("Var does not belong to this tape");
  return nodes_[v.index_];
}

const DenseMatrix& Tape::value(Var v) const { return node(v).value(); }

double Tape::scalar(Var v) const {
  const DenseMatrix& m = value(v);
  if (m.rows() != 1 || m.cols() != 1) throw ShapeError("scalar: value is " + m.shape_string());
  return m(0, 0);
}

void Tape::accumulate(Var v, DenseMatrix g) {
  DenseMatrix& slot = grads_[v.index_];
  if (slot.empty() && !g.empty()) {
    slot = std::move(g);
  } else {
    add_inplace(slot, g);
  }
}

void Tape::accumulate(Var v, const DenseMatrix& g, double alpha) {
  DenseMatrix& slot = grads_[v.index_];
  if (slot.empty()) slot = DenseMatrix(g.rows(), g.cols());
  axpy_inplace(slot, alpha, g);
}

Var Tape::constant(DenseMatrix value) {
  Node n;
  n.owned = std::move(value);
  return push(std::move(n));
}

Var Tape::constant_ref(const DenseMatrix& value) {
  Node n;
  n.borrowed = &value;
  return push(std::move(n));
}

Var Tape::parameter(Parameter& p) {
  if (!p.grad.same_shape(p.value)) p.grad = DenseMatrix(p.value.rows(), p.value.cols());
  Node n;
  n.borrowed = &p.value;
  n.param = &p;
  n.requires_grad = true;
  return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
  Node n;
  n.owned = gcn::matmul(value(a), value(b));
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.adjoint = [a, b](Tape& t, const DenseMatrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, matmul_a_bt(g, t.value(b)));
    if (t.requires_grad(b)) t.accumulate(b, matmul_at_b(t.value(a), g));
  };
  return push(std::move(n));
}

Var Tape::spmm(const SparseOperator& op, Var x) {
  Node n;
  n.owned = gcn::spmm(op, value(x));
  n.requires_grad = requires_grad(x);
  const SparseOperator* opp = &op;
  n.adjoint = [opp, x](Tape& t, const DenseMatrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, spmm_transposed(opp->matrix, g));
  };
  return push(std::move(n));
}

Var Tape::relu(Var a) {
  Node n;
  n.owned = value(a);
  for (double& v : n.owned.values()) v = v > 0.0 ? v : 0.0;
  n.requires_grad = requires_grad(a);
  const std::size_t self = nodes_.size();
  n.adjoint = [a, self](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(a)) return;
    const auto out = t.nodes_[self].value().values();
    DenseMatrix da = g;
    auto d = da.values();
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(out[i] > 0.0)) d[i] = 0.0;
    t.accumulate(a, std::move(da));
  };
  return push(std::move(n));
}

Var Tape::tanh(Var a) {
  Node n;
  n.owned = value(a);
  for (double& v : n.owned.values()) v = std::tanh(v);
  n.requires_grad = requires_grad(a);
  const std::size_t self = nodes_.size();
  n.adjoint = [a, self](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(a)) return;
    const auto out = t.nodes_[self].value().values();
    DenseMatrix da = g;
    auto d = da.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - out[i] * out[i];
    t.accumulate(a, std::move(da));
  };
  return push(std::move(n));
}

Var Tape::axpby(double alpha, Var a, double beta, Var b) {
  const DenseMatrix& va = value(a);
  const DenseMatrix& vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("add: " + va.shape_string() + " + " + vb.shape_string());
  Node n;
  n.owned = DenseMatrix(va.rows(), va.cols());
  {
    auto o = n.owned.values();
    auto x = va.values();
    auto y = vb.values();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] = alpha * x[i] + beta * y[i];
  }
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.adjoint = [a, b, alpha, beta](Tape& t, const DenseMatrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g, alpha);
    if (t.requires_grad(b)) t.accumulate(b, g, beta);
  };
  return push(std::move(n));
}

Var Tape::add(Var a, Var b) {
  const DenseMatrix& va = value(a);
  const DenseMatrix& vb = value(b);
  if (!va.same_shape(vb)) throw ShapeError("add: " + va.shape_string() + " + " + vb.shape_string());
  Node n;
  n.owned = va;
  add_inplace(n.owned, vb);
  n.requires_grad = requires_grad(a) || requires_grad(b);
  n.adjoint = [a, b](Tape& t, const DenseMatrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g, 1.0);
    if (t.requires_grad(b)) t.accumulate(b, g, 1.0);
  };
  return push(std::move(n));
}

Var Tape::scale(Var a, double alpha) {
  Node n;
  n.owned = scaled(value(a), alpha);
  n.requires_grad = requires_grad(a);
  n.adjoint = [a, alpha](Tape& t, const DenseMatrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g, alpha);
  };
  return push(std::move(n));
}

Var Tape::dropout(Var a, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return a;
  const DenseMatrix& va = value(a);
  const double keep_scale = 1.0 / (1.0 - p);
  Node n;
  n.owned = DenseMatrix(va.rows(), va.cols());
  auto o = n.owned.values();
  auto x = va.values();
  if (!requires_grad(a)) {
    // No adjoint needed, so the mask only matters where x != 0. Sparse
    // bag-of-words inputs then cost one draw per nonzero.
    for (std::size_t i = 0; i < o.size(); ++i)
      if (x[i] != 0.0 && rng.uniform() >= p) o[i] = x[i] * keep_scale;
    return push(std::move(n));
  }
  auto mask = std::make_shared<std::vector<double>>(va.size());
  for (std::size_t i = 0; i < o.size(); ++i) {
    const double m = rng.uniform() >= p ? keep_scale : 0.0;
    (*mask)[i] = m;
    o[i] = x[i] * m;
  }
  n.requires_grad = true;
  n.adjoint = [a, mask](Tape& t, const DenseMatrix& g) {
    DenseMatrix da = g;
    auto d = da.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= (*mask)[i];
    t.accumulate(a, std::move(da));
  };
  return push(std::move(n));
}

Var Tape::scale_rows(Var a, std::vector<double> factors) {
  const DenseMatrix& va = value(a);
  if (factors.size() != va.rows()) {
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) + " factors for " +
                     va.shape_string());
  }
  auto f = std::make_shared<const std::vector<double>>(std::move(factors));
  Node n;
  n.owned = DenseMatrix(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    auto in = va.row(r);
    auto out = n.owned.row(r);
    for (std::size_t c = 0; c < in.size(); ++c) out[c] = in[c] * (*f)[r];
  }
  n.requires_grad = requires_grad(a);
  n.adjoint = [a, f](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(a)) return;
    DenseMatrix da = g;
    for (std::size_t r = 0; r < da.rows(); ++r)
      for (double& v : da.row(r)) v *= (*f)[r];
    t.accumulate(a, std::move(da));
  };
  return push(std::move(n));
}

Var Tape::softmax_rows(Var a) {
  const DenseMatrix& va = value(a);
  if (!va.all_finite()) throw std::domain_error("softmax_rows: non-finite input");
  Node n;
  n.owned = DenseMatrix(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    auto in = va.row(r);
    auto out = n.owned.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      z += out[c];
    }
    for (double& v : out) v /= z;
  }
  n.requires_grad = requires_grad(a);
  const std::size_t self = nodes_.size();
  n.adjoint = [a, self](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(a)) return;
    const DenseMatrix& p = t.nodes_[self].value();
    DenseMatrix da(p.rows(), p.cols());
    for (std::size_t r = 0; r < p.rows(); ++r) {
      auto pr = p.row(r);
      auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t c = 0; c < pr.size(); ++c) dot += gr[c] * pr[c];
      auto dr = da.row(r);
      for (std::size_t c = 0; c < pr.size(); ++c) dr[c] = pr[c] * (gr[c] - dot);
    }
    t.accumulate(a, std::move(da));
  };
  return push(std::move(n));
}

Var Tape::masked_cross_entropy(Var probs, const DenseMatrix& one_hot,
                               std::span<const std::size_t> mask) {
  if (mask.empty()) throw std::invalid_argument("masked_cross_entropy: empty mask");
  const DenseMatrix& z = value(probs);
  if (!z.same_shape(one_hot)) {
    throw ShapeError("masked_cross_entropy: " + z.shape_string() + " vs labels " +
                     one_hot.shape_string());
  }
  double loss = 0.0;
  for (std::size_t l : mask) {
    if (l >= z.rows()) throw ShapeError("masked_cross_entropy: mask index out of range");
    for (std::size_t f = 0; f < z.cols(); ++f) {
      const double y = one_hot(l, f);
      if (y != 0.0) loss -= y * std::log(std::max(z(l, f), kLogClamp));
    }
  }
  Node n;
  n.owned = scalar_matrix(loss);
  n.requires_grad = requires_grad(probs);
  std::vector<std::size_t> rows(mask.begin(), mask.end());
  const DenseMatrix* labels = &one_hot;
  n.adjoint = [probs, rows = std::move(rows), labels](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(probs)) return;
    const DenseMatrix& z = t.value(probs);
    const double up = g(0, 0);
    DenseMatrix dz(z.rows(), z.cols());
    for (std::size_t l : rows) {
      for (std::size_t f = 0; f < z.cols(); ++f) {
        const double y = (*labels)(l, f);
        if (y != 0.0 && z(l, f) > kLogClamp) dz(l, f) -= up * y / z(l, f);
      }
    }
    t.accumulate(probs, std::move(dz));
  };
  return push(std::move(n));
}

Var Tape::l2_penalty(std::span<const Var> vars) {
  double total = 0.0;
  for (Var v : vars)
    for (double x : value(v).values()) total += x * x;
  Node n;
  n.owned = scalar_matrix(0.5 * total);
  std::vector<Var> inputs(vars.begin(), vars.end());
  n.requires_grad = std::any_of(inputs.begin(), inputs.end(),
                                [this](Var v) { return requires_grad(v); });
  n.adjoint = [inputs = std::move(inputs)](Tape& t, const DenseMatrix& g) {
    for (Var v : inputs)
      if (t.requires_grad(v)) t.accumulate(v, t.value(v), g(0, 0));
  };
  return push(std::move(n));
}

Var Tape::sum(Var a) {
  double total = 0.0;
  for (double x : value(a).values()) total += x;
  Node n;
  n.owned = scalar_matrix(total);
  n.requires_grad = requires_grad(a);
  n.adjoint = [a](Tape& t, const DenseMatrix& g) {
    if (!t.requires_grad(a)) return;
    const DenseMatrix& va = t.value(a);
    t.accumulate(a, DenseMatrix(va.rows(), va.cols(), g(0, 0)));
  };
  return push(std::move(n));
}

void Tape::backward(Var loss) {
  if (consumed_) throw TapeError("backward called twice on the same forward pass");
  const DenseMatrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1");
  consumed_ = true;

  for (Node& n : nodes_)
    if (n.param) n.param->grad.fill(0.0);

  grads_.assign(nodes_.size(), DenseMatrix{});
  grads_[loss.index_] = scalar_matrix(1.0);
  for (std::size_t i = loss.index_ + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || grads_[i].empty()) continue;
    if (n.param) {
      add_inplace(n.param->grad, grads_[i]);
    } else if (n.adjoint) {
      n.adjoint(*this, grads_[i]);
    }
    grads_[i] = DenseMatrix{};
  }
}

std::vector<DenseMatrix> finite_difference_gradient(const std::function<double()>& loss,
                                                    std::span<Parameter* const> params,
                                                    double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_gradient: eps must be > 0");
  std::vector<DenseMatrix> grads;
  grads.reserve(params.size());
  for (Parameter* p : params) {
    DenseMatrix g(p->value.rows(), p->value.cols());
    auto w = p->value.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double saved = w[i];
      w[i] = saved + eps;
      const double up = loss();
      w[i] = saved - eps;
      const double down = loss();
      w[i] = saved;
      g.values()[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

}  // namespace gcn
