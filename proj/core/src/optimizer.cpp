#include "gcn/optimizer.hpp"

#include <cmath>

namespace gcn {

void adam_step(std::span<Parameter* const> params, AdamState& state, double lr) {
  if (state.m.empty()) {
    for (const Parameter* p : params) {
      state.m.emplace_back(p->value.rows(), p->value.cols());
      state.v.emplace_back(p->value.rows(), p->value.cols());
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: parameter list changed between steps");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!state.m[k].same_shape(p.value) || !p.grad.same_shape(p.value)) {
      throw ShapeError("adam_step: shape mismatch for parameter " + p.name);
    }
    auto w = p.value.values();
    auto g = p.grad.values();
    auto m = state.m[k].values();
    auto v = state.v[k].values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace gcn
