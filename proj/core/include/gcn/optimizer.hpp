#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gcn/autodiff.hpp"

namespace gcn {

/// Moment estimates for Adam; one m/v pair per parameter, created lazily on
/// the first step.
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t t = 0;
  std::vector<DenseMatrix> m;
  std::vector<DenseMatrix> v;
};

/// One bias-corrected Adam update using the gradients currently stored in
/// each parameter. The caller is responsible for refreshing them first.
void adam_step(std::span<Parameter* const> params, AdamState& state, double lr);

}  // namespace gcn
