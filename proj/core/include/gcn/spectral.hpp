#pragma once

#include <functional>
#include <vector>

#include "gcn/dense_matrix.hpp"

namespace gcn {

/// Eigenvalues (ascending) of a small dense symmetric matrix.
std::vector<double> symmetric_eigenvalues(const DenseMatrix& m);

/// Applies g(L) x = U g(Lambda) U^T x by full eigendecomposition of a
/// symmetric dense Laplacian. Intended as a reference for polynomial filters,
/// so it refuses anything larger than 256 nodes.
std::vector<double> exact_spectral_filter(const DenseMatrix& laplacian,
                                          const std::function<double(double)>& response,
                                          const std::vector<double>& signal);

}  // namespace gcn
