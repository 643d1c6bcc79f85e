#include "gcn/spectral.hpp"

#include <Eigen/Dense>

namespace gcn {

namespace {

constexpr std::size_t kMaxOracleNodes = 256;

Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
  Eigen::MatrixXd e(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      e(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m(r, c);
  return e;
}

void require_symmetric(const DenseMatrix& m, const char* who) {
  if (m.rows() != m.cols()) throw ShapeError(std::string(who) + ": matrix is not square");
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      if (m(i, j) != m(j, i)) throw std::invalid_argument(std::string(who) + ": asymmetric input");
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const DenseMatrix& m) {
  require_symmetric(m, "symmetric_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(m), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = solver.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<double> exact_spectral_filter(const DenseMatrix& laplacian,
                                          const std::function<double(double)>& response,
                                          const std::vector<double>& signal) {
  require_symmetric(laplacian, "exact_spectral_filter");
  if (laplacian.rows() > kMaxOracleNodes) {
    throw std::invalid_argument("exact_spectral_filter: more than 256 nodes");
  }
  if (signal.size() != laplacian.rows()) {
    throw ShapeError("exact_spectral_filter: signal length does not match operator");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(to_eigen(laplacian));
  const Eigen::MatrixXd& u = solver.eigenvectors();
  const Eigen::Map<const Eigen::VectorXd> x(signal.data(),
                                            static_cast<Eigen::Index>(signal.size()));
  Eigen::VectorXd spectral = u.transpose() * x;
  for (Eigen::Index k = 0; k < spectral.size(); ++k)
    spectral(k) *= response(solver.eigenvalues()(k));
  const Eigen::VectorXd y = u * spectral;
  return {y.data(), y.data() + y.size()};
}

}  // namespace gcn
