#include <Eigen/Eigenvalues>

#include "clreg/error.hpp"
#include "clreg/simulator.hpp"

namespace clreg {

PcaModel pca_fit(const Eigen::Ref<const Eigen::MatrixXd>& points, int k) {
  if (points.rows() < 2) throw ValidationError("pca needs at least 2 points");
  if (k < 1 || k > points.cols()) {
    throw ValidationError("pca: k must lie in 1..d");
  }
  if (!points.allFinite()) throw ValidationError("pca: non-finite coordinates");

  PcaModel m;
  m.mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - m.mean;
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(points.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) {
    throw NumericError("pca", "covariance eigendecomposition failed");
  }
  // Eigenvalues come back ascending.
  const Eigen::Index d = points.cols();
  const double top = std::max(eig.eigenvalues()[d - 1], 0.0);
  const double tol = 1e-12 * std::max(top, 1.0);
  m.components = Eigen::MatrixXd::Zero(d, k);
  m.variances = Eigen::VectorXd::Zero(k);
  for (int c = 0; c < k; ++c) {
    const Eigen::Index src = d - 1 - c;
    const double lambda = eig.eigenvalues()[src];
    if (!(lambda > tol)) {
      m.rank_deficient = true;
      continue;
    }
    Eigen::VectorXd v = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    m.components.col(c) = v;
    m.variances[c] = lambda;
  }
  return m;
}

Eigen::MatrixXd PcaModel::project(const Eigen::Ref<const Eigen::MatrixXd>& points) const {
  if (points.cols() != mean.size()) throw ValidationError("pca: dimension mismatch");
  return (points.rowwise() - mean) * components;
}

Eigen::MatrixXd pca_project(const Eigen::Ref<const Eigen::MatrixXd>& points, int k) {
  return pca_fit(points, k).project(points);
}

}  // namespace clreg
