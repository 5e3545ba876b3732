#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "hamgp/errors.hpp"
#include "hamgp/rng.hpp"

namespace hamgp {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

// Multivariate normal with a fixed covariance, factored once. The particle
// sweep and the Metropolis steps evaluate many densities against the same
// covariance, so the Cholesky factor is cached here.
class MvnDensity {
 public:
  explicit MvnDensity(const Eigen::MatrixXd& cov) : llt_(cov) {
    if (llt_.info() != Eigen::Success) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov,
                                                        Eigen::EigenvaluesOnly);
      throw NumericalError(
          "covariance is not positive definite; eigenvalue range [" +
          std::to_string(es.eigenvalues().minCoeff()) + ", " +
          std::to_string(es.eigenvalues().maxCoeff()) + "]");
    }
    // matrixLLT() stores the lower factor L in its lower triangle.
    log_det_ = 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
  }

  Eigen::Index dim() const { return llt_.matrixLLT().rows(); }

  double log_density(const Eigen::VectorXd& x,
                     const Eigen::VectorXd& mean) const {
    if (x.size() != dim() || mean.size() != dim())
      throw ArgumentError("gaussian density: dimension mismatch");
    Eigen::VectorXd r = x - mean;
    llt_.matrixL().solveInPlace(r);
    return -0.5 * (static_cast<double>(dim()) * kLogTwoPi + log_det_ +
                   r.squaredNorm());
  }

  Eigen::VectorXd sample(const Eigen::VectorXd& mean, Rng& rng) const {
    return mean + llt_.matrixL() * rng.normal_vector(dim());
  }

  double log_det() const { return log_det_; }

 private:
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_det_ = 0.0;
};

// One-shot density evaluation. Throws NumericalError when cov is not
// positive definite.
inline double log_gaussian(const Eigen::VectorXd& x,
                           const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov) {
  return MvnDensity(cov).log_density(x, mean);
}

// Mean and covariance of a Gaussian, used for the initial-state prior.
struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

}  // namespace hamgp
