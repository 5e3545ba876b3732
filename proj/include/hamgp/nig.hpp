#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

#include "hamgp/basis.hpp"
#include "hamgp/errors.hpp"
#include "hamgp/gaussian.hpp"
#include "hamgp/hamiltonian.hpp"
#include "hamgp/rng.hpp"
#include "hamgp/trajectory.hpp"

namespace hamgp {

// Normal-inverse-gamma parameters: a | sigma^2 ~ N(mean, sigma^2 scale),
// sigma^2 ~ IG with shape nu/2 and rate psi/2.
//
// posterior_update returns nu in an accumulator convention that folds in the
// constant 2 + M (see below); density_form strips that offset so that
// sample_nig, log_normalizer and nig_log_density all read nu as the
// inverse-gamma degrees of freedom.
struct NigParams {
  Eigen::VectorXd mean;   // m
  Eigen::MatrixXd scale;  // V, symmetric positive definite
  double psi = 1.0;
  double nu = 1.0;

  Eigen::Index size() const { return mean.size(); }
};

// Exponential-family statistics of one latent trajectory.
struct SuffStats {
  Eigen::VectorXd s1;  // sum_t J_phi(x_t)^T h_t
  double s2 = 0.0;     // sum_t h_t . h_t
  Eigen::MatrixXd r1;  // sum_t J_phi(x_t)^T J_phi(x_t)
  double r2 = 0.0;     // (T+1) * n_x

  static SuffStats zero(Eigen::Index m) {
    return {Eigen::VectorXd::Zero(m), 0.0, Eigen::MatrixXd::Zero(m, m), 0.0};
  }
};

inline SuffStats accumulate_stats(const LatentTrajectory& trajectory,
                                  const BasisExpansion& basis) {
  if (!trajectory.same_shape())
    throw ArgumentError("trajectory states/gradients shape mismatch");
  if (trajectory.state_dim() != basis.dim())
    throw ArgumentError("trajectory dimension does not match expansion");
  SuffStats stats = SuffStats::zero(basis.size());
  for (Eigen::Index t = 0; t < trajectory.states.rows(); ++t) {
    const Eigen::MatrixXd jac =
        eval_basis_jacobian(basis, trajectory.states.row(t).transpose());
    const Eigen::VectorXd h = trajectory.gradients.row(t).transpose();
    stats.s1.noalias() += jac.transpose() * h;
    stats.s2 += h.squaredNorm();
    stats.r1.noalias() += jac.transpose() * jac;
  }
  stats.r2 = static_cast<double>(trajectory.states.size());
  return stats;
}

namespace detail {

inline std::string condition_hint(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return "eigenvalue range [" + std::to_string(es.eigenvalues().minCoeff()) +
         ", " + std::to_string(es.eigenvalues().maxCoeff()) + "]";
}

inline Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& m,
                                                   const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) +
                         " is not positive definite; " + condition_hint(m));
  return llt;
}

}  // namespace detail

// Conjugate update. The returned nu is the accumulated count
// nu + 2 + M + r2: the prior enters through its own statistics
// (V^-1 m, psi + m^T V^-1 m, V^-1, nu + 2 + M) and the data statistics add
// on top. Use density_form before treating the result as a distribution.
inline NigParams posterior_update(const NigParams& prior,
                                  const SuffStats& stats) {
  const Eigen::Index m_size = prior.size();
  if (stats.s1.size() != m_size || stats.r1.rows() != m_size ||
      stats.r1.cols() != m_size)
    throw ArgumentError("sufficient statistics size mismatch");

  auto v_llt = detail::factor_or_throw(prior.scale, "prior scale matrix");
  const Eigen::MatrixXd v_inv =
      v_llt.solve(Eigen::MatrixXd::Identity(m_size, m_size));

  const Eigen::VectorXd s1 = v_inv * prior.mean + stats.s1;
  const double s2 = prior.psi + prior.mean.dot(v_inv * prior.mean) + stats.s2;
  const Eigen::MatrixXd r1 = v_inv + stats.r1;
  const double r2 = prior.nu + 2.0 + static_cast<double>(m_size) + stats.r2;

  auto r1_llt = detail::factor_or_throw(r1, "posterior precision");
  NigParams post;
  post.mean = r1_llt.solve(s1);
  Eigen::MatrixXd v_post =
      r1_llt.solve(Eigen::MatrixXd::Identity(m_size, m_size));
  post.scale = 0.5 * (v_post + v_post.transpose());
  post.psi = s2 - s1.dot(post.mean);
  post.nu = r2;
  if (!(post.psi > 0.0))
    throw NumericalError("posterior scale psi is not positive (" +
                         std::to_string(post.psi) + ")");
  return post;
}

// Strips the 2 + M bookkeeping offset from a posterior_update result; the nu
// field is again the inverse-gamma degrees of freedom.
inline NigParams density_form(const NigParams& accumulated) {
  NigParams out = accumulated;
  out.nu -= 2.0 + static_cast<double>(accumulated.size());
  return out;
}

// sigma^2 ~ IG(nu/2, psi/2), a ~ N(mean, sigma^2 scale).
inline GPParams sample_nig(const NigParams& params, Rng& rng) {
  if (!(params.psi > 0.0) || !(params.nu > 0.0))
    throw ArgumentError("sample_nig needs psi > 0 and nu > 0");
  const double precision = rng.gamma(params.nu / 2.0, 2.0 / params.psi);
  const double sigma2 = 1.0 / precision;
  auto llt = detail::factor_or_throw(params.scale, "weight scale matrix");
  GPParams draw;
  draw.noise_variance = sigma2;
  const Eigen::VectorXd colored = llt.matrixL() *
                                  rng.normal_vector(params.size());
  draw.weights = params.mean + std::sqrt(sigma2) * colored;
  return draw;
}

// log n(eta) with n(eta) = (psi/2)^(nu/2) / ((2 pi)^(M/2) |V|^(1/2)
// Gamma(nu/2)); the density is n(eta) times the exponential-family kernel.
inline double log_normalizer(const NigParams& params) {
  if (!(params.psi > 0.0) || !(params.nu > 0.0))
    throw ArgumentError("log_normalizer needs psi > 0 and nu > 0");
  double log_det_v = 0.0;
  if (params.size() > 0) {
    auto llt = detail::factor_or_throw(params.scale, "weight scale matrix");
    log_det_v = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  }
  const double half_nu = params.nu / 2.0;
  return half_nu * std::log(params.psi / 2.0) -
         0.5 * static_cast<double>(params.size()) * kLogTwoPi -
         0.5 * log_det_v - std::lgamma(half_nu);
}

// Joint log density log N(a | m, sigma^2 V) + log IG(sigma^2 | psi, nu).
inline double nig_log_density(const NigParams& params,
                              const Eigen::VectorXd& a, double sigma2) {
  if (a.size() != params.size())
    throw ArgumentError("nig_log_density: weight dimension mismatch");
  if (!(sigma2 > 0.0)) throw ArgumentError("nig_log_density: sigma2 <= 0");
  auto llt = detail::factor_or_throw(params.scale, "weight scale matrix");
  const double log_det_v =
      2.0 * llt.matrixLLT().diagonal().array().log().sum();
  Eigen::VectorXd r = a - params.mean;
  llt.matrixL().solveInPlace(r);
  const double quad = r.squaredNorm();
  const double m_count = static_cast<double>(params.size());
  const double half_nu = params.nu / 2.0;
  const double log_normal = -0.5 * (m_count * (kLogTwoPi + std::log(sigma2)) +
                                    log_det_v + quad / sigma2);
  const double log_ig = half_nu * std::log(params.psi / 2.0) -
                        std::lgamma(half_nu) -
                        (half_nu + 1.0) * std::log(sigma2) -
                        params.psi / (2.0 * sigma2);
  return log_normal + log_ig;
}

// Evidence of the gradient observations under the conjugate model:
// log of integral prior x likelihood over (a, sigma^2). data_count is the
// total number of scalar gradient observations, (T+1) * n_x.
inline double log_gradient_evidence(const NigParams& prior,
                                    const SuffStats& stats) {
  const NigParams post = density_form(posterior_update(prior, stats));
  return log_normalizer(prior) - log_normalizer(post) -
         0.5 * stats.r2 * kLogTwoPi;
}

}  // namespace hamgp
