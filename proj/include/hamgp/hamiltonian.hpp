#pragma once

#include <Eigen/Core>
#include <vector>

#include "hamgp/basis.hpp"
#include "hamgp/errors.hpp"
#include "hamgp/structure.hpp"

namespace hamgp {

// Basis weights and gradient-observation noise of one posterior draw.
template <class Scalar>
struct GPParamsT {
  Eigen::Vector<Scalar, Eigen::Dynamic> weights;  // a
  Scalar noise_variance = 1;                      // sigma^2
};
using GPParams = GPParamsT<double>;

// Process/measurement noise and the output map (a selection of state
// components).
struct NoiseSpec {
  Eigen::MatrixXd process_cov;           // Sigma_w, n_x x n_x
  Eigen::MatrixXd measurement_cov;       // Sigma_e, n_y x n_y
  std::vector<Eigen::Index> observed;    // y = x(observed) + e

  Eigen::VectorXd select(const Eigen::VectorXd& x) const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(observed.size()));
    for (std::size_t i = 0; i < observed.size(); ++i)
      y[static_cast<Eigen::Index>(i)] = x[observed[i]];
    return y;
  }
};

// H_hat(x) = a . phi(x)
template <class Scalar, class Derived>
Scalar predict_hamiltonian(const BasisExpansionT<Scalar>& basis,
                           const GPParamsT<Scalar>& params,
                           const Eigen::MatrixBase<Derived>& x) {
  if (params.weights.size() != basis.size())
    throw ArgumentError("predict_hamiltonian: weight count mismatch");
  return params.weights.dot(eval_basis(basis, x));
}

// grad H_hat(x) = J_phi(x) a
template <class Scalar, class Derived>
Eigen::Vector<Scalar, Eigen::Dynamic> predict_gradient(
    const BasisExpansionT<Scalar>& basis, const GPParamsT<Scalar>& params,
    const Eigen::MatrixBase<Derived>& x) {
  if (params.weights.size() != basis.size())
    throw ArgumentError("predict_gradient: weight count mismatch");
  return eval_basis_jacobian(basis, x) * params.weights;
}

// Continuous-time drift (J - R) grad H_hat(x) + G u.
inline Eigen::VectorXd drift(const BasisExpansion& basis,
                             const GPParams& params, const SystemMatrices& m,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) {
  if (u.size() != m.G.cols()) throw ArgumentError("drift: input dimension");
  return m.drift_gain * predict_gradient(basis, params, x) + m.G * u;
}

inline Eigen::VectorXd drift(const BasisExpansion& basis,
                             const GPParams& params,
                             const SystemStructure& structure,
                             const Eigen::VectorXd& x,
                             const Eigen::VectorXd& u) {
  return drift(basis, params, instantiate(structure), x, u);
}

inline Eigen::VectorXd euler_step(const BasisExpansion& basis,
                                  const GPParams& params,
                                  const SystemMatrices& m,
                                  const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& u, double dt) {
  return x + dt * drift(basis, params, m, x, u);
}

// Semi-implicit (momentum-first) Euler step on canonical coordinates
// x = (q, p): the momenta advance with gradients at (q, p), the coordinates
// with gradients at (q, p+). Explicit in both stages. With damping or input
// the scheme is not strictly symplectic.
template <class GradFn>
Eigen::VectorXd symplectic_euler_step(const GradFn& hamiltonian_gradient,
                                      const SystemMatrices& m,
                                      const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& u, double dt) {
  const Eigen::Index n = x.size();
  if (n % 2 != 0)
    throw ConfigError(
        "symplectic step needs an even state dimension (q, p partition)");
  if (u.size() != m.G.cols())
    throw ArgumentError("symplectic_euler_step: input dimension");
  const Eigen::Index half = n / 2;

  const Eigen::VectorXd forcing = m.G * u;
  Eigen::VectorXd mid = x;
  mid.tail(half) +=
      dt * (m.drift_gain * hamiltonian_gradient(x) + forcing).tail(half);
  Eigen::VectorXd out = mid;
  out.head(half) +=
      dt * (m.drift_gain * hamiltonian_gradient(mid) + forcing).head(half);
  return out;
}

// Energy rate grad^T (J - R) grad along the unforced flow, evaluated through
// the symmetric part of (J - R). When J is stored skew-symmetrically the
// skew entries cancel exactly in floating point, so for diagonal PSD R the
// result is a negated sum of squares: <= 0 without rounding slack.
inline double unforced_energy_rate(const SystemMatrices& m,
                                   const Eigen::VectorXd& grad) {
  const Eigen::MatrixXd sym =
      0.5 * (m.drift_gain + m.drift_gain.transpose());
  return grad.dot(sym * grad);
}

}  // namespace hamgp
