#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <vector>

#include "hamgp/errors.hpp"
#include "hamgp/gaussian.hpp"
#include "hamgp/hamiltonian.hpp"
#include "hamgp/rng.hpp"
#include "hamgp/trajectory.hpp"

namespace hamgp {

// Systematic resampling: n_out positions (i + u)/n_out walked through the
// cumulative weights. Deterministic given u; expected count of index i is
// n_out * weights[i].
inline Eigen::VectorXi systematic_resample(const Eigen::VectorXd& weights,
                                           double u, Eigen::Index n_out) {
  if (weights.size() == 0 || n_out < 1)
    throw ArgumentError("systematic_resample: empty input");
  if (!(u >= 0.0 && u < 1.0))
    throw ArgumentError("systematic_resample: u must lie in [0, 1)");
  if (weights.minCoeff() < 0.0)
    throw ArgumentError("systematic_resample: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-9)
    throw ArgumentError("systematic_resample: weights must sum to one");

  Eigen::VectorXi out(n_out);
  double cumulative = weights[0];
  Eigen::Index j = 0;
  for (Eigen::Index i = 0; i < n_out; ++i) {
    const double position = (static_cast<double>(i) + u) /
                            static_cast<double>(n_out);
    while (cumulative <= position && j + 1 < weights.size())
      cumulative += weights[++j];
    out[i] = static_cast<int>(j);
  }
  return out;
}

// Particle histories of one conditional sweep. The reference trajectory
// occupies the last slot at every step.
struct ParticleSystem {
  std::vector<Eigen::MatrixXd> states;     // per step: N x n_x
  std::vector<Eigen::MatrixXd> gradients;  // per step: N x n_x
  Eigen::MatrixXi ancestors;               // (T+1) x N, row 0 unused
  Eigen::MatrixXd log_weights;             // (T+1) x N, unnormalized
  Eigen::Index n_particles = 0;

  Eigen::Index reference_slot() const { return n_particles - 1; }
};

struct SweepDiagnostics {
  int out_of_domain = 0;   // proposed states outside the expansion box
  double min_ess = 0.0;    // smallest effective sample size over steps
};

struct SweepResult {
  LatentTrajectory trajectory;
  ParticleSystem particles;
  SweepDiagnostics diagnostics;
};

struct CsmcSettings {
  Eigen::Index n_particles = 30;
  bool ancestor_sampling = true;
};

namespace detail {

// log N(v | mean, sigma2 I)
inline double log_isotropic_gaussian(const Eigen::VectorXd& v,
                                     const Eigen::VectorXd& mean,
                                     double sigma2) {
  const double n = static_cast<double>(v.size());
  return -0.5 * (n * (kLogTwoPi + std::log(sigma2)) +
                 (v - mean).squaredNorm() / sigma2);
}

// Normalizes log weights in place to probabilities; returns false when every
// weight vanished.
inline bool normalize_log_weights(const Eigen::VectorXd& logw,
                                  Eigen::VectorXd& probs) {
  const double top = logw.maxCoeff();
  if (!std::isfinite(top)) return false;
  probs = (logw.array() - top).exp();
  const double total = probs.sum();
  if (!(total > 0.0) || !std::isfinite(total)) return false;
  probs /= total;
  return true;
}

inline Eigen::Index categorical_from_probs(const Eigen::VectorXd& probs,
                                           double u) {
  double cumulative = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    cumulative += probs[i];
    if (u < cumulative) return i;
  }
  return probs.size() - 1;
}

// Ancestors for the free slots of a clamped sweep, by systematic resampling
// made conditional on the clamped slot drawing the reference (last index).
// The offspring counts O depend on the single uniform only through which of
// two grid offsets it falls in; conditioning tilts those pieces by O_ref
// (size bias), one surviving reference copy is reserved for the clamped
// slot, and the remaining offspring are dealt to the free slots in random
// order. Clamping a plain systematic draw instead leaves the repeated-sweep
// chain with a measurable stationary bias; the tilt and the shuffle restore
// exactness while keeping the low-variance counts.
inline Eigen::VectorXi conditional_systematic_ancestors(
    const Eigen::VectorXd& probs, Rng& rng) {
  const Eigen::Index n = probs.size();
  const double ref_mass = static_cast<double>(n) * probs[n - 1];
  const double coin = rng.uniform();
  const double pos = rng.uniform();
  Eigen::VectorXi free(n - 1);
  if (ref_mass > 0.0) {
    // O_ref is floor(ref_mass) for u in [0, 1-f) and floor(ref_mass)+1 for
    // u in [1-f, 1); given the clamped slot holds a reference copy, the
    // upper piece carries probability f*(floor+1)/ref_mass
    const double whole = std::floor(ref_mass);
    const double f = ref_mass - whole;
    const double p_upper = f * (whole + 1.0) / ref_mass;
    const double u = coin < p_upper ? (1.0 - f) + f * pos : (1.0 - f) * pos;
    const Eigen::VectorXi picked = systematic_resample(
        probs, std::min(u, std::nextafter(1.0, 0.0)), n);
    free = picked.head(n - 1);  // picked[n-1] is the reserved reference copy
  } else {
    free = systematic_resample(probs, pos, n - 1);
  }
  for (Eigen::Index i = n - 2; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(
        rng.uniform_index(static_cast<std::uint64_t>(i + 1)));
    std::swap(free[i], free[j]);
  }
  return free;
}

}  // namespace detail

// One conditional SMC sweep with optional ancestor sampling. The model
// supplies the transition mean f(x, h, u), the gradient-observation mean and
// its isotropic noise, and a domain check; the bootstrap proposal draws
// states from the transition density and gradients from the model, and
// weights carry the measurement likelihood only. The reference trajectory is
// kept in the last slot and never resampled away.
//
// Resampling of the free slots depends on the ancestor-sampling flag. With
// ancestor sampling on, the reference ancestor is redrawn from its exact
// conditional, which is proportional to weight times transition density only
// when the free ancestors are drawn independently, so the free slots use iid
// categorical draws. With ancestor sampling off, the free slots use
// systematic resampling conditioned on the clamped slot (low-variance counts,
// one shared uniform). Both choices keep the smoother posterior as the exact
// stationary law of repeated sweeps, which a clamped plain systematic draw
// does not.
template <class Model>
SweepResult csmc_sweep(const Model& model, const Eigen::MatrixXd& outputs,
                       const Eigen::MatrixXd& inputs, const NoiseSpec& noise,
                       const GaussianSpec& initial_state,
                       const LatentTrajectory& reference,
                       const CsmcSettings& settings, Rng& rng) {
  const Eigen::Index n_steps = outputs.rows();  // T + 1
  const Eigen::Index n_x = model.state_dim();
  const Eigen::Index n = settings.n_particles;
  if (n < 2) throw ConfigError("conditional sweep needs at least 2 particles");
  if (reference.states.rows() != n_steps ||
      reference.states.cols() != n_x || !reference.same_shape())
    throw ArgumentError("reference trajectory shape mismatch");
  if (inputs.rows() != n_steps)
    throw ArgumentError("input sequence must cover every output step");
  if (initial_state.mean.size() != n_x)
    throw ArgumentError("initial state prior dimension mismatch");

  const MvnDensity measurement(noise.measurement_cov);
  const MvnDensity process(noise.process_cov);
  const MvnDensity initial(initial_state.cov);
  const double sigma2 = model.gradient_noise();
  const double sigma = std::sqrt(sigma2);
  const Eigen::Index ref = n - 1;

  ParticleSystem ps;
  ps.n_particles = n;
  ps.states.assign(static_cast<std::size_t>(n_steps),
                   Eigen::MatrixXd(n, n_x));
  ps.gradients.assign(static_cast<std::size_t>(n_steps),
                      Eigen::MatrixXd(n, n_x));
  ps.ancestors.setZero(n_steps, n);
  ps.log_weights.setZero(n_steps, n);

  SweepDiagnostics diag;
  diag.min_ess = static_cast<double>(n);

  Eigen::VectorXd probs(n);
  Eigen::VectorXd logw(n);

  for (Eigen::Index t = 0; t < n_steps; ++t) {
    Eigen::MatrixXd& x_t = ps.states[static_cast<std::size_t>(t)];
    Eigen::MatrixXd& h_t = ps.gradients[static_cast<std::size_t>(t)];

    if (t == 0) {
      for (Eigen::Index i = 0; i < ref; ++i)
        x_t.row(i) = initial.sample(initial_state.mean, rng).transpose();
    } else {
      const Eigen::MatrixXd& x_prev =
          ps.states[static_cast<std::size_t>(t - 1)];
      const Eigen::MatrixXd& h_prev =
          ps.gradients[static_cast<std::size_t>(t - 1)];
      const Eigen::VectorXd u_prev = inputs.row(t - 1).transpose();

      // ancestors of the free particles
      if (settings.ancestor_sampling) {
        for (Eigen::Index i = 0; i < ref; ++i)
          ps.ancestors(t, i) = static_cast<int>(
              detail::categorical_from_probs(probs, rng.uniform()));
      } else {
        const Eigen::VectorXi picked =
            detail::conditional_systematic_ancestors(probs, rng);
        for (Eigen::Index i = 0; i < ref; ++i) ps.ancestors(t, i) = picked[i];
      }

      // reference ancestor: kept, or redrawn by ancestor sampling
      ps.ancestors(t, ref) = static_cast<int>(ref);
      if (settings.ancestor_sampling) {
        const Eigen::VectorXd x_ref_t = reference.states.row(t).transpose();
        const Eigen::VectorXd h_ref_t =
            reference.gradients.row(t).transpose();
        const double h_factor = detail::log_isotropic_gaussian(
            h_ref_t, model.gradient_mean(x_ref_t), sigma2);
        Eigen::VectorXd as_logw(n);
        for (Eigen::Index j = 0; j < n; ++j) {
          const Eigen::VectorXd mean = model.transition_mean(
              x_prev.row(j).transpose(), h_prev.row(j).transpose(), u_prev);
          as_logw[j] = logw[j] +
                       process.log_density(x_ref_t, mean) + h_factor;
        }
        Eigen::VectorXd as_probs(n);
        if (!detail::normalize_log_weights(as_logw, as_probs))
          throw DegenerateSweepError(static_cast<int>(t));
        ps.ancestors(t, ref) = static_cast<int>(
            detail::categorical_from_probs(as_probs, rng.uniform()));
      }

      for (Eigen::Index i = 0; i < ref; ++i) {
        const Eigen::Index a = ps.ancestors(t, i);
        const Eigen::VectorXd mean = model.transition_mean(
            x_prev.row(a).transpose(), h_prev.row(a).transpose(), u_prev);
        x_t.row(i) = process.sample(mean, rng).transpose();
      }
    }

    x_t.row(ref) = reference.states.row(t);
    for (Eigen::Index i = 0; i < ref; ++i) {
      const Eigen::VectorXd x_i = x_t.row(i).transpose();
      if (!model.in_domain(x_i)) ++diag.out_of_domain;
      h_t.row(i) =
          (model.gradient_mean(x_i) + sigma * rng.normal_vector(n_x))
              .transpose();
    }
    h_t.row(ref) = reference.gradients.row(t);

    const Eigen::VectorXd y_t = outputs.row(t).transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      logw[i] = measurement.log_density(
          y_t, noise.select(x_t.row(i).transpose()));
    ps.log_weights.row(t) = logw.transpose();
    if (!detail::normalize_log_weights(logw, probs))
      throw DegenerateSweepError(static_cast<int>(t));
    diag.min_ess = std::min(diag.min_ess, 1.0 / probs.squaredNorm());
  }

  // draw the output path from the final weights and walk the ancestry back
  SweepResult result;
  result.particles = std::move(ps);
  result.diagnostics = diag;
  result.trajectory.states.resize(n_steps, n_x);
  result.trajectory.gradients.resize(n_steps, n_x);
  Eigen::Index idx = detail::categorical_from_probs(probs, rng.uniform());
  for (Eigen::Index t = n_steps - 1; t >= 0; --t) {
    result.trajectory.states.row(t) =
        result.particles.states[static_cast<std::size_t>(t)].row(idx);
    result.trajectory.gradients.row(t) =
        result.particles.gradients[static_cast<std::size_t>(t)].row(idx);
    if (t > 0) idx = result.particles.ancestors(t, idx);
  }
  return result;
}

// Discrete-time latent model of the learned system: Euler transitions driven
// by the sampled gradient observations.
struct HamiltonianTransitionModel {
  const BasisExpansion* basis = nullptr;
  GPParams params;
  SystemMatrices matrices;
  double dt = 0.0;

  Eigen::Index state_dim() const { return basis->dim(); }

  Eigen::VectorXd transition_mean(const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& h,
                                  const Eigen::VectorXd& u) const {
    return x + dt * (matrices.drift_gain * h + matrices.G * u);
  }

  Eigen::VectorXd gradient_mean(const Eigen::VectorXd& x) const {
    return predict_gradient(*basis, params, x);
  }

  double gradient_noise() const { return params.noise_variance; }

  bool in_domain(const Eigen::VectorXd& x) const {
    return (x.cwiseAbs().array() <=
            basis->domain.half_widths.array()).all();
  }
};

}  // namespace hamgp
