#include "hamgp/mcmc.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>

namespace hamgp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_scalar_normal(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * (kLogTwoPi + z * z) - std::log(sd);
}

}  // namespace

NigParams make_kernel_prior(const BasisExpansion& expansion,
                            const KernelHyperparams& hypers, double psi,
                            double nu) {
  if (!(psi > 0.0) || !(nu > 0.0))
    throw ConfigError("weight prior needs psi > 0 and nu > 0");
  if (!(hypers.signal_variance > 0.0) || !(hypers.length_scale > 0.0))
    throw ConfigError("kernel hyperparameters must be positive");
  NigParams prior;
  prior.mean = Eigen::VectorXd::Zero(expansion.size());
  prior.scale = prior_weight_covariance(expansion, hypers);
  prior.psi = psi;
  prior.nu = nu;
  return prior;
}

MhResult mh_step_kernel_hypers(const Eigen::VectorXd& coords,
                               const SuffStats& stats,
                               const KernelPriorFactory& factory,
                               const HyperPrior& prior,
                               const Eigen::VectorXd& proposal_scales,
                               Rng& rng) {
  prior.check(coords);
  if (proposal_scales.size() != coords.size())
    throw ArgumentError("kernel proposal scale count mismatch");

  const auto target_at = [&](const Eigen::VectorXd& c) {
    const NigParams eta = factory(prior.to_natural(c));
    return log_gradient_evidence(eta, stats) + prior.log_density(c);
  };

  const double current = target_at(coords);

  Eigen::VectorXd proposed(coords.size());
  for (Eigen::Index i = 0; i < coords.size(); ++i)
    proposed[i] = coords[i] + proposal_scales[i] * rng.normal();

  MhResult out;
  double prop_value = kNegInf;
  bool valid = true;
  try {
    prop_value = target_at(proposed);
    valid = std::isfinite(prop_value);
  } catch (const ConfigError&) {
    valid = false;
  } catch (const NumericalError&) {
    valid = false;
  } catch (const ArgumentError&) {
    valid = false;
  }
  if (!valid) {
    out.coords = coords;
    out.proposal_valid = false;
    out.log_ratio = kNegInf;
    return out;
  }

  out.log_ratio = prop_value - current;
  out.accepted = std::log(rng.uniform()) < out.log_ratio;
  out.coords = out.accepted ? proposed : coords;
  return out;
}

double transition_log_likelihood(const LatentTrajectory& trajectory,
                                 const Eigen::MatrixXd& inputs,
                                 const SystemMatrices& matrices,
                                 const MvnDensity& process, double dt) {
  if (!trajectory.same_shape())
    throw ArgumentError("trajectory states/gradients shape mismatch");
  if (inputs.rows() != trajectory.states.rows())
    throw ArgumentError("input sequence must cover every trajectory step");
  double acc = 0.0;
  for (Eigen::Index t = 1; t < trajectory.states.rows(); ++t) {
    const Eigen::VectorXd mean =
        trajectory.states.row(t - 1).transpose() +
        dt * (matrices.drift_gain *
                  trajectory.gradients.row(t - 1).transpose() +
              matrices.G * inputs.row(t - 1).transpose());
    acc += process.log_density(trajectory.states.row(t).transpose(), mean);
  }
  return acc;
}

MhResult mh_step_structural_hypers(const Eigen::VectorXd& coords,
                                   const LatentTrajectory& trajectory,
                                   const Eigen::MatrixXd& inputs,
                                   const SystemStructure& structure,
                                   const NoiseSpec& noise, double dt,
                                   const HyperPrior& prior,
                                   const StructuralProposal& proposal,
                                   Rng& rng) {
  prior.check(coords);
  const std::set<std::string> slots = structure.slots();
  if (static_cast<Eigen::Index>(slots.size()) != coords.size())
    throw ConfigError("structural hyperparameter count does not match the "
                      "structure's slots");
  if (proposal.scales.size() != coords.size())
    throw ArgumentError("structural proposal scale count mismatch");

  const MvnDensity process(noise.process_cov);

  const auto log_lik_nat =
      [&](const Eigen::VectorXd& natural) -> std::optional<double> {
    std::map<std::string, double> values;
    Eigen::Index i = 0;
    for (const std::string& s : slots) values[s] = natural[i++];
    const std::optional<SystemMatrices> mats =
        try_instantiate(structure, values);
    if (!mats) return std::nullopt;
    return transition_log_likelihood(trajectory, inputs, *mats, process, dt);
  };
  const auto log_lik_at =
      [&](const Eigen::VectorXd& c) -> std::optional<double> {
    return log_lik_nat(prior.to_natural(c));
  };

  const std::optional<double> cur = log_lik_at(coords);
  if (!cur)
    throw ArgumentError(
        "mh_step_structural_hypers: current point violates the structure "
        "constraints");

  const bool scalar_newton = proposal.laplace && coords.size() == 1;
  const bool log_coord = scalar_newton && prior.coords.front().log_scale;

  // A point's proposal law is a deterministic function of the point itself:
  // a Newton-refined gaussian in the natural parameter where the likelihood
  // curvature is negative (the transition product is near-quadratic there,
  // so the refinement acts like an independence sampler around the local
  // mode), the coordinate random walk elsewhere. Evaluating the same rule at
  // the proposed point gives the reverse density. The natural-parameter
  // gaussian picks up the coordinate jacobian in log_q.
  struct Law {
    bool newton = false;
    double mean = 0.0;
    double sd = 1.0;
  };
  const auto law_at = [&](const Eigen::VectorXd& c, double lik_at_c) -> Law {
    const double d = prior.to_natural(c)[0];
    const double eps = 1e-4 * std::max(1.0, std::abs(d));
    Eigen::VectorXd shifted(1);
    shifted[0] = d + eps;
    const std::optional<double> up = log_lik_nat(shifted);
    shifted[0] = d - eps;
    const std::optional<double> down = log_lik_nat(shifted);
    if (up && down) {
      const double grad = (*up - *down) / (2.0 * eps);
      const double hess = (*up - 2.0 * lik_at_c + *down) / (eps * eps);
      if (hess < -1e-12)
        return {true, d - grad / hess, std::sqrt(-1.0 / hess)};
    }
    return {false, c[0], proposal.scales[0]};
  };
  const auto log_q = [&](const Law& law, const Eigen::VectorXd& c_to) {
    if (!law.newton) return log_scalar_normal(c_to[0], law.mean, law.sd);
    return log_scalar_normal(prior.to_natural(c_to)[0], law.mean, law.sd) +
           (log_coord ? c_to[0] : 0.0);
  };

  MhResult out;
  Eigen::VectorXd proposed(coords.size());
  Law fwd;
  if (scalar_newton) {
    fwd = law_at(coords, *cur);
    if (fwd.newton) {
      const double d_star = fwd.mean + fwd.sd * rng.normal();
      if (log_coord && !(d_star > 0.0)) {
        // out of the log coordinate's range; treat like any other invalid
        // proposal
        out.coords = coords;
        out.proposal_valid = false;
        out.log_ratio = kNegInf;
        return out;
      }
      proposed[0] = log_coord ? std::log(d_star) : d_star;
    } else {
      proposed[0] = coords[0] + proposal.scales[0] * rng.normal();
    }
  } else {
    for (Eigen::Index i = 0; i < coords.size(); ++i)
      proposed[i] = coords[i] + proposal.scales[i] * rng.normal();
  }

  const std::optional<double> prop = log_lik_at(proposed);
  if (!prop) {
    out.coords = coords;
    out.proposal_valid = false;
    out.log_ratio = kNegInf;
    return out;
  }

  double hastings = 0.0;  // zero for the symmetric pure random walk
  if (scalar_newton) {
    const Law rev = law_at(proposed, *prop);
    hastings = log_q(rev, coords) - log_q(fwd, proposed);
  }

  out.log_ratio = (*prop + prior.log_density(proposed)) -
                  (*cur + prior.log_density(coords)) + hastings;
  out.accepted = std::log(rng.uniform()) < out.log_ratio;
  out.coords = out.accepted ? proposed : coords;
  return out;
}

namespace {

void validate_problem(const PgProblem& problem, const PgSettings& settings) {
  const Eigen::Index n_x = problem.expansion.dim();
  if (problem.structure.state_dim() != n_x)
    throw ConfigError("structure state dimension does not match expansion");
  if (problem.outputs.rows() < 1) throw ConfigError("no output data");
  if (problem.inputs.rows() != problem.outputs.rows())
    throw ConfigError("input rows must match output rows");
  if (static_cast<Eigen::Index>(problem.noise.observed.size()) !=
      problem.outputs.cols())
    throw ConfigError("output columns must match the observed channels");
  for (Eigen::Index ch : problem.noise.observed)
    if (ch < 0 || ch >= n_x)
      throw ConfigError("observed channel out of range");
  if (problem.initial_state.mean.size() != n_x)
    throw ConfigError("initial state prior dimension mismatch");
  if (problem.kernel_prior.size() != 2)
    throw ConfigError(
        "kernel prior needs exactly the signal variance and length scale "
        "coordinates");
  const std::set<std::string> slots = problem.structure.slots();
  if (static_cast<Eigen::Index>(slots.size()) !=
      problem.structural_prior.size())
    throw ConfigError("structural prior must declare one coordinate per "
                      "structure slot");
  {
    Eigen::Index i = 0;
    for (const std::string& s : slots) {
      if (problem.structural_prior.coords[static_cast<std::size_t>(i)].name !=
          s)
        throw ConfigError("structural prior coordinate '" +
                          problem.structural_prior
                              .coords[static_cast<std::size_t>(i)]
                              .name +
                          "' does not match slot '" + s + "'");
      ++i;
    }
  }
  if (problem.kernel_init.size() != 2 ||
      problem.kernel_scales.size() != 2 ||
      problem.structural_init.size() !=
          static_cast<Eigen::Index>(slots.size()) ||
      problem.structural_scales.size() !=
          static_cast<Eigen::Index>(slots.size()))
    throw ConfigError("hyperparameter initial values and proposal scales "
                      "must match the declared coordinates");
  if (settings.n_iterations < 1)
    throw ConfigError("need at least one iteration");
  if (settings.burn_in < 0 ||
      settings.burn_in >= settings.n_iterations + 1)
    throw ConfigError("burn-in must lie within the iteration count");
  if (!(settings.dt > 0.0)) throw ConfigError("step size must be positive");
  if (settings.n_particles < 2)
    throw ConfigError("need at least two particles");
  if (settings.degenerate_retry_budget < 0)
    throw ConfigError("retry budget must be non-negative");
  if (settings.adapt_interval < 1)
    throw ConfigError("adaptation interval must be positive");
}

}  // namespace

PgDiagnostics run_particle_gibbs(
    const PgProblem& problem, const PgSettings& settings, Rng& rng,
    const std::function<void(const ChainSample&)>& emit,
    const PgProbe* probe) {
  validate_problem(problem, settings);

  const Eigen::Index n_x = problem.expansion.dim();
  const Eigen::Index n_steps = problem.outputs.rows();
  const std::set<std::string> slots = problem.structure.slots();

  const KernelPriorFactory factory = [&](const Eigen::VectorXd& natural) {
    if (natural.size() != 2)
      throw ConfigError("kernel hyperparameters must be (signal variance, "
                        "length scale)");
    return make_kernel_prior(problem.expansion,
                             KernelHyperparams{natural[0], natural[1]},
                             settings.psi, settings.nu);
  };
  const auto matrices_for =
      [&](const Eigen::VectorXd& coords) -> SystemMatrices {
    const Eigen::VectorXd natural =
        problem.structural_prior.to_natural(coords);
    std::map<std::string, double> values;
    Eigen::Index i = 0;
    for (const std::string& s : slots) values[s] = natural[i++];
    return instantiate(problem.structure, values);
  };

  Eigen::VectorXd kernel_coords =
      problem.kernel_prior.to_coords(problem.kernel_init);
  Eigen::VectorXd structural_coords =
      problem.structural_prior.to_coords(problem.structural_init);
  Eigen::VectorXd kernel_scales = problem.kernel_scales;
  Eigen::VectorXd structural_scales = problem.structural_scales;

  // Initial reference path: states carry the measured outputs on the
  // observed channels, and the gradients are back-solved from the state
  // increments so that every transition holds exactly. Both halves matter.
  // A reference on the data keeps maximal measurement weight, and a
  // transition-consistent one stays displaceable; seeding the gradients with
  // zeros instead leaves a path that violates the transition density by
  // thousands of log units while no free particle can outweigh it, and the
  // whole chain deadlocks on the initial point.
  LatentTrajectory z;
  z.states = Eigen::MatrixXd::Zero(n_steps, n_x);
  z.gradients = Eigen::MatrixXd::Zero(n_steps, n_x);
  for (Eigen::Index t = 0; t < n_steps; ++t)
    for (std::size_t j = 0; j < problem.noise.observed.size(); ++j)
      z.states(t, problem.noise.observed[j]) =
          problem.outputs(t, static_cast<Eigen::Index>(j));
  {
    const SystemMatrices mats0 = matrices_for(structural_coords);
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> gain(
        mats0.drift_gain);
    for (Eigen::Index t = 0; t + 1 < n_steps; ++t) {
      const Eigen::VectorXd rate =
          (z.states.row(t + 1) - z.states.row(t)).transpose() / settings.dt -
          mats0.G * problem.inputs.row(t).transpose();
      z.gradients.row(t) = gain.solve(rate).transpose();
    }
    if (n_steps > 1) z.gradients.row(n_steps - 1) = z.gradients.row(n_steps - 2);
  }

  PgDiagnostics diag;
  int kernel_window = 0, kernel_window_accepts = 0;
  int structural_window = 0, structural_window_accepts = 0;

  struct HyperOutcome {
    bool kernel_accepted = false;
    bool structural_accepted = false;
  };
  const auto hyper_steps = [&](const SuffStats& stats) -> HyperOutcome {
    HyperOutcome outcome;
    if (settings.kernel_mh) {
      const MhResult r = mh_step_kernel_hypers(
          kernel_coords, stats, factory, problem.kernel_prior, kernel_scales,
          rng);
      kernel_coords = r.coords;
      outcome.kernel_accepted = r.accepted;
      if (!r.proposal_valid) ++diag.kernel_invalid;
      if (r.accepted) ++diag.kernel_accepts;
      ++kernel_window;
      kernel_window_accepts += r.accepted ? 1 : 0;
    }
    if (settings.structural_mh) {
      const StructuralProposal sp{structural_scales,
                                  settings.laplace_structural};
      const MhResult r = mh_step_structural_hypers(
          structural_coords, z, problem.inputs, problem.structure,
          problem.noise, settings.dt, problem.structural_prior, sp, rng);
      structural_coords = r.coords;
      outcome.structural_accepted = r.accepted;
      if (!r.proposal_valid) ++diag.structural_invalid;
      if (r.accepted) ++diag.structural_accepts;
      ++structural_window;
      structural_window_accepts += r.accepted ? 1 : 0;
    }
    return outcome;
  };

  const auto adapt = [](Eigen::VectorXd& scales, int& window, int& accepts,
                        int interval) {
    if (window < interval) return;
    const double rate = static_cast<double>(accepts) / window;
    if (rate < 0.2)
      scales *= 0.8;
    else if (rate > 0.4)
      scales *= 1.25;
    window = 0;
    accepts = 0;
  };

  // iteration 0: hyperparameters and weights off the initial trajectory
  SuffStats stats = accumulate_stats(z, problem.expansion);
  hyper_steps(stats);
  GPParams theta = sample_nig(
      density_form(posterior_update(
          factory(problem.kernel_prior.to_natural(kernel_coords)), stats)),
      rng);

  for (int k = 1; k <= settings.n_iterations; ++k) {
    ChainSample sample;
    sample.k = k;

    // latent trajectory given theta and structural hyperparameters
    const SystemMatrices mats = matrices_for(structural_coords);
    const HamiltonianTransitionModel model{&problem.expansion, theta, mats,
                                           settings.dt};
    CsmcSettings sweep_settings;
    sweep_settings.n_particles = settings.n_particles;
    sweep_settings.ancestor_sampling = settings.ancestor_sampling;
    int retries = 0;
    for (;;) {
      try {
        SweepResult result =
            csmc_sweep(model, problem.outputs, problem.inputs, problem.noise,
                       problem.initial_state, z, sweep_settings, rng);
        z = std::move(result.trajectory);
        sample.min_ess = result.diagnostics.min_ess;
        sample.out_of_domain = result.diagnostics.out_of_domain;
        break;
      } catch (const DegenerateSweepError& err) {
        ++retries;
        ++diag.degenerate_retries;
        if (retries > settings.degenerate_retry_budget)
          throw NumericalError(
              "conditional sweep degenerated " + std::to_string(retries) +
              " times at iteration " + std::to_string(k) + " (" +
              err.what() + "); inflate the measurement noise or raise the "
              "particle count");
      }
    }
    sample.degenerate_retries = retries;
    if (probe && probe->after_sweep) probe->after_sweep(k, z);

    // hyperparameters given the new trajectory
    stats = accumulate_stats(z, problem.expansion);
    const HyperOutcome outcome = hyper_steps(stats);
    sample.kernel_accepted = outcome.kernel_accepted;
    sample.structural_accepted = outcome.structural_accepted;
    if (probe && probe->after_hypers)
      probe->after_hypers(k, problem.kernel_prior.to_natural(kernel_coords),
                          problem.structural_prior.to_natural(
                              structural_coords),
                          z);

    // weights and noise variance given trajectory and hyperparameters
    const NigParams eta =
        factory(problem.kernel_prior.to_natural(kernel_coords));
    theta = sample_nig(density_form(posterior_update(eta, stats)), rng);
    if (probe && probe->after_theta) probe->after_theta(k, theta, z);

    if (settings.adapt_proposals && k <= settings.burn_in) {
      adapt(kernel_scales, kernel_window, kernel_window_accepts,
            settings.adapt_interval);
      adapt(structural_scales, structural_window, structural_window_accepts,
            settings.adapt_interval);
    }

    sample.params = theta;
    sample.kernel_hypers = problem.kernel_prior.to_natural(kernel_coords);
    sample.structural_hypers =
        problem.structural_prior.to_natural(structural_coords);
    sample.trajectory = z;
    sample.gradient_evidence = log_gradient_evidence(eta, stats);
    sample.transition_log_lik = transition_log_likelihood(
        z, problem.inputs, matrices_for(structural_coords),
        MvnDensity(problem.noise.process_cov), settings.dt);
    if (emit) emit(sample);
  }

  diag.final_kernel_scales = kernel_scales;
  diag.final_structural_scales = structural_scales;
  return diag;
}

}  // namespace hamgp
