#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "hamgp/basis.hpp"
#include "hamgp/gaussian.hpp"
#include "hamgp/hamiltonian.hpp"
#include "hamgp/hyperprior.hpp"
#include "hamgp/nig.hpp"
#include "hamgp/rng.hpp"
#include "hamgp/smc.hpp"
#include "hamgp/structure.hpp"
#include "hamgp/trajectory.hpp"

namespace hamgp {

// Maps natural kernel hyperparameters to the Gaussian-inverse-gamma prior
// whose scale matrix carries the spectral densities. Kept as a callable so
// tests can substitute toy priors.
using KernelPriorFactory =
    std::function<NigParams(const Eigen::VectorXd& natural)>;

NigParams make_kernel_prior(const BasisExpansion& expansion,
                            const KernelHyperparams& hypers, double psi,
                            double nu);

// Outcome of one Metropolis step in declared coordinates. log_ratio is the
// raw log acceptance ratio (before clamping at 0); it is -inf when the
// proposal was auto-rejected as invalid.
struct MhResult {
  Eigen::VectorXd coords;
  bool accepted = false;
  bool proposal_valid = true;
  double log_ratio = 0.0;
};

// Random-walk Metropolis step on the kernel hyperparameters. The weights and
// noise variance are integrated out, so the acceptance ratio reduces to a
// quotient of prior/posterior normalizing constants (the gradient-data
// evidence) times the hyperprior ratio. Proposals whose prior cannot be
// built or factored are rejected outright.
MhResult mh_step_kernel_hypers(const Eigen::VectorXd& coords,
                               const SuffStats& stats,
                               const KernelPriorFactory& factory,
                               const HyperPrior& prior,
                               const Eigen::VectorXd& proposal_scales,
                               Rng& rng);

// Gaussian-product log-likelihood of the state path given the gradient path
// under Euler transitions x_t ~ N(x_{t-1} + dt ((J-R) h_{t-1} + G u_{t-1}),
// process covariance).
double transition_log_likelihood(const LatentTrajectory& trajectory,
                                 const Eigen::MatrixXd& inputs,
                                 const SystemMatrices& matrices,
                                 const MvnDensity& process, double dt);

struct StructuralProposal {
  Eigen::VectorXd scales;  // random-walk scales in declared coordinates
  // One-dimensional Newton refinement of the proposal in the natural
  // parameter (finite-difference gradient and curvature of the transition
  // likelihood, which is near-quadratic there); applies to a single
  // structural hyperparameter, falls back to the coordinate random walk
  // wherever the curvature is not negative, and carries the coordinate
  // jacobian in the acceptance ratio.
  bool laplace = false;
};

// Metropolis step on the structural hyperparameters. The likelihood is the
// Gaussian transition product above; proposals that break skew symmetry of J
// or positive semidefiniteness of R are rejected outright.
MhResult mh_step_structural_hypers(const Eigen::VectorXd& coords,
                                   const LatentTrajectory& trajectory,
                                   const Eigen::MatrixXd& inputs,
                                   const SystemStructure& structure,
                                   const NoiseSpec& noise, double dt,
                                   const HyperPrior& prior,
                                   const StructuralProposal& proposal,
                                   Rng& rng);

// Fixed problem data of one learning run.
struct PgProblem {
  BasisExpansion expansion;
  SystemStructure structure;
  NoiseSpec noise;
  Eigen::MatrixXd outputs;  // (T+1) x n_y
  Eigen::MatrixXd inputs;   // (T+1) x n_u
  GaussianSpec initial_state;
  HyperPrior kernel_prior;      // coordinates: signal variance, length scale
  HyperPrior structural_prior;  // one coordinate per slot, in slots() order
  Eigen::VectorXd kernel_init;      // natural values
  Eigen::VectorXd structural_init;  // natural values
  Eigen::VectorXd kernel_scales;    // proposal scales, declared coordinates
  Eigen::VectorXd structural_scales;
};

struct PgSettings {
  int n_iterations = 100;  // emitted samples k = 1..n_iterations
  int burn_in = 0;         // proposal adaptation window; emission stays raw
  Eigen::Index n_particles = 30;
  bool ancestor_sampling = true;
  double dt = 0.01;
  double psi = 100.0;  // inverse-gamma scale of the weight prior
  double nu = 400.0;   // inverse-gamma degrees of freedom
  bool kernel_mh = true;
  bool structural_mh = true;
  bool laplace_structural = false;
  bool adapt_proposals = true;
  int adapt_interval = 50;
  int degenerate_retry_budget = 10;
};

// One stored iteration of the chain.
struct ChainSample {
  int k = 0;
  GPParams params;
  Eigen::VectorXd kernel_hypers;      // natural values
  Eigen::VectorXd structural_hypers;  // natural values
  LatentTrajectory trajectory;
  bool kernel_accepted = false;
  bool structural_accepted = false;
  double gradient_evidence = 0.0;
  double transition_log_lik = 0.0;
  double min_ess = 0.0;
  int out_of_domain = 0;
  int degenerate_retries = 0;
};

// Test probes into the Gibbs ordering: each callback receives the data the
// next sub-step consumes.
struct PgProbe {
  std::function<void(int, const LatentTrajectory&)> after_sweep;
  std::function<void(int, const Eigen::VectorXd&, const Eigen::VectorXd&,
                     const LatentTrajectory&)>
      after_hypers;
  std::function<void(int, const GPParams&, const LatentTrajectory&)>
      after_theta;
};

struct PgDiagnostics {
  int kernel_accepts = 0;
  int structural_accepts = 0;
  int kernel_invalid = 0;
  int structural_invalid = 0;
  int degenerate_retries = 0;
  Eigen::VectorXd final_kernel_scales;
  Eigen::VectorXd final_structural_scales;
};

// Outer Gibbs loop: initialize the latent trajectory from the measured
// outputs (zeros elsewhere), draw hyperparameters and weights off it, then
// iterate sweep -> hyperparameter Metropolis steps -> conjugate weight draw,
// emitting one ChainSample per iteration.
PgDiagnostics run_particle_gibbs(
    const PgProblem& problem, const PgSettings& settings, Rng& rng,
    const std::function<void(const ChainSample&)>& emit,
    const PgProbe* probe = nullptr);

}  // namespace hamgp
