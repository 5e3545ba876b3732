#pragma once

#include <Eigen/Core>
#include <string>

#include "hamgp/basis.hpp"
#include "hamgp/hyperprior.hpp"
#include "hamgp/simulate.hpp"
#include "hamgp/structure.hpp"

namespace hamgp {

// Where the training record comes from: a simulated benchmark scenario, or
// an externally supplied dataset of the same shape.
struct DataSettings {
  ScenarioConfig scenario;
  double true_damping = 0.15;
  std::string csv_path;  // when non-empty, load instead of simulating
};

struct ModelSettings {
  Eigen::Index n_basis = 20;
  Eigen::VectorXd domain_half_widths = Eigen::VectorXd::Constant(2, 8.0);
  SymmetryMode symmetry = SymmetryMode::None;
  int max_index_per_dim = 12;
  SystemStructure structure;
};

struct NoiseSettings {
  double process_std = 1e-4;
  double measurement_std = 1e-3;
  double initial_state_std = 0.1;  // spread of p(x0) around the first output
};

struct PriorSettings {
  HyperPrior kernel;      // coordinates: signal_variance, length_scale
  HyperPrior structural;  // one coordinate per structure slot, name-sorted
  double psi = 100.0;
  double nu = 400.0;
};

struct SamplerSettings {
  int n_iterations = 2000;
  int burn_in = 1500;
  int thinning = 1;
  Eigen::Index n_particles = 30;
  bool ancestor_sampling = true;
  bool kernel_mh = true;
  bool structural_mh = true;
  bool laplace_structural = false;
  bool adapt_proposals = true;
  int adapt_interval = 50;
  int degenerate_retry_budget = 10;
  Eigen::VectorXd kernel_init = Eigen::VectorXd::Ones(2);  // natural values
  Eigen::VectorXd kernel_scales = Eigen::VectorXd::Constant(2, 0.05);
  Eigen::VectorXd structural_init;    // natural values, slot order
  Eigen::VectorXd structural_scales;  // declared coordinates, slot order
  int trajectory_stride = 10;
};

struct PredictSettings {
  Eigen::Vector2d x0{-0.1, 0.5};
  double dt = 0.01;
  int n_steps = 600;
  int n_samples = 10;
  InputSignal input;
};

struct EvalSettings {
  int grid_n = 21;
  Eigen::Vector2d grid_min{-2.5, -2.5};
  Eigen::Vector2d grid_max{2.5, 2.5};
  PredictSettings predict;
};

struct ExperimentConfig {
  std::string output_dir = "out";
  unsigned seed = 1;
  DataSettings data;
  ModelSettings model;
  NoiseSettings noise;
  PriorSettings priors;
  SamplerSettings sampler;
  EvalSettings evaluation;
};

// Benchmark defaults: damped double-well oscillator, 500-step input-state
// record, 20 basis functions on [-8, 8]^2, 2000-iteration chain.
ExperimentConfig default_config();

// Parse a JSON document; absent fields keep their defaults, present fields
// are type- and range-checked. Throws ConfigError naming the failing field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical JSON rendering (stable key order, 2-space indent). Parsing the
// rendered form reproduces the config exactly.
std::string render_config(const ExperimentConfig& config);

// FNV-1a hash of the canonical rendering, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

// Full cross-field validation (also run by parse_config).
void validate_config(const ExperimentConfig& config);

}  // namespace hamgp
