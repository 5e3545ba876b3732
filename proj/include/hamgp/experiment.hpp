#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "hamgp/config.hpp"

namespace hamgp {

// One line of the chain artifact (JSONL, one iteration per line).
struct ChainRecord {
  int k = 0;
  double signal_variance = 1.0;
  double length_scale = 1.0;
  std::map<std::string, double> structural;  // natural slot values
  Eigen::VectorXd weights;
  double noise_variance = 1.0;
  bool kernel_accepted = false;
  bool structural_accepted = false;
  double gradient_evidence = 0.0;
  double transition_log_lik = 0.0;
  double min_ess = 0.0;
  long out_of_domain = 0;
  int degenerate_retries = 0;
};

std::vector<ChainRecord> read_chain(const std::string& path);

// Indices into `chain` with k > burn_in, keeping every `thinning`-th record.
std::vector<std::size_t> retained_indices(const std::vector<ChainRecord>& chain,
                                          int burn_in, int thinning);

// Posterior point model: arithmetic mean of the basis weights and the
// structural values over the retained records.
struct MeanModel {
  Eigen::VectorXd weights;
  std::map<std::string, double> structural;
  double noise_variance = 1.0;
};
MeanModel mean_model(const std::vector<ChainRecord>& chain,
                     const std::vector<std::size_t>& retained);

// Training record: inputs and outputs row-aligned over time, plus the true
// states when the data came from the built-in benchmark generator.
struct Dataset {
  Eigen::MatrixXd outputs;      // (T+1) x n_y
  Eigen::MatrixXd inputs;       // (T+1) x n_u
  Eigen::MatrixXd true_states;  // (T+1) x n_x, or 0 x 0 when unknown
  double dt = 0.0;
};

// Generates the benchmark record, or reads data.csv_path when set.
Dataset load_dataset(const ExperimentConfig& config);
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

struct TrainResult {
  std::string status;  // "ok" or "aborted"
  std::string error;   // set when aborted
  int n_records = 0;
  int kernel_accepts = 0;
  int structural_accepts = 0;
  int degenerate_retries = 0;
  std::string chain_path;
  std::string manifest_path;
};

// Runs the Gibbs chain and streams chain.jsonl, trajectories.csv, data.csv
// (generated data only), run_log.txt and manifest.json into the output dir.
// A NumericalError mid-chain leaves the partial artifacts in place and is
// reported through the "aborted" status rather than thrown.
TrainResult cmd_train(const ExperimentConfig& config);

struct FlowCell {
  Eigen::Vector2d x;
  Eigen::Vector2d v_true;
  Eigen::Vector2d v_est;
};

struct FlowMetrics {
  double magnitude_rmse = 0.0;  // energy-flow units
  double angle_rmse = 0.0;      // radians, wrapped to [0, pi]
  int n_cells = 0;
  int n_angle_cells = 0;  // cells entering the angle RMSE
};

// Magnitude RMSE = sqrt(mean (|v_est| - |v_true|)^2) over every cell; angle
// RMSE over the cells whose true flow magnitude reaches 1e-6 (the angle is
// undefined at fixed points).
FlowMetrics flow_metrics(const std::vector<FlowCell>& cells);

struct FlowMapResult {
  double magnitude_rmse = 0.0;
  double angle_rmse = 0.0;
  int n_cells = 0;
  int n_angle_cells = 0;
  int n_retained = 0;
  std::string csv_path;
  std::string report_path;
};

// Compares the posterior-mean unforced flow (J - R) grad H_hat against the
// benchmark truth on the configured grid; writes flowmap.csv and
// flowmap_report.json.
FlowMapResult cmd_eval_flowmap(const ExperimentConfig& config,
                               const std::string& chain_path);

struct PredictResult {
  int n_trajectories = 0;  // mean model + sampled models
  int n_steps = 0;
  std::vector<int> sample_ks;  // chain iterations of the sampled models
  std::string csv_path;
  std::string report_path;
};

// Forward-simulates the mean model plus n_samples distinct retained models
// under the named scenario ("test": the configured prediction input;
// "train": the training input) and writes prediction.csv.
PredictResult cmd_predict(const ExperimentConfig& config,
                          const std::string& chain_path,
                          const std::string& scenario_name = "test");

struct TraceSummary {
  double mean = 0.0;
  double std_dev = 0.0;
  double q05 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q95 = 0.0;
};

struct DiagnoseResult {
  int n_records = 0;
  int n_retained = 0;
  double kernel_acceptance = 0.0;      // over the full chain
  double structural_acceptance = 0.0;  // over the full chain
  std::map<std::string, TraceSummary> traces;  // over retained records
  std::string report_path;
};

// Writes diagnostics.json plus hist_<name>.csv histograms for the kernel
// hyperparameters, each structural slot, and the gradient noise variance.
DiagnoseResult cmd_diagnose(const ExperimentConfig& config,
                            const std::string& chain_path);

}  // namespace hamgp
