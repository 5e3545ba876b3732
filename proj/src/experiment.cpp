#include "hamgp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "hamgp/errors.hpp"
#include "hamgp/hamiltonian.hpp"
#include "hamgp/mcmc.hpp"
#include "hamgp/rng.hpp"
#include "hamgp/version.hpp"
#include "json.hpp"

namespace hamgp {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

// All floating-point file output goes through %.17g so that reruns are
// byte-identical and values round-trip through strtod exactly.
std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct CsvWriter {
  std::ofstream out;

  CsvWriter(const std::string& path, const std::string& header) : out(path) {
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << header << "\n";
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << ",";
      out << cells[i];
    }
    out << "\n";
  }
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0')
    throw ConfigError(where + ": '" + s + "' is not a number");
  return v;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

// ---- chain artifact ----

ordered_json sample_to_json(const ChainSample& s, const HyperPrior& kernel,
                            const HyperPrior& structural) {
  ordered_json j;
  j["k"] = s.k;
  ordered_json kh;
  for (Eigen::Index i = 0; i < kernel.size(); ++i)
    kh[kernel.coords[static_cast<std::size_t>(i)].name] = s.kernel_hypers[i];
  j["kernel"] = kh;
  ordered_json sh = ordered_json::object();
  for (Eigen::Index i = 0; i < structural.size(); ++i)
    sh[structural.coords[static_cast<std::size_t>(i)].name] =
        s.structural_hypers[i];
  j["structural"] = sh;
  j["noise_variance"] = s.params.noise_variance;
  j["kernel_accepted"] = s.kernel_accepted;
  j["structural_accepted"] = s.structural_accepted;
  j["gradient_evidence"] = s.gradient_evidence;
  j["transition_log_lik"] = s.transition_log_lik;
  j["min_ess"] = s.min_ess;
  j["out_of_domain"] = s.out_of_domain;
  j["degenerate_retries"] = s.degenerate_retries;
  j["weights"] = std::vector<double>(
      s.params.weights.data(), s.params.weights.data() + s.params.weights.size());
  return j;
}

ChainRecord record_from_json(const nlohmann::json& j, const std::string& where) {
  ChainRecord r;
  try {
    r.k = j.at("k").get<int>();
    const auto& kh = j.at("kernel");
    r.signal_variance = kh.at("signal_variance").get<double>();
    r.length_scale = kh.at("length_scale").get<double>();
    for (const auto& item : j.at("structural").items())
      r.structural[item.key()] = item.value().get<double>();
    r.noise_variance = j.at("noise_variance").get<double>();
    r.kernel_accepted = j.at("kernel_accepted").get<bool>();
    r.structural_accepted = j.at("structural_accepted").get<bool>();
    r.gradient_evidence = j.at("gradient_evidence").get<double>();
    r.transition_log_lik = j.at("transition_log_lik").get<double>();
    r.min_ess = j.at("min_ess").get<double>();
    r.out_of_domain = j.at("out_of_domain").get<long>();
    r.degenerate_retries = j.at("degenerate_retries").get<int>();
    const auto& w = j.at("weights");
    r.weights.resize(static_cast<Eigen::Index>(w.size()));
    for (std::size_t i = 0; i < w.size(); ++i)
      r.weights[static_cast<Eigen::Index>(i)] = w[i].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + ": malformed chain record: " + e.what());
  }
  return r;
}

// ---- posterior model helpers ----

struct PosteriorModel {
  GPParams params;
  SystemMatrices matrices;
};

PosteriorModel model_from(const Eigen::VectorXd& weights, double noise_var,
                          const std::map<std::string, double>& structural,
                          const SystemStructure& structure) {
  PosteriorModel m;
  m.params.weights = weights;
  m.params.noise_variance = noise_var;
  m.matrices = instantiate(structure, structural);
  return m;
}

PosteriorModel model_of_record(const ChainRecord& r,
                               const SystemStructure& structure) {
  return model_from(r.weights, r.noise_variance, r.structural, structure);
}

BasisExpansion expansion_of(const ExperimentConfig& config) {
  return build_expansion(DomainBox{config.model.domain_half_widths},
                         config.model.n_basis, config.model.symmetry,
                         config.model.max_index_per_dim);
}

// ---- manifest ----

void write_manifest(const ExperimentConfig& config, const std::string& status,
                    const std::string& error,
                    const std::vector<std::pair<std::string, long>>& counters) {
  ordered_json j;
  j["tool_version"] = version();
  j["command"] = "train";
  j["config_hash"] = config_hash(config);
  j["status"] = status;
  j["error"] = error;
  for (const auto& [name, value] : counters) j[name] = value;
  j["mean_model"] =
      "arithmetic mean of basis weights and structural values over retained "
      "records";
  j["effective_config"] = ordered_json::parse(render_config(config));
  std::ofstream out(join_path(config.output_dir, "manifest.json"));
  out << j.dump(2) << "\n";
}

}  // namespace

// ---- chain reading ----

std::vector<ChainRecord> read_chain(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open chain file '" + path + "'");
  std::vector<ChainRecord> chain;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": not valid JSON: " + e.what());
    }
    chain.push_back(
        record_from_json(j, path + ":" + std::to_string(line_no)));
  }
  return chain;
}

std::vector<std::size_t> retained_indices(const std::vector<ChainRecord>& chain,
                                          int burn_in, int thinning) {
  if (thinning < 1) throw ArgumentError("thinning must be at least 1");
  std::vector<std::size_t> kept;
  std::size_t seen = 0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    if (chain[i].k <= burn_in) continue;
    if (seen % static_cast<std::size_t>(thinning) == 0) kept.push_back(i);
    ++seen;
  }
  return kept;
}

MeanModel mean_model(const std::vector<ChainRecord>& chain,
                     const std::vector<std::size_t>& retained) {
  if (retained.empty())
    throw ConfigError("chain has no retained records past the burn-in");
  const Eigen::Index m = chain[retained.front()].weights.size();
  MeanModel out;
  out.weights = Eigen::VectorXd::Zero(m);
  out.noise_variance = 0.0;
  for (const auto& [name, value] : chain[retained.front()].structural)
    out.structural[name] = 0.0;
  for (std::size_t idx : retained) {
    const ChainRecord& r = chain[idx];
    if (r.weights.size() != m)
      throw ConfigError("chain records disagree on the weight count");
    if (r.structural.size() != out.structural.size())
      throw ConfigError("chain records disagree on the structural slots");
    out.weights += r.weights;
    out.noise_variance += r.noise_variance;
    for (const auto& [name, value] : r.structural) {
      auto it = out.structural.find(name);
      if (it == out.structural.end())
        throw ConfigError("chain records disagree on the structural slots");
      it->second += value;
    }
  }
  const double n = static_cast<double>(retained.size());
  out.weights /= n;
  out.noise_variance /= n;
  for (auto& [name, value] : out.structural) value /= n;
  return out;
}

// ---- datasets ----

Dataset load_dataset(const ExperimentConfig& config) {
  if (!config.data.csv_path.empty())
    return read_dataset_csv(config.data.csv_path);

  OscillatorTruth truth;
  truth.damping = config.data.true_damping;
  Rng rng(config.data.scenario.seed);
  GeneratedData g = generate_data(config.data.scenario, truth, rng);
  Dataset d;
  d.outputs = g.outputs;
  d.inputs = g.inputs;
  d.true_states = g.states;
  d.dt = config.data.scenario.dt;
  return d;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::string header = "t_s";
  const Eigen::Index n_u = data.inputs.cols();
  if (n_u == 1)
    header += ",u";
  else
    for (Eigen::Index i = 0; i < n_u; ++i)
      header += ",u" + std::to_string(i);
  for (Eigen::Index i = 0; i < data.outputs.cols(); ++i)
    header += ",y" + std::to_string(i);
  for (Eigen::Index i = 0; i < data.true_states.cols(); ++i)
    header += ",x_true" + std::to_string(i);

  CsvWriter csv(path, header);
  for (Eigen::Index t = 0; t < data.outputs.rows(); ++t) {
    std::vector<std::string> cells;
    cells.push_back(fmt(static_cast<double>(t) * data.dt));
    for (Eigen::Index i = 0; i < n_u; ++i) cells.push_back(fmt(data.inputs(t, i)));
    for (Eigen::Index i = 0; i < data.outputs.cols(); ++i)
      cells.push_back(fmt(data.outputs(t, i)));
    if (data.true_states.rows() == data.outputs.rows())
      for (Eigen::Index i = 0; i < data.true_states.cols(); ++i)
        cells.push_back(fmt(data.true_states(t, i)));
    csv.row(cells);
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open dataset '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("dataset '" + path + "' is empty");

  const std::vector<std::string> names = split_csv_line(line);
  if (names.empty() || names[0] != "t_s")
    throw ConfigError("dataset '" + path + "': first column must be t_s");
  std::size_t pos = 1;
  std::size_t n_u = 0, n_y = 0, n_x = 0;
  while (pos < names.size() && names[pos].rfind("u", 0) == 0 &&
         names[pos].rfind("y", 0) != 0) {
    ++n_u;
    ++pos;
  }
  while (pos < names.size() && names[pos].rfind("y", 0) == 0) {
    ++n_y;
    ++pos;
  }
  while (pos < names.size() && names[pos].rfind("x_true", 0) == 0) {
    ++n_x;
    ++pos;
  }
  if (pos != names.size())
    throw ConfigError("dataset '" + path + "': unexpected column '" +
                      names[pos] + "' (expected t_s, u..., y..., x_true...)");
  if (n_u < 1 || n_y < 1)
    throw ConfigError("dataset '" + path +
                      "': needs at least one input and one output column");

  std::vector<double> times;
  std::vector<std::vector<double>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != names.size())
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": wrong cell count");
    std::vector<double> row;
    for (const std::string& cell : cells)
      row.push_back(parse_double(cell, path + ":" + std::to_string(line_no)));
    times.push_back(row[0]);
    rows.push_back(row);
  }
  if (rows.size() < 2)
    throw ConfigError("dataset '" + path + "': needs at least two rows");

  Dataset d;
  const Eigen::Index n_rows = static_cast<Eigen::Index>(rows.size());
  d.dt = times[1] - times[0];
  if (!(d.dt > 0))
    throw ConfigError("dataset '" + path + "': time column must increase");
  for (std::size_t t = 1; t < times.size(); ++t)
    if (std::abs(times[t] - times[t - 1] - d.dt) > 1e-9 * std::max(1.0, d.dt))
      throw ConfigError("dataset '" + path +
                        "': time column is not uniformly spaced");

  d.inputs.resize(n_rows, static_cast<Eigen::Index>(n_u));
  d.outputs.resize(n_rows, static_cast<Eigen::Index>(n_y));
  d.true_states.resize(n_x > 0 ? n_rows : 0, static_cast<Eigen::Index>(n_x));
  for (Eigen::Index t = 0; t < n_rows; ++t) {
    const std::vector<double>& row = rows[static_cast<std::size_t>(t)];
    std::size_t c = 1;
    for (std::size_t i = 0; i < n_u; ++i)
      d.inputs(t, static_cast<Eigen::Index>(i)) = row[c++];
    for (std::size_t i = 0; i < n_y; ++i)
      d.outputs(t, static_cast<Eigen::Index>(i)) = row[c++];
    for (std::size_t i = 0; i < n_x; ++i)
      d.true_states(t, static_cast<Eigen::Index>(i)) = row[c++];
  }
  return d;
}

// ---- train ----

TrainResult cmd_train(const ExperimentConfig& config) {
  validate_config(config);
  fs::create_directories(config.output_dir);

  const Dataset data = load_dataset(config);
  const bool generated = config.data.csv_path.empty();
  if (generated) write_dataset_csv(join_path(config.output_dir, "data.csv"), data);

  const Eigen::Index n_x = config.model.structure.state_dim();
  const Eigen::Index n_y = data.outputs.cols();
  if (data.inputs.cols() != config.model.structure.input_dim())
    throw ConfigError("dataset input columns do not match the structure");
  if (n_y > n_x)
    throw ConfigError("dataset has more output columns than state components");

  PgProblem problem;
  problem.expansion = expansion_of(config);
  problem.structure = config.model.structure;
  problem.noise.process_cov =
      config.noise.process_std * config.noise.process_std *
      Eigen::MatrixXd::Identity(n_x, n_x);
  problem.noise.measurement_cov =
      config.noise.measurement_std * config.noise.measurement_std *
      Eigen::MatrixXd::Identity(n_y, n_y);
  if (generated) {
    problem.noise.observed =
        config.data.scenario.mode == MeasurementMode::InputState
            ? std::vector<Eigen::Index>{0, 1}
            : std::vector<Eigen::Index>{0};
  } else {
    for (Eigen::Index i = 0; i < n_y; ++i) problem.noise.observed.push_back(i);
  }
  if (static_cast<Eigen::Index>(problem.noise.observed.size()) != n_y)
    throw ConfigError("measurement mode does not match the dataset's outputs");
  problem.outputs = data.outputs;
  problem.inputs = data.inputs;
  problem.initial_state.mean = Eigen::VectorXd::Zero(n_x);
  for (Eigen::Index i = 0; i < n_y; ++i)
    problem.initial_state.mean[problem.noise.observed[static_cast<std::size_t>(
        i)]] = data.outputs(0, i);
  problem.initial_state.cov = config.noise.initial_state_std *
                              config.noise.initial_state_std *
                              Eigen::MatrixXd::Identity(n_x, n_x);
  problem.kernel_prior = config.priors.kernel;
  problem.structural_prior = config.priors.structural;
  problem.kernel_init = config.sampler.kernel_init;
  problem.structural_init = config.sampler.structural_init;
  problem.kernel_scales = config.sampler.kernel_scales;
  problem.structural_scales = config.sampler.structural_scales;

  PgSettings settings;
  settings.n_iterations = config.sampler.n_iterations;
  settings.burn_in = config.sampler.burn_in;
  settings.n_particles = config.sampler.n_particles;
  settings.ancestor_sampling = config.sampler.ancestor_sampling;
  settings.dt = data.dt;
  settings.psi = config.priors.psi;
  settings.nu = config.priors.nu;
  settings.kernel_mh = config.sampler.kernel_mh;
  settings.structural_mh = config.sampler.structural_mh;
  settings.laplace_structural = config.sampler.laplace_structural;
  settings.adapt_proposals = config.sampler.adapt_proposals;
  settings.adapt_interval = config.sampler.adapt_interval;
  settings.degenerate_retry_budget = config.sampler.degenerate_retry_budget;

  TrainResult result;
  result.chain_path = join_path(config.output_dir, "chain.jsonl");
  result.manifest_path = join_path(config.output_dir, "manifest.json");

  std::ofstream chain_out(result.chain_path);
  if (!chain_out) throw ConfigError("cannot write '" + result.chain_path + "'");
  CsvWriter traj(join_path(config.output_dir, "trajectories.csv"),
                 "k,t_s,q,p,dHdq,dHdp");
  std::ofstream log(join_path(config.output_dir, "run_log.txt"));
  log << "config " << config_hash(config) << "\n";
  log << "data rows=" << data.outputs.rows() << " outputs=" << n_y
      << " inputs=" << data.inputs.cols() << " dt=" << fmt(data.dt) << "\n";
  log << "basis size=" << problem.expansion.size()
      << " dim=" << problem.expansion.dim() << "\n";

  const int stride = config.sampler.trajectory_stride;
  long kernel_accepts = 0, structural_accepts = 0, degenerate = 0;
  int n_records = 0;

  const auto emit = [&](const ChainSample& s) {
    chain_out << sample_to_json(s, problem.kernel_prior,
                                problem.structural_prior)
                     .dump()
              << "\n";
    ++n_records;
    kernel_accepts += s.kernel_accepted ? 1 : 0;
    structural_accepts += s.structural_accepted ? 1 : 0;
    degenerate += s.degenerate_retries;
    if (s.k % stride == 0 || s.k == settings.n_iterations) {
      for (Eigen::Index t = 0; t < s.trajectory.states.rows(); ++t) {
        std::vector<std::string> cells{std::to_string(s.k)};
        cells.push_back(fmt(static_cast<double>(t) * settings.dt));
        for (Eigen::Index i = 0; i < s.trajectory.states.cols(); ++i)
          cells.push_back(fmt(s.trajectory.states(t, i)));
        for (Eigen::Index i = 0; i < s.trajectory.gradients.cols(); ++i)
          cells.push_back(fmt(s.trajectory.gradients(t, i)));
        traj.row(cells);
      }
    }
    if (s.k % 100 == 0) {
      log << "iter " << s.k << "/" << settings.n_iterations
          << " kernel_acc=" << fmt(static_cast<double>(kernel_accepts) / s.k)
          << " structural_acc="
          << fmt(static_cast<double>(structural_accepts) / s.k) << "\n";
    }
  };

  Rng rng(config.seed);
  result.status = "ok";
  try {
    run_particle_gibbs(problem, settings, rng, emit);
  } catch (const NumericalError& e) {
    result.status = "aborted";
    result.error = e.what();
    log << "aborted: " << e.what() << "\n";
  }
  result.n_records = n_records;
  result.kernel_accepts = static_cast<int>(kernel_accepts);
  result.structural_accepts = static_cast<int>(structural_accepts);
  result.degenerate_retries = static_cast<int>(degenerate);
  if (result.status == "ok")
    log << "done iterations=" << n_records
        << " kernel_accepts=" << kernel_accepts
        << " structural_accepts=" << structural_accepts
        << " degenerate_retries=" << degenerate << "\n";

  write_manifest(config, result.status, result.error,
                 {{"n_records", n_records},
                  {"n_data_rows", static_cast<long>(data.outputs.rows())},
                  {"kernel_accepts", kernel_accepts},
                  {"structural_accepts", structural_accepts},
                  {"degenerate_retries", degenerate}});
  return result;
}

// ---- flow map ----

FlowMetrics flow_metrics(const std::vector<FlowCell>& cells) {
  FlowMetrics m;
  double mag_sq = 0.0, ang_sq = 0.0;
  for (const FlowCell& cell : cells) {
    const double mag_err = cell.v_est.norm() - cell.v_true.norm();
    mag_sq += mag_err * mag_err;
    ++m.n_cells;
    if (cell.v_true.norm() >= 1e-6) {
      // atan2 of cross/dot is exact for coincident fields (cross == 0,
      // dot > 0) and well conditioned at small angles, unlike acos.
      const double cross = cell.v_est[0] * cell.v_true[1] -
                           cell.v_est[1] * cell.v_true[0];
      const double angle =
          std::abs(std::atan2(cross, cell.v_est.dot(cell.v_true)));
      ang_sq += angle * angle;
      ++m.n_angle_cells;
    }
  }
  if (m.n_cells > 0) m.magnitude_rmse = std::sqrt(mag_sq / m.n_cells);
  if (m.n_angle_cells > 0) m.angle_rmse = std::sqrt(ang_sq / m.n_angle_cells);
  return m;
}

FlowMapResult cmd_eval_flowmap(const ExperimentConfig& config,
                               const std::string& chain_path) {
  validate_config(config);
  if (config.model.structure.state_dim() != 2)
    throw ConfigError("flow-map evaluation needs a 2-state structure");
  fs::create_directories(config.output_dir);

  const std::vector<ChainRecord> chain = read_chain(chain_path);
  const std::vector<std::size_t> kept =
      retained_indices(chain, config.sampler.burn_in, config.sampler.thinning);
  const MeanModel mean = mean_model(chain, kept);

  const BasisExpansion expansion = expansion_of(config);
  const PosteriorModel model = model_from(
      mean.weights, mean.noise_variance, mean.structural, config.model.structure);

  OscillatorTruth truth;
  truth.damping = config.data.true_damping;
  const SystemMatrices truth_m = truth.matrices();

  const int n = config.evaluation.grid_n;
  const Eigen::Vector2d lo = config.evaluation.grid_min;
  const Eigen::Vector2d hi = config.evaluation.grid_max;

  FlowMapResult result;
  result.n_retained = static_cast<int>(kept.size());
  result.csv_path = join_path(config.output_dir, "flowmap.csv");
  result.report_path = join_path(config.output_dir, "flowmap_report.json");

  std::vector<FlowCell> cells;
  cells.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  CsvWriter csv(result.csv_path, "q,p,v_true_q,v_true_p,v_est_q,v_est_p");
  for (int i = 0; i < n; ++i) {
    const double q = lo[0] + (hi[0] - lo[0]) * i / (n - 1);
    for (int j = 0; j < n; ++j) {
      const double p = lo[1] + (hi[1] - lo[1]) * j / (n - 1);
      FlowCell cell;
      cell.x = Eigen::Vector2d(q, p);
      cell.v_true = truth_m.drift_gain * truth.gradient(cell.x);
      cell.v_est = model.matrices.drift_gain *
                   predict_gradient(expansion, model.params, cell.x);
      csv.row({fmt(q), fmt(p), fmt(cell.v_true[0]), fmt(cell.v_true[1]),
               fmt(cell.v_est[0]), fmt(cell.v_est[1])});
      cells.push_back(cell);
    }
  }
  const FlowMetrics metrics = flow_metrics(cells);
  result.n_cells = metrics.n_cells;
  result.n_angle_cells = metrics.n_angle_cells;
  result.magnitude_rmse = metrics.magnitude_rmse;
  result.angle_rmse = metrics.angle_rmse;

  ordered_json report;
  report["grid_n"] = n;
  report["grid_min"] = std::vector<double>{lo[0], lo[1]};
  report["grid_max"] = std::vector<double>{hi[0], hi[1]};
  report["magnitude_rmse"] = result.magnitude_rmse;
  report["angle_rmse_rad"] = result.angle_rmse;
  report["n_cells"] = result.n_cells;
  report["n_angle_cells"] = result.n_angle_cells;
  report["n_angle_excluded"] = result.n_cells - result.n_angle_cells;
  report["n_retained"] = result.n_retained;
  report["mean_model"] =
      "arithmetic mean of basis weights and structural values over retained "
      "records";
  report["config_hash"] = config_hash(config);
  std::ofstream out(result.report_path);
  out << report.dump(2) << "\n";
  return result;
}

// ---- prediction ----

PredictResult cmd_predict(const ExperimentConfig& config,
                          const std::string& chain_path,
                          const std::string& scenario_name) {
  validate_config(config);
  if (config.model.structure.state_dim() != 2)
    throw ConfigError("prediction needs a 2-state structure");
  if (config.model.structure.input_dim() != 1)
    throw ConfigError("prediction drives a single input channel");
  fs::create_directories(config.output_dir);

  PredictSettings pred = config.evaluation.predict;
  if (scenario_name == "train")
    pred.input = config.data.scenario.input;
  else if (scenario_name != "test")
    throw ConfigError("unknown prediction scenario '" + scenario_name +
                      "' (expected test or train)");

  const std::vector<ChainRecord> chain = read_chain(chain_path);
  const std::vector<std::size_t> kept =
      retained_indices(chain, config.sampler.burn_in, config.sampler.thinning);
  if (static_cast<int>(kept.size()) < pred.n_samples)
    throw ConfigError("prediction needs " + std::to_string(pred.n_samples) +
                      " posterior samples but only " +
                      std::to_string(kept.size()) +
                      " retained records are available");
  const MeanModel mean = mean_model(chain, kept);
  const BasisExpansion expansion = expansion_of(config);

  // Distinct retained records, chosen by a partial shuffle so the draw is a
  // pure function of the config seed.
  Rng rng(config.seed);
  std::vector<std::size_t> pool = kept;
  for (int i = 0; i < pred.n_samples; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        rng.uniform_index(pool.size() - static_cast<std::size_t>(i));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }

  PredictResult result;
  result.n_trajectories = pred.n_samples + 1;
  result.n_steps = pred.n_steps;
  result.csv_path = join_path(config.output_dir, "prediction.csv");
  result.report_path = join_path(config.output_dir, "prediction_report.json");

  CsvWriter csv(result.csv_path, "sample,t_s,u,q,p,H");
  const auto simulate_model = [&](const std::string& label,
                                  const PosteriorModel& model) {
    const auto grad = [&](const Eigen::VectorXd& x) {
      return predict_gradient(expansion, model.params, x);
    };
    Eigen::VectorXd x = pred.x0;
    Eigen::VectorXd u(1);
    for (int t = 0; t <= pred.n_steps; ++t) {
      const double time = t * pred.dt;
      u[0] = pred.input.eval(time);
      csv.row({label, fmt(time), fmt(u[0]), fmt(x[0]), fmt(x[1]),
               fmt(predict_hamiltonian(expansion, model.params, x))});
      if (t < pred.n_steps)
        x = symplectic_euler_step(grad, model.matrices, x, u, pred.dt);
    }
  };

  simulate_model("mean", model_from(mean.weights, mean.noise_variance,
                                    mean.structural, config.model.structure));
  for (int i = 0; i < pred.n_samples; ++i) {
    const ChainRecord& r = chain[pool[static_cast<std::size_t>(i)]];
    result.sample_ks.push_back(r.k);
    simulate_model(std::to_string(r.k),
                   model_of_record(r, config.model.structure));
  }

  ordered_json report;
  report["scenario"] = scenario_name;
  report["n_samples"] = pred.n_samples;
  report["n_retained"] = static_cast<long>(kept.size());
  report["sample_ks"] = result.sample_ks;
  report["x0"] = std::vector<double>{pred.x0[0], pred.x0[1]};
  report["dt_s"] = pred.dt;
  report["n_steps"] = pred.n_steps;
  report["config_hash"] = config_hash(config);
  std::ofstream out(result.report_path);
  out << report.dump(2) << "\n";
  return result;
}

// ---- diagnostics ----

namespace {

TraceSummary summarize(std::vector<double> values) {
  TraceSummary s;
  const std::size_t n = values.size();
  if (n == 0) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std_dev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double p) {
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    return lo + 1 < n ? values[lo] + frac * (values[lo + 1] - values[lo])
                      : values[lo];
  };
  s.q05 = quantile(0.05);
  s.q25 = quantile(0.25);
  s.q50 = quantile(0.50);
  s.q75 = quantile(0.75);
  s.q95 = quantile(0.95);
  return s;
}

void write_histogram(const std::string& path, const std::vector<double>& values,
                     int n_bins) {
  double lo = values.front(), hi = values.front();
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (!(hi > lo)) {
    CsvWriter csv(path, "bin_left,bin_right,count,density");
    csv.row({fmt(lo), fmt(hi), std::to_string(values.size()), fmt(0.0)});
    return;
  }
  std::vector<long> counts(static_cast<std::size_t>(n_bins), 0);
  const double width = (hi - lo) / n_bins;
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, n_bins - 1);
    ++counts[static_cast<std::size_t>(b)];
  }
  CsvWriter csv(path, "bin_left,bin_right,count,density");
  for (int b = 0; b < n_bins; ++b) {
    const double left = lo + b * width;
    const double density = static_cast<double>(counts[static_cast<std::size_t>(
                               b)]) /
                           (static_cast<double>(values.size()) * width);
    csv.row({fmt(left), fmt(left + width),
             std::to_string(counts[static_cast<std::size_t>(b)]),
             fmt(density)});
  }
}

}  // namespace

DiagnoseResult cmd_diagnose(const ExperimentConfig& config,
                            const std::string& chain_path) {
  validate_config(config);
  fs::create_directories(config.output_dir);

  const std::vector<ChainRecord> chain = read_chain(chain_path);
  if (chain.empty()) throw ConfigError("chain '" + chain_path + "' is empty");
  std::vector<std::size_t> window =
      retained_indices(chain, config.sampler.burn_in, config.sampler.thinning);
  const bool full_window = window.empty();
  if (full_window) {
    window.resize(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) window[i] = i;
  }

  DiagnoseResult result;
  result.n_records = static_cast<int>(chain.size());
  result.n_retained = full_window ? 0 : static_cast<int>(window.size());
  long ka = 0, sa = 0;
  for (const ChainRecord& r : chain) {
    ka += r.kernel_accepted ? 1 : 0;
    sa += r.structural_accepted ? 1 : 0;
  }
  result.kernel_acceptance = static_cast<double>(ka) / chain.size();
  result.structural_acceptance = static_cast<double>(sa) / chain.size();

  std::map<std::string, std::vector<double>> series;
  for (std::size_t idx : window) {
    const ChainRecord& r = chain[idx];
    series["signal_variance"].push_back(r.signal_variance);
    series["length_scale"].push_back(r.length_scale);
    for (const auto& [name, value] : r.structural) series[name].push_back(value);
    series["noise_variance"].push_back(r.noise_variance);
  }
  for (const auto& [name, values] : series) {
    result.traces[name] = summarize(values);
    write_histogram(join_path(config.output_dir, "hist_" + name + ".csv"),
                    values, 30);
  }

  result.report_path = join_path(config.output_dir, "diagnostics.json");
  ordered_json report;
  report["n_records"] = result.n_records;
  report["n_retained"] = result.n_retained;
  report["burn_in"] = config.sampler.burn_in;
  report["thinning"] = config.sampler.thinning;
  report["trace_window"] = full_window ? "full_chain" : "retained";
  ordered_json acceptance;
  acceptance["kernel"] = result.kernel_acceptance;
  acceptance["structural"] = result.structural_acceptance;
  report["acceptance"] = acceptance;
  ordered_json traces = ordered_json::object();
  for (const auto& [name, s] : result.traces) {
    ordered_json t;
    t["mean"] = s.mean;
    t["std"] = s.std_dev;
    t["q05"] = s.q05;
    t["q25"] = s.q25;
    t["q50"] = s.q50;
    t["q75"] = s.q75;
    t["q95"] = s.q95;
    traces[name] = t;
  }
  report["traces"] = traces;
  report["config_hash"] = config_hash(config);
  std::ofstream out(result.report_path);
  out << report.dump(2) << "\n";
  return result;
}

}  // namespace hamgp
