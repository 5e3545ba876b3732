#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hamgp/config.hpp"
#include "hamgp/errors.hpp"
#include "hamgp/experiment.hpp"
#include "hamgp/hamiltonian.hpp"
#include "hamgp/simulate.hpp"
#include "json.hpp"

using namespace hamgp;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Fresh scratch directory per test case, wiped up front so reruns are clean.
std::string scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "hamgp_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir.string();
}

ExperimentConfig smoke_config(const std::string& out_dir) {
  ExperimentConfig c = default_config();
  c.output_dir = out_dir;
  c.data.scenario.n_steps = 50;
  c.model.n_basis = 8;
  c.sampler.n_iterations = 10;
  c.sampler.burn_in = 5;
  c.sampler.n_particles = 5;
  c.sampler.trajectory_stride = 5;
  c.evaluation.predict.n_steps = 40;
  c.evaluation.predict.n_samples = 3;
  return c;
}

// Minimal hand-built chain file: every record carries the same model layout
// the benchmark config expects (one structural slot "d").
void write_chain_line(std::ofstream& out, int k, const Eigen::VectorXd& weights,
                      double d, double noise_var, bool kernel_acc,
                      bool structural_acc) {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["kernel"] = {{"signal_variance", 1.0}, {"length_scale", 1.0}};
  j["structural"] = {{"d", d}};
  j["noise_variance"] = noise_var;
  j["kernel_accepted"] = kernel_acc;
  j["structural_accepted"] = structural_acc;
  j["gradient_evidence"] = -1.0;
  j["transition_log_lik"] = -2.0;
  j["min_ess"] = 3.0;
  j["out_of_domain"] = 0;
  j["degenerate_retries"] = 0;
  j["weights"] = std::vector<double>(weights.data(),
                                     weights.data() + weights.size());
  out << j.dump() << "\n";
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               std::vector<std::string>* header) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  std::string line;
  REQUIRE(std::getline(in, line));
  if (header) {
    header->clear();
    std::istringstream h(line);
    std::string cell;
    while (std::getline(h, cell, ',')) header->push_back(cell);
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream r(line);
    std::string cell;
    while (std::getline(r, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("default config round trips through its own rendering") {
  const ExperimentConfig base = default_config();
  const std::string text = render_config(base);

  const ExperimentConfig parsed = parse_config(text);
  CHECK(render_config(parsed) == text);
  CHECK(config_hash(parsed) == config_hash(base));

  // A partial document keeps every other default.
  const ExperimentConfig partial = parse_config("{\"seed\": 42}");
  CHECK(partial.seed == 42);
  ExperimentConfig expected = base;
  expected.seed = 42;
  CHECK(render_config(partial) == render_config(expected));

  CHECK(parse_config("{}").sampler.n_iterations == base.sampler.n_iterations);
}

TEST_CASE("config diagnostics name the offending field") {
  const auto patch = [](const std::string& key_path, nlohmann::json value) {
    nlohmann::json doc = nlohmann::json::parse(render_config(default_config()));
    nlohmann::json* node = &doc;
    std::istringstream keys(key_path);
    std::string key, prev;
    std::vector<std::string> parts;
    while (std::getline(keys, key, '.')) parts.push_back(key);
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) node = &(*node)[parts[i]];
    (*node)[parts.back()] = std::move(value);
    return doc.dump();
  };

  CHECK_THROWS_WITH_AS(parse_config("{\"burnin\": 3}"),
                       doctest::Contains("burnin"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(patch("sampler.burn_in", 2000)),
                       doctest::Contains("sampler.burn_in"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(patch("model.symmetry", "odd")),
                       doctest::Contains("model.symmetry"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(patch("noise.measurement_std", 0.0)),
                       doctest::Contains("noise.measurement_std"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(patch("model.domain_half_widths", {8.0, 8.0, 8.0})),
      doctest::Contains("model.domain_half_widths"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(patch("sampler.kernel_init",
                                          {{"signal_variance", -1.0},
                                           {"length_scale", 1.0}})),
                       doctest::Contains("sampler.kernel_init"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config(patch("evaluation.grid_n", 1)),
                       doctest::Contains("evaluation.grid_n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("not json at all"),
                       doctest::Contains("not valid JSON"), ConfigError);

  // Every structure slot needs a prior.
  nlohmann::json doc = nlohmann::json::parse(render_config(default_config()));
  doc["priors"]["structural"] = nlohmann::json::object();
  doc["sampler"]["structural_init"] = nlohmann::json::object();
  doc["sampler"]["structural_proposal_scales"] = nlohmann::json::object();
  CHECK_THROWS_WITH_AS(parse_config(doc.dump()),
                       doctest::Contains("priors.structural"), ConfigError);

  doc = nlohmann::json::parse(render_config(default_config()));
  doc["data"]["scenario"]["input"] = nlohmann::json::array(
      {{{"kind", "pulse"}, {"amplitude", 1.0}, {"start_s", 2.0},
        {"stop_s", 1.0}}});
  CHECK_THROWS_WITH_AS(parse_config(doc.dump()), doctest::Contains("stop_s"),
                       ConfigError);
}

TEST_CASE("structure patterns parse numbers and signed slots") {
  nlohmann::json doc = nlohmann::json::parse(render_config(default_config()));
  doc["model"]["structure"]["dissipation"] = {{0.0, "-d"}, {"-d", "d"}};
  const ExperimentConfig c = parse_config(doc.dump());

  const MatrixPattern& r = c.model.structure.dissipation;
  CHECK(r.at(0, 0).is_slot() == false);
  CHECK(r.at(0, 1).slot == "d");
  CHECK(r.at(0, 1).scale == -1.0);
  CHECK(r.at(1, 1).slot == "d");
  CHECK(r.at(1, 1).scale == 1.0);

  // Rendering reproduces the signed-slot spelling.
  const std::string text = render_config(c);
  CHECK(text.find("\"-d\"") != std::string::npos);
  CHECK(parse_config(text).model.structure.dissipation.at(0, 1).scale == -1.0);

  CHECK_THROWS_WITH_AS(
      parse_config(nlohmann::json{{"model", {{"structure", {{"input_map",
          {{1.0}, {2.0, 3.0}}}}}}}}.dump()),
      doctest::Contains("ragged"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_config(nlohmann::json{{"model", {{"structure", {{"input_map",
          {{true}, {false}}}}}}}}.dump()),
      doctest::Contains("number or a slot name"), ConfigError);
}

TEST_CASE("dataset csv round trips exactly") {
  const std::string dir = scratch_dir("dataset");
  Dataset d;
  d.dt = 0.02;
  d.inputs = Eigen::MatrixXd::Random(7, 1);
  d.outputs = Eigen::MatrixXd::Random(7, 2);
  d.true_states = Eigen::MatrixXd::Random(7, 2);
  const std::string path = dir + "/data.csv";
  write_dataset_csv(path, d);

  const Dataset back = read_dataset_csv(path);
  CHECK(back.dt == Approx(d.dt).epsilon(1e-15));
  CHECK(back.inputs == d.inputs);
  CHECK(back.outputs == d.outputs);
  CHECK(back.true_states == d.true_states);

  std::ofstream bad(dir + "/bad.csv");
  bad << "t_s,u,y0\n0,1,2\n0.1,1,2\n0.3,1,2\n";
  bad.close();
  CHECK_THROWS_WITH_AS(read_dataset_csv(dir + "/bad.csv"),
                       doctest::Contains("uniformly spaced"), ConfigError);

  std::ofstream wrong(dir + "/wrong.csv");
  wrong << "time,u,y0\n0,1,2\n";
  wrong.close();
  CHECK_THROWS_WITH_AS(read_dataset_csv(dir + "/wrong.csv"),
                       doctest::Contains("t_s"), ConfigError);
}

TEST_CASE("train writes a manifest that reproduces the exact config") {
  const std::string dir = scratch_dir("manifest");
  const ExperimentConfig config = smoke_config(dir);

  const TrainResult r = cmd_train(config);
  CHECK(r.status == "ok");
  CHECK(r.n_records == config.sampler.n_iterations);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(r.manifest_path));
  CHECK(manifest.at("status") == "ok");
  CHECK(manifest.at("n_records") == config.sampler.n_iterations);
  CHECK(manifest.at("config_hash") == config_hash(config));

  const ExperimentConfig round =
      parse_config(manifest.at("effective_config").dump());
  CHECK(render_config(round) == render_config(config));
  CHECK(config_hash(round) == config_hash(config));
}

TEST_CASE("chain artifact round trips through the reader") {
  const std::string dir = scratch_dir("chain_roundtrip");
  const ExperimentConfig config = smoke_config(dir);
  const TrainResult r = cmd_train(config);

  const std::vector<ChainRecord> chain = read_chain(r.chain_path);
  REQUIRE(chain.size() == 10);
  for (std::size_t i = 0; i < chain.size(); ++i) {
    CHECK(chain[i].k == static_cast<int>(i) + 1);
    CHECK(chain[i].weights.size() == config.model.n_basis);
    CHECK(chain[i].structural.count("d") == 1);
    CHECK(chain[i].noise_variance > 0.0);
  }

  const std::vector<std::size_t> kept =
      retained_indices(chain, config.sampler.burn_in, config.sampler.thinning);
  REQUIRE(kept.size() == 5);
  CHECK(chain[kept.front()].k == 6);
  CHECK(retained_indices(chain, 5, 2).size() == 3);  // k = 6, 8, 10
  CHECK(retained_indices(chain, 10, 1).empty());

  const MeanModel mean = mean_model(chain, kept);
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(config.model.n_basis);
  double d_sum = 0.0;
  for (std::size_t idx : kept) {
    expect += chain[idx].weights;
    d_sum += chain[idx].structural.at("d");
  }
  CHECK((mean.weights - expect / 5.0).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(mean.structural.at("d") == Approx(d_sum / 5.0).epsilon(1e-15));

  std::ofstream bad(dir + "/broken.jsonl");
  bad << "{\"k\": 1}\n";
  bad.close();
  CHECK_THROWS_WITH_AS(read_chain(dir + "/broken.jsonl"),
                       doctest::Contains("malformed"), ConfigError);
}

TEST_CASE("flow metrics vanish when the fields coincide") {
  OscillatorTruth truth;
  const SystemMatrices m = truth.matrices();
  std::vector<FlowCell> cells;
  std::mt19937 shuffle_rng(2718);
  for (int i = 0; i < 200; ++i) {
    FlowCell cell;
    cell.x = Eigen::Vector2d(std::uniform_real_distribution<double>(-2, 2)(
                                 shuffle_rng),
                             std::uniform_real_distribution<double>(-2, 2)(
                                 shuffle_rng));
    cell.v_true = m.drift_gain * truth.gradient(cell.x);
    cell.v_est = cell.v_true;
    cells.push_back(cell);
  }
  const FlowMetrics same = flow_metrics(cells);
  CHECK(same.magnitude_rmse == 0.0);
  CHECK(same.angle_rmse == 0.0);
  CHECK(same.n_cells == 200);

  // Traversal order does not move the metric.
  for (auto& cell : cells)
    cell.v_est += Eigen::Vector2d(0.05, -0.02);
  const FlowMetrics fwd = flow_metrics(cells);
  std::shuffle(cells.begin(), cells.end(), shuffle_rng);
  const FlowMetrics shuffled = flow_metrics(cells);
  CHECK(shuffled.magnitude_rmse ==
        Approx(fwd.magnitude_rmse).epsilon(1e-12));
  CHECK(shuffled.angle_rmse == Approx(fwd.angle_rmse).epsilon(1e-12));
  CHECK(shuffled.n_angle_cells == fwd.n_angle_cells);

  // A pure rotation leaves magnitudes intact and moves only the angle.
  std::vector<FlowCell> rotated = cells;
  const double a = 0.3;
  Eigen::Matrix2d rot;
  rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  for (auto& cell : rotated) cell.v_est = rot * cell.v_true;
  const FlowMetrics rm = flow_metrics(rotated);
  CHECK(rm.magnitude_rmse == Approx(0.0).epsilon(1e-12));
  CHECK(rm.angle_rmse == Approx(a).epsilon(1e-9));
}

TEST_CASE("flow map report recomputes from the emitted csv") {
  const std::string dir = scratch_dir("flowmap");
  const ExperimentConfig config = smoke_config(dir);
  const TrainResult tr = cmd_train(config);

  const FlowMapResult r = cmd_eval_flowmap(config, tr.chain_path);
  CHECK(r.n_cells == config.evaluation.grid_n * config.evaluation.grid_n);
  CHECK(r.n_retained == 5);

  std::vector<std::string> header;
  const auto rows = read_csv(r.csv_path, &header);
  REQUIRE(header == std::vector<std::string>{"q", "p", "v_true_q", "v_true_p",
                                             "v_est_q", "v_est_p"});
  REQUIRE(static_cast<int>(rows.size()) == r.n_cells);

  std::vector<FlowCell> cells;
  for (const auto& row : rows) {
    FlowCell cell;
    cell.x = Eigen::Vector2d(std::stod(row[0]), std::stod(row[1]));
    cell.v_true = Eigen::Vector2d(std::stod(row[2]), std::stod(row[3]));
    cell.v_est = Eigen::Vector2d(std::stod(row[4]), std::stod(row[5]));
    cells.push_back(cell);
  }
  const FlowMetrics recomputed = flow_metrics(cells);
  CHECK(recomputed.magnitude_rmse == Approx(r.magnitude_rmse).epsilon(1e-12));
  CHECK(recomputed.angle_rmse == Approx(r.angle_rmse).epsilon(1e-12));
  CHECK(recomputed.n_angle_cells == r.n_angle_cells);

  // The default window has exactly one true fixed point: the origin.
  CHECK(r.n_cells - r.n_angle_cells == 1);

  const nlohmann::json report = nlohmann::json::parse(slurp(r.report_path));
  CHECK(report.at("magnitude_rmse").get<double>() ==
        Approx(r.magnitude_rmse).epsilon(1e-15));
  CHECK(report.at("angle_rmse_rad").get<double>() ==
        Approx(r.angle_rmse).epsilon(1e-15));
  CHECK(report.at("n_angle_excluded") == 1);

  // Burn-in swallowing the whole chain is an error, not a silent mean of 0.
  ExperimentConfig starved = config;
  starved.sampler.n_iterations = 20;
  CHECK_THROWS_WITH_AS(
      cmd_eval_flowmap([&] {
        ExperimentConfig c = starved;
        c.sampler.burn_in = 19;
        return c;
      }(), tr.chain_path),
      doctest::Contains("no retained records"), ConfigError);
}

TEST_CASE("prediction from a single record chain reproduces that model") {
  const std::string dir = scratch_dir("predict_single");
  ExperimentConfig config = smoke_config(dir);
  config.sampler.n_iterations = 1;
  config.sampler.burn_in = 0;
  config.evaluation.predict.n_samples = 1;
  config.evaluation.predict.n_steps = 60;

  const BasisExpansion expansion =
      build_expansion(DomainBox{config.model.domain_half_widths},
                      config.model.n_basis, config.model.symmetry,
                      config.model.max_index_per_dim);
  Rng weight_rng(33);
  Eigen::VectorXd weights = weight_rng.normal_vector(expansion.size());

  std::ofstream chain_out(dir + "/chain.jsonl");
  write_chain_line(chain_out, 1, weights, 0.15, 0.5, true, true);
  chain_out.close();

  const PredictResult r = cmd_predict(config, dir + "/chain.jsonl", "test");
  CHECK(r.n_trajectories == 2);
  CHECK(r.sample_ks == std::vector<int>{1});

  // Independent forward simulation of the same model.
  GPParams params{weights, 0.5};
  const SystemMatrices m =
      instantiate(config.model.structure, {{"d", 0.15}});
  const auto grad = [&](const Eigen::VectorXd& x) {
    return predict_gradient(expansion, params, x);
  };
  const PredictSettings& pred = config.evaluation.predict;
  Eigen::VectorXd x = pred.x0;
  std::vector<Eigen::Vector2d> expect;
  std::vector<double> expect_h;
  Eigen::VectorXd u(1);
  for (int t = 0; t <= pred.n_steps; ++t) {
    expect.push_back(x);
    expect_h.push_back(predict_hamiltonian(expansion, params, x));
    u[0] = pred.input.eval(t * pred.dt);
    if (t < pred.n_steps) x = symplectic_euler_step(grad, m, x, u, pred.dt);
  }

  std::vector<std::string> header;
  const auto rows = read_csv(r.csv_path, &header);
  REQUIRE(header ==
          std::vector<std::string>{"sample", "t_s", "u", "q", "p", "H"});
  REQUIRE(static_cast<int>(rows.size()) == 2 * (pred.n_steps + 1));

  // With one retained record the mean model equals the sampled model, so
  // both trajectories must equal the reference bit for bit (the CSV format
  // round-trips doubles exactly).
  for (const auto& row : rows) {
    const int t = static_cast<int>(
        std::lround(std::stod(row[1]) / pred.dt));
    CHECK((row[0] == "mean" || row[0] == "1"));
    CHECK(std::stod(row[3]) == expect[static_cast<std::size_t>(t)][0]);
    CHECK(std::stod(row[4]) == expect[static_cast<std::size_t>(t)][1]);
    CHECK(std::stod(row[5]) == expect_h[static_cast<std::size_t>(t)]);
  }

  // Asking for more samples than the chain holds names both counts.
  config.evaluation.predict.n_samples = 5;
  CHECK_THROWS_WITH_AS(cmd_predict(config, dir + "/chain.jsonl", "test"),
                       doctest::Contains("5"), ConfigError);
  CHECK_THROWS_WITH_AS(cmd_predict(config, dir + "/chain.jsonl", "test"),
                       doctest::Contains("1 retained"), ConfigError);
  config.evaluation.predict.n_samples = 1;
  CHECK_THROWS_WITH_AS(cmd_predict(config, dir + "/chain.jsonl", "nope"),
                       doctest::Contains("nope"), ConfigError);
}

TEST_CASE("diagnose recounts acceptances and zeroes constant traces") {
  const std::string dir = scratch_dir("diagnose");
  ExperimentConfig config = smoke_config(dir);
  config.sampler.n_iterations = 4;
  config.sampler.burn_in = 0;

  Eigen::VectorXd w = Eigen::VectorXd::Constant(config.model.n_basis, 0.25);
  std::ofstream chain_out(dir + "/chain.jsonl");
  write_chain_line(chain_out, 1, w, 0.15, 0.5, true, false);
  write_chain_line(chain_out, 2, w, 0.15, 0.5, true, false);
  write_chain_line(chain_out, 3, w, 0.15, 0.5, false, true);
  write_chain_line(chain_out, 4, w, 0.15, 0.5, true, false);
  chain_out.close();

  const DiagnoseResult r = cmd_diagnose(config, dir + "/chain.jsonl");
  CHECK(r.n_records == 4);
  CHECK(r.kernel_acceptance == Approx(0.75).epsilon(1e-15));
  CHECK(r.structural_acceptance == Approx(0.25).epsilon(1e-15));

  for (const char* name :
       {"signal_variance", "length_scale", "d", "noise_variance"}) {
    REQUIRE(r.traces.count(name) == 1);
    const TraceSummary& t = r.traces.at(name);
    CHECK(t.std_dev == 0.0);
    CHECK(t.q05 == t.q95);
    CHECK(fs::exists(dir + "/hist_" + std::string(name) + ".csv"));
  }
  CHECK(r.traces.at("d").mean == Approx(0.15).epsilon(1e-15));

  const nlohmann::json report = nlohmann::json::parse(slurp(r.report_path));
  CHECK(report.at("acceptance").at("kernel").get<double>() ==
        Approx(0.75).epsilon(1e-15));
  CHECK(report.at("traces").at("d").at("std").get<double>() == 0.0);

  // Histogram counts add back up to the record count.
  std::vector<std::string> header;
  const auto rows = read_csv(dir + "/hist_d.csv", &header);
  long total = 0;
  for (const auto& row : rows) total += std::stol(row[2]);
  CHECK(total == 4);
}

TEST_CASE("subcommand artifacts are byte identical across reruns") {
  const std::string dir = scratch_dir("determinism");
  const ExperimentConfig config = smoke_config(dir);

  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult first = cmd_train(config);
  const double train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  CHECK(first.status == "ok");
  CHECK(train_seconds < 10.0);

  (void)cmd_eval_flowmap(config, first.chain_path);
  (void)cmd_predict(config, first.chain_path, "test");
  (void)cmd_diagnose(config, first.chain_path);

  const std::vector<std::string> artifacts{
      "chain.jsonl",       "data.csv",        "trajectories.csv",
      "run_log.txt",       "manifest.json",   "flowmap.csv",
      "flowmap_report.json", "prediction.csv", "prediction_report.json",
      "diagnostics.json"};
  std::map<std::string, std::string> snapshot;
  for (const std::string& name : artifacts)
    snapshot[name] = slurp(dir + "/" + name);

  (void)cmd_train(config);
  (void)cmd_eval_flowmap(config, first.chain_path);
  (void)cmd_predict(config, first.chain_path, "test");
  (void)cmd_diagnose(config, first.chain_path);
  for (const std::string& name : artifacts)
    CHECK_MESSAGE(slurp(dir + "/" + name) == snapshot[name], name);

  // A different seed must actually change the chain.
  ExperimentConfig other = config;
  other.seed = config.seed + 1;
  (void)cmd_train(other);
  CHECK(slurp(dir + "/chain.jsonl") != snapshot["chain.jsonl"]);
}

TEST_CASE("training on an external dataset matches the generated run") {
  const std::string dir_a = scratch_dir("external_a");
  const std::string dir_b = scratch_dir("external_b");

  ExperimentConfig gen = smoke_config(dir_a);
  const TrainResult first = cmd_train(gen);
  CHECK(first.status == "ok");

  // Re-train from the emitted CSV; the chain must come out identical since
  // the data, dt and seed agree.
  ExperimentConfig ext = smoke_config(dir_b);
  ext.data.csv_path = dir_a + "/data.csv";
  const TrainResult second = cmd_train(ext);
  CHECK(second.status == "ok");
  CHECK(slurp(second.chain_path) == slurp(first.chain_path));
}

TEST_CASE("an exploding record aborts with partial artifacts") {
  const std::string dir = scratch_dir("abort");
  ExperimentConfig config = smoke_config(dir);
  config.sampler.degenerate_retry_budget = 1;

  // Poison the dataset: an output far outside the basis domain makes every
  // particle weight vanish.
  const Dataset data = load_dataset(config);
  Dataset poisoned = data;
  poisoned.outputs(25, 0) = 1e200;
  write_dataset_csv(dir + "/poisoned.csv", poisoned);
  config.data.csv_path = dir + "/poisoned.csv";

  const TrainResult r = cmd_train(config);
  CHECK(r.status == "aborted");
  CHECK(r.error.find("iteration") != std::string::npos);

  const nlohmann::json manifest = nlohmann::json::parse(slurp(r.manifest_path));
  CHECK(manifest.at("status") == "aborted");
  CHECK(manifest.at("error").get<std::string>() == r.error);
  CHECK(fs::exists(dir + "/chain.jsonl"));
}
