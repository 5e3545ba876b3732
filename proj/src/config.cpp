#include "hamgp/config.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "hamgp/errors.hpp"
#include "json.hpp"

namespace hamgp {
namespace {

using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError("config field '" + path + "': " + what);
}

// ---- typed readers with field-path diagnostics ----

double as_number(const ordered_json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

long as_integer(const ordered_json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<long>();
}

bool as_bool(const ordered_json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string as_string(const ordered_json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

Eigen::VectorXd as_vector(const ordered_json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v[static_cast<Eigen::Index>(i)] =
        as_number(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

Eigen::Vector2d as_vector2(const ordered_json& j, const std::string& path) {
  Eigen::VectorXd v = as_vector(j, path);
  if (v.size() != 2) fail(path, "expected exactly 2 numbers");
  return v;
}

void expect_object(const ordered_json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

// Reject typos early: every key of j must appear in `known`.
void check_keys(const ordered_json& j, const std::string& path,
                std::initializer_list<const char*> known) {
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : known)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok) fail(path + "." + item.key(), "unknown field");
  }
}

const ordered_json* find(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

// ---- input signals ----

ordered_json term_to_json(const InputTerm& term) {
  ordered_json j;
  switch (term.kind) {
    case InputTerm::Kind::Constant:
      j["kind"] = "constant";
      j["amplitude"] = term.amplitude;
      break;
    case InputTerm::Kind::Pulse:
      j["kind"] = "pulse";
      j["amplitude"] = term.amplitude;
      j["start_s"] = term.start;
      j["stop_s"] = term.stop;
      break;
    case InputTerm::Kind::Sine:
      j["kind"] = "sine";
      j["amplitude"] = term.amplitude;
      j["omega_rad_per_s"] = term.omega;
      j["phase_rad"] = term.phase;
      break;
    case InputTerm::Kind::Chirp:
      j["kind"] = "chirp";
      j["amplitude"] = term.amplitude;
      j["omega_rad_per_s"] = term.omega;
      j["omega_rate_rad_per_s2"] = term.omega_rate;
      j["phase_rad"] = term.phase;
      break;
    case InputTerm::Kind::PiecewiseLinear:
      j["kind"] = "piecewise_linear";
      j["times_s"] = term.times;
      j["values"] = term.values;
      break;
  }
  return j;
}

InputTerm parse_term(const ordered_json& j, const std::string& path) {
  expect_object(j, path);
  const ordered_json* kind = find(j, "kind");
  if (!kind) fail(path + ".kind", "missing");
  const std::string name = as_string(*kind, path + ".kind");

  InputTerm term;
  if (name == "constant") {
    term.kind = InputTerm::Kind::Constant;
    check_keys(j, path, {"kind", "amplitude"});
  } else if (name == "pulse") {
    term.kind = InputTerm::Kind::Pulse;
    check_keys(j, path, {"kind", "amplitude", "start_s", "stop_s"});
  } else if (name == "sine") {
    term.kind = InputTerm::Kind::Sine;
    check_keys(j, path, {"kind", "amplitude", "omega_rad_per_s", "phase_rad"});
  } else if (name == "chirp") {
    term.kind = InputTerm::Kind::Chirp;
    check_keys(j, path,
               {"kind", "amplitude", "omega_rad_per_s",
                "omega_rate_rad_per_s2", "phase_rad"});
  } else if (name == "piecewise_linear") {
    term.kind = InputTerm::Kind::PiecewiseLinear;
    check_keys(j, path, {"kind", "times_s", "values"});
  } else {
    fail(path + ".kind", "unknown input term kind '" + name + "'");
  }

  if (const ordered_json* v = find(j, "amplitude"))
    term.amplitude = as_number(*v, path + ".amplitude");
  if (const ordered_json* v = find(j, "start_s"))
    term.start = as_number(*v, path + ".start_s");
  if (const ordered_json* v = find(j, "stop_s"))
    term.stop = as_number(*v, path + ".stop_s");
  if (const ordered_json* v = find(j, "omega_rad_per_s"))
    term.omega = as_number(*v, path + ".omega_rad_per_s");
  if (const ordered_json* v = find(j, "omega_rate_rad_per_s2"))
    term.omega_rate = as_number(*v, path + ".omega_rate_rad_per_s2");
  if (const ordered_json* v = find(j, "phase_rad"))
    term.phase = as_number(*v, path + ".phase_rad");
  if (const ordered_json* v = find(j, "times_s")) {
    Eigen::VectorXd t = as_vector(*v, path + ".times_s");
    term.times.assign(t.data(), t.data() + t.size());
  }
  if (const ordered_json* v = find(j, "values")) {
    Eigen::VectorXd t = as_vector(*v, path + ".values");
    term.values.assign(t.data(), t.data() + t.size());
  }
  return term;
}

ordered_json signal_to_json(const InputSignal& signal) {
  ordered_json j = ordered_json::array();
  for (const InputTerm& term : signal.terms) j.push_back(term_to_json(term));
  return j;
}

InputSignal parse_signal(const ordered_json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of input terms");
  InputSignal signal;
  for (std::size_t i = 0; i < j.size(); ++i)
    signal.terms.push_back(
        parse_term(j[i], path + "[" + std::to_string(i) + "]"));
  return signal;
}

void validate_signal(const InputSignal& signal, const std::string& path) {
  for (std::size_t i = 0; i < signal.terms.size(); ++i) {
    const InputTerm& term = signal.terms[i];
    const std::string p = path + "[" + std::to_string(i) + "]";
    if (!std::isfinite(term.amplitude)) fail(p + ".amplitude", "not finite");
    if (term.kind == InputTerm::Kind::Pulse && term.stop < term.start)
      fail(p + ".stop_s", "pulse stops before it starts");
    if (term.kind == InputTerm::Kind::PiecewiseLinear) {
      if (term.times.empty()) fail(p + ".times_s", "needs at least one node");
      if (term.times.size() != term.values.size())
        fail(p + ".values", "node count differs from times_s");
      for (std::size_t k = 1; k < term.times.size(); ++k)
        if (term.times[k] <= term.times[k - 1])
          fail(p + ".times_s", "must be strictly increasing");
    }
  }
}

// ---- structure patterns ----

ordered_json pattern_to_json(const MatrixPattern& pattern) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < pattern.rows; ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < pattern.cols; ++c) {
      const PatternEntry& e = pattern.at(r, c);
      if (e.is_slot())
        row.push_back(e.scale < 0 ? "-" + e.slot : e.slot);
      else
        row.push_back(e.constant);
    }
    rows.push_back(row);
  }
  return rows;
}

MatrixPattern parse_pattern(const ordered_json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected an array of rows");
  MatrixPattern pattern;
  pattern.rows = static_cast<Eigen::Index>(j.size());
  pattern.cols = -1;
  for (std::size_t r = 0; r < j.size(); ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!j[r].is_array()) fail(rp, "expected an array");
    if (pattern.cols < 0)
      pattern.cols = static_cast<Eigen::Index>(j[r].size());
    else if (pattern.cols != static_cast<Eigen::Index>(j[r].size()))
      fail(rp, "ragged matrix: rows have different lengths");
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      const std::string ep = rp + "[" + std::to_string(c) + "]";
      const ordered_json& cell = j[r][c];
      PatternEntry entry;
      if (cell.is_number()) {
        entry.constant = cell.get<double>();
      } else if (cell.is_string()) {
        std::string s = cell.get<std::string>();
        entry.scale = 1.0;
        if (!s.empty() && s[0] == '-') {
          entry.scale = -1.0;
          s.erase(0, 1);
        }
        if (s.empty()) fail(ep, "slot name is empty");
        entry.slot = s;
      } else {
        fail(ep, "expected a number or a slot name string");
      }
      pattern.entries.push_back(entry);
    }
  }
  if (pattern.cols < 1) fail(path, "matrix has no columns");
  return pattern;
}

// ---- hyperpriors and slot-keyed vectors ----

ordered_json coord_to_json(const CoordSpec& spec) {
  ordered_json j;
  j["log_scale"] = spec.log_scale;
  j["mean"] = spec.prior_mean;
  j["std"] = spec.prior_std;
  return j;
}

CoordSpec parse_coord(const ordered_json& j, const std::string& path,
                      const std::string& name) {
  expect_object(j, path);
  check_keys(j, path, {"log_scale", "mean", "std"});
  CoordSpec spec;
  spec.name = name;
  if (const ordered_json* v = find(j, "log_scale"))
    spec.log_scale = as_bool(*v, path + ".log_scale");
  if (const ordered_json* v = find(j, "mean"))
    spec.prior_mean = as_number(*v, path + ".mean");
  if (const ordered_json* v = find(j, "std"))
    spec.prior_std = as_number(*v, path + ".std");
  return spec;
}

// Objects keyed by coordinate name; parsing sorts by name so the layout
// matches SystemStructure::slots() ordering.
HyperPrior parse_prior_block(const ordered_json& j, const std::string& path) {
  expect_object(j, path);
  std::map<std::string, CoordSpec> by_name;
  for (const auto& item : j.items())
    by_name[item.key()] =
        parse_coord(item.value(), path + "." + item.key(), item.key());
  HyperPrior prior;
  for (const auto& [name, spec] : by_name) prior.coords.push_back(spec);
  return prior;
}

ordered_json prior_block_to_json(const HyperPrior& prior) {
  ordered_json j = ordered_json::object();
  for (const CoordSpec& spec : prior.coords) j[spec.name] = coord_to_json(spec);
  return j;
}

Eigen::VectorXd parse_named_values(const ordered_json& j,
                                   const std::string& path,
                                   const std::vector<std::string>& names) {
  expect_object(j, path);
  Eigen::VectorXd out(static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const ordered_json* v = find(j, names[i].c_str());
    if (!v) fail(path + "." + names[i], "missing");
    out[static_cast<Eigen::Index>(i)] = as_number(*v, path + "." + names[i]);
  }
  for (const auto& item : j.items()) {
    bool known = false;
    for (const std::string& n : names)
      if (item.key() == n) known = true;
    if (!known) fail(path + "." + item.key(), "unknown name");
  }
  return out;
}

ordered_json named_values_to_json(const Eigen::VectorXd& values,
                                  const std::vector<std::string>& names) {
  ordered_json j = ordered_json::object();
  for (std::size_t i = 0; i < names.size(); ++i)
    j[names[i]] = values[static_cast<Eigen::Index>(i)];
  return j;
}

std::vector<std::string> prior_names(const HyperPrior& prior) {
  std::vector<std::string> names;
  for (const CoordSpec& spec : prior.coords) names.push_back(spec.name);
  return names;
}

// ---- enum names ----

std::string symmetry_name(SymmetryMode mode) {
  switch (mode) {
    case SymmetryMode::None: return "none";
    case SymmetryMode::AntiSymmetric: return "antisymmetric";
    case SymmetryMode::AllEvenIndices: return "all_even";
  }
  return "none";
}

SymmetryMode parse_symmetry(const std::string& s, const std::string& path) {
  if (s == "none") return SymmetryMode::None;
  if (s == "antisymmetric") return SymmetryMode::AntiSymmetric;
  if (s == "all_even") return SymmetryMode::AllEvenIndices;
  fail(path, "expected one of none, antisymmetric, all_even");
}

std::string mode_name(MeasurementMode mode) {
  return mode == MeasurementMode::InputState ? "input_state" : "input_output";
}

MeasurementMode parse_mode(const std::string& s, const std::string& path) {
  if (s == "input_output") return MeasurementMode::InputOutput;
  if (s == "input_state") return MeasurementMode::InputState;
  fail(path, "expected input_output or input_state");
}

// ---- section serializers ----

ordered_json scenario_to_json(const ScenarioConfig& s) {
  ordered_json j;
  j["n_steps"] = s.n_steps;
  j["dt_s"] = s.dt;
  j["x0"] = std::vector<double>{s.x0[0], s.x0[1]};
  j["input"] = signal_to_json(s.input);
  j["process_noise_std"] = s.process_noise_std;
  j["measurement_noise_std"] = s.measurement_noise_std;
  j["measurement_mode"] = mode_name(s.mode);
  j["seed"] = s.seed;
  return j;
}

void parse_scenario(const ordered_json& j, const std::string& path,
                    ScenarioConfig& s) {
  expect_object(j, path);
  check_keys(j, path,
             {"n_steps", "dt_s", "x0", "input", "process_noise_std",
              "measurement_noise_std", "measurement_mode", "seed"});
  if (const ordered_json* v = find(j, "n_steps"))
    s.n_steps = static_cast<int>(as_integer(*v, path + ".n_steps"));
  if (const ordered_json* v = find(j, "dt_s"))
    s.dt = as_number(*v, path + ".dt_s");
  if (const ordered_json* v = find(j, "x0"))
    s.x0 = as_vector2(*v, path + ".x0");
  if (const ordered_json* v = find(j, "input"))
    s.input = parse_signal(*v, path + ".input");
  if (const ordered_json* v = find(j, "process_noise_std"))
    s.process_noise_std = as_number(*v, path + ".process_noise_std");
  if (const ordered_json* v = find(j, "measurement_noise_std"))
    s.measurement_noise_std = as_number(*v, path + ".measurement_noise_std");
  if (const ordered_json* v = find(j, "measurement_mode"))
    s.mode = parse_mode(as_string(*v, path + ".measurement_mode"),
                        path + ".measurement_mode");
  if (const ordered_json* v = find(j, "seed")) {
    long raw = as_integer(*v, path + ".seed");
    if (raw < 0) fail(path + ".seed", "must be non-negative");
    s.seed = static_cast<unsigned>(raw);
  }
}

ordered_json predict_to_json(const PredictSettings& p) {
  ordered_json j;
  j["x0"] = std::vector<double>{p.x0[0], p.x0[1]};
  j["dt_s"] = p.dt;
  j["n_steps"] = p.n_steps;
  j["n_samples"] = p.n_samples;
  j["input"] = signal_to_json(p.input);
  return j;
}

void parse_predict(const ordered_json& j, const std::string& path,
                   PredictSettings& p) {
  expect_object(j, path);
  check_keys(j, path, {"x0", "dt_s", "n_steps", "n_samples", "input"});
  if (const ordered_json* v = find(j, "x0"))
    p.x0 = as_vector2(*v, path + ".x0");
  if (const ordered_json* v = find(j, "dt_s"))
    p.dt = as_number(*v, path + ".dt_s");
  if (const ordered_json* v = find(j, "n_steps"))
    p.n_steps = static_cast<int>(as_integer(*v, path + ".n_steps"));
  if (const ordered_json* v = find(j, "n_samples"))
    p.n_samples = static_cast<int>(as_integer(*v, path + ".n_samples"));
  if (const ordered_json* v = find(j, "input"))
    p.input = parse_signal(*v, path + ".input");
}

ordered_json config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;

  ordered_json data;
  data["true_damping"] = c.data.true_damping;
  data["csv_path"] = c.data.csv_path;
  data["scenario"] = scenario_to_json(c.data.scenario);
  j["data"] = data;

  ordered_json model;
  model["n_basis"] = c.model.n_basis;
  model["domain_half_widths"] = std::vector<double>(
      c.model.domain_half_widths.data(),
      c.model.domain_half_widths.data() + c.model.domain_half_widths.size());
  model["symmetry"] = symmetry_name(c.model.symmetry);
  model["max_index_per_dim"] = c.model.max_index_per_dim;
  ordered_json structure;
  structure["interconnection"] = pattern_to_json(c.model.structure.interconnection);
  structure["dissipation"] = pattern_to_json(c.model.structure.dissipation);
  structure["input_map"] = pattern_to_json(c.model.structure.input_map);
  model["structure"] = structure;
  j["model"] = model;

  ordered_json noise;
  noise["process_std"] = c.noise.process_std;
  noise["measurement_std"] = c.noise.measurement_std;
  noise["initial_state_std"] = c.noise.initial_state_std;
  j["noise"] = noise;

  ordered_json priors;
  priors["kernel"] = prior_block_to_json(c.priors.kernel);
  priors["structural"] = prior_block_to_json(c.priors.structural);
  ordered_json weights;
  weights["psi"] = c.priors.psi;
  weights["nu"] = c.priors.nu;
  priors["weights"] = weights;
  j["priors"] = priors;

  const std::vector<std::string> kernel_names{"signal_variance",
                                              "length_scale"};
  const std::vector<std::string> slot_names = prior_names(c.priors.structural);
  ordered_json sampler;
  sampler["n_iterations"] = c.sampler.n_iterations;
  sampler["burn_in"] = c.sampler.burn_in;
  sampler["thinning"] = c.sampler.thinning;
  sampler["n_particles"] = c.sampler.n_particles;
  sampler["ancestor_sampling"] = c.sampler.ancestor_sampling;
  sampler["kernel_mh"] = c.sampler.kernel_mh;
  sampler["structural_mh"] = c.sampler.structural_mh;
  sampler["laplace_structural"] = c.sampler.laplace_structural;
  sampler["adapt_proposals"] = c.sampler.adapt_proposals;
  sampler["adapt_interval"] = c.sampler.adapt_interval;
  sampler["degenerate_retry_budget"] = c.sampler.degenerate_retry_budget;
  sampler["kernel_init"] = named_values_to_json(c.sampler.kernel_init,
                                                kernel_names);
  sampler["kernel_proposal_scales"] =
      named_values_to_json(c.sampler.kernel_scales, kernel_names);
  sampler["structural_init"] =
      named_values_to_json(c.sampler.structural_init, slot_names);
  sampler["structural_proposal_scales"] =
      named_values_to_json(c.sampler.structural_scales, slot_names);
  sampler["trajectory_stride"] = c.sampler.trajectory_stride;
  j["sampler"] = sampler;

  ordered_json evaluation;
  evaluation["grid_n"] = c.evaluation.grid_n;
  evaluation["grid_min"] =
      std::vector<double>{c.evaluation.grid_min[0], c.evaluation.grid_min[1]};
  evaluation["grid_max"] =
      std::vector<double>{c.evaluation.grid_max[0], c.evaluation.grid_max[1]};
  evaluation["predict"] = predict_to_json(c.evaluation.predict);
  j["evaluation"] = evaluation;

  return j;
}

ExperimentConfig config_from_json(const ordered_json& j) {
  ExperimentConfig c = default_config();
  expect_object(j, "(root)");
  check_keys(j, "(root)",
             {"output_dir", "seed", "data", "model", "noise", "priors",
              "sampler", "evaluation"});

  if (const ordered_json* v = find(j, "output_dir"))
    c.output_dir = as_string(*v, "output_dir");
  if (const ordered_json* v = find(j, "seed")) {
    long raw = as_integer(*v, "seed");
    if (raw < 0) fail("seed", "must be non-negative");
    c.seed = static_cast<unsigned>(raw);
  }

  if (const ordered_json* d = find(j, "data")) {
    expect_object(*d, "data");
    check_keys(*d, "data", {"true_damping", "csv_path", "scenario"});
    if (const ordered_json* v = find(*d, "true_damping"))
      c.data.true_damping = as_number(*v, "data.true_damping");
    if (const ordered_json* v = find(*d, "csv_path"))
      c.data.csv_path = as_string(*v, "data.csv_path");
    if (const ordered_json* v = find(*d, "scenario"))
      parse_scenario(*v, "data.scenario", c.data.scenario);
  }

  if (const ordered_json* m = find(j, "model")) {
    expect_object(*m, "model");
    check_keys(*m, "model",
               {"n_basis", "domain_half_widths", "symmetry",
                "max_index_per_dim", "structure"});
    if (const ordered_json* v = find(*m, "n_basis"))
      c.model.n_basis = as_integer(*v, "model.n_basis");
    if (const ordered_json* v = find(*m, "domain_half_widths"))
      c.model.domain_half_widths = as_vector(*v, "model.domain_half_widths");
    if (const ordered_json* v = find(*m, "symmetry"))
      c.model.symmetry = parse_symmetry(as_string(*v, "model.symmetry"),
                                        "model.symmetry");
    if (const ordered_json* v = find(*m, "max_index_per_dim"))
      c.model.max_index_per_dim =
          static_cast<int>(as_integer(*v, "model.max_index_per_dim"));
    if (const ordered_json* s = find(*m, "structure")) {
      expect_object(*s, "model.structure");
      check_keys(*s, "model.structure",
                 {"interconnection", "dissipation", "input_map"});
      if (const ordered_json* v = find(*s, "interconnection"))
        c.model.structure.interconnection =
            parse_pattern(*v, "model.structure.interconnection");
      if (const ordered_json* v = find(*s, "dissipation"))
        c.model.structure.dissipation =
            parse_pattern(*v, "model.structure.dissipation");
      if (const ordered_json* v = find(*s, "input_map"))
        c.model.structure.input_map =
            parse_pattern(*v, "model.structure.input_map");
    }
  }

  if (const ordered_json* n = find(j, "noise")) {
    expect_object(*n, "noise");
    check_keys(*n, "noise",
               {"process_std", "measurement_std", "initial_state_std"});
    if (const ordered_json* v = find(*n, "process_std"))
      c.noise.process_std = as_number(*v, "noise.process_std");
    if (const ordered_json* v = find(*n, "measurement_std"))
      c.noise.measurement_std = as_number(*v, "noise.measurement_std");
    if (const ordered_json* v = find(*n, "initial_state_std"))
      c.noise.initial_state_std = as_number(*v, "noise.initial_state_std");
  }

  if (const ordered_json* p = find(j, "priors")) {
    expect_object(*p, "priors");
    check_keys(*p, "priors", {"kernel", "structural", "weights"});
    if (const ordered_json* v = find(*p, "kernel")) {
      // The kernel block is keyed by name but laid out in the fixed order
      // (signal variance, length scale); unknown names stay at the back so
      // validation can report them.
      HyperPrior raw = parse_prior_block(*v, "priors.kernel");
      HyperPrior kernel;
      for (const char* name : {"signal_variance", "length_scale"})
        for (const CoordSpec& spec : raw.coords)
          if (spec.name == name) kernel.coords.push_back(spec);
      for (const CoordSpec& spec : raw.coords)
        if (spec.name != "signal_variance" && spec.name != "length_scale")
          kernel.coords.push_back(spec);
      c.priors.kernel = kernel;
    }
    if (const ordered_json* v = find(*p, "structural"))
      c.priors.structural = parse_prior_block(*v, "priors.structural");
    if (const ordered_json* w = find(*p, "weights")) {
      expect_object(*w, "priors.weights");
      check_keys(*w, "priors.weights", {"psi", "nu"});
      if (const ordered_json* v = find(*w, "psi"))
        c.priors.psi = as_number(*v, "priors.weights.psi");
      if (const ordered_json* v = find(*w, "nu"))
        c.priors.nu = as_number(*v, "priors.weights.nu");
    }
  }

  const std::vector<std::string> kernel_names{"signal_variance",
                                              "length_scale"};
  const std::vector<std::string> slot_names = prior_names(c.priors.structural);
  if (const ordered_json* s = find(j, "sampler")) {
    expect_object(*s, "sampler");
    check_keys(*s, "sampler",
               {"n_iterations", "burn_in", "thinning", "n_particles",
                "ancestor_sampling", "kernel_mh", "structural_mh",
                "laplace_structural", "adapt_proposals", "adapt_interval",
                "degenerate_retry_budget", "kernel_init",
                "kernel_proposal_scales", "structural_init",
                "structural_proposal_scales", "trajectory_stride"});
    if (const ordered_json* v = find(*s, "n_iterations"))
      c.sampler.n_iterations =
          static_cast<int>(as_integer(*v, "sampler.n_iterations"));
    if (const ordered_json* v = find(*s, "burn_in"))
      c.sampler.burn_in = static_cast<int>(as_integer(*v, "sampler.burn_in"));
    if (const ordered_json* v = find(*s, "thinning"))
      c.sampler.thinning = static_cast<int>(as_integer(*v, "sampler.thinning"));
    if (const ordered_json* v = find(*s, "n_particles"))
      c.sampler.n_particles = as_integer(*v, "sampler.n_particles");
    if (const ordered_json* v = find(*s, "ancestor_sampling"))
      c.sampler.ancestor_sampling = as_bool(*v, "sampler.ancestor_sampling");
    if (const ordered_json* v = find(*s, "kernel_mh"))
      c.sampler.kernel_mh = as_bool(*v, "sampler.kernel_mh");
    if (const ordered_json* v = find(*s, "structural_mh"))
      c.sampler.structural_mh = as_bool(*v, "sampler.structural_mh");
    if (const ordered_json* v = find(*s, "laplace_structural"))
      c.sampler.laplace_structural = as_bool(*v, "sampler.laplace_structural");
    if (const ordered_json* v = find(*s, "adapt_proposals"))
      c.sampler.adapt_proposals = as_bool(*v, "sampler.adapt_proposals");
    if (const ordered_json* v = find(*s, "adapt_interval"))
      c.sampler.adapt_interval =
          static_cast<int>(as_integer(*v, "sampler.adapt_interval"));
    if (const ordered_json* v = find(*s, "degenerate_retry_budget"))
      c.sampler.degenerate_retry_budget =
          static_cast<int>(as_integer(*v, "sampler.degenerate_retry_budget"));
    if (const ordered_json* v = find(*s, "kernel_init"))
      c.sampler.kernel_init =
          parse_named_values(*v, "sampler.kernel_init", kernel_names);
    if (const ordered_json* v = find(*s, "kernel_proposal_scales"))
      c.sampler.kernel_scales = parse_named_values(
          *v, "sampler.kernel_proposal_scales", kernel_names);
    if (const ordered_json* v = find(*s, "structural_init"))
      c.sampler.structural_init =
          parse_named_values(*v, "sampler.structural_init", slot_names);
    if (const ordered_json* v = find(*s, "structural_proposal_scales"))
      c.sampler.structural_scales = parse_named_values(
          *v, "sampler.structural_proposal_scales", slot_names);
    if (const ordered_json* v = find(*s, "trajectory_stride"))
      c.sampler.trajectory_stride =
          static_cast<int>(as_integer(*v, "sampler.trajectory_stride"));
  }

  if (const ordered_json* e = find(j, "evaluation")) {
    expect_object(*e, "evaluation");
    check_keys(*e, "evaluation", {"grid_n", "grid_min", "grid_max", "predict"});
    if (const ordered_json* v = find(*e, "grid_n"))
      c.evaluation.grid_n =
          static_cast<int>(as_integer(*v, "evaluation.grid_n"));
    if (const ordered_json* v = find(*e, "grid_min"))
      c.evaluation.grid_min = as_vector2(*v, "evaluation.grid_min");
    if (const ordered_json* v = find(*e, "grid_max"))
      c.evaluation.grid_max = as_vector2(*v, "evaluation.grid_max");
    if (const ordered_json* v = find(*e, "predict"))
      parse_predict(*v, "evaluation.predict", c.evaluation.predict);
  }

  return c;
}

}  // namespace

ExperimentConfig default_config() {
  ExperimentConfig c;
  OscillatorTruth truth;

  c.data.scenario.n_steps = 500;
  c.data.scenario.dt = 0.02;
  c.data.scenario.input = default_training_signal();
  c.data.scenario.mode = MeasurementMode::InputState;
  c.data.scenario.seed = 7;

  c.model.n_basis = 20;
  c.model.structure = truth.structure_template();

  c.priors.kernel.coords = {
      CoordSpec{"signal_variance", true, 0.0, 10.0},
      CoordSpec{"length_scale", true, 0.0, 10.0},
  };
  c.priors.structural.coords = {
      CoordSpec{"d", true, std::log(0.1), 2.0},
  };

  c.sampler.structural_init = Eigen::VectorXd::Constant(1, 0.1);
  c.sampler.structural_scales = Eigen::VectorXd::Constant(1, 0.05);
  c.sampler.laplace_structural = true;

  c.evaluation.predict.input = default_test_signal();
  return c;
}

void validate_config(const ExperimentConfig& c) {
  if (c.output_dir.empty()) fail("output_dir", "must not be empty");

  const SystemStructure& st = c.model.structure;
  const Eigen::Index n_x = st.state_dim();
  if (n_x < 1) fail("model.structure.interconnection", "matrix is empty");
  if (st.interconnection.cols != n_x)
    fail("model.structure.interconnection", "must be square");
  if (st.dissipation.rows != n_x || st.dissipation.cols != n_x)
    fail("model.structure.dissipation", "shape differs from interconnection");
  if (st.input_map.rows != n_x)
    fail("model.structure.input_map", "row count differs from the state dim");
  if (st.input_map.cols < 1) fail("model.structure.input_map", "no columns");

  if (c.model.n_basis < 1) fail("model.n_basis", "must be at least 1");
  if (c.model.max_index_per_dim < 1)
    fail("model.max_index_per_dim", "must be at least 1");
  if (c.model.domain_half_widths.size() != n_x)
    fail("model.domain_half_widths", "length differs from the state dim");
  for (Eigen::Index i = 0; i < n_x; ++i)
    if (!(c.model.domain_half_widths[i] > 0))
      fail("model.domain_half_widths", "entries must be positive");

  const ScenarioConfig& sc = c.data.scenario;
  if (c.data.csv_path.empty()) {
    if (n_x != 2)
      fail("data.csv_path",
           "built-in scenario generation needs a 2-state structure; supply "
           "a dataset for other shapes");
    if (sc.n_steps < 1) fail("data.scenario.n_steps", "must be at least 1");
    if (!(sc.dt > 0)) fail("data.scenario.dt_s", "must be positive");
    if (sc.process_noise_std < 0)
      fail("data.scenario.process_noise_std", "must be non-negative");
    if (sc.measurement_noise_std < 0)
      fail("data.scenario.measurement_noise_std", "must be non-negative");
    if (c.data.true_damping < 0)
      fail("data.true_damping", "must be non-negative");
    validate_signal(sc.input, "data.scenario.input");
  }

  if (!(c.noise.process_std > 0)) fail("noise.process_std", "must be positive");
  if (!(c.noise.measurement_std > 0))
    fail("noise.measurement_std", "must be positive");
  if (!(c.noise.initial_state_std > 0))
    fail("noise.initial_state_std", "must be positive");

  if (c.priors.kernel.size() != 2 ||
      c.priors.kernel.coords[0].name != "signal_variance" ||
      c.priors.kernel.coords[1].name != "length_scale")
    fail("priors.kernel",
         "must declare exactly signal_variance and length_scale");
  for (const CoordSpec& spec : c.priors.kernel.coords)
    if (!(spec.prior_std > 0))
      fail("priors.kernel." + spec.name + ".std", "must be positive");
  for (const CoordSpec& spec : c.priors.structural.coords)
    if (!(spec.prior_std > 0))
      fail("priors.structural." + spec.name + ".std", "must be positive");
  const std::set<std::string> slots = st.slots();
  if (c.priors.structural.size() != static_cast<Eigen::Index>(slots.size()))
    fail("priors.structural", "coordinate count differs from structure slots");
  {
    auto it = slots.begin();
    for (const CoordSpec& spec : c.priors.structural.coords) {
      if (spec.name != *it)
        fail("priors.structural." + spec.name,
             "does not match a structure slot");
      ++it;
    }
  }
  if (!(c.priors.psi > 0)) fail("priors.weights.psi", "must be positive");
  if (!(c.priors.nu > 0)) fail("priors.weights.nu", "must be positive");

  const SamplerSettings& sp = c.sampler;
  if (sp.n_iterations < 1) fail("sampler.n_iterations", "must be at least 1");
  if (sp.burn_in < 0) fail("sampler.burn_in", "must be non-negative");
  if (sp.burn_in >= sp.n_iterations)
    fail("sampler.burn_in", "must be below n_iterations");
  if (sp.thinning < 1) fail("sampler.thinning", "must be at least 1");
  if (sp.n_particles < 2) fail("sampler.n_particles", "must be at least 2");
  if (sp.adapt_interval < 1)
    fail("sampler.adapt_interval", "must be at least 1");
  if (sp.degenerate_retry_budget < 0)
    fail("sampler.degenerate_retry_budget", "must be non-negative");
  if (sp.trajectory_stride < 1)
    fail("sampler.trajectory_stride", "must be at least 1");
  if (sp.kernel_init.size() != 2)
    fail("sampler.kernel_init", "needs signal_variance and length_scale");
  if (sp.kernel_scales.size() != 2)
    fail("sampler.kernel_proposal_scales",
         "needs signal_variance and length_scale");
  if (sp.structural_init.size() != c.priors.structural.size())
    fail("sampler.structural_init", "size differs from the structural prior");
  if (sp.structural_scales.size() != c.priors.structural.size())
    fail("sampler.structural_proposal_scales",
         "size differs from the structural prior");
  for (Eigen::Index i = 0; i < 2; ++i)
    if (!(sp.kernel_scales[i] > 0))
      fail("sampler.kernel_proposal_scales", "entries must be positive");
  for (Eigen::Index i = 0; i < sp.structural_scales.size(); ++i)
    if (!(sp.structural_scales[i] > 0))
      fail("sampler.structural_proposal_scales", "entries must be positive");
  try {
    (void)c.priors.kernel.to_coords(sp.kernel_init);
  } catch (const std::exception&) {
    fail("sampler.kernel_init", "outside the prior's coordinate domain");
  }
  try {
    (void)c.priors.structural.to_coords(sp.structural_init);
  } catch (const std::exception&) {
    fail("sampler.structural_init", "outside the prior's coordinate domain");
  }

  const EvalSettings& ev = c.evaluation;
  if (ev.grid_n < 2) fail("evaluation.grid_n", "must be at least 2");
  for (int i = 0; i < 2; ++i)
    if (!(ev.grid_min[i] < ev.grid_max[i]))
      fail("evaluation.grid_min", "must lie below grid_max componentwise");
  if (!(ev.predict.dt > 0)) fail("evaluation.predict.dt_s", "must be positive");
  if (ev.predict.n_steps < 1)
    fail("evaluation.predict.n_steps", "must be at least 1");
  if (ev.predict.n_samples < 0)
    fail("evaluation.predict.n_samples", "must be non-negative");
  validate_signal(ev.predict.input, "evaluation.predict.input");
}

ExperimentConfig parse_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = config_from_json(j);
  validate_config(c);
  return c;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string render_config(const ExperimentConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

}  // namespace hamgp
