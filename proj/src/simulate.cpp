#include "hamgp/simulate.hpp"

#include <algorithm>
#include <string>

#include "hamgp/hamiltonian.hpp"

namespace hamgp {

SystemMatrices OscillatorTruth::matrices() const {
  SystemMatrices m;
  m.J.resize(2, 2);
  m.J << 0.0, 1.0, -1.0, 0.0;
  m.R = Eigen::Matrix2d::Zero();
  m.R(1, 1) = damping;
  m.G.resize(2, 1);
  m.G << 0.0, 1.0;
  m.drift_gain = m.J - m.R;
  return m;
}

SystemStructure OscillatorTruth::structure_template() const {
  SystemStructure s;
  Eigen::Matrix2d j;
  j << 0.0, 1.0, -1.0, 0.0;
  s.interconnection = MatrixPattern::constant(j);
  s.dissipation = MatrixPattern::constant(Eigen::Matrix2d::Zero());
  s.dissipation.at(1, 1).slot = "d";
  Eigen::MatrixXd g(2, 1);
  g << 0.0, 1.0;
  s.input_map = MatrixPattern::constant(g);
  return s;
}

double eval_term(const InputTerm& term, double t) {
  switch (term.kind) {
    case InputTerm::Kind::Constant:
      return term.amplitude;
    case InputTerm::Kind::Pulse:
      return (t >= term.start && t < term.stop) ? term.amplitude : 0.0;
    case InputTerm::Kind::Sine:
      return term.amplitude * std::sin(term.omega * t + term.phase);
    case InputTerm::Kind::Chirp:
      return term.amplitude *
             std::sin((term.omega + 0.5 * term.omega_rate * t) * t +
                      term.phase);
    case InputTerm::Kind::PiecewiseLinear: {
      if (term.times.empty() || term.times.size() != term.values.size())
        throw ConfigError(
            "piecewise-linear input needs matching, non-empty node lists");
      if (t <= term.times.front()) return term.values.front();
      if (t >= term.times.back()) return term.values.back();
      const auto upper =
          std::upper_bound(term.times.begin(), term.times.end(), t);
      const std::size_t i =
          static_cast<std::size_t>(upper - term.times.begin());
      const double t0 = term.times[i - 1], t1 = term.times[i];
      const double w = (t - t0) / (t1 - t0);
      return (1.0 - w) * term.values[i - 1] + w * term.values[i];
    }
  }
  throw ConfigError("unknown input term kind");
}

InputSignal default_training_signal() {
  InputSignal s;
  InputTerm a;
  a.kind = InputTerm::Kind::Sine;
  a.amplitude = 0.9;
  a.omega = 0.75;
  InputTerm b;
  b.kind = InputTerm::Kind::Sine;
  b.amplitude = 0.8;
  b.omega = 2.1;
  b.phase = 0.7;
  s.terms = {a, b};
  return s;
}

InputSignal default_test_signal() {
  InputSignal s;
  InputTerm a;
  a.kind = InputTerm::Kind::Pulse;
  a.amplitude = 2.0;
  a.start = 0.0;
  a.stop = 1.5;
  InputTerm b;
  b.kind = InputTerm::Kind::Pulse;
  b.amplitude = -1.2;
  b.start = 2.5;
  b.stop = 3.5;
  s.terms = {a, b};
  return s;
}

GeneratedData generate_data(const ScenarioConfig& scenario,
                            const OscillatorTruth& truth, Rng& rng) {
  if (scenario.n_steps < 1)
    throw ConfigError("scenario needs at least one step");
  if (!(scenario.dt > 0.0)) throw ConfigError("step size must be positive");
  if (scenario.process_noise_std < 0.0 ||
      scenario.measurement_noise_std < 0.0)
    throw ConfigError("noise standard deviations must be non-negative");
  if (!(truth.damping >= 0.0))
    throw ConfigError("damping must be non-negative");

  const int n_rows = scenario.n_steps + 1;
  const bool full_state = scenario.mode == MeasurementMode::InputState;
  const SystemMatrices m = truth.matrices();
  const auto grad = [&](const Eigen::VectorXd& x) {
    return truth.gradient(Eigen::Vector2d(x[0], x[1]));
  };

  GeneratedData data;
  data.states.resize(n_rows, 2);
  data.inputs.resize(n_rows, 1);
  data.outputs.resize(n_rows, full_state ? 2 : 1);

  Eigen::Vector2d x = scenario.x0;
  for (int t = 0; t < n_rows; ++t) {
    const double u = scenario.input.eval(t * scenario.dt);
    data.states.row(t) = x.transpose();
    data.inputs(t, 0) = u;

    // both channels' measurement noise is drawn in every mode so the two
    // records agree on the position channel for a given seed
    const double eq = scenario.measurement_noise_std * rng.normal();
    const double ep = scenario.measurement_noise_std * rng.normal();
    data.outputs(t, 0) = x[0] + eq;
    if (full_state) data.outputs(t, 1) = x[1] + ep;

    if (t + 1 < n_rows) {
      x = symplectic_euler_step(grad, m, x,
                                Eigen::VectorXd::Constant(1, u),
                                scenario.dt);
      x += scenario.process_noise_std *
           Eigen::Vector2d(rng.normal(), rng.normal());
    }
  }
  return data;
}

}  // namespace hamgp
