#pragma once

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "hamgp/errors.hpp"
#include "hamgp/rng.hpp"
#include "hamgp/structure.hpp"

namespace hamgp {

// Benchmark system: H(q, p) = q^2/2 + p^2/2 + 2 cos q, a particle in a
// double-well potential (the origin is a saddle of H, the wells sit near
// q = +-1.9), with viscous damping d on the momentum and a force input on
// the momentum channel.
struct OscillatorTruth {
  double damping = 0.15;

  double hamiltonian(const Eigen::Vector2d& x) const {
    return 0.5 * (x[0] * x[0] + x[1] * x[1]) + 2.0 * std::cos(x[0]);
  }

  Eigen::Vector2d gradient(const Eigen::Vector2d& x) const {
    return {x[0] - 2.0 * std::sin(x[0]), x[1]};
  }

  // J = [[0,1],[-1,0]], R = diag(0, d), G = (0, 1)^T
  SystemMatrices matrices() const;

  // Same shape with the damping left as slot "d", for learning runs.
  SystemStructure structure_template() const;
};

// One additive term of an input signal. All times in seconds.
struct InputTerm {
  enum class Kind { Constant, Pulse, Sine, Chirp, PiecewiseLinear };

  Kind kind = Kind::Constant;
  double amplitude = 0.0;
  double start = 0.0;  // pulse support [start, stop), inclusive left
  double stop = 0.0;
  double omega = 0.0;       // angular frequency at t = 0
  double omega_rate = 0.0;  // chirp: instantaneous omega + omega_rate * t
  double phase = 0.0;
  std::vector<double> times;   // piecewise-linear nodes, strictly increasing
  std::vector<double> values;  // clamped beyond the end nodes
};

double eval_term(const InputTerm& term, double t);

struct InputSignal {
  std::vector<InputTerm> terms;  // summed; empty signal is identically zero

  double eval(double t) const {
    double acc = 0.0;
    for (const InputTerm& term : terms) acc += eval_term(term, t);
    return acc;
  }
};

// Two-component multisine, peaks near |u| = 1.7. Strong enough to push the
// state across the potential barrier a couple of times, but detuned from the
// well frequency (~1.28 rad/s) so the excursion stays inside the window the
// default basis resolves. Driving at resonance sends |q| past 5, where a
// 20-mode dictionary on [-8, 8]^2 can no longer follow the cos(q) ripple and
// the posterior collapses into the noise term.
InputSignal default_training_signal();

// Pulse pair that switches off completely at t = 3.5 s, so free decay is
// observable afterwards.
InputSignal default_test_signal();

enum class MeasurementMode { InputOutput, InputState };

struct ScenarioConfig {
  int n_steps = 1000;  // transitions; the trajectory carries n_steps+1 rows
  double dt = 0.02;
  Eigen::Vector2d x0 = Eigen::Vector2d::Zero();
  InputSignal input;
  double process_noise_std = 1e-4;
  double measurement_noise_std = 1e-3;
  MeasurementMode mode = MeasurementMode::InputOutput;
  unsigned seed = 0;
};

struct GeneratedData {
  Eigen::MatrixXd states;   // (n_steps+1) x 2, noise-bearing true states
  Eigen::MatrixXd inputs;   // (n_steps+1) x 1
  Eigen::MatrixXd outputs;  // (n_steps+1) x 1 or x 2 depending on the mode
};

// Momentum-first symplectic Euler from x0 with additive process noise after
// each step and fresh measurement noise on every recorded row. Both
// measurement modes consume identical random streams, so the input-output
// record equals the position channel of the input-state record for a given
// seed.
GeneratedData generate_data(const ScenarioConfig& scenario,
                            const OscillatorTruth& truth, Rng& rng);

}  // namespace hamgp
