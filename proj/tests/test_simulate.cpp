#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Core>
#include <cmath>

#include "hamgp/simulate.hpp"

using namespace hamgp;

namespace {

ScenarioConfig quiet_scenario(int n_steps, double dt,
                              const Eigen::Vector2d& x0) {
  ScenarioConfig s;
  s.n_steps = n_steps;
  s.dt = dt;
  s.x0 = x0;
  s.process_noise_std = 0.0;
  s.measurement_noise_std = 0.0;
  return s;
}

}  // namespace

TEST_CASE("closed form gradient matches the hamiltonian's finite differences") {
  const OscillatorTruth truth;

  const Eigen::Vector2d origin = truth.gradient({0.0, 0.0});
  CHECK(origin[0] == 0.0);
  CHECK(origin[1] == 0.0);

  const double pi = 3.14159265358979323846;
  const Eigen::Vector2d at_pi = truth.gradient({pi, 1.0});
  CHECK(at_pi[0] == doctest::Approx(pi).epsilon(1e-15));
  CHECK(at_pi[1] == 1.0);

  Rng rng(404);
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x(4.0 * (rng.uniform() - 0.5),
                            4.0 * (rng.uniform() - 0.5));
    const Eigen::Vector2d g = truth.gradient(x);
    for (int k = 0; k < 2; ++k) {
      Eigen::Vector2d up = x, down = x;
      up[k] += eps;
      down[k] -= eps;
      const double fd =
          (truth.hamiltonian(up) - truth.hamiltonian(down)) / (2.0 * eps);
      CHECK(g[k] == doctest::Approx(fd).epsilon(1e-8));
    }
  }
}

TEST_CASE("the origin is a fixed point of the noise free scheme") {
  const OscillatorTruth truth;
  Rng rng(1);
  const GeneratedData data =
      generate_data(quiet_scenario(50, 0.02, {0.0, 0.0}), truth, rng);
  CHECK(data.states.isZero(0.0));
  CHECK(data.outputs.isZero(0.0));
  CHECK(data.inputs.isZero(0.0));
}

TEST_CASE("undamped energy stays within the symplectic band") {
  // This orbit (energy 2.125 against a barrier of 2) skirts the separatrix,
  // the worst case for the integrator's oscillating energy error. The
  // oscillation amplitude is first order in the step size (measured 7.5e-3
  // here, doubling at twice the step), but it averages out over each orbit:
  // the mean deviation — the actual drift — is second order and tiny.
  OscillatorTruth truth;
  truth.damping = 0.0;

  Rng rng(2);
  const GeneratedData data =
      generate_data(quiet_scenario(10000, 0.01, {0.0, 0.5}), truth, rng);
  const double h0 = truth.hamiltonian(data.states.row(0).transpose());
  double band = 0.0, drift = 0.0;
  for (int t = 0; t <= 10000; ++t) {
    const double err =
        truth.hamiltonian(data.states.row(t).transpose()) - h0;
    band = std::max(band, std::abs(err));
    drift += err;
  }
  drift /= 10001.0;
  CHECK(std::abs(drift) < 1e-3);
  CHECK(band < 1e-2);
}

TEST_CASE("undamped energy error does not accumulate over long horizons") {
  OscillatorTruth truth;
  truth.damping = 0.0;

  Rng rng(3);
  const GeneratedData data =
      generate_data(quiet_scenario(100000, 0.02, {0.0, 0.5}), truth, rng);
  const double h0 = truth.hamiltonian(data.states.row(0).transpose());
  double early = 0.0, late = 0.0;
  for (int t = 0; t <= 100000; ++t) {
    const double err =
        std::abs(truth.hamiltonian(data.states.row(t).transpose()) - h0);
    (t <= 50000 ? early : late) = std::max(t <= 50000 ? early : late, err);
  }
  CHECK(early < 2e-2);
  // the oscillating energy error of the second half stays inside the band
  // established by the first half: bounded, not secular
  CHECK(late < early * 1.05 + 1e-12);
}

TEST_CASE("damping drains energy monotonically while momentum is nonzero") {
  const OscillatorTruth truth;  // d = 0.15

  Rng rng(4);
  const GeneratedData data =
      generate_data(quiet_scenario(2000, 0.02, {0.0, 0.5}), truth, rng);
  int checked = 0;
  for (int t = 0; t < 2000; ++t) {
    if (std::abs(data.states(t, 1)) <= 1e-3) continue;
    const double h_now = truth.hamiltonian(data.states.row(t).transpose());
    const double h_next =
        truth.hamiltonian(data.states.row(t + 1).transpose());
    CHECK(h_next < h_now);
    ++checked;
  }
  CHECK(checked > 1500);  // momentum is alive for most of the window
}

TEST_CASE("measurement modes agree on the position channel per seed") {
  const OscillatorTruth truth;
  ScenarioConfig scenario = quiet_scenario(200, 0.02, {0.3, -0.4});
  scenario.process_noise_std = 1e-4;
  scenario.measurement_noise_std = 1e-3;
  scenario.input = default_training_signal();

  scenario.mode = MeasurementMode::InputOutput;
  Rng rng_a(909);
  const GeneratedData io = generate_data(scenario, truth, rng_a);

  scenario.mode = MeasurementMode::InputState;
  Rng rng_b(909);
  const GeneratedData is = generate_data(scenario, truth, rng_b);

  CHECK(io.outputs.cols() == 1);
  CHECK(is.outputs.cols() == 2);
  CHECK(io.states == is.states);
  CHECK(io.outputs.col(0) == is.outputs.col(0));

  // and the whole record is reproducible
  Rng rng_c(909);
  const GeneratedData again = generate_data(scenario, truth, rng_c);
  CHECK(again.states == is.states);
  CHECK(again.outputs == is.outputs);

  Rng rng_d(910);
  const GeneratedData other = generate_data(scenario, truth, rng_d);
  CHECK(other.states != is.states);
}

TEST_CASE("input terms evaluate their declared shapes") {
  InputTerm constant;
  constant.kind = InputTerm::Kind::Constant;
  constant.amplitude = -1.7;
  CHECK(eval_term(constant, 0.0) == -1.7);
  CHECK(eval_term(constant, 123.4) == -1.7);

  InputTerm pulse;
  pulse.kind = InputTerm::Kind::Pulse;
  pulse.amplitude = 2.5;
  pulse.start = 1.0;
  pulse.stop = 2.0;
  CHECK(eval_term(pulse, 0.999) == 0.0);
  CHECK(eval_term(pulse, 1.0) == 2.5);  // inclusive left edge
  CHECK(eval_term(pulse, 1.5) == 2.5);
  CHECK(eval_term(pulse, 2.0) == 0.0);  // exclusive right edge

  InputTerm sine;
  sine.kind = InputTerm::Kind::Sine;
  sine.amplitude = 3.0;
  sine.omega = 2.0;
  CHECK(eval_term(sine, 0.0) == 0.0);
  CHECK(eval_term(sine, 0.25) == doctest::Approx(3.0 * std::sin(0.5)));

  InputTerm chirp;
  chirp.kind = InputTerm::Kind::Chirp;
  chirp.amplitude = 1.0;
  chirp.omega = 1.0;
  chirp.omega_rate = 4.0;
  chirp.phase = 0.2;
  CHECK(eval_term(chirp, 0.0) == doctest::Approx(std::sin(0.2)));
  CHECK(eval_term(chirp, 2.0) ==
        doctest::Approx(std::sin((1.0 + 4.0) * 2.0 + 0.2)));

  InputTerm ramp;
  ramp.kind = InputTerm::Kind::PiecewiseLinear;
  ramp.times = {0.0, 1.0, 3.0};
  ramp.values = {0.0, 2.0, -2.0};
  CHECK(eval_term(ramp, -1.0) == 0.0);  // clamped before the first node
  CHECK(eval_term(ramp, 0.5) == doctest::Approx(1.0));
  CHECK(eval_term(ramp, 2.0) == doctest::Approx(0.0));
  CHECK(eval_term(ramp, 5.0) == -2.0);  // clamped after the last node

  InputTerm broken = ramp;
  broken.values = {0.0};
  CHECK_THROWS_AS(eval_term(broken, 0.5), ConfigError);

  InputSignal sum;
  sum.terms = {constant, pulse};
  CHECK(sum.eval(1.5) == doctest::Approx(-1.7 + 2.5));
  CHECK(InputSignal{}.eval(7.0) == 0.0);
}

TEST_CASE("stock signals drive hard then let go") {
  const InputSignal train = default_training_signal();
  double peak = 0.0;
  for (int i = 0; i <= 4000; ++i)
    peak = std::max(peak, std::abs(train.eval(i * 0.005)));
  CHECK(peak > 1.4);
  CHECK(peak < 1.7);

  const InputSignal test = default_test_signal();
  CHECK(test.eval(0.0) == 2.0);
  CHECK(test.eval(3.0) == -1.2);
  for (int i = 0; i <= 100; ++i) CHECK(test.eval(3.5 + 0.1 * i) == 0.0);
}

TEST_CASE("scenario validation rejects impossible settings") {
  const OscillatorTruth truth;
  Rng rng(5);
  {
    ScenarioConfig s = quiet_scenario(0, 0.02, {0.0, 0.0});
    CHECK_THROWS_AS(generate_data(s, truth, rng), ConfigError);
  }
  {
    ScenarioConfig s = quiet_scenario(10, 0.0, {0.0, 0.0});
    CHECK_THROWS_AS(generate_data(s, truth, rng), ConfigError);
  }
  {
    ScenarioConfig s = quiet_scenario(10, 0.02, {0.0, 0.0});
    s.process_noise_std = -1.0;
    CHECK_THROWS_AS(generate_data(s, truth, rng), ConfigError);
  }
  {
    OscillatorTruth bad;
    bad.damping = -0.1;
    ScenarioConfig s = quiet_scenario(10, 0.02, {0.0, 0.0});
    CHECK_THROWS_AS(generate_data(s, bad, rng), ConfigError);
  }
}
