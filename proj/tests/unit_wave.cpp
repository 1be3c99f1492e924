#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "wavedecay/rng.hpp"
#include "wavedecay/wave.hpp"

using namespace wavedecay;

namespace {

constexpr double kPi = std::numbers::pi;

WaveParams linear_params(int n, double k, double p, double dt) {
  WaveParams params;
  params.basis = SpectralBasis(n);
  params.damping_k = k;
  params.damping_p = p;
  params.kernel = KernelSpec::zero(n);
  params.dt = dt;
  return params;
}

double state_error(const PhaseState& a, const PhaseState& b) { return phase_distance(a, b); }

}  // namespace

TEST_CASE("nonlinearity spec") {
  NonlinearitySpec f = NonlinearitySpec::cubic(1.5, 0.25);
  CHECK(f.f(2.0) == doctest::Approx(1.5 * 8.0 - 0.25 * 2.0));
  CHECK(f.growth_exponent() == 2);
  CHECK(NonlinearitySpec::none().growth_exponent() == 0);

  // F' = f, checked by central differences.
  for (double s : {-1.3, -0.2, 0.7, 2.4}) {
    const double h = 1e-6;
    const double deriv = (f.antiderivative(s + h) - f.antiderivative(s - h)) / (2.0 * h);
    CHECK(deriv == doctest::Approx(f.f(s)).epsilon(1e-7));
  }
  CHECK(f.antiderivative(0.0) == 0.0);

  // Pure linear softening must stay below the first eigenvalue.
  CHECK_THROWS_AS(NonlinearitySpec::cubic(0.0, 1.0), std::invalid_argument);
  CHECK_NOTHROW(NonlinearitySpec::cubic(0.0, 0.9));
  CHECK_THROWS_AS(NonlinearitySpec::cubic(-1.0, 0.0), std::invalid_argument);
}

TEST_CASE("kernel spec") {
  KernelSpec zero = KernelSpec::zero(4);
  CHECK(zero.frobenius_norm() == 0.0);

  KernelSpec rank = KernelSpec::rank_one(4, -0.3, 2);
  CHECK(rank.frobenius_norm() == doctest::Approx(0.3));
  std::vector<double> in = {1.0, 2.0, 3.0, 4.0}, out;
  rank.apply(in, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == doctest::Approx(-0.6));
  CHECK(out[2] == 0.0);

  KernelSpec dense = KernelSpec::dense(2, {1.0, 2.0, 3.0, 4.0});
  CHECK(dense.frobenius_norm() == doctest::Approx(std::sqrt(30.0)));
  dense.apply({1.0, -1.0}, out);
  CHECK(out[0] == doctest::Approx(-1.0));
  CHECK(out[1] == doctest::Approx(-1.0));

  CHECK_THROWS_AS(KernelSpec::rank_one(4, 0.1, 5), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::dense(2, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("params validation") {
  WaveParams params = linear_params(8, 1.0, 1.0, 1e-3);
  CHECK_NOTHROW(params.validate());

  WaveParams bad_dt = params;
  bad_dt.dt = 0.2;  // above 0.5/8
  CHECK_THROWS_AS(bad_dt.validate(), std::invalid_argument);

  WaveParams bad_p = params;
  bad_p.damping_p = 0.0;
  CHECK_THROWS_AS(bad_p.validate(), std::invalid_argument);

  WaveParams bad_kernel = params;
  bad_kernel.kernel = KernelSpec::zero(5);
  CHECK_THROWS_AS(bad_kernel.validate(), std::invalid_argument);

  WaveParams neg_k = params;
  neg_k.damping_k = -1.0;
  CHECK_THROWS_AS(neg_k.validate(), std::invalid_argument);
}

TEST_CASE("rhs: stiffness term alone") {
  WaveParams params = linear_params(4, 0.0, 1.0, 1e-3);
  PhaseState s = zero_state(params.basis);
  s.u[0] = 1.0;
  const PhaseState d = rhs(s, params);
  for (int j = 0; j < 4; ++j) CHECK(d.u[j] == 0.0);
  CHECK(d.v[0] == -1.0);  // lambda_1 = 1
  CHECK(d.v[1] == 0.0);
  CHECK(d.v[2] == 0.0);
}

TEST_CASE("rhs: forced equilibrium") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  params.forcing.assign(4, 0.0);
  params.forcing[0] = 0.3;
  PhaseState s = zero_state(params.basis);
  s.u[0] = 0.3;  // -lambda_1 * 0.3 + 0.3 = 0
  const PhaseState d = rhs(s, params);
  for (int j = 0; j < 4; ++j) {
    CHECK(d.u[j] == 0.0);
    CHECK(std::abs(d.v[j]) <= 1e-16);
  }
}

TEST_CASE("rhs: nonlocal damping term") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  PhaseState s = zero_state(params.basis);
  s.v[0] = 2.0;  // ||u_t|| = 2
  const PhaseState d = rhs(s, params);
  CHECK(d.u[0] == 2.0);
  CHECK(d.v[0] == doctest::Approx(-4.0).epsilon(1e-15));
  CHECK(d.v[1] == 0.0);
}

TEST_CASE("simulate rejects a mismatched initial state") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  PhaseState s = zero_state(SpectralBasis(5));
  WaveOperator op(params);
  CHECK_THROWS_AS(op.simulate(s, 1.0, 0.1), std::invalid_argument);
}

TEST_CASE("rk4 step matches the harmonic oscillator closed form") {
  WaveParams params = linear_params(4, 0.0, 1.0, 1e-3);
  PhaseState s = zero_state(params.basis);
  s.u[1] = 1.0;  // mode 2, frequency 2

  WaveOperator op(params);
  const int steps = 1000;
  for (int i = 0; i < steps; ++i) s = op.step(s, i * params.dt);
  const double t = steps * params.dt;
  CHECK(std::abs(s.u[1] - std::cos(2.0 * t)) <= 1e-10);
  CHECK(std::abs(s.v[1] + 2.0 * std::sin(2.0 * t)) <= 1e-10);
  CHECK(std::abs(s.u[0]) == 0.0);
}

TEST_CASE("zero state is a fixed point") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  PhaseState s = zero_state(params.basis);
  s = step_rk4(s, params);
  for (int j = 0; j < 4; ++j) {
    CHECK(s.u[j] == 0.0);
    CHECK(s.v[j] == 0.0);
  }
}

TEST_CASE("linear regime: every mode follows its own oscillator") {
  WaveParams params = linear_params(6, 0.0, 1.0, 1e-3);
  Rng rng(17);
  PhaseState initial = zero_state(params.basis);
  for (int j = 0; j < 6; ++j) {
    initial.u[j] = rng.uniform(-1.0, 1.0);
    initial.v[j] = rng.uniform(-1.0, 1.0);
  }
  const Trajectory traj = simulate(initial, params, 2.0, 0.5);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.times[i];
    for (int j = 0; j < 6; ++j) {
      const double w = j + 1.0;
      const double expect_u = initial.u[j] * std::cos(w * t) + initial.v[j] / w * std::sin(w * t);
      const double expect_v = -w * initial.u[j] * std::sin(w * t) + initial.v[j] * std::cos(w * t);
      CHECK(std::abs(traj.states[i].u[j] - expect_u) <= 1e-9);
      CHECK(std::abs(traj.states[i].v[j] - expect_v) <= 1e-9);
    }
  }
}

TEST_CASE("self-convergence: halving dt cuts the terminal error ~16x") {
  WaveParams params = linear_params(8, 1.0, 1.0, 8e-3);
  params.nonlinearity = NonlinearitySpec::cubic(1.0, 0.0);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.u[2] = 0.4;
  initial.v[1] = 0.5;

  auto terminal = [&](double dt) {
    WaveParams p = params;
    p.dt = dt;
    WaveOperator op(p);
    return op.simulate(initial, 1.0, 1.0).states.back();
  };
  const PhaseState ref = terminal(1e-3);  // dt/8 reference
  const double err_coarse = state_error(terminal(8e-3), ref);
  const double err_mid = state_error(terminal(4e-3), ref);
  const double err_fine = state_error(terminal(2e-3), ref);
  CHECK(err_coarse / err_mid >= 8.0);
  CHECK(err_coarse / err_mid <= 32.0);
  CHECK(err_mid / err_fine >= 8.0);
  // The dt/8 reference floor inflates the last ratio, so only bound it above
  // by a looser cap.
  CHECK(err_mid / err_fine <= 48.0);
}

TEST_CASE("conservative run preserves the energy") {
  WaveParams params = linear_params(16, 0.0, 1.0, 1e-3);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.u[1] = 0.5;
  initial.v[2] = 0.25;
  const Trajectory traj = simulate(initial, params, 10.0, 0.1);
  const double e0 = traj.energy_full.front();
  CHECK(e0 > 0.0);
  for (double e : traj.energy_full) CHECK(std::abs(e - e0) / e0 <= 1e-9);
}

TEST_CASE("pure damping run has non-increasing energy") {
  WaveParams params = linear_params(8, 1.0, 1.0, 1e-3);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.v[1] = 0.8;
  const Trajectory traj = simulate(initial, params, 20.0, 0.1);
  for (std::size_t i = 1; i < traj.size(); ++i)
    CHECK(traj.energy_full[i] <= traj.energy_full[i - 1] + 1e-10 * traj.energy_full.front());
  CHECK(traj.energy_full.back() < traj.energy_full.front());
}

TEST_CASE("rank-one anti-damping power is gain * b_1^2") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  const double gain = 0.08;
  params.kernel = KernelSpec::rank_one(4, gain, 1);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.v[0] = 0.3;
  initial.v[1] = -0.4;
  const Trajectory traj = simulate(initial, params, 2.0, 0.05);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double b1 = traj.states[i].v[0];
    CHECK(traj.antidamping_power[i] == doctest::Approx(gain * b1 * b1).epsilon(1e-14));
  }
}

TEST_CASE("energy snapshots") {
  WaveParams params = linear_params(4, 0.0, 1.0, 1e-3);

  // u = cos(theta) e_2, u_t = -2 sin(theta) e_2 has full energy 2 at any phase.
  for (double theta : {0.0, 0.4, 1.3, 2.9}) {
    PhaseState s = zero_state(params.basis);
    s.u[1] = std::cos(theta);
    s.v[1] = -2.0 * std::sin(theta);
    CHECK(energy(s, params, EnergyMode::full) == doctest::Approx(2.0).epsilon(1e-14));
  }

  CHECK(energy(zero_state(params.basis), params, EnergyMode::quadratic) == 0.0);
  CHECK(energy(zero_state(params.basis), params, EnergyMode::full) == 0.0);

  // Cubic potential of u = e_1: full = 1/2 + (1/4) int (2/pi)^2 sin^4 = 1/2 + 3/(8 pi).
  WaveParams cubic = linear_params(4, 0.0, 1.0, 1e-3);
  cubic.nonlinearity = NonlinearitySpec::cubic(1.0, 0.0);
  PhaseState e1 = zero_state(cubic.basis);
  e1.u[0] = 1.0;
  const double expected = 0.5 + 3.0 / (8.0 * kPi);
  CHECK(energy(e1, cubic, EnergyMode::full) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(energy(e1, cubic, EnergyMode::quadratic) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("energy balance residual converges at fourth order") {
  WaveParams params = linear_params(8, 1.0, 1.0, 4e-3);
  params.kernel = KernelSpec::rank_one(8, 0.05, 1);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.v[1] = 0.6;

  auto residual = [&](double dt) {
    WaveParams p = params;
    p.dt = dt;
    WaveOperator op(p);
    const Trajectory traj = op.simulate(initial, 2.0, dt);
    return energy_balance_residual(traj, p);
  };
  const double r0 = residual(4e-3), r1 = residual(2e-3), r2 = residual(1e-3);
  CHECK(r0 / r1 >= 8.0);
  CHECK(r0 / r1 <= 32.0);
  CHECK(r1 / r2 >= 8.0);
  CHECK(r1 / r2 <= 32.0);
}

TEST_CASE("energy balance residual is exact-order for the cubic term too") {
  // Catches dealiasing mistakes: with M = 2N the cubic projection is exact,
  // so the residual must keep refining at fourth order instead of stalling.
  WaveParams params = linear_params(8, 1.0, 1.0, 4e-3);
  params.nonlinearity = NonlinearitySpec::cubic(1.0, 0.2);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  initial.u[3] = 0.3;
  initial.v[1] = 0.5;

  auto residual = [&](double dt) {
    WaveParams p = params;
    p.dt = dt;
    WaveOperator op(p);
    return energy_balance_residual(op.simulate(initial, 2.0, dt), p);
  };
  const double r0 = residual(4e-3), r1 = residual(2e-3);
  CHECK(r0 / r1 >= 8.0);
  CHECK(r0 / r1 <= 32.0);
}

TEST_CASE("conservative residual is tiny") {
  WaveParams params = linear_params(8, 0.0, 1.0, 1e-3);
  PhaseState initial = zero_state(params.basis);
  initial.u[0] = 1.0;
  WaveOperator op(params);
  const Trajectory traj = op.simulate(initial, 5.0, 1e-3);
  CHECK(energy_balance_residual(traj, params) <= 1e-8);
}

TEST_CASE("zero-duration trajectory has zero residual") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  Trajectory traj;
  traj.sample_dt = 1.0;
  traj.times = {0.0};
  traj.states = {zero_state(params.basis)};
  traj.energy_full = {0.5};
  traj.energy_quad = {0.5};
  traj.damping_power = {0.1};
  traj.antidamping_power = {0.0};
  CHECK(energy_balance_residual(traj, params) == 0.0);
}

TEST_CASE("difference energy series") {
  WaveParams params = linear_params(6, 1.0, 1.0, 1e-3);
  PhaseState a = zero_state(params.basis);
  a.u[0] = 1.0;
  a.v[1] = 0.5;
  PhaseState b = zero_state(params.basis);
  b.u[1] = 0.7;

  const Trajectory ta = simulate(a, params, 1.0, 0.1);
  const Trajectory tb = simulate(b, params, 1.0, 0.1);

  // Identical trajectories: all-zero series.
  const DecaySeries same = difference_energy_series(ta, ta);
  for (double w : same.w) CHECK(w == 0.0);

  // Symmetry in the arguments.
  const DecaySeries ab = difference_energy_series(ta, tb);
  const DecaySeries ba = difference_energy_series(tb, ta);
  for (std::size_t i = 0; i < ab.size(); ++i) CHECK(ab.w[i] == ba.w[i]);

  // Against the zero solution the series is the quadratic energy.
  Trajectory rest;
  rest.sample_dt = ta.sample_dt;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    rest.times.push_back(ta.times[i]);
    rest.states.push_back(zero_state(params.basis));
    rest.energy_full.push_back(0.0);
    rest.energy_quad.push_back(0.0);
    rest.damping_power.push_back(0.0);
    rest.antidamping_power.push_back(0.0);
  }
  const DecaySeries vs_rest = difference_energy_series(ta, rest);
  for (std::size_t i = 0; i < vs_rest.size(); ++i)
    CHECK(vs_rest.w[i] == doctest::Approx(ta.energy_quad[i]).epsilon(1e-12));

  // Mismatched grids are rejected.
  const Trajectory coarse = simulate(a, params, 1.0, 0.5);
  CHECK_THROWS_AS(difference_energy_series(ta, coarse), std::invalid_argument);
}

TEST_CASE("divergence is detected and stamped") {
  WaveParams params = linear_params(4, 0.0, 1.0, 1e-3);
  params.kernel = KernelSpec::rank_one(4, 50.0, 1);  // strong anti-damping
  PhaseState initial = zero_state(params.basis);
  initial.v[0] = 1.0;
  bool thrown = false;
  try {
    simulate(initial, params, 100.0, 1.0);
  } catch (const DivergenceError& e) {
    thrown = true;
    CHECK(e.time > 0.0);
    CHECK(e.time <= 100.0);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
  CHECK(thrown);
}

TEST_CASE("simulate validates sampling grid") {
  WaveParams params = linear_params(4, 1.0, 1.0, 1e-3);
  PhaseState s = zero_state(params.basis);
  CHECK_THROWS_AS(simulate(s, params, 1.0, 0.00037), std::invalid_argument);
  CHECK_THROWS_AS(simulate(s, params, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(simulate(s, params, 1.05, 0.1), std::invalid_argument);
}
