#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "wavedecay/decay.hpp"
#include "wavedecay/rng.hpp"
#include "wavedecay/series.hpp"

using namespace wavedecay;

namespace {

DecaySeries sampled(double t0, double t1, int n, double (*f)(double)) {
  DecaySeries s;
  for (int i = 0; i < n; ++i) {
    const double t = t0 + (t1 - t0) * i / (n - 1);
    s.t.push_back(t);
    s.w.push_back(f(t));
  }
  return s;
}

/// Numeric log-log slope of a positive function at t (centered, 1% spread).
template <typename F>
double loglog_slope_at(F f, double t) {
  const double hi = t * 1.01, lo = t / 1.01;
  return (std::log(f(hi)) - std::log(f(lo))) / (std::log(hi) - std::log(lo));
}

}  // namespace

TEST_CASE("simpson integration is exact on cubics") {
  auto table = [](int n) {
    std::vector<double> y(n);
    const double dx = 1.0 / (n - 1);
    for (int i = 0; i < n; ++i) {
      const double x = i * dx;
      y[i] = x * x * x;
    }
    return y;
  };
  // Even interval count (pure Simpson) and odd (Simpson + 3/8 tail).
  CHECK(integrate_uniform(table(5), 0.25) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(integrate_uniform(table(8), 1.0 / 7.0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(integrate_uniform(table(4), 1.0 / 3.0) == doctest::Approx(0.25).epsilon(1e-14));
  // Two points: trapezoid.
  CHECK(integrate_uniform({0.0, 1.0}, 1.0) == doctest::Approx(0.5));
  CHECK(integrate_uniform({3.0}, 1.0) == 0.0);
}

TEST_CASE("monotone table") {
  CHECK_THROWS_AS(MonotoneTable({0.0, 1.0, 2.0}, {1.0, 3.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(MonotoneTable({0.0, 1.0}, {1.0, -1.0}), std::invalid_argument);
  MonotoneTable table({0.0, 1.0, 2.0}, {1.0, 2.0, 3.0});
  CHECK(table(0.5) == doctest::Approx(1.5));
  CHECK_THROWS_AS(table(3.0), std::invalid_argument);

  // Partial-cell reciprocal integral of h = 1 + s against the closed form.
  std::vector<double> t, v;
  for (int i = 0; i <= 400000; ++i) {
    t.push_back(i * 2.5e-4);
    v.push_back(1.0 + t.back());
  }
  MonotoneTable dense(t, v);
  const double got = dense.integral_reciprocal(7.3, 61.2);
  CHECK(got == doctest::Approx(std::log((1.0 + 61.2) / (1.0 + 7.3))).epsilon(1e-9));
}

TEST_CASE("decay bound: empty elapsed window returns window_inf exactly") {
  const auto params = DifferenceInequalityParams::constant(1.7, 0.8, 2.5, 3.0);
  const double onset = 3.0 + 2.0 * 0.8;
  CHECK(nakao_bound(params, 0.37, onset) == 0.37);
  CHECK_THROWS_AS(nakao_bound(params, 0.37, onset - 0.1), std::invalid_argument);
  CHECK_THROWS_AS(nakao_bound(params, 0.0, onset), std::invalid_argument);
}

TEST_CASE("decay bound: asymptotic log-log slope is -1/alpha") {
  for (double alpha : {0.5, 1.0, 2.0}) {
    const auto params = DifferenceInequalityParams::constant(alpha, 1.0, 3.0);
    const double slope =
        loglog_slope_at([&](double t) { return nakao_bound(params, 1.0, t); }, 1e6);
    CHECK(std::abs(slope - (-1.0 / alpha)) <= 0.01 / alpha);
  }
}

TEST_CASE("decay bound: tabulated h = 1 + s matches the logarithm closed form") {
  std::vector<double> t, v;
  const double step = 2e-4;
  for (int i = 0; i * step <= 60.0; ++i) {
    t.push_back(i * step);
    v.push_back(1.0 + t.back());
  }
  const auto params =
      DifferenceInequalityParams::tabulated(1.3, 1.0, MonotoneTable(t, v), 0.0);
  const double t0 = 0.0, T = 1.0, alpha = 1.3, window_inf = 0.8;
  for (double query : {2.0, 10.0, 37.5}) {
    const double integral = std::log((query - T + 1.0) / (t0 + T + 1.0));
    const double closed =
        std::pow(std::pow(window_inf, -alpha) + alpha / T * integral, -1.0 / alpha);
    CHECK(nakao_bound(params, window_inf, query) == doctest::Approx(closed).epsilon(1e-8));
  }
}

TEST_CASE("decay bound monotonicities") {
  Rng rng(101);
  for (int trial = 0; trial < 200; ++trial) {
    const double alpha = rng.uniform(0.25, 4.0);
    const double T = rng.uniform(0.1, 2.0);
    const double k0 = rng.uniform(0.1, 10.0);
    const double w = rng.uniform(0.01, 10.0);
    const auto params = DifferenceInequalityParams::constant(alpha, T, k0);
    const double t1 = 2.0 * T + rng.uniform(0.0, 50.0);
    const double t2 = t1 + rng.uniform(0.1, 50.0);
    // Non-increasing in t.
    CHECK(nakao_bound(params, w, t2) <= nakao_bound(params, w, t1) * (1.0 + 1e-12));
    // Non-decreasing in K0.
    const auto larger_k0 = DifferenceInequalityParams::constant(alpha, T, k0 * 1.5);
    CHECK(nakao_bound(larger_k0, w, t2) >= nakao_bound(params, w, t2) * (1.0 - 1e-12));
    // Non-decreasing in window_inf.
    CHECK(nakao_bound(params, w * 1.5, t2) >= nakao_bound(params, w, t2) * (1.0 - 1e-12));
  }
}

TEST_CASE("extremal recurrence: golden ratio first step") {
  const DecaySeries seq = extremal_recurrence(1.0, 1.0, 1.0, 1.0, 3);
  CHECK(seq.w[0] == 1.0);
  CHECK(seq.w[1] == doctest::Approx((std::sqrt(5.0) - 1.0) / 2.0).epsilon(1e-12));
  CHECK(seq.t[2] == doctest::Approx(2.0));
}

TEST_CASE("extremal recurrence: zero seed stays zero") {
  const DecaySeries seq = extremal_recurrence(0.0, 1.5, 0.5, 2.0, 5);
  for (double w : seq.w) CHECK(w == 0.0);
}

TEST_CASE("extremal recurrence: equation residual and monotonicity") {
  Rng rng(55);
  for (int trial = 0; trial < 50; ++trial) {
    const double alpha = rng.uniform(0.25, 4.0);
    const double k0 = rng.uniform(0.1, 10.0);
    const double w0 = rng.uniform(0.01, 10.0);
    const DecaySeries seq = extremal_recurrence(w0, alpha, 1.0, k0, 20);
    for (std::size_t n = 0; n + 1 < seq.size(); ++n) {
      const double residual =
          std::abs(std::pow(seq.w[n + 1], 1.0 + alpha) - k0 * (seq.w[n] - seq.w[n + 1]));
      CHECK(residual <= 1e-12 * k0 * seq.w[n]);
      CHECK(seq.w[n + 1] > 0.0);
      CHECK(seq.w[n + 1] < seq.w[n]);
    }
  }
}

TEST_CASE("decay bound dominates sequences satisfying the full difference inequality") {
  // Sequences with equality on the larger side, w_{n+1} = w_n - w_n^{1+a}/K0,
  // satisfy the inequality for every pair, so the closed-form bound must
  // dominate them; this pins the bound formula itself.
  Rng rng(77);
  int trials = 0;
  while (trials < 300) {
    const double alpha = rng.uniform(0.25, 4.0);
    const double k0 = rng.uniform(0.1, 10.0);
    const double T = rng.uniform(0.1, 2.0);
    const double w0 = rng.uniform(0.01, 10.0);
    if (std::pow(w0, alpha) >= k0) continue;  // sequence would die immediately
    ++trials;
    const auto params = DifferenceInequalityParams::constant(alpha, T, k0);
    double w = w0;
    for (int n = 1; n <= 40; ++n) {
      w = w - std::pow(w, 1.0 + alpha) / k0;
      if (w <= 0.0) break;
      if (n >= 2) {
        const double bound = nakao_bound(params, w0, n * T);
        CHECK(w <= bound * (1.0 + 1e-9));
      }
    }
  }
}

TEST_CASE("difference inequality check: recurrence output holds with near-zero slack") {
  const DecaySeries seq = extremal_recurrence(2.0, 1.5, 0.5, 3.0, 30);
  const auto params = DifferenceInequalityParams::constant(1.5, 0.5, 3.0, 0.0);
  const InequalityReport report = check_difference_inequality(seq, params);
  CHECK(report.holds);
  CHECK(report.pairs_checked == 30);
  CHECK(std::abs(report.worst_slack) <= 1e-10);
}

TEST_CASE("difference inequality check: constant series fails") {
  DecaySeries flat;
  for (int i = 0; i <= 10; ++i) {
    flat.t.push_back(i * 0.5);
    flat.w.push_back(0.7);
  }
  const auto params = DifferenceInequalityParams::constant(1.0, 1.0, 2.0);
  const InequalityReport report = check_difference_inequality(flat, params);
  CHECK(!report.holds);
  CHECK(report.worst_slack == doctest::Approx(-std::pow(0.7, 2.0)));
}

TEST_CASE("difference inequality check: exponential threshold level") {
  // For omega = e^{-t}, alpha = 1, T = 1 the critical constant is
  // K* = sup_t e^{-2(t+1)} / (e^{-t} - e^{-(t+1)}) = e^{-2}/(1 - e^{-1}),
  // verified here by a supremum scan over the sampled pairs.
  DecaySeries exp_series;
  for (int i = 0; i <= 4000; ++i) {
    exp_series.t.push_back(i * 0.005);
    exp_series.w.push_back(std::exp(-exp_series.t.back()));
  }
  double scan = 0.0;
  for (int i = 0; i + 200 <= 4000; ++i) {
    const double wi = exp_series.w[i], wj = exp_series.w[i + 200];
    scan = std::max(scan, wj * wj / (wi - wj));
  }
  const double closed = std::exp(-2.0) / (1.0 - std::exp(-1.0));
  CHECK(scan == doctest::Approx(closed).epsilon(1e-9));

  const auto holds_at = [&](double k0) {
    return check_difference_inequality(
               exp_series, DifferenceInequalityParams::constant(1.0, 1.0, k0))
        .holds;
  };
  CHECK(holds_at(closed * 1.001));
  CHECK(!holds_at(closed * 0.999));
}

TEST_CASE("difference inequality check: series shorter than T is rejected") {
  DecaySeries tiny;
  tiny.t = {0.0, 0.3};
  tiny.w = {1.0, 0.5};
  const auto params = DifferenceInequalityParams::constant(1.0, 1.0, 2.0);
  CHECK_THROWS_AS(check_difference_inequality(tiny, params), std::invalid_argument);
}

TEST_CASE("inverse power fit: exact model recovers its parameters") {
  const DecaySeries s =
      sampled(0.0, 20.0, 101, [](double t) { return std::pow(2.0 + 3.0 * t, -0.5); });
  const AffineFit fit = fit_inverse_power(s, 2.0, 0.0, 20.0);
  CHECK(std::abs(fit.intercept - 2.0) <= 1e-10);
  CHECK(std::abs(fit.slope - 3.0) <= 1e-10);
  CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("inverse power fit: constant series has zero slope and unit r2") {
  DecaySeries s;
  for (int i = 0; i < 10; ++i) {
    s.t.push_back(i);
    s.w.push_back(0.5);
  }
  const AffineFit fit = fit_inverse_power(s, 1.0, 0.0, 9.0);
  CHECK(fit.slope == doctest::Approx(0.0));
  CHECK(fit.r_squared == 1.0);
}

TEST_CASE("inverse power fit: recurrence slope approaches alpha/(T K0)") {
  const double alpha = 1.0, T = 0.5, k0 = 2.0;
  const DecaySeries seq = extremal_recurrence(1.0, alpha, T, k0, 2000);
  const AffineFit fit = fit_inverse_power(seq, alpha, 500.0 * T, 2000.0 * T);
  const double predicted = alpha / (T * k0);
  CHECK(std::abs(fit.slope - predicted) <= 0.2 * predicted);
}

TEST_CASE("inverse power fit: error paths") {
  DecaySeries s;
  s.t = {0.0, 1.0, 2.0, 3.0};
  s.w = {1.0, 0.5, 0.0, 0.2};
  CHECK_THROWS_AS(fit_inverse_power(s, 1.0, 0.0, 3.0), std::invalid_argument);   // zero value
  CHECK_THROWS_AS(fit_inverse_power(s, 1.0, 0.0, 1.0), std::invalid_argument);   // 2 points
  CHECK_THROWS_AS(fit_inverse_power(s, 1.0, 3.0, 0.0), std::invalid_argument);   // reversed
  CHECK_THROWS_AS(fit_inverse_power(s, -1.0, 0.0, 3.0), std::invalid_argument);  // bad p
}

TEST_CASE("log-log slope fits") {
  const DecaySeries quad = sampled(1.0, 100.0, 400, [](double t) { return std::pow(t, -2.0); });
  CHECK(std::abs(fit_loglog_slope(quad, 1.0, 100.0) + 2.0) <= 1e-10);

  const DecaySeries amp =
      sampled(1.0, 100.0, 400, [](double t) { return 5.0 * std::pow(t, -0.5); });
  CHECK(std::abs(fit_loglog_slope(amp, 1.0, 100.0) + 0.5) <= 1e-10);

  const DecaySeries shifted =
      sampled(100.0, 10000.0, 2000, [](double t) { return 1.0 / (1.0 + t); });
  const double slope = fit_loglog_slope(shifted, 100.0, 10000.0);
  CHECK(std::abs(slope + 1.0) <= 0.02);

  DecaySeries with_zero;
  with_zero.t = {1.0, 2.0, 3.0};
  with_zero.w = {1.0, 0.0, 0.5};
  CHECK_THROWS_AS(fit_loglog_slope(with_zero, 1.0, 3.0), std::invalid_argument);
}

TEST_CASE("envelope: wave variant returns alpha_b0 exactly at onset") {
  Rng rng(202);
  for (int trial = 0; trial < 50; ++trial) {
    const auto env = EnvelopeParams::wave(rng.uniform(0.1, 5.0), rng.uniform(0.3, 3.0),
                                          rng.uniform(0.2, 3.0), rng.uniform(0.05, 1.0),
                                          rng.uniform(0.0, 4.0), rng.uniform(0.0, 4.0));
    CHECK(envelope(env, env.onset()) == env.alpha_b0);
    CHECK_THROWS_AS(envelope(env, env.onset() - 0.5), std::invalid_argument);
  }
}

TEST_CASE("envelope: wave variant reaches log-log slope -1/p") {
  for (double p : {0.5, 1.0, 2.0}) {
    const auto env = EnvelopeParams::wave(1.3, p, 1.2, 0.4);
    const double far = 1e8 * std::pow(2.0, p + 2.0) / (p * 1.2 * 0.4);
    const double slope = loglog_slope_at([&](double t) { return envelope(env, t); }, far);
    CHECK(std::abs(slope - (-1.0 / p)) <= 0.01 / p);
  }
}

TEST_CASE("envelope: generic variant with beta = 2/(p+2) matches the wave exponent") {
  for (double p : {1.0, 2.0}) {
    const double beta = 2.0 / (p + 2.0);
    const auto env = EnvelopeParams::generic(1.0, beta, 1.5, 0.7);
    const double slope = loglog_slope_at([&](double t) { return envelope(env, t); }, 1e10);
    CHECK(std::abs(slope - (-1.0 / p)) <= 0.01 / p);
  }
}

TEST_CASE("envelope: strictly decreasing past onset and scale-consistent in c_p") {
  const auto env = EnvelopeParams::wave(2.0, 1.5, 1.0, 0.3);
  double prev = envelope(env, env.onset());
  for (double t = env.onset() + 0.5; t < env.onset() + 50.0; t += 0.5) {
    const double cur = envelope(env, t);
    CHECK(cur < prev);
    prev = cur;
  }

  // envelope^{-p} grows affinely with slope proportional to c_p.
  const auto doubled = EnvelopeParams::wave(2.0, 1.5, 1.0, 0.6);
  auto inverse_slope = [](const EnvelopeParams& e) {
    const double t1 = e.onset() + 10.0, t2 = e.onset() + 20.0;
    return (std::pow(envelope(e, t2), -e.p) - std::pow(envelope(e, t1), -e.p)) / (t2 - t1);
  };
  CHECK(inverse_slope(doubled) == doctest::Approx(2.0 * inverse_slope(env)).epsilon(1e-9));
}

TEST_CASE("envelope: parameter validation") {
  CHECK_THROWS_AS(EnvelopeParams::generic(1.0, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EnvelopeParams::generic(1.0, 0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EnvelopeParams::wave(0.0, 1.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(EnvelopeParams::wave(1.0, 1.0, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("decay series validation") {
  DecaySeries bad;
  bad.t = {0.0, 0.0};
  bad.w = {1.0, 1.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.t = {0.0, 1.0};
  bad.w = {1.0, -0.1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
