#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wavedecay/decay.hpp"
#include "wavedecay/rng.hpp"
#include "wavedecay/spectral.hpp"
#include "wavedecay/wave.hpp"

namespace wavedecay {

/// A finite family of phase points sharing one basis; the numerical stand-in
/// for a bounded invariant set.
struct Ensemble {
  std::vector<PhaseState> members;

  void validate() const {
    if (members.empty()) throw std::invalid_argument("Ensemble: must be non-empty");
    for (const PhaseState& s : members) check_same_size(s, members.front(), "Ensemble");
  }

  std::size_t size() const { return members.size(); }
};

/// Random band-limited state in a phase-space ball of the given radius.
/// Mode j gets weight j^-1 (or flat weight) on both position and velocity so
/// the high-mode tail carries a comparable share of the energy norm.
inline PhaseState random_ball_state(const SpectralBasis& basis, double radius,
                                    bool inverse_mode_weights, Rng& rng) {
  PhaseState s = zero_state(basis);
  for (int j = 0; j < basis.modes; ++j) {
    const double w = inverse_mode_weights ? 1.0 / static_cast<double>(j + 1) : 1.0;
    s.u[j] = w * rng.normal();
    s.v[j] = w * rng.normal();
  }
  const double norm = phase_norm(s);
  const double target = radius * std::sqrt(rng.uniform());
  if (norm > 0.0) {
    const double scale = target / norm;
    for (int j = 0; j < basis.modes; ++j) {
      s.u[j] *= scale;
      s.v[j] *= scale;
    }
  }
  return s;
}

inline Ensemble random_ball_ensemble(const SpectralBasis& basis, int count, double radius,
                                     bool inverse_mode_weights, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("ensemble: count must be >= 1");
  Ensemble e;
  e.members.reserve(count);
  for (int m = 0; m < count; ++m) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(m));
    e.members.push_back(random_ball_state(basis, radius, inverse_mode_weights, rng));
  }
  return e;
}

/// Evolution of every member under one parameter set, sampled on a shared
/// time grid.  Members are integrated independently (optionally on several
/// threads); member order and per-member arithmetic are unaffected by the
/// schedule, so results are reproducible.
struct EnsembleHistory {
  std::vector<double> times;
  std::vector<Trajectory> trajectories;  // one per member

  std::size_t member_count() const { return trajectories.size(); }
  std::size_t sample_count() const { return times.size(); }

  Ensemble snapshot(std::size_t time_index) const {
    Ensemble e;
    e.members.reserve(trajectories.size());
    for (const Trajectory& tr : trajectories) e.members.push_back(tr.states[time_index]);
    return e;
  }
};

inline EnsembleHistory evolve_ensemble(const Ensemble& ensemble, const WaveParams& params,
                                       double t_end, double sample_dt, int threads = 0) {
  ensemble.validate();
  params.validate();
  const std::size_t count = ensemble.size();
  EnsembleHistory history;
  history.trajectories.resize(count);

  unsigned n_threads = threads > 0 ? static_cast<unsigned>(threads)
                                   : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<unsigned>(n_threads, count);

  std::atomic<std::size_t> cursor{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::size_t m = cursor.fetch_add(1);
      if (m >= count || failed.load()) return;
      try {
        WaveOperator op(params);
        history.trajectories[m] = op.simulate(ensemble.members[m], t_end, sample_dt);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };

  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (failed.load()) std::rethrow_exception(error);

  history.times = history.trajectories.front().times;
  return history;
}

/// Greedy farthest-point covering: centers drawn from the ensemble, first
/// center at index 0, each further center the point farthest from the chosen
/// set (lowest index on ties).  The reported radius is within a factor 2 of
/// the optimal k-center radius.
struct CoveringReport {
  int k = 0;
  std::vector<int> centers;
  double radius = 0.0;
};

inline CoveringReport kcenter_radius(const Ensemble& ensemble, int k) {
  ensemble.validate();
  if (k < 1) throw std::invalid_argument("kcenter_radius: k must be >= 1");
  const int n = static_cast<int>(ensemble.size());
  CoveringReport report;
  report.k = k;
  if (k >= n) {
    report.centers.resize(n);
    for (int i = 0; i < n; ++i) report.centers[i] = i;
    report.radius = 0.0;
    return report;
  }

  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  int next = 0;
  for (int round = 0; round < k; ++round) {
    report.centers.push_back(next);
    for (int i = 0; i < n; ++i) {
      const double d = phase_distance(ensemble.members[i], ensemble.members[next]);
      if (d < dist[i]) dist[i] = d;
    }
    next = 0;
    for (int i = 1; i < n; ++i)
      if (dist[i] > dist[next]) next = i;
  }
  report.radius = dist[next];
  return report;
}

/// Covering-number proxy from the high-mode tail: the low-mode projection is
/// finite-dimensional and bounded, so twice the largest tail norm bounds the
/// noncompactness measure of the family.
inline double tail_proxy(const Ensemble& ensemble, int cutoff) {
  ensemble.validate();
  double worst = 0.0;
  for (const PhaseState& s : ensemble.members) worst = std::max(worst, tail_norm(s, cutoff));
  return 2.0 * worst;
}

inline double ensemble_diameter(const Ensemble& ensemble) {
  ensemble.validate();
  double worst = 0.0;
  for (std::size_t i = 0; i < ensemble.size(); ++i)
    for (std::size_t j = i + 1; j < ensemble.size(); ++j)
      worst = std::max(worst, phase_distance(ensemble.members[i], ensemble.members[j]));
  return worst;
}

/// One decay series per proxy (2x greedy covering radius per k, tail proxy
/// per cutoff) plus their pointwise minimum, aligned to the history's time
/// stamps.  Each proxy is an upper bound on the noncompactness measure of
/// the evolved family, so the minimum is the sharpest tracked bound.
struct ProxyCurves {
  std::vector<double> t;
  std::vector<double> diameter;
  std::vector<int> ks;
  std::vector<std::vector<double>> kcenter;  // 2 * radius, one series per k
  std::vector<int> cutoffs;
  std::vector<std::vector<double>> tail;  // one series per cutoff
  std::vector<double> min_proxy;

  DecaySeries min_series() const { return DecaySeries{t, min_proxy}; }
};

inline ProxyCurves noncompactness_curves(const EnsembleHistory& history,
                                         const std::vector<int>& cutoffs,
                                         const std::vector<int>& ks) {
  if (history.member_count() == 0 || history.sample_count() == 0)
    throw std::invalid_argument("noncompactness_curves: empty history");
  ProxyCurves curves;
  curves.t = history.times;
  curves.ks = ks;
  curves.cutoffs = cutoffs;
  curves.kcenter.assign(ks.size(), {});
  curves.tail.assign(cutoffs.size(), {});

  for (std::size_t i = 0; i < history.sample_count(); ++i) {
    const Ensemble snap = history.snapshot(i);
    curves.diameter.push_back(ensemble_diameter(snap));
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < ks.size(); ++a) {
      const double value = 2.0 * kcenter_radius(snap, ks[a]).radius;
      curves.kcenter[a].push_back(value);
      best = std::min(best, value);
    }
    for (std::size_t c = 0; c < cutoffs.size(); ++c) {
      const double value = tail_proxy(snap, cutoffs[c]);
      curves.tail[c].push_back(value);
      best = std::min(best, value);
    }
    curves.min_proxy.push_back(best);
  }
  return curves;
}

/// Monotonicity-constant estimate for the map x -> ||x||^{r-2} x on an inner
/// product space:
///
///   ratio(x, y) = (||x||^{r-2} x - ||y||^{r-2} y, x - y) / ||x - y||^r.
///
/// The estimate is the smaller of a random sampled minimum over
/// dim-dimensional pairs and a deterministic one-dimensional scan of
/// ratio(1, t) for t in [-1, 1); the antipodal pair t = -1 realises
/// 2^{2-r}.
struct MonotonicityEstimate {
  double value = 1.0;
  double sampled_min = 1.0;
  double scan_min = 1.0;
  double r = 2.0;
  int dim = 1;
  long long samples = 0;
  std::uint64_t seed = 0;
};

inline double monotonicity_ratio(const std::vector<double>& x, const std::vector<double>& y,
                                 double r) {
  if (x.size() != y.size()) throw std::invalid_argument("monotonicity_ratio: dim mismatch");
  double nx2 = 0.0, ny2 = 0.0, diff2 = 0.0, x_dot_diff = 0.0, y_dot_diff = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    nx2 += x[i] * x[i];
    ny2 += y[i] * y[i];
    diff2 += d * d;
    x_dot_diff += x[i] * d;
    y_dot_diff += y[i] * d;
  }
  if (diff2 <= 0.0) throw std::invalid_argument("monotonicity_ratio: degenerate pair x = y");
  const double cx = r == 2.0 ? 1.0 : std::pow(nx2, 0.5 * (r - 2.0));
  const double cy = r == 2.0 ? 1.0 : std::pow(ny2, 0.5 * (r - 2.0));
  return (cx * x_dot_diff - cy * y_dot_diff) / std::pow(diff2, 0.5 * r);
}

inline double monotonicity_scan_1d(double r, long long grid_points = 2'000'000) {
  double best = std::numeric_limits<double>::infinity();
  double best_t = -1.0;
  const double step = 2.0 / static_cast<double>(grid_points);
  for (long long i = 0; i < grid_points; ++i) {
    const double t = -1.0 + step * static_cast<double>(i);
    const double num = 1.0 - std::pow(std::abs(t), r - 2.0) * t;
    const double value = num / std::pow(1.0 - t, r - 1.0);
    if (value < best) {
      best = value;
      best_t = t;
    }
  }
  // Local golden-section refinement around the grid minimum.
  double lo = std::max(-1.0, best_t - step);
  double hi = std::min(1.0 - 0.5 * step, best_t + step);
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  auto eval = [&](double t) {
    return (1.0 - std::pow(std::abs(t), r - 2.0) * t) / std::pow(1.0 - t, r - 1.0);
  };
  double a = lo, b = hi;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = eval(c), fd = eval(d);
  for (int it = 0; it < 120; ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = eval(d);
    }
  }
  best = std::min({best, fc, fd, eval(lo), eval(hi)});
  return best;
}

inline MonotonicityEstimate estimate_monotonicity_constant(double r, int dim, long long n_samples,
                                                           std::uint64_t seed) {
  if (!(r >= 2.0)) throw std::invalid_argument("monotonicity constant: r must be >= 2");
  if (dim < 1) throw std::invalid_argument("monotonicity constant: dim must be >= 1");
  if (n_samples < 0) throw std::invalid_argument("monotonicity constant: samples must be >= 0");

  MonotonicityEstimate est;
  est.r = r;
  est.dim = dim;
  est.samples = n_samples;
  est.seed = seed;
  est.scan_min = r == 2.0 ? 1.0 : monotonicity_scan_1d(r);

  double sampled = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  std::vector<double> x(dim), y(dim);
  for (long long s = 0; s < n_samples; ++s) {
    double diff2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
      const double d = x[i] - y[i];
      diff2 += d * d;
    }
    if (diff2 <= 1e-300) continue;  // degenerate pair, skipped
    sampled = std::min(sampled, monotonicity_ratio(x, y, r));
  }
  est.sampled_min = n_samples > 0 && std::isfinite(sampled) ? sampled : est.scan_min;
  est.value = std::min(est.sampled_min, est.scan_min);
  return est;
}

/// Two-orbit stability report on a window [0, T]:
///   - pointwise monotonicity check
///       (||w_t||^p w_t - ||v_t||^p v_t, z_t) >= c_p ||z_t||^{p+2}
///     at every sample with ||z_t|| > 1e-12;
///   - integrated velocity-control inequality
///       int ||z_t||^2 <= c_p^{-2/(p+2)} T^{p/(p+2)}
///                        (int (||w_t||^p w_t - ||v_t||^p v_t, z_t))^{2/(p+2)};
///   - the two compact pseudometric values sup_t ||z(t)||_{L4} and
///     int ||Psi(z_t)|| dt, plus the difference-energy endpoints.
struct QuasiStabilityReport {
  std::size_t samples = 0;
  std::size_t checked = 0;
  std::size_t pointwise_passes = 0;
  double pointwise_pass_fraction = 1.0;
  double integral_lhs = 0.0;
  double integral_rhs = 0.0;
  double integral_slack = 0.0;
  double pseudo_sup_l4 = 0.0;
  double pseudo_kernel_l1 = 0.0;
  double energy_initial = 0.0;
  double energy_final = 0.0;
  double energy_drop = 0.0;
};

inline QuasiStabilityReport quasi_stability_report(const Trajectory& w, const Trajectory& v,
                                                   const WaveParams& params, double c_p_hat) {
  if (!(c_p_hat > 0.0))
    throw std::invalid_argument("quasi_stability_report: c_p_hat must be > 0");
  if (w.size() != v.size() || w.size() < 2)
    throw std::invalid_argument("quasi_stability_report: sample count mismatch");
  params.validate();

  const double p = params.damping_p;
  const std::size_t n = w.size();
  DstPlan plan(params.basis);

  QuasiStabilityReport report;
  report.samples = n;

  std::vector<double> monotone_integrand(n, 0.0);
  std::vector<double> zt_sq(n, 0.0);
  std::vector<double> kernel_norm(n, 0.0);
  std::vector<double> kernel_out;
  GridSamples grid;
  ModalField z_u(params.basis.modes), z_v(params.basis.modes);

  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(w.times[i] - v.times[i]) > 1e-9 * std::max(1.0, std::abs(w.times[i])))
      throw std::invalid_argument("quasi_stability_report: time grids differ");
    check_same_size(w.states[i], v.states[i], "quasi_stability_report");
    const ModalField& wt = w.states[i].v;
    const ModalField& vt = v.states[i].v;
    for (int j = 0; j < params.basis.modes; ++j) {
      z_u[j] = w.states[i].u[j] - v.states[i].u[j];
      z_v[j] = wt[j] - vt[j];
    }

    const double nw = l2_norm(wt), nv = l2_norm(vt), nz = l2_norm(z_v);
    zt_sq[i] = nz * nz;
    double pair = 0.0;
    const double cw = std::pow(nw, p), cv = std::pow(nv, p);
    for (int j = 0; j < params.basis.modes; ++j) pair += (cw * wt[j] - cv * vt[j]) * z_v[j];
    monotone_integrand[i] = pair;

    if (nz > 1e-12) {
      ++report.checked;
      if (pair >= c_p_hat * std::pow(nz, p + 2.0)) ++report.pointwise_passes;
    }

    report.pseudo_sup_l4 = std::max(report.pseudo_sup_l4, lp_grid_norm(plan, z_u, 4.0, grid));
    if (!params.kernel.is_zero()) {
      params.kernel.apply(z_v, kernel_out);
      kernel_norm[i] = l2_norm(kernel_out);
    }
  }

  report.pointwise_pass_fraction =
      report.checked > 0 ? static_cast<double>(report.pointwise_passes) / report.checked : 1.0;

  const double duration = w.times.back() - w.times.front();
  report.integral_lhs = integrate_uniform(zt_sq, w.sample_dt);
  const double monotone_integral = std::max(0.0, integrate_uniform(monotone_integrand, w.sample_dt));
  report.integral_rhs = std::pow(c_p_hat, -2.0 / (p + 2.0)) * std::pow(duration, p / (p + 2.0)) *
                        std::pow(monotone_integral, 2.0 / (p + 2.0));
  report.integral_slack = report.integral_rhs - report.integral_lhs;
  report.pseudo_kernel_l1 = integrate_uniform(kernel_norm, w.sample_dt);

  const double d0 = phase_distance(w.states.front(), v.states.front());
  const double dT = phase_distance(w.states.back(), v.states.back());
  report.energy_initial = 0.5 * d0 * d0;
  report.energy_final = 0.5 * dT * dT;
  report.energy_drop = report.energy_initial - report.energy_final;
  return report;
}

}  // namespace wavedecay
