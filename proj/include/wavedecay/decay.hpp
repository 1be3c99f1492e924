#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "wavedecay/series.hpp"

namespace wavedecay {

/// Tabulated positive monotone function of time, linearly interpolated
/// between nodes.  Monotonicity (either direction) is checked on
/// construction because the closed-form decay bound is only valid for
/// monotone weights.
class MonotoneTable {
 public:
  MonotoneTable(std::vector<double> times, std::vector<double> values)
      : t_(std::move(times)), v_(std::move(values)) {
    if (t_.size() != v_.size() || t_.size() < 2)
      throw std::invalid_argument("MonotoneTable: need >= 2 matching nodes");
    bool up = true, down = true;
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (!std::isfinite(t_[i]) || !std::isfinite(v_[i]) || v_[i] <= 0.0)
        throw std::invalid_argument("MonotoneTable: values must be finite and positive");
      if (i > 0) {
        if (t_[i] <= t_[i - 1])
          throw std::invalid_argument("MonotoneTable: times must be strictly increasing");
        if (v_[i] < v_[i - 1] - 1e-12 * std::abs(v_[i - 1])) up = false;
        if (v_[i] > v_[i - 1] + 1e-12 * std::abs(v_[i - 1])) down = false;
      }
    }
    if (!up && !down) throw std::invalid_argument("MonotoneTable: values are not monotone");
  }

  double front_time() const { return t_.front(); }
  double back_time() const { return t_.back(); }

  double operator()(double x) const {
    if (x < t_.front() - 1e-12 || x > t_.back() + 1e-12)
      throw std::invalid_argument("MonotoneTable: query outside tabulated range");
    x = std::clamp(x, t_.front(), t_.back());
    const auto it = std::upper_bound(t_.begin(), t_.end(), x);
    std::size_t hi = std::min<std::size_t>(it - t_.begin(), t_.size() - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double s = (x - t_[lo]) / (t_[hi] - t_[lo]);
    return v_[lo] + s * (v_[hi] - v_[lo]);
  }

  /// int_a^b ds / h(s), trapezoid on the table's own grid; the partial end
  /// cells use the interpolated values.
  double integral_reciprocal(double a, double b) const {
    if (b < a) throw std::invalid_argument("MonotoneTable: reversed integral bounds");
    if (a < t_.front() - 1e-12 || b > t_.back() + 1e-12)
      throw std::invalid_argument("MonotoneTable: integral bounds outside tabulated range");
    a = std::clamp(a, t_.front(), t_.back());
    b = std::clamp(b, t_.front(), t_.back());
    if (b <= a) return 0.0;

    double acc = 0.0;
    double prev_t = a;
    double prev_r = 1.0 / (*this)(a);
    for (std::size_t i = 0; i < t_.size(); ++i) {
      if (t_[i] <= a) continue;
      const double node = std::min(t_[i], b);
      const double r = 1.0 / (*this)(node);
      acc += 0.5 * (prev_r + r) * (node - prev_t);
      prev_t = node;
      prev_r = r;
      if (t_[i] >= b) break;
    }
    if (prev_t < b) {
      const double r = 1.0 / (*this)(b);
      acc += 0.5 * (prev_r + r) * (b - prev_t);
    }
    return acc;
  }

 private:
  std::vector<double> t_, v_;
};

/// Parameters of the one-period difference inequality
///
///   omega^{1+alpha}(t + T) <= h(t) [omega(t) - omega(t + T)],  t >= t0,
///
/// with h either a constant level K0 or a tabulated positive monotone
/// function.
struct DifferenceInequalityParams {
  double alpha = 1.0;
  double window = 1.0;  // T
  double t0 = 0.0;
  std::optional<double> constant_h;
  std::optional<MonotoneTable> tabulated_h;

  static DifferenceInequalityParams constant(double alpha, double window, double level,
                                             double t0 = 0.0) {
    DifferenceInequalityParams p;
    p.alpha = alpha;
    p.window = window;
    p.t0 = t0;
    p.constant_h = level;
    p.validate();
    return p;
  }

  static DifferenceInequalityParams tabulated(double alpha, double window, MonotoneTable table,
                                              double t0 = 0.0) {
    DifferenceInequalityParams p;
    p.alpha = alpha;
    p.window = window;
    p.t0 = t0;
    p.tabulated_h = std::move(table);
    p.validate();
    return p;
  }

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("difference inequality: alpha must be > 0");
    if (!(window > 0.0)) throw std::invalid_argument("difference inequality: T must be > 0");
    if (!(t0 >= 0.0)) throw std::invalid_argument("difference inequality: t0 must be >= 0");
    if (constant_h.has_value() == tabulated_h.has_value())
      throw std::invalid_argument("difference inequality: exactly one h form required");
    if (constant_h && !(*constant_h > 0.0))
      throw std::invalid_argument("difference inequality: K0 must be > 0");
  }

  double h_at(double t) const { return constant_h ? *constant_h : (*tabulated_h)(t); }
};

/// Closed-form decay bound drawn from the difference inequality:
///
///   bound(t) = { window_inf^{-alpha}
///                + (alpha/T) int_{t0+T}^{t-T} ds/h(s) }^{-1/alpha},
///
/// valid for t >= t0 + 2T.  `window_inf` is the caller's infimum of omega
/// over the startup window [t0, t0+T] (for a decreasing omega its value at
/// t0 realises inf omega^{-alpha}).  For constant h = K0 the integral is
/// (t - t0 - 2T)/K0 and the bound decays like (alpha t / (T K0))^{-1/alpha}.
inline double nakao_bound(const DifferenceInequalityParams& params, double window_inf, double t) {
  params.validate();
  if (!(window_inf > 0.0)) throw std::invalid_argument("nakao_bound: window_inf must be > 0");
  const double onset = params.t0 + 2.0 * params.window;
  if (t < onset - 1e-9 * std::max(1.0, onset))
    throw std::invalid_argument("nakao_bound: t below validity onset t0 + 2T");
  double integral = 0.0;
  if (params.constant_h) {
    integral = std::max(0.0, t - onset) / *params.constant_h;
  } else {
    integral = params.tabulated_h->integral_reciprocal(params.t0 + params.window,
                                                       std::max(params.t0 + params.window,
                                                                t - params.window));
  }
  // {W^-a + (a/T) I}^{-1/a} = W {1 + W^a (a/T) I}^{-1/a}: factoring out the
  // window value keeps the bound exactly equal to it when the integral is
  // empty.
  const double scaled = std::pow(window_inf, params.alpha) * params.alpha / params.window * integral;
  return window_inf * std::pow(1.0 + scaled, -1.0 / params.alpha);
}

/// Extremal sequence of the one-period difference inequality with constant
/// h = K0: each step solves
///
///   x^{1+alpha} = K0 (omega_n - x)
///
/// for x in [0, omega_n] by bisection (the left side is strictly increasing,
/// so the root is unique).  Samples are placed at t0 + n T.
inline DecaySeries extremal_recurrence(double omega0, double alpha, double window, double level,
                                       int n_steps, double t0 = 0.0) {
  if (!(omega0 >= 0.0)) throw std::invalid_argument("extremal_recurrence: omega0 must be >= 0");
  if (!(alpha > 0.0) || !(window > 0.0) || !(level > 0.0))
    throw std::invalid_argument("extremal_recurrence: alpha, T, K0 must be > 0");
  if (n_steps < 0) throw std::invalid_argument("extremal_recurrence: n_steps must be >= 0");

  DecaySeries out;
  out.t.reserve(n_steps + 1);
  out.w.reserve(n_steps + 1);
  double w = omega0;
  out.t.push_back(t0);
  out.w.push_back(w);
  for (int n = 1; n <= n_steps; ++n) {
    if (w > 0.0) {
      double lo = 0.0, hi = w;
      for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = std::pow(mid, 1.0 + alpha) - level * (w - mid);
        (g > 0.0 ? hi : lo) = mid;
      }
      w = 0.5 * (lo + hi);
    }
    out.t.push_back(t0 + n * window);
    out.w.push_back(w);
  }
  return out;
}

struct InequalityReport {
  bool holds = true;
  double worst_slack = 0.0;
  std::size_t worst_index = 0;
  std::size_t pairs_checked = 0;
};

/// Check the one-period difference inequality on a sampled series.  For each
/// sample t_i the partner t_i + T is resolved to the nearest grid point; the
/// slack h(t_i)(omega_i - omega_j) - omega_j^{1+alpha} must stay above
/// -1e-12 everywhere for the inequality to hold.
inline InequalityReport check_difference_inequality(const DecaySeries& series,
                                                    const DifferenceInequalityParams& params) {
  series.validate();
  params.validate();
  if (series.size() < 2 || series.t.back() - series.t.front() < params.window - 1e-12)
    throw std::invalid_argument("check_difference_inequality: series shorter than T");

  InequalityReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.t[i] < params.t0 - 1e-12) continue;
    const double target = series.t[i] + params.window;
    if (target > series.t.back() + 1e-12) break;
    const auto it = std::lower_bound(series.t.begin(), series.t.end(), target);
    std::size_t j = it - series.t.begin();
    if (j >= series.size()) j = series.size() - 1;
    if (j > 0 && target - series.t[j - 1] < series.t[j] - target) --j;
    const double wi = series.w[i];
    const double wj = series.w[j];
    const double slack = params.h_at(series.t[i]) * (wi - wj) - std::pow(wj, 1.0 + params.alpha);
    ++report.pairs_checked;
    if (slack < report.worst_slack) {
      report.worst_slack = slack;
      report.worst_index = i;
    }
  }
  if (report.pairs_checked == 0) {
    report.worst_slack = 0.0;
  }
  report.holds = report.worst_slack >= -1e-12;
  return report;
}

struct AffineFit {
  double intercept = 0.0;
  double slope = 0.0;
  double r_squared = 1.0;
};

namespace detail {

inline AffineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit: degenerate window (no spread in x)");
  AffineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - my) * (y[i] - my);
  }
  // Zero-variance response: the affine model fits perfectly.
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

inline void collect_window(const DecaySeries& series, double t_min, double t_max,
                           std::vector<double>& x, std::vector<double>& y) {
  series.validate();
  if (!(t_min < t_max)) throw std::invalid_argument("fit: degenerate window");
  x.clear();
  y.clear();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.t[i] < t_min - 1e-12 || series.t[i] > t_max + 1e-12) continue;
    x.push_back(series.t[i]);
    y.push_back(series.w[i]);
  }
}

}  // namespace detail

/// Least-squares fit of omega(t)^{-p} ~ intercept + slope * t over a time
/// window.  The decay theory predicts affine growth of the inverse p-th
/// power, so r_squared close to 1 is the signature of a polynomial tail.
inline AffineFit fit_inverse_power(const DecaySeries& series, double p, double t_min,
                                   double t_max) {
  if (!(p > 0.0)) throw std::invalid_argument("fit_inverse_power: p must be > 0");
  std::vector<double> x, y;
  detail::collect_window(series, t_min, t_max, x, y);
  if (x.size() < 3) throw std::invalid_argument("fit_inverse_power: need >= 3 points in window");
  for (double& v : y) {
    if (!(v > 0.0))
      throw std::invalid_argument("fit_inverse_power: nonpositive value in window");
    v = std::pow(v, -p);
  }
  return detail::ols(x, y);
}

/// OLS slope of log omega against log t over a window; positive times and
/// values required.
inline double fit_loglog_slope(const DecaySeries& series, double t_min, double t_max) {
  std::vector<double> x, y;
  detail::collect_window(series, t_min, t_max, x, y);
  if (x.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points in window");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog_slope: nonpositive time or value in window");
    x[i] = std::log(x[i]);
    y[i] = std::log(y[i]);
  }
  return detail::ols(x, y).slope;
}

/// Attraction-rate envelopes.  Both variants are inverse-power laws pinned
/// to the value alpha_b0 at their onset time:
///
///   generic:  { A^{2(b-1)/b} + (1-b)/(T b (1+2C)^{1/b}) (t - onset) }^{b/(2(b-1))},
///             onset = t0 + t_star + 2T, b in (0,1);
///   wave:     { A^{-p} + p k c_p / 2^{p+2} (t - onset) }^{-1/p},
///             onset = t0 + t_star + 1.
///
/// Evaluation factors out A so the onset value is exactly A.
struct EnvelopeParams {
  enum class Kind { generic, wave };
  Kind kind = Kind::wave;
  double alpha_b0 = 1.0;  // scale at onset
  double t0 = 0.0;
  double t_star = 0.0;
  // generic variant
  double beta = 0.5;
  double big_c = 1.0;
  double window = 1.0;  // T
  // wave variant
  double p = 1.0;
  double k = 1.0;
  double c_p = 0.25;

  static EnvelopeParams generic(double alpha_b0, double beta, double big_c, double window,
                                double t0 = 0.0, double t_star = 0.0) {
    EnvelopeParams e;
    e.kind = Kind::generic;
    e.alpha_b0 = alpha_b0;
    e.beta = beta;
    e.big_c = big_c;
    e.window = window;
    e.t0 = t0;
    e.t_star = t_star;
    e.validate();
    return e;
  }

  static EnvelopeParams wave(double alpha_b0, double p, double k, double c_p, double t0 = 0.0,
                             double t_star = 0.0) {
    EnvelopeParams e;
    e.kind = Kind::wave;
    e.alpha_b0 = alpha_b0;
    e.p = p;
    e.k = k;
    e.c_p = c_p;
    e.t0 = t0;
    e.t_star = t_star;
    e.validate();
    return e;
  }

  void validate() const {
    if (!(alpha_b0 > 0.0)) throw std::invalid_argument("envelope: alpha_b0 must be > 0");
    if (!(t0 >= 0.0) || !(t_star >= 0.0))
      throw std::invalid_argument("envelope: t0 and t_star must be >= 0");
    if (kind == Kind::generic) {
      if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("envelope: beta must lie strictly inside (0, 1)");
      if (!(big_c > 0.0)) throw std::invalid_argument("envelope: C must be > 0");
      if (!(window > 0.0)) throw std::invalid_argument("envelope: T must be > 0");
    } else {
      if (!(p > 0.0) || !(k > 0.0) || !(c_p > 0.0))
        throw std::invalid_argument("envelope: p, k, c_p must be > 0");
    }
  }

  double onset() const {
    return kind == Kind::generic ? t0 + t_star + 2.0 * window : t0 + t_star + 1.0;
  }

  /// Coefficient multiplying the elapsed time inside the inverse power.
  double rate() const {
    if (kind == Kind::generic)
      return (1.0 - beta) / (window * beta * std::pow(1.0 + 2.0 * big_c, 1.0 / beta));
    return p * k * c_p / std::pow(2.0, p + 2.0);
  }
};

inline double envelope(const EnvelopeParams& params, double t) {
  params.validate();
  const double start = params.onset();
  if (t < start - 1e-9 * std::max(1.0, start))
    throw std::invalid_argument("envelope: t below validity onset");
  const double elapsed = std::max(0.0, t - start);
  const double a = params.alpha_b0;
  if (params.kind == EnvelopeParams::Kind::wave) {
    // (A^{-p} + r e)^{-1/p} = A (1 + r e A^p)^{-1/p}
    return a * std::pow(1.0 + params.rate() * elapsed * std::pow(a, params.p), -1.0 / params.p);
  }
  // exponent q = 2(beta-1)/beta < 0; value = (A^q + r e)^{1/q} = A (1 + r e A^{-q})^{1/q}
  const double q = 2.0 * (params.beta - 1.0) / params.beta;
  return a * std::pow(1.0 + params.rate() * elapsed * std::pow(a, -q), 1.0 / q);
}

}  // namespace wavedecay
