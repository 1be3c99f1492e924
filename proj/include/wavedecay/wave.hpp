#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavedecay/series.hpp"
#include "wavedecay/spectral.hpp"

namespace wavedecay {

/// Nonlinear term f(u) of the wave equation.  Either f = 0 or the cubic
/// f(s) = c3 s^3 - c1 s with antiderivative F(s) = c3 s^4/4 - c1 s^2/2.
/// The dissipativity condition liminf f' > -lambda_1 = -1 requires c1 < 1
/// whenever c3 = 0; a genuinely cubic term satisfies it automatically.
struct NonlinearitySpec {
  enum class Kind { zero, cubic };
  Kind kind = Kind::zero;
  double cubic_weight = 0.0;      // c3 >= 0
  double linear_softening = 0.0;  // c1

  static NonlinearitySpec none() { return {}; }

  static NonlinearitySpec cubic(double c3, double c1) {
    NonlinearitySpec s;
    s.kind = Kind::cubic;
    s.cubic_weight = c3;
    s.linear_softening = c1;
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == Kind::zero) return;
    if (!(cubic_weight >= 0.0))
      throw std::invalid_argument("nonlinearity: cubic_weight must be >= 0");
    if (cubic_weight == 0.0 && !(linear_softening < 1.0))
      throw std::invalid_argument(
          "nonlinearity: with cubic_weight = 0, linear_softening must be < 1");
    if (!std::isfinite(cubic_weight) || !std::isfinite(linear_softening))
      throw std::invalid_argument("nonlinearity: non-finite coefficient");
  }

  bool is_zero() const { return kind == Kind::zero; }

  double f(double s) const {
    if (kind == Kind::zero) return 0.0;
    return cubic_weight * s * s * s - linear_softening * s;
  }

  /// Antiderivative with F(0) = 0, used by the full energy.
  double antiderivative(double s) const {
    if (kind == Kind::zero) return 0.0;
    const double s2 = s * s;
    return 0.25 * cubic_weight * s2 * s2 - 0.5 * linear_softening * s2;
  }

  /// Growth exponent q in |f'(s)| <= M |s|^q for |s| >= 1.
  int growth_exponent() const { return kind == Kind::cubic ? 2 : 0; }
};

/// The nonlocal coupling operator (Psi v)(x) = int K(x, y) v(y) dy expressed
/// in the sine basis.  A square-integrable kernel corresponds to a matrix
/// whose Frobenius norm equals ||K||_{L2(Omega x Omega)}.
struct KernelSpec {
  enum class Kind { zero, rank_one, dense };
  Kind kind = Kind::zero;
  int n = 0;
  double gain = 0.0;  // rank-one: Psi = gain * e_mode (x) e_mode
  int mode = 1;
  std::vector<double> entries;  // dense: n*n row-major

  static KernelSpec zero(int n_modes) {
    KernelSpec k;
    k.n = n_modes;
    return k;
  }

  static KernelSpec rank_one(int n_modes, double gain, int mode) {
    KernelSpec k;
    k.kind = Kind::rank_one;
    k.n = n_modes;
    k.gain = gain;
    k.mode = mode;
    k.validate();
    return k;
  }

  static KernelSpec dense(int n_modes, std::vector<double> matrix) {
    KernelSpec k;
    k.kind = Kind::dense;
    k.n = n_modes;
    k.entries = std::move(matrix);
    k.validate();
    return k;
  }

  void validate() const {
    if (n < 1) throw std::invalid_argument("kernel: mode count must be >= 1");
    switch (kind) {
      case Kind::zero:
        break;
      case Kind::rank_one:
        if (mode < 1 || mode > n) throw std::invalid_argument("kernel: mode out of range");
        if (!std::isfinite(gain)) throw std::invalid_argument("kernel: non-finite gain");
        break;
      case Kind::dense:
        if (static_cast<int>(entries.size()) != n * n)
          throw std::invalid_argument("kernel: matrix size must be n*n");
        for (double e : entries)
          if (!std::isfinite(e)) throw std::invalid_argument("kernel: non-finite entry");
        break;
    }
  }

  bool is_zero() const { return kind == Kind::zero; }

  double frobenius_norm() const {
    switch (kind) {
      case Kind::zero:
        return 0.0;
      case Kind::rank_one:
        return std::abs(gain);
      case Kind::dense: {
        double acc = 0.0;
        for (double e : entries) acc += e * e;
        return std::sqrt(acc);
      }
    }
    return 0.0;
  }

  void apply(const std::vector<double>& in, std::vector<double>& out) const {
    out.assign(in.size(), 0.0);
    switch (kind) {
      case Kind::zero:
        break;
      case Kind::rank_one:
        out[mode - 1] = gain * in[mode - 1];
        break;
      case Kind::dense:
        for (int i = 0; i < n; ++i) {
          const double* row = &entries[static_cast<std::size_t>(i) * n];
          double acc = 0.0;
          for (int j = 0; j < n; ++j) acc += row[j] * in[j];
          out[i] = acc;
        }
        break;
    }
  }
};

/// All coefficients of the damped wave system plus integrator settings:
///
///   u_tt - u_xx + k ||u_t||^p u_t + f(u) = Psi(u_t) + h(x)
///
/// k = 0 is accepted (the theory wants k > 0, but conservative runs are the
/// sharpest integrator diagnostic).  The step bound dt <= 0.5/N keeps the
/// fastest retained mode far inside the RK4 stability region.  Exponents
/// p < 1 are allowed: ||u_t||^p u_t stays continuous at u_t = 0, though its
/// reduced smoothness there can degrade the local RK4 order whenever the
/// velocity passes through zero.
struct WaveParams {
  SpectralBasis basis{1, 2};
  double damping_k = 1.0;
  double damping_p = 1.0;
  NonlinearitySpec nonlinearity;
  KernelSpec kernel = KernelSpec::zero(1);
  ModalField forcing;  // modal coefficients of h; empty means zero
  double dt = 1e-3;

  void validate() const {
    if (!(damping_k >= 0.0) || !std::isfinite(damping_k))
      throw std::invalid_argument("params: k must be >= 0");
    if (!(damping_p > 0.0) || !std::isfinite(damping_p))
      throw std::invalid_argument("params: p must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("params: dt must be > 0");
    if (dt > 0.5 / basis.modes + 1e-15)
      throw std::invalid_argument("params: dt must be <= 0.5/modes (stability margin)");
    nonlinearity.validate();
    kernel.validate();
    if (kernel.n != basis.modes)
      throw std::invalid_argument("params: kernel size does not match basis");
    if (!forcing.empty() && static_cast<int>(forcing.size()) != basis.modes)
      throw std::invalid_argument("params: forcing length does not match basis");
    for (double h : forcing)
      if (!std::isfinite(h)) throw std::invalid_argument("params: non-finite forcing");
  }
};

/// Thrown when a non-finite coefficient appears during time stepping.
struct DivergenceError : std::runtime_error {
  double time;
  explicit DivergenceError(double t)
      : std::runtime_error(make_message(t)), time(t) {}

 private:
  static std::string make_message(double t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "solution diverged (non-finite state) at t = %.9g", t);
    return buf;
  }
};

/// A sampled solution together with the scalar series the decay analysis
/// needs: full and quadratic energy, damping power k||u_t||^{p+2} and
/// anti-damping power (Psi u_t, u_t).
struct Trajectory {
  double sample_dt = 0.0;
  std::vector<double> times;
  std::vector<PhaseState> states;
  std::vector<double> energy_full;
  std::vector<double> energy_quad;
  std::vector<double> damping_power;
  std::vector<double> antidamping_power;

  std::size_t size() const { return times.size(); }
};

enum class EnergyMode { quadratic, full };

namespace detail {

inline double speed_squared(const ModalField& v) {
  double acc = 0.0;
  for (double c : v) acc += c * c;
  return acc;
}

/// k ||v||^p evaluated exactly in modal space via Parseval.
inline double damping_coefficient(double k, double p, double speed_sq) {
  if (k == 0.0) return 0.0;
  if (p == 1.0) return k * std::sqrt(speed_sq);
  if (p == 2.0) return k * speed_sq;
  return k * std::pow(speed_sq, 0.5 * p);
}

}  // namespace detail

/// Right-hand side and RK4 stepper for the modal system.  Holds the DST plan
/// and scratch buffers, so one instance serves one trajectory; distinct
/// instances may run concurrently.
class WaveOperator {
 public:
  explicit WaveOperator(const WaveParams& params) : p_(params) {
    p_.validate();
    if (!p_.nonlinearity.is_zero()) plan_.emplace(p_.basis);
    const int n = p_.basis.modes;
    for (PhaseState* s : {&k1_, &k2_, &k3_, &k4_, &stage_, &next_}) {
      s->u.assign(n, 0.0);
      s->v.assign(n, 0.0);
    }
  }

  const WaveParams& params() const { return p_; }

  /// du = v;  dv_j = -lambda_j u_j - k||v||^p v_j - fhat_j + (Psi v)_j + h_j.
  /// The nonlinearity is evaluated pseudo-spectrally (grid trip) on the
  /// dealiased grid, which for the cubic keeps the projection exact.
  void rhs(const PhaseState& s, PhaseState& out) {
    const int n = p_.basis.modes;
    out.u.resize(n);
    out.v.resize(n);
    const double speed_sq = detail::speed_squared(s.v);
    const double damp = detail::damping_coefficient(p_.damping_k, p_.damping_p, speed_sq);
    for (int j = 0; j < n; ++j) {
      const double freq = static_cast<double>(j + 1);
      out.u[j] = s.v[j];
      out.v[j] = -freq * freq * s.u[j] - damp * s.v[j];
    }
    if (!p_.nonlinearity.is_zero()) {
      plan_->to_grid(s.u, grid_);
      for (double& g : grid_) g = p_.nonlinearity.f(g);
      plan_->to_modal(grid_, modal_);
      for (int j = 0; j < n; ++j) out.v[j] -= modal_[j];
    }
    if (!p_.kernel.is_zero()) {
      p_.kernel.apply(s.v, kernel_out_);
      for (int j = 0; j < n; ++j) out.v[j] += kernel_out_[j];
    }
    if (!p_.forcing.empty())
      for (int j = 0; j < n; ++j) out.v[j] += p_.forcing[j];
  }

  /// One classical RK4 step of size params.dt.  `t_now` only labels the
  /// divergence diagnostic.
  PhaseState step(const PhaseState& state, double t_now) {
    const double dt = p_.dt;
    const int n = p_.basis.modes;

    rhs(state, k1_);
    axpy(state, 0.5 * dt, k1_, stage_);
    rhs(stage_, k2_);
    axpy(state, 0.5 * dt, k2_, stage_);
    rhs(stage_, k3_);
    axpy(state, dt, k3_, stage_);
    rhs(stage_, k4_);

    next_.u.resize(n);
    next_.v.resize(n);
    const double w = dt / 6.0;
    for (int j = 0; j < n; ++j) {
      next_.u[j] = state.u[j] + w * (k1_.u[j] + 2.0 * k2_.u[j] + 2.0 * k3_.u[j] + k4_.u[j]);
      next_.v[j] = state.v[j] + w * (k1_.v[j] + 2.0 * k2_.v[j] + 2.0 * k3_.v[j] + k4_.v[j]);
    }
    for (int j = 0; j < n; ++j)
      if (!std::isfinite(next_.u[j]) || !std::isfinite(next_.v[j]))
        throw DivergenceError(t_now + dt);
    return next_;
  }

  double energy(const PhaseState& s, EnergyMode mode) {
    double quad = 0.0;
    for (std::size_t j = 0; j < s.u.size(); ++j) {
      const double freq = static_cast<double>(j + 1);
      quad += freq * freq * s.u[j] * s.u[j] + s.v[j] * s.v[j];
    }
    quad *= 0.5;
    if (mode == EnergyMode::quadratic) return quad;

    double potential = 0.0;
    if (!p_.nonlinearity.is_zero()) {
      plan_->to_grid(s.u, grid_);
      double acc = 0.0;
      for (double g : grid_) acc += p_.nonlinearity.antiderivative(g);
      potential = p_.basis.quad_weight() * acc;
    }
    double forcing_term = 0.0;
    for (std::size_t j = 0; j < p_.forcing.size(); ++j) forcing_term += p_.forcing[j] * s.u[j];
    return quad + potential - forcing_term;
  }

  double damping_power(const PhaseState& s) const {
    const double speed_sq = detail::speed_squared(s.v);
    return detail::damping_coefficient(p_.damping_k, p_.damping_p, speed_sq) * speed_sq;
  }

  double antidamping_power(const PhaseState& s) {
    if (p_.kernel.is_zero()) return 0.0;
    p_.kernel.apply(s.v, kernel_out_);
    double acc = 0.0;
    for (std::size_t j = 0; j < s.v.size(); ++j) acc += kernel_out_[j] * s.v[j];
    return acc;
  }

  /// Integrate on [0, t_end], sampling every sample_dt (an integer multiple
  /// of dt).  Caches the energy and power series alongside the states.
  Trajectory simulate(const PhaseState& initial, double t_end, double sample_dt) {
    if (initial.u.size() != static_cast<std::size_t>(p_.basis.modes) ||
        initial.v.size() != static_cast<std::size_t>(p_.basis.modes))
      throw std::invalid_argument("simulate: initial state does not match basis");
    if (!(t_end > 0.0)) throw std::invalid_argument("simulate: t_end must be > 0");
    const long long per_sample = nearest_multiple(sample_dt, p_.dt, "sample_dt/dt");
    const long long n_samples = nearest_multiple(t_end, sample_dt, "t_end/sample_dt");

    Trajectory traj;
    traj.sample_dt = sample_dt;
    traj.times.reserve(n_samples + 1);
    traj.states.reserve(n_samples + 1);

    PhaseState y = initial;
    record(traj, 0.0, y);
    long long step_index = 0;
    for (long long i = 1; i <= n_samples; ++i) {
      for (long long s = 0; s < per_sample; ++s) {
        y = step(y, static_cast<double>(step_index) * p_.dt);
        ++step_index;
      }
      record(traj, static_cast<double>(i) * sample_dt, y);
    }
    return traj;
  }

 private:
  static long long nearest_multiple(double whole, double part, const char* what) {
    const double ratio = whole / part;
    const long long n = std::llround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
      throw std::invalid_argument(std::string("simulate: ") + what +
                                  " must be a positive integer");
    return n;
  }

  static void axpy(const PhaseState& base, double a, const PhaseState& dir, PhaseState& out) {
    const std::size_t n = base.u.size();
    out.u.resize(n);
    out.v.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      out.u[j] = base.u[j] + a * dir.u[j];
      out.v[j] = base.v[j] + a * dir.v[j];
    }
  }

  void record(Trajectory& traj, double t, const PhaseState& y) {
    traj.times.push_back(t);
    traj.states.push_back(y);
    traj.energy_full.push_back(energy(y, EnergyMode::full));
    traj.energy_quad.push_back(energy(y, EnergyMode::quadratic));
    traj.damping_power.push_back(damping_power(y));
    traj.antidamping_power.push_back(antidamping_power(y));
  }

  WaveParams p_;
  std::optional<DstPlan> plan_;
  GridSamples grid_;
  ModalField modal_;
  std::vector<double> kernel_out_;
  PhaseState k1_, k2_, k3_, k4_, stage_, next_;
};

inline PhaseState rhs(const PhaseState& state, const WaveParams& params) {
  WaveOperator op(params);
  PhaseState out;
  op.rhs(state, out);
  return out;
}

inline PhaseState step_rk4(const PhaseState& state, const WaveParams& params, double t_now = 0.0) {
  WaveOperator op(params);
  return op.step(state, t_now);
}

inline Trajectory simulate(const PhaseState& initial, const WaveParams& params, double t_end,
                           double sample_dt) {
  WaveOperator op(params);
  return op.simulate(initial, t_end, sample_dt);
}

inline double energy(const PhaseState& state, const WaveParams& params, EnergyMode mode) {
  WaveOperator op(params);
  return op.energy(state, mode);
}

/// |E(T) - E(0) + k int ||u_t||^{p+2} dt - int (Psi u_t, u_t) dt| computed
/// from the cached power series (Simpson, so the quadrature error refines at
/// the same fourth order as the integrator).
inline double energy_balance_residual(const Trajectory& traj, const WaveParams& params) {
  if (!traj.states.empty() &&
      traj.states.front().u.size() != static_cast<std::size_t>(params.basis.modes))
    throw std::invalid_argument("energy_balance_residual: trajectory does not match params");
  if (traj.size() < 2) return 0.0;
  const double dissipated = integrate_uniform(traj.damping_power, traj.sample_dt);
  const double injected = integrate_uniform(traj.antidamping_power, traj.sample_dt);
  const double change = traj.energy_full.back() - traj.energy_full.front();
  return std::abs(change + dissipated - injected);
}

/// Energy of the difference z = w - v along two trajectories on one grid:
/// omega_i = (||z_t||^2 + ||grad z||^2) / 2.
inline DecaySeries difference_energy_series(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("difference_energy_series: sample count mismatch");
  DecaySeries out;
  out.t.reserve(a.size());
  out.w.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-9 * std::max(1.0, std::abs(a.times[i])))
      throw std::invalid_argument("difference_energy_series: time grids differ");
    check_same_size(a.states[i], b.states[i], "difference_energy_series");
    const double d = phase_distance(a.states[i], b.states[i]);
    out.t.push_back(a.times[i]);
    out.w.push_back(0.5 * d * d);
  }
  return out;
}

}  // namespace wavedecay
