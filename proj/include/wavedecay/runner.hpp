#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wavedecay/config.hpp"
#include "wavedecay/csv.hpp"
#include "wavedecay/decay.hpp"
#include "wavedecay/ensemble.hpp"
#include "wavedecay/wave.hpp"

namespace wavedecay {

/// Everything a run reports besides its output tables.  Wall-clock timings
/// are returned separately and printed to the console only: output files are
/// required to be bit-reproducible for a fixed (config, seed).
struct RunSummary {
  std::string subcommand;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> fields;
  std::vector<std::pair<std::string, bool>> flags;

  void add(const std::string& key, const std::string& value) { fields.emplace_back(key, value); }
  void add(const std::string& key, double value) { fields.emplace_back(key, format_double(value)); }
  void add_count(const std::string& key, long long value) {
    fields.emplace_back(key, std::to_string(value));
  }
  void flag(const std::string& key, bool pass) { flags.emplace_back(key, pass); }

  bool all_pass() const {
    for (const auto& [name, ok] : flags)
      if (!ok) return false;
    return true;
  }
};

struct RunOutput {
  RunSummary summary;
  std::vector<std::pair<std::string, double>> timings;  // seconds, console only
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline std::string join_path(const std::string& dir, const std::string& name) {
  if (dir.empty() || dir == ".") return name;
  return dir.back() == '/' ? dir + name : dir + "/" + name;
}

}  // namespace detail

inline WaveParams make_wave_params(const ExperimentConfig& cfg) {
  WaveParams params;
  params.basis = SpectralBasis(cfg.modes, cfg.grid_set ? cfg.grid : 2 * cfg.modes);
  params.damping_k = cfg.k;
  params.damping_p = cfg.p;
  params.dt = cfg.dt;
  if (cfg.nonlinearity == "cubic")
    params.nonlinearity = NonlinearitySpec::cubic(cfg.cubic_weight, cfg.linear_softening);
  if (cfg.kernel == "zero") {
    params.kernel = KernelSpec::zero(cfg.modes);
  } else if (cfg.kernel == "rank_one") {
    params.kernel = KernelSpec::rank_one(cfg.modes, cfg.kernel_gain, cfg.kernel_mode);
  } else {
    if (cfg.kernel_file.empty())
      throw ConfigError("system.kernel_file", "required when kernel = file");
    const std::string path = cfg.kernel_file.front() == '/'
                                 ? cfg.kernel_file
                                 : detail::join_path(cfg.source_dir, cfg.kernel_file);
    KernelSpec kernel = read_kernel_matrix(path);
    if (kernel.n != cfg.modes)
      throw ConfigError("system.kernel_file",
                        "matrix size " + std::to_string(kernel.n) + " does not match modes");
    params.kernel = std::move(kernel);
  }
  if (cfg.forcing == "mode" && cfg.forcing_amplitude != 0.0) {
    params.forcing.assign(cfg.modes, 0.0);
    params.forcing[cfg.forcing_mode - 1] = cfg.forcing_amplitude;
  }
  params.validate();
  return params;
}

inline PhaseState make_initial_state(const ExperimentConfig& cfg, const WaveParams& params) {
  PhaseState s = zero_state(params.basis);
  s.u[cfg.init_mode - 1] = cfg.init_amplitude;
  s.v[cfg.init_mode - 1] = cfg.init_velocity;
  return s;
}

/// The zero solution as a trajectory on the given grid; exact whenever
/// f(0) = 0 and the forcing vanishes.
inline Trajectory zero_trajectory(const WaveParams& params, double t_end, double sample_dt) {
  const long long n = std::llround(t_end / sample_dt);
  Trajectory traj;
  traj.sample_dt = sample_dt;
  for (long long i = 0; i <= n; ++i) {
    traj.times.push_back(static_cast<double>(i) * sample_dt);
    traj.states.push_back(zero_state(params.basis));
    traj.energy_full.push_back(0.0);
    traj.energy_quad.push_back(0.0);
    traj.damping_power.push_back(0.0);
    traj.antidamping_power.push_back(0.0);
  }
  return traj;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::vector<double> l2_u, l2_ut, h1_u;
  l2_u.reserve(traj.size());
  for (const PhaseState& s : traj.states) {
    l2_u.push_back(l2_norm(s.u));
    l2_ut.push_back(l2_norm(s.v));
    h1_u.push_back(h1_seminorm(s.u));
  }
  write_csv(path,
            {"t", "E_full", "E_quad", "l2_u", "l2_ut", "h1_u", "damping_power",
             "antidamping_power"},
            {traj.times, traj.energy_full, traj.energy_quad, l2_u, l2_ut, h1_u,
             traj.damping_power, traj.antidamping_power});
}

inline void write_ensemble_csv(const std::string& path, const ProxyCurves& curves) {
  std::vector<std::string> header = {"t", "diameter"};
  std::vector<std::vector<double>> columns = {curves.t, curves.diameter};
  for (std::size_t a = 0; a < curves.ks.size(); ++a) {
    header.push_back("kcenter_r" + std::to_string(curves.ks[a]));
    columns.push_back(curves.kcenter[a]);
  }
  for (std::size_t c = 0; c < curves.cutoffs.size(); ++c) {
    header.push_back("tail_N" + std::to_string(curves.cutoffs[c]));
    columns.push_back(curves.tail[c]);
  }
  header.push_back("min_proxy");
  columns.push_back(curves.min_proxy);
  write_csv(path, header, columns);
}

inline void write_summary(const std::string& path, const RunSummary& summary,
                          const ExperimentConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# wavedecay run summary\n";
  out << "subcommand = " << summary.subcommand << "\n";
  out << "config_hash = " << summary.config_hash << "\n";
  for (const auto& [key, value] : summary.fields) out << key << " = " << value << "\n";
  for (const auto& [key, pass] : summary.flags)
    out << "flag." << key << " = " << (pass ? "pass" : "fail") << "\n";
  out << "\n[config_echo]\n";
  out << cfg.canonical_text();
  if (!out) throw std::runtime_error("write failed for " + path);
}

/// Companion gnuplot script referencing the emitted tables by relative name.
inline void write_plot_script(const std::string& path, bool trajectory, bool ensemble,
                              bool bounds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# gnuplot script for wavedecay output tables\n";
  out << "set datafile separator ','\n";
  out << "set key autotitle columnhead\n";
  out << "set logscale xy\n";
  if (trajectory) {
    out << "set terminal pngcairo size 900,600\nset output 'trajectory.png'\n";
    out << "plot 'trajectory.csv' using 1:2 with lines, '' using 1:3 with lines\n";
  }
  if (ensemble) {
    out << "set terminal pngcairo size 900,600\nset output 'ensemble.png'\n";
    out << "plot 'ensemble.csv' using 1:2 with lines, '' using 1:'min_proxy' with lines\n";
  }
  if (bounds) {
    out << "set terminal pngcairo size 900,600\nset output 'bounds.png'\n";
    out << "plot 'bounds.csv' using 1:2 with lines\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

inline EnvelopeParams make_envelope_params(const ExperimentConfig& cfg) {
  if (cfg.bounds_variant == "wave")
    return EnvelopeParams::wave(cfg.bounds_alpha_b0, cfg.bounds_p, cfg.bounds_k, cfg.bounds_c_p,
                                cfg.bounds_t0, cfg.bounds_t_star);
  return EnvelopeParams::generic(cfg.bounds_alpha_b0, cfg.bounds_beta, cfg.bounds_big_c,
                                 cfg.bounds_window, cfg.bounds_t0, cfg.bounds_t_star);
}

namespace detail {

inline std::uint64_t require_seed(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("ensemble.seed", "mandatory in ensemble configs");
  return *cfg.seed;
}

/// sqrt(2 E_z) against the zero solution, the phase-space distance to rest.
inline DecaySeries distance_to_rest(const Trajectory& traj, const WaveParams& params) {
  const Trajectory rest = zero_trajectory(params, traj.times.back(), traj.sample_dt);
  DecaySeries energy = difference_energy_series(traj, rest);
  DecaySeries out = energy;
  for (double& w : out.w) w = std::sqrt(2.0 * w);
  return out;
}

inline Trajectory simulate_config(const ExperimentConfig& cfg, const WaveParams& params) {
  WaveOperator op(params);
  return op.simulate(make_initial_state(cfg, params), cfg.t_end, cfg.sample_dt);
}

struct ResidualLadder {
  std::vector<double> dts;
  std::vector<double> residuals;
  std::vector<double> ratios;
  bool ratios_in_range(double lo, double hi) const {
    if (ratios.empty()) return false;
    for (double r : ratios)
      if (!(r >= lo && r <= hi)) return false;
    return true;
  }
};

/// Energy-balance residuals on a dt-halving ladder with a fixed horizon; a
/// fourth-order scheme shows ratios near 16.
inline ResidualLadder residual_ladder(const WaveParams& base, const PhaseState& initial,
                                      double t_end, int levels) {
  ResidualLadder ladder;
  for (int l = 0; l < levels; ++l) {
    WaveParams params = base;
    params.dt = base.dt / std::pow(2.0, l);
    WaveOperator op(params);
    const Trajectory traj = op.simulate(initial, t_end, params.dt);
    ladder.dts.push_back(params.dt);
    ladder.residuals.push_back(energy_balance_residual(traj, params));
  }
  for (int l = 0; l + 1 < levels; ++l) {
    const double denom = ladder.residuals[l + 1];
    ladder.ratios.push_back(denom > 0.0 ? ladder.residuals[l] / denom : 0.0);
  }
  return ladder;
}

}  // namespace detail

inline RunOutput run_simulate(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "simulate";
  out.summary.config_hash = cfg.hash();
  detail::Stopwatch clock;

  const WaveParams params = make_wave_params(cfg);
  const Trajectory traj = detail::simulate_config(cfg, params);
  write_trajectory_csv(detail::join_path(out_dir, "trajectory.csv"), traj);
  write_plot_script(detail::join_path(out_dir, "plot.gp"), true, false, false);

  out.summary.add_count("samples", static_cast<long long>(traj.size()));
  out.summary.add("energy_initial", traj.energy_full.front());
  out.summary.add("energy_final", traj.energy_full.back());
  out.summary.add("energy_balance_residual", energy_balance_residual(traj, params));
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  out.timings.emplace_back("simulate", clock.seconds());
  return out;
}

inline RunOutput run_ensemble(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "ensemble";
  out.summary.config_hash = cfg.hash();
  detail::Stopwatch clock;

  const WaveParams params = make_wave_params(cfg);
  const std::uint64_t seed = detail::require_seed(cfg);
  const Ensemble ensemble = random_ball_ensemble(params.basis, cfg.ensemble_count,
                                                 cfg.ensemble_radius,
                                                 cfg.mode_weights == "inverse", seed);
  const EnsembleHistory history =
      evolve_ensemble(ensemble, params, cfg.t_end, cfg.sample_dt, cfg.threads);
  const ProxyCurves curves = noncompactness_curves(history, cfg.cutoffs, cfg.ks);
  write_ensemble_csv(detail::join_path(out_dir, "ensemble.csv"), curves);
  write_plot_script(detail::join_path(out_dir, "plot.gp"), false, true, false);

  out.summary.add_count("members", cfg.ensemble_count);
  out.summary.add_count("samples", static_cast<long long>(history.sample_count()));
  out.summary.add("initial_diameter", curves.diameter.front());
  out.summary.add("final_diameter", curves.diameter.back());
  out.summary.add("final_min_proxy", curves.min_proxy.back());
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  out.timings.emplace_back("ensemble", clock.seconds());
  return out;
}

inline RunOutput run_fit(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "fit";
  out.summary.config_hash = cfg.hash();
  detail::Stopwatch clock;

  const WaveParams params = make_wave_params(cfg);
  const Trajectory traj = detail::simulate_config(cfg, params);
  write_trajectory_csv(detail::join_path(out_dir, "trajectory.csv"), traj);
  write_plot_script(detail::join_path(out_dir, "plot.gp"), true, false, false);

  const DecaySeries distance = detail::distance_to_rest(traj, params);
  const double slope = fit_loglog_slope(distance, cfg.fit_t_min, cfg.fit_t_max);
  const AffineFit inverse = fit_inverse_power(distance, cfg.fit_p, cfg.fit_t_min, cfg.fit_t_max);

  out.summary.add("loglog_slope", slope);
  out.summary.add("predicted_slope", -1.0 / cfg.fit_p);
  out.summary.add("inverse_power_intercept", inverse.intercept);
  out.summary.add("inverse_power_slope", inverse.slope);
  out.summary.add("inverse_power_r2", inverse.r_squared);
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  out.timings.emplace_back("fit", clock.seconds());
  return out;
}

inline RunOutput run_cp(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "cp";
  out.summary.config_hash = cfg.hash();
  detail::Stopwatch clock;

  const MonotonicityEstimate est =
      estimate_monotonicity_constant(cfg.cp_r, cfg.cp_dim, cfg.cp_samples, cfg.cp_seed);
  out.summary.add("r", est.r);
  out.summary.add_count("dim", est.dim);
  out.summary.add_count("samples", est.samples);
  out.summary.add_count("seed", static_cast<long long>(est.seed));
  out.summary.add("one_dim_scan_min", est.scan_min);
  out.summary.add("sampled_min", est.sampled_min);
  out.summary.add("cp_hat", est.value);
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  out.timings.emplace_back("cp", clock.seconds());
  return out;
}

namespace detail {

/// Writes bounds.csv and appends the envelope fields under `prefix`.
inline void emit_bounds_table(const ExperimentConfig& cfg, const std::string& out_dir,
                              const std::string& prefix, RunSummary& summary) {
  const EnvelopeParams env = make_envelope_params(cfg);
  const double onset = env.onset();
  std::vector<double> t(cfg.bounds_points), value(cfg.bounds_points);
  // Log-spaced elapsed times: envelopes are power laws.
  const double span = cfg.bounds_t_max - onset;
  for (int i = 0; i < cfg.bounds_points; ++i) {
    const double frac = static_cast<double>(i) / (cfg.bounds_points - 1);
    const double elapsed = i == 0 ? 0.0 : span * std::pow(1e-4, 1.0 - frac);
    t[i] = onset + elapsed;
    value[i] = envelope(env, t[i]);
  }
  write_csv(join_path(out_dir, "bounds.csv"), {"t", "envelope"}, {t, value});
  summary.add(prefix + "onset", onset);
  summary.add(prefix + "rate", env.rate());
  summary.add(prefix + "value_at_onset", value.front());
  summary.add(prefix + "value_at_t_max", value.back());
}

}  // namespace detail

inline RunOutput run_bounds(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "bounds";
  out.summary.config_hash = cfg.hash();
  detail::Stopwatch clock;
  detail::emit_bounds_table(cfg, out_dir, "", out.summary);
  write_plot_script(detail::join_path(out_dir, "plot.gp"), false, false, true);
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  out.timings.emplace_back("bounds", clock.seconds());
  return out;
}

/// Full sweep: simulation, ensemble proxies, fits, monotonicity constant and
/// envelope, with a pass/fail flag per check.  Exit status of the CLI's
/// `report` is 0 exactly when every flag passes.
inline RunOutput run_report(const ExperimentConfig& cfg, const std::string& out_dir) {
  RunOutput out;
  out.summary.subcommand = "report";
  out.summary.config_hash = cfg.hash();

  const WaveParams params = make_wave_params(cfg);
  if (!params.forcing.empty())
    throw ConfigError("system.forcing", "report requires zero forcing (rest must be a solution)");
  const std::uint64_t seed = detail::require_seed(cfg);

  // Energy-balance convergence on a dt-halving ladder.  The ladder starts
  // from the coarsest stable power-of-two multiple of the configured dt so
  // the residuals sit far above the roundoff floor, and it probes a
  // multimode state: with a single excited mode ||u_t|| vanishes twice per
  // period and the damping term is only C^1 there, which degrades the
  // observable order.
  {
    detail::Stopwatch clock;
    const double horizon = 2000.0 * cfg.dt;
    WaveParams coarse = params;
    int doublings = 0;
    while (doublings < 4 && coarse.dt * 2.0 <= 0.4 / cfg.modes) {
      coarse.dt *= 2.0;
      ++doublings;
    }
    // Low-frequency probe: the coarse ladder rungs stay in the asymptotic
    // regime of every excited mode, and two velocity modes keep ||u_t||
    // away from its non-smooth zero.
    PhaseState probe = zero_state(params.basis);
    for (int j = 0; j < std::min(4, cfg.modes); ++j) {
      probe.u[j] = (j % 2 == 0 ? 1.0 : -1.0) * std::pow(0.5, j);
      probe.v[j] = 0.5 * std::pow(0.5, j);
    }
    const detail::ResidualLadder ladder = detail::residual_ladder(coarse, probe, horizon, 3);
    for (std::size_t i = 0; i < ladder.residuals.size(); ++i)
      out.summary.add("balance_residual_dt" + std::to_string(i), ladder.residuals[i]);
    for (std::size_t i = 0; i < ladder.ratios.size(); ++i)
      out.summary.add("balance_ratio_" + std::to_string(i), ladder.ratios[i]);
    out.summary.flag("energy_balance_order", ladder.ratios_in_range(8.0, 32.0));
    out.timings.emplace_back("energy_balance", clock.seconds());
  }

  // Decay of the distance to rest, fitted on the configured window.
  {
    detail::Stopwatch clock;
    const Trajectory traj = detail::simulate_config(cfg, params);
    write_trajectory_csv(detail::join_path(out_dir, "trajectory.csv"), traj);
    const DecaySeries distance = detail::distance_to_rest(traj, params);
    const double slope = fit_loglog_slope(distance, cfg.fit_t_min, cfg.fit_t_max);
    const double predicted = -1.0 / cfg.fit_p;
    out.summary.add("decay_slope", slope);
    out.summary.add("decay_slope_predicted", predicted);
    out.summary.flag("decay_exponent",
                     slope >= 1.3 * predicted && slope <= 0.7 * predicted);
    out.timings.emplace_back("decay_fit", clock.seconds());
  }

  // Ensemble proxies and the affine law for min_proxy^{-p}.
  {
    detail::Stopwatch clock;
    const Ensemble ensemble = random_ball_ensemble(params.basis, cfg.ensemble_count,
                                                   cfg.ensemble_radius,
                                                   cfg.mode_weights == "inverse", seed);
    const EnsembleHistory history =
        evolve_ensemble(ensemble, params, cfg.t_end, cfg.sample_dt, cfg.threads);
    const ProxyCurves curves = noncompactness_curves(history, cfg.cutoffs, cfg.ks);
    write_ensemble_csv(detail::join_path(out_dir, "ensemble.csv"), curves);
    const AffineFit fit =
        fit_inverse_power(curves.min_series(), cfg.fit_p, cfg.fit_t_min, cfg.fit_t_max);
    out.summary.add("proxy_fit_slope", fit.slope);
    out.summary.add("proxy_fit_r2", fit.r_squared);
    out.summary.flag("proxy_affine", fit.r_squared >= 0.9);
    out.timings.emplace_back("ensemble_proxies", clock.seconds());
  }

  // Monotonicity constant: configured r, plus the wave exponent r = p + 2
  // that the quasi-stability checks use.
  MonotonicityEstimate wave_cp;
  {
    detail::Stopwatch clock;
    const MonotonicityEstimate est =
        estimate_monotonicity_constant(cfg.cp_r, cfg.cp_dim, cfg.cp_samples, cfg.cp_seed);
    out.summary.add("cp_r", est.r);
    out.summary.add("cp_one_dim_scan_min", est.scan_min);
    out.summary.add("cp_sampled_min", est.sampled_min);
    out.summary.add("cp_hat", est.value);
    out.summary.flag("cp_consistency", est.sampled_min >= est.scan_min - 1e-6);
    wave_cp = estimate_monotonicity_constant(cfg.p + 2.0, cfg.cp_dim, cfg.cp_samples, cfg.cp_seed);
    out.summary.add("cp_hat_wave", wave_cp.value);
    out.timings.emplace_back("cp", clock.seconds());
  }

  // Quasi-stability over random orbit pairs from the configured ball.
  {
    detail::Stopwatch clock;
    std::size_t total_checked = 0;
    double worst_fraction = 1.0, worst_slack = std::numeric_limits<double>::infinity();
    for (int pair = 0; pair < cfg.pairs; ++pair) {
      Rng rng_a = Rng::stream(seed, 1000 + 2 * static_cast<std::uint64_t>(pair));
      Rng rng_b = Rng::stream(seed, 1001 + 2 * static_cast<std::uint64_t>(pair));
      const PhaseState a = random_ball_state(params.basis, cfg.ensemble_radius,
                                             cfg.mode_weights == "inverse", rng_a);
      const PhaseState b = random_ball_state(params.basis, cfg.ensemble_radius,
                                             cfg.mode_weights == "inverse", rng_b);
      WaveOperator op_a(params), op_b(params);
      const Trajectory tw = op_a.simulate(a, cfg.pair_window, cfg.sample_dt);
      const Trajectory tv = op_b.simulate(b, cfg.pair_window, cfg.sample_dt);
      const QuasiStabilityReport report = quasi_stability_report(tw, tv, params, wave_cp.value);
      worst_fraction = std::min(worst_fraction, report.pointwise_pass_fraction);
      worst_slack = std::min(worst_slack, report.integral_slack);
      total_checked += report.checked;
    }
    out.summary.add_count("quasi_pairs", cfg.pairs);
    out.summary.add_count("quasi_checked_samples", static_cast<long long>(total_checked));
    out.summary.add("quasi_worst_pass_fraction", worst_fraction);
    out.summary.add("quasi_worst_integral_slack", worst_slack);
    out.summary.flag("quasi_stability", worst_fraction >= 0.999 && worst_slack >= 0.0);
    out.timings.emplace_back("quasi_stability", clock.seconds());
  }

  // Envelope table plus the exact-onset identity.
  {
    detail::Stopwatch clock;
    const EnvelopeParams env = make_envelope_params(cfg);
    detail::emit_bounds_table(cfg, out_dir, "bounds_", out.summary);
    out.summary.flag("envelope_onset", envelope(env, env.onset()) == cfg.bounds_alpha_b0);
    out.timings.emplace_back("bounds", clock.seconds());
  }

  write_plot_script(detail::join_path(out_dir, "plot.gp"), true, true, true);
  write_summary(detail::join_path(out_dir, "summary.txt"), out.summary, cfg);
  return out;
}

inline RunOutput run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                                const std::string& out_dir) {
  if (name == "simulate") return run_simulate(cfg, out_dir);
  if (name == "ensemble") return run_ensemble(cfg, out_dir);
  if (name == "fit") return run_fit(cfg, out_dir);
  if (name == "cp") return run_cp(cfg, out_dir);
  if (name == "bounds") return run_bounds(cfg, out_dir);
  if (name == "report") return run_report(cfg, out_dir);
  throw std::invalid_argument("unknown subcommand: " + name);
}

}  // namespace wavedecay
