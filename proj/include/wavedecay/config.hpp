#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavedecay/decay.hpp"
#include "wavedecay/wave.hpp"

namespace wavedecay {

/// Configuration problem attributable to one key.  The CLI maps this to exit
/// code 2 and names the key.
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(std::string key_name, const std::string& what_failed)
      : std::runtime_error(key_name + ": " + what_failed), key(std::move(key_name)) {}
};

/// Flat sectioned key=value experiment description.  Unknown sections or
/// keys are rejected, duplicates are rejected, and every module-level
/// invariant reachable from the file is checked at parse time.
struct ExperimentConfig {
  // [system]
  int modes = 32;
  int grid = 64;
  bool grid_set = false;
  double k = 1.0;
  double p = 1.0;
  std::string nonlinearity = "zero";  // zero | cubic
  double cubic_weight = 1.0;
  double linear_softening = 0.0;
  std::string kernel = "zero";  // zero | rank_one | file
  double kernel_gain = 0.05;
  int kernel_mode = 1;
  std::string kernel_file;
  std::string forcing = "zero";  // zero | mode
  int forcing_mode = 1;
  double forcing_amplitude = 0.0;
  int init_mode = 1;
  double init_amplitude = 1.0;
  double init_velocity = 0.0;
  double dt = 1e-3;
  double t_end = 10.0;
  double sample_dt = 0.01;

  // [ensemble]
  int ensemble_count = 16;
  double ensemble_radius = 2.0;
  std::string mode_weights = "inverse";  // inverse | flat
  std::optional<std::uint64_t> seed;     // mandatory whenever an ensemble is drawn
  int threads = 0;
  int pairs = 8;
  double pair_window = 4.0;

  // [fit]
  double fit_p = 1.0;
  double fit_t_min = 100.0;
  double fit_t_max = 10000.0;
  std::vector<int> cutoffs = {8, 16};  // adapts to modes when left unset
  bool cutoffs_set = false;
  std::vector<int> ks = {4, 8};

  // [cp]
  double cp_r = 3.0;
  int cp_dim = 8;
  long long cp_samples = 200000;
  std::uint64_t cp_seed = 12345;

  // [bounds]
  std::string bounds_variant = "wave";  // wave | generic
  double bounds_alpha_b0 = 1.0;
  double bounds_p = 1.0;
  double bounds_k = 1.0;
  double bounds_c_p = 0.25;
  double bounds_beta = 0.5;
  double bounds_big_c = 1.0;
  double bounds_window = 1.0;
  double bounds_t0 = 0.0;
  double bounds_t_star = 0.0;
  double bounds_t_max = 10000.0;
  int bounds_points = 200;

  std::string source_dir;  // directory of the config file, for relative paths

  void validate() const;
  std::string canonical_text() const;
  std::string hash() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double d = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError(key, "not a number: '" + value + "'");
  return d;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const long long v = std::strtoll(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0')
    throw ConfigError(key, "not an integer: '" + value + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
  if (end == value.c_str() || *end != '\0' || value.find('-') != std::string::npos)
    throw ConfigError(key, "not an unsigned integer: '" + value + "'");
  return v;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw ConfigError(key, "empty list entry");
    out.push_back(static_cast<int>(parse_int(key, item)));
  }
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(v[i]);
  }
  return out;
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  using detail::format_double;
  if (modes < 1) throw ConfigError("system.modes", "must be >= 1");
  const int effective_grid = grid_set ? grid : 2 * modes;
  if (effective_grid < 2 * modes) throw ConfigError("system.grid", "must be >= 2*modes");
  if (!(k >= 0.0)) throw ConfigError("system.k", "must be >= 0");
  if (!(p > 0.0)) throw ConfigError("system.p", "must be > 0");
  if (nonlinearity != "zero" && nonlinearity != "cubic")
    throw ConfigError("system.nonlinearity", "must be zero or cubic");
  if (nonlinearity == "cubic") {
    try {
      NonlinearitySpec::cubic(cubic_weight, linear_softening);
    } catch (const std::exception& e) {
      throw ConfigError("system.cubic_weight", e.what());
    }
  }
  if (kernel != "zero" && kernel != "rank_one" && kernel != "file")
    throw ConfigError("system.kernel", "must be zero, rank_one or file");
  if (kernel == "rank_one" && (kernel_mode < 1 || kernel_mode > modes))
    throw ConfigError("system.kernel_mode", "must lie in [1, modes]");
  if (kernel == "file" && kernel_file.empty())
    throw ConfigError("system.kernel_file", "required when kernel = file");
  if (forcing != "zero" && forcing != "mode")
    throw ConfigError("system.forcing", "must be zero or mode");
  if (forcing == "mode" && (forcing_mode < 1 || forcing_mode > modes))
    throw ConfigError("system.forcing_mode", "must lie in [1, modes]");
  if (init_mode < 1 || init_mode > modes)
    throw ConfigError("system.init_mode", "must lie in [1, modes]");
  if (!(dt > 0.0)) throw ConfigError("system.dt", "must be > 0");
  if (dt > 0.5 / modes + 1e-15)
    throw ConfigError("system.dt", "must be <= 0.5/modes = " + format_double(0.5 / modes));
  if (!(t_end > 0.0)) throw ConfigError("system.t_end", "must be > 0");
  if (!(sample_dt > 0.0)) throw ConfigError("system.sample_dt", "must be > 0");
  {
    const double ratio = sample_dt / dt;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio) ||
        std::llround(ratio) < 1)
      throw ConfigError("system.sample_dt", "must be an integer multiple of dt");
    const double samples = t_end / sample_dt;
    if (std::abs(samples - std::llround(samples)) > 1e-9 * std::max(1.0, samples) ||
        std::llround(samples) < 1)
      throw ConfigError("system.t_end", "must be an integer multiple of sample_dt");
  }

  if (ensemble_count < 1) throw ConfigError("ensemble.count", "must be >= 1");
  if (!(ensemble_radius > 0.0)) throw ConfigError("ensemble.radius", "must be > 0");
  if (mode_weights != "inverse" && mode_weights != "flat")
    throw ConfigError("ensemble.mode_weights", "must be inverse or flat");
  if (threads < 0) throw ConfigError("ensemble.threads", "must be >= 0");
  if (pairs < 1) throw ConfigError("ensemble.pairs", "must be >= 1");
  if (!(pair_window > 0.0)) throw ConfigError("ensemble.window", "must be > 0");

  if (!(fit_p > 0.0)) throw ConfigError("fit.p", "must be > 0");
  if (!(fit_t_min < fit_t_max)) throw ConfigError("fit.t_min", "must be < fit.t_max");
  for (int c : cutoffs)
    if (c < 0 || c > modes) throw ConfigError("fit.cutoffs", "entries must lie in [0, modes]");
  for (int kk : ks)
    if (kk < 1) throw ConfigError("fit.ks", "entries must be >= 1");

  if (!(cp_r >= 2.0)) throw ConfigError("cp.r", "must be >= 2");
  if (cp_dim < 1) throw ConfigError("cp.dim", "must be >= 1");
  if (cp_samples < 0) throw ConfigError("cp.samples", "must be >= 0");

  if (bounds_variant != "wave" && bounds_variant != "generic")
    throw ConfigError("bounds.variant", "must be wave or generic");
  try {
    if (bounds_variant == "wave")
      EnvelopeParams::wave(bounds_alpha_b0, bounds_p, bounds_k, bounds_c_p, bounds_t0,
                           bounds_t_star);
    else
      EnvelopeParams::generic(bounds_alpha_b0, bounds_beta, bounds_big_c, bounds_window,
                              bounds_t0, bounds_t_star);
  } catch (const std::exception& e) {
    throw ConfigError("bounds.variant", e.what());
  }
  if (bounds_points < 2) throw ConfigError("bounds.points", "must be >= 2");
  const double onset = bounds_variant == "wave" ? bounds_t0 + bounds_t_star + 1.0
                                                : bounds_t0 + bounds_t_star + 2.0 * bounds_window;
  if (!(bounds_t_max > onset))
    throw ConfigError("bounds.t_max", "must exceed the envelope onset " + format_double(onset));
}

inline ExperimentConfig parse_config(const std::string& text, const std::string& source_dir = "") {
  ExperimentConfig cfg;
  cfg.source_dir = source_dir;
  std::vector<std::string> seen;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string line = detail::trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(line, "malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "system" && section != "ensemble" && section != "fit" &&
          section != "cp" && section != "bounds")
        throw ConfigError("[" + section + "]", "unknown section");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ConfigError(key, "key appears before any [section]");
    const std::string full = section + "." + key;
    for (const std::string& s : seen)
      if (s == full) throw ConfigError(full, "duplicate key");
    seen.push_back(full);

    using namespace detail;
    if (section == "system") {
      if (key == "modes") cfg.modes = static_cast<int>(parse_int(full, value));
      else if (key == "grid") { cfg.grid = static_cast<int>(parse_int(full, value)); cfg.grid_set = true; }
      else if (key == "k") cfg.k = parse_double(full, value);
      else if (key == "p") cfg.p = parse_double(full, value);
      else if (key == "nonlinearity") cfg.nonlinearity = value;
      else if (key == "cubic_weight") cfg.cubic_weight = parse_double(full, value);
      else if (key == "linear_softening") cfg.linear_softening = parse_double(full, value);
      else if (key == "kernel") cfg.kernel = value;
      else if (key == "kernel_gain") cfg.kernel_gain = parse_double(full, value);
      else if (key == "kernel_mode") cfg.kernel_mode = static_cast<int>(parse_int(full, value));
      else if (key == "kernel_file") cfg.kernel_file = value;
      else if (key == "forcing") cfg.forcing = value;
      else if (key == "forcing_mode") cfg.forcing_mode = static_cast<int>(parse_int(full, value));
      else if (key == "forcing_amplitude") cfg.forcing_amplitude = parse_double(full, value);
      else if (key == "init_mode") cfg.init_mode = static_cast<int>(parse_int(full, value));
      else if (key == "init_amplitude") cfg.init_amplitude = parse_double(full, value);
      else if (key == "init_velocity") cfg.init_velocity = parse_double(full, value);
      else if (key == "dt") cfg.dt = parse_double(full, value);
      else if (key == "t_end") cfg.t_end = parse_double(full, value);
      else if (key == "sample_dt") cfg.sample_dt = parse_double(full, value);
      else throw ConfigError(full, "unknown key");
    } else if (section == "ensemble") {
      if (key == "count") cfg.ensemble_count = static_cast<int>(parse_int(full, value));
      else if (key == "radius") cfg.ensemble_radius = parse_double(full, value);
      else if (key == "mode_weights") cfg.mode_weights = value;
      else if (key == "seed") cfg.seed = parse_uint(full, value);
      else if (key == "threads") cfg.threads = static_cast<int>(parse_int(full, value));
      else if (key == "pairs") cfg.pairs = static_cast<int>(parse_int(full, value));
      else if (key == "window") cfg.pair_window = parse_double(full, value);
      else throw ConfigError(full, "unknown key");
    } else if (section == "fit") {
      if (key == "p") cfg.fit_p = parse_double(full, value);
      else if (key == "t_min") cfg.fit_t_min = parse_double(full, value);
      else if (key == "t_max") cfg.fit_t_max = parse_double(full, value);
      else if (key == "cutoffs") { cfg.cutoffs = parse_int_list(full, value); cfg.cutoffs_set = true; }
      else if (key == "ks") cfg.ks = parse_int_list(full, value);
      else throw ConfigError(full, "unknown key");
    } else if (section == "cp") {
      if (key == "r") cfg.cp_r = parse_double(full, value);
      else if (key == "dim") cfg.cp_dim = static_cast<int>(parse_int(full, value));
      else if (key == "samples") cfg.cp_samples = parse_int(full, value);
      else if (key == "seed") cfg.cp_seed = parse_uint(full, value);
      else throw ConfigError(full, "unknown key");
    } else {  // bounds
      if (key == "variant") cfg.bounds_variant = value;
      else if (key == "alpha_b0") cfg.bounds_alpha_b0 = parse_double(full, value);
      else if (key == "p") cfg.bounds_p = parse_double(full, value);
      else if (key == "k") cfg.bounds_k = parse_double(full, value);
      else if (key == "c_p") cfg.bounds_c_p = parse_double(full, value);
      else if (key == "beta") cfg.bounds_beta = parse_double(full, value);
      else if (key == "big_c") cfg.bounds_big_c = parse_double(full, value);
      else if (key == "window") cfg.bounds_window = parse_double(full, value);
      else if (key == "t0") cfg.bounds_t0 = parse_double(full, value);
      else if (key == "t_star") cfg.bounds_t_star = parse_double(full, value);
      else if (key == "t_max") cfg.bounds_t_max = parse_double(full, value);
      else if (key == "points") cfg.bounds_points = static_cast<int>(parse_int(full, value));
      else throw ConfigError(full, "unknown key");
    }
  }
  if (!cfg.grid_set) cfg.grid = 2 * cfg.modes;
  if (!cfg.cutoffs_set) {
    cfg.cutoffs = {std::min(8, cfg.modes)};
    if (cfg.modes > 8) cfg.cutoffs.push_back(std::min(16, cfg.modes));
  }

  // Seeds are mandatory wherever an ensemble is described.
  bool ensemble_section = false;
  for (const std::string& s : seen)
    if (s.rfind("ensemble.", 0) == 0) ensemble_section = true;
  if (ensemble_section && !cfg.seed)
    throw ConfigError("ensemble.seed", "mandatory in ensemble configs");

  cfg.validate();
  return cfg;
}

inline ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot read config file");
  std::stringstream ss;
  ss << in.rdbuf();
  std::string dir = ".";
  const std::size_t slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(ss.str(), dir);
}

inline std::string ExperimentConfig::canonical_text() const {
  using detail::format_double;
  std::string s;
  auto add = [&s](const std::string& key, const std::string& value) {
    s += key + " = " + value + "\n";
  };
  s += "[system]\n";
  add("modes", std::to_string(modes));
  add("grid", std::to_string(grid_set ? grid : 2 * modes));
  add("k", format_double(k));
  add("p", format_double(p));
  add("nonlinearity", nonlinearity);
  add("cubic_weight", format_double(cubic_weight));
  add("linear_softening", format_double(linear_softening));
  add("kernel", kernel);
  add("kernel_gain", format_double(kernel_gain));
  add("kernel_mode", std::to_string(kernel_mode));
  if (!kernel_file.empty()) add("kernel_file", kernel_file);
  add("forcing", forcing);
  add("forcing_mode", std::to_string(forcing_mode));
  add("forcing_amplitude", format_double(forcing_amplitude));
  add("init_mode", std::to_string(init_mode));
  add("init_amplitude", format_double(init_amplitude));
  add("init_velocity", format_double(init_velocity));
  add("dt", format_double(dt));
  add("t_end", format_double(t_end));
  add("sample_dt", format_double(sample_dt));
  s += "[ensemble]\n";
  add("count", std::to_string(ensemble_count));
  add("radius", format_double(ensemble_radius));
  add("mode_weights", mode_weights);
  if (seed) add("seed", std::to_string(*seed));
  add("threads", std::to_string(threads));
  add("pairs", std::to_string(pairs));
  add("window", format_double(pair_window));
  s += "[fit]\n";
  add("p", format_double(fit_p));
  add("t_min", format_double(fit_t_min));
  add("t_max", format_double(fit_t_max));
  add("cutoffs", detail::join_ints(cutoffs));
  add("ks", detail::join_ints(ks));
  s += "[cp]\n";
  add("r", format_double(cp_r));
  add("dim", std::to_string(cp_dim));
  add("samples", std::to_string(cp_samples));
  add("seed", std::to_string(cp_seed));
  s += "[bounds]\n";
  add("variant", bounds_variant);
  add("alpha_b0", format_double(bounds_alpha_b0));
  add("p", format_double(bounds_p));
  add("k", format_double(bounds_k));
  add("c_p", format_double(bounds_c_p));
  add("beta", format_double(bounds_beta));
  add("big_c", format_double(bounds_big_c));
  add("window", format_double(bounds_window));
  add("t0", format_double(bounds_t0));
  add("t_star", format_double(bounds_t_star));
  add("t_max", format_double(bounds_t_max));
  add("points", std::to_string(bounds_points));
  return s;
}

inline std::string ExperimentConfig::hash() const {
  // FNV-1a on the canonical serialization.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canonical_text()) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wavedecay
