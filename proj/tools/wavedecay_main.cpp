// Command-line harness: configuration in, tables and a summary out.
//
//   wavedecay <simulate|ensemble|fit|cp|bounds|report> <config> [--out DIR]
//
// Exit codes: 0 success, 1 runtime failure or failed report check,
// 2 configuration error (the offending key is printed).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "wavedecay/config.hpp"
#include "wavedecay/runner.hpp"

namespace {

int run(const std::string& subcommand, const std::string& config_path,
        const std::string& out_dir) {
  using namespace wavedecay;
  ExperimentConfig cfg = read_config_file(config_path);
  std::filesystem::create_directories(out_dir);
  const RunOutput out = run_subcommand(subcommand, cfg, out_dir);

  std::printf("%s: wrote %s/summary.txt (config %s)\n", subcommand.c_str(), out_dir.c_str(),
              out.summary.config_hash.c_str());
  for (const auto& [key, value] : out.summary.fields)
    std::printf("  %s = %s\n", key.c_str(), value.c_str());
  for (const auto& [key, pass] : out.summary.flags)
    std::printf("  flag.%s = %s\n", key.c_str(), pass ? "pass" : "fail");
  for (const auto& [stage, seconds] : out.timings)
    std::fprintf(stderr, "  [time] %s: %.3f s\n", stage.c_str(), seconds);

  if (subcommand == "report" && !out.summary.all_pass()) return 1;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral simulator and decay-rate laboratory for nonlocally damped waves"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";

  for (const char* name : {"simulate", "ensemble", "fit", "cp", "bounds", "report"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("config", config_path, "experiment config file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: out)");
  }

  CLI11_PARSE(app, argc, argv);

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    return run(subcommand, config_path, out_dir);
  } catch (const wavedecay::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
