#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "slamloop/config.hpp"
#include "slamloop/harness.hpp"
#include "slamloop/record_io.hpp"

namespace {

// Exit codes.
constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kUnsettled = 3;
constexpr int kDiverged = 4;
constexpr int kNumerical = 5;

slamloop::ReferenceKind kind_from_header(const slamloop::RunRecord& record) {
  const std::string k = record.header_value("reference");
  if (k == "helix") return slamloop::ReferenceKind::Helix;
  if (k == "waypoints") return slamloop::ReferenceKind::Waypoints;
  return slamloop::ReferenceKind::Steps;
}

int cmd_run(const std::string& path, const std::optional<std::uint64_t>& seed,
            const std::string& out_dir) {
  slamloop::ScenarioConfig cfg = slamloop::load_scenario(path);
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const slamloop::RunResult result = slamloop::run_scenario(cfg);
  fmt::print("scenario {} seed {} profile {}: {} after {:.2f} s\n", cfg.name, cfg.seed,
             cfg.sensor.name, slamloop::status_name(result.status), result.simulated_time);
  if (!result.message.empty()) fmt::print("{}\n", result.message);
  fmt::print("{}", slamloop::format_metrics_table(result.metrics));
  if (!cfg.output_dir.empty()) fmt::print("outputs written to {}\n", cfg.output_dir);
  if (result.status == slamloop::RunStatus::Diverged) return kDiverged;
  return result.metrics.any_unsettled() ? kUnsettled : kOk;
}

int cmd_suite(const std::string& path, const std::string& out_dir, unsigned threads) {
  slamloop::SuiteConfig suite = slamloop::load_suite(path);
  if (!out_dir.empty()) suite.output_dir = out_dir;
  if (threads) suite.threads = threads;
  const slamloop::SuiteReport report = slamloop::run_suite(suite);
  fmt::print("{}", slamloop::format_suite_table(report));
  if (!suite.output_dir.empty()) fmt::print("outputs written to {}\n", suite.output_dir);
  return kOk;
}

int cmd_metrics(const std::string& path, const std::string& csv_out) {
  const slamloop::RunRecord record = slamloop::read_run_csv(std::filesystem::path(path));
  const slamloop::ScenarioMetrics metrics =
      slamloop::compute_metrics(record, kind_from_header(record));
  fmt::print("{}", slamloop::format_metrics_table(metrics));
  if (!csv_out.empty()) {
    std::ofstream out(csv_out);
    if (!out) throw slamloop::ConfigError("cannot write '" + csv_out + "'");
    slamloop::write_metrics_csv(out, metrics, record);
  }
  if (metrics.any_unsettled()) {
    fmt::print(stderr, "unsettled response in at least one step\n");
    return kUnsettled;
  }
  return kOk;
}

std::string loop_closure(const slamloop::SensorProfile& p) {
  if (!p.loop_closure_enabled) return "off";
  if (p.global_optimization_period <= 0.0) return "on";
  return fmt::format("on (every {:.0f} s)", p.global_optimization_period);
}

int cmd_list_profiles(bool as_json) {
  for (const auto& name : slamloop::builtin_profile_names()) {
    const slamloop::SensorProfile p = slamloop::builtin_profile(name);
    if (as_json) {
      fmt::print("{}\n", slamloop::profile_to_json(p));
      continue;
    }
    fmt::print("{:<12} rate {:>5.1f} Hz  sigma ({:.3f}, {:.3f}, {:.3f}) m  drift {:.4f} m/sqrt(s)"
               "  z x{:.1f}  loop closure {}  smoothing {:.1f} s  degradation {:.1f}/m above "
               "{:.1f} m\n",
               p.name, p.rate_hz, p.noise_sigma.x(), p.noise_sigma.y(), p.noise_sigma.z(),
               p.drift_density.x(), p.z_drift_multiplier, loop_closure(p), p.smoothing_window,
               p.degradation_slope, p.degradation_altitude);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop UAV simulation with SLAM pose feedback"};
  app.require_subcommand(1);

  std::string run_path;
  std::optional<std::uint64_t> run_seed;
  std::string run_out;
  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("config", run_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", run_seed, "Override the scenario seed");
  run->add_option("-o,--output", run_out, "Output directory");

  std::string suite_path;
  std::string suite_out;
  unsigned suite_threads = 0;
  auto* suite = app.add_subcommand("suite", "Run a suite of scenarios over seeds");
  suite->add_option("config", suite_path, "Suite JSON")->required()->check(CLI::ExistingFile);
  suite->add_option("-o,--output", suite_out, "Output directory");
  suite->add_option("-j,--threads", suite_threads, "Worker threads (0: all cores)");

  std::string log_path;
  std::string metrics_out;
  auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a run CSV");
  metrics->add_option("log", log_path, "run.csv")->required()->check(CLI::ExistingFile);
  metrics->add_option("-o,--output", metrics_out, "Write metrics CSV here");

  bool profiles_json = false;
  auto* profiles = app.add_subcommand("list-profiles", "Show built-in sensor profiles");
  profiles->add_flag("--json", profiles_json, "Print as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(run_path, run_seed, run_out);
    if (*suite) return cmd_suite(suite_path, suite_out, suite_threads);
    if (*metrics) return cmd_metrics(log_path, metrics_out);
    if (*profiles) return cmd_list_profiles(profiles_json);
  } catch (const slamloop::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return kConfigError;
  } catch (const slamloop::NumericalError& e) {
    fmt::print(stderr, "numerical error: {}\n", e.what());
    return kNumerical;
  }
  return kOk;
}
