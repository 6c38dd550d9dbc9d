#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slamloop/control.hpp"
#include "slamloop/estimator.hpp"
#include "slamloop/messages.hpp"
#include "slamloop/metrics.hpp"
#include "slamloop/pose_sources.hpp"
#include "slamloop/reference.hpp"
#include "slamloop/vehicle.hpp"

namespace slamloop {

enum class ReferenceKind { Steps, Helix, Waypoints };

const char* reference_kind_name(ReferenceKind kind);

struct StepsSpec {
  std::vector<Axis> axes{Axis::X, Axis::Y, Axis::Z};
  double amplitude = 1.0;      // m
  double hold_time = 15.0;     // s
  int repetitions = 2;
  Vec3 hold_point{0.0, 0.0, 2.0};
  double yaw = 0.0;
};

struct WaypointSpec {
  std::vector<Vec3> points;
  double max_velocity = 1.0;
  double max_acceleration = 0.5;
  double dwell = 0.0;
  int repeat = 1;  // the point list is flown this many times
  double yaw = 0.0;
};

struct ReferenceConfig {
  ReferenceKind kind = ReferenceKind::Steps;
  StepsSpec steps;
  HelixSpec helix;
  WaypointSpec waypoints;
};

/// Vertical takeoff and landing segments bracketing every scenario.
struct BracketConfig {
  double ground_altitude = 0.0;
  double velocity = 0.5;
  double acceleration = 0.5;
  double takeoff_settle = 3.0;   // s of hover before the main phase
  double landing_settle = 2.0;   // s on the ground after touchdown
};

/// Filter settings; unset variances are derived from the sensor profile and
/// IMU noise.
struct FilterSettings {
  Vec3 process_noise{1e-4, 1e-3, 1e-2};
  std::optional<Vec3> position_variance;
  std::optional<Vec3> acceleration_variance;
  Vec3 prior_diagonal{1e-2, 1e-1, 1.0};
  double hold_factor = 1e6;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::uint64_t seed = 1;
  std::optional<double> duration;  // defaults to the reference timeline
  double sim_dt = 0.005;
  PlantParams plant;
  SensorProfile sensor = builtin_profile("carto-like");
  ImuConfig imu;
  FilterSettings filter;
  PidGains gains;
  ReferenceConfig reference;
  BracketConfig bracket;
  std::vector<ScriptedLoopClosure> loop_closures;
  std::string output_dir;  // empty: nothing written
  double divergence_bound = 1e3;  // m

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

/// Filter configuration the harness derives from a scenario.
FilterConfig filter_config(const ScenarioConfig& cfg);

/// Takeoff, main reference and landing on one clock.
Timeline build_timeline(const ScenarioConfig& cfg);

struct RunRow {
  double t = 0.0;
  Phase phase = Phase::Takeoff;
  VehicleState truth;
  TrajectoryPoint reference;
  bool pose_valid = false;
  PoseMeasurement raw;
  PoseMeasurement measured;  // after loop-closure smoothing
  bool loop_closure = false;
  Vector9 estimate = Vector9::Zero();
  Vector9 covariance_diagonal = Vector9::Zero();
  double estimate_yaw = 0.0;
  AttitudeCommand command;
};

struct RunRecord {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<RunRow> rows;

  std::string header_value(const std::string& key) const;
};

struct AxisStepResult {
  Axis axis = Axis::X;
  int steps = 0;
  IntegralCriteria integrals;           // summed over the axis' steps
  std::optional<double> overshoot;      // mean %, over steps
  std::optional<double> rise_time;      // mean s, over settled steps
  int unsettled = 0;
};

struct ScenarioMetrics {
  std::vector<AxisStepResult> axes;
  std::optional<double> hausdorff_rms;
  std::optional<double> hausdorff_max;
  std::optional<double> landing_error;

  bool any_unsettled() const;
  /// Flat (metric, axis) -> value view, axis empty for scalar metrics.
  std::map<std::pair<std::string, std::string>, double> flatten() const;
};

/// Recomputes every metric of a record; used online and by the offline
/// `metrics` subcommand.
ScenarioMetrics compute_metrics(const RunRecord& record, ReferenceKind kind);

/// Max feedback error |estimate - truth| while the truth is above
/// `altitude`, divided by the max while below it (main phase only).
/// nullopt when either side has no samples.
std::optional<double> altitude_error_ratio(const RunRecord& record, double altitude);

enum class RunStatus { Completed, Diverged };

const char* status_name(RunStatus status);

struct RunCounters {
  std::uint64_t poses_emitted = 0;
  std::uint64_t poses_delivered = 0;
  std::uint64_t imu_samples = 0;
  std::uint64_t filter_predicts = 0;
  std::uint64_t filter_corrections = 0;
  std::uint64_t dropped_measurements = 0;
  std::uint64_t loop_closures = 0;
};

struct RunResult {
  RunStatus status = RunStatus::Completed;
  std::string message;
  RunRecord record;
  ScenarioMetrics metrics;
  RunCounters counters;
  double simulated_time = 0.0;
};

/// Runs one closed-loop scenario. Writes its files when cfg.output_dir is set.
RunResult run_scenario(const ScenarioConfig& cfg);

// Suite -------------------------------------------------------------------

struct SuiteConfig {
  std::string name = "suite";
  std::vector<ScenarioConfig> scenarios;
  std::vector<std::uint64_t> seeds{1};
  unsigned threads = 0;  // 0: hardware concurrency
  std::string output_dir;
};

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one value
  std::size_t count = 0;
};

struct ScenarioAggregate {
  std::string scenario;
  std::string profile;
  ReferenceKind kind = ReferenceKind::Steps;
  std::size_t runs = 0;
  std::size_t diverged = 0;
  std::map<std::pair<std::string, std::string>, MetricStats> metrics;
  std::vector<double> per_seed_landing_error;
};

struct SuiteReport {
  std::string name;
  std::vector<ScenarioAggregate> scenarios;
};

MetricStats summarize(const std::vector<double>& values);

/// Runs every scenario for every seed. All configurations are validated
/// before the first run starts.
SuiteReport run_suite(const SuiteConfig& suite);

}  // namespace slamloop
