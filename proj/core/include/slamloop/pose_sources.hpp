#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "slamloop/messages.hpp"
#include "slamloop/types.hpp"

namespace slamloop {

/// Statistical stand-in for a SLAM pose source.
struct SensorProfile {
  std::string name = "custom";
  double rate_hz = 50.0;
  Vec3 noise_sigma = Vec3::Constant(0.01);      // m, per axis
  Vec3 drift_density = Vec3::Zero();            // m/sqrt(s), per axis
  double z_drift_multiplier = 1.0;
  double yaw_noise_sigma = 0.0;                 // rad
  // Output describes the vehicle this many publish periods before delivery.
  double latency_periods = 1.0;

  double degradation_altitude = 4.0;            // m
  double degradation_slope = 0.0;               // 1/m, 0 disables

  bool loop_closure_enabled = false;
  double revisit_radius = 3.0;                  // m
  double min_excursion_time = 30.0;             // s
  double min_loop_drift = 0.1;                  // m
  // Periodic drift correction against the existing map, independent of
  // revisits. 0 disables.
  double global_optimization_period = 0.0;      // s
  double smoothing_window = 0.0;                // s, 0 = pass-through

  void validate() const;
  double period() const { return 1.0 / rate_hz; }
  double latency() const { return latency_periods / rate_hz; }
};

/// Built-in profiles: "carto-like" and "loam-like".
SensorProfile builtin_profile(const std::string& name);
std::vector<std::string> builtin_profile_names();

struct LoopClosureEvent {
  double t = 0.0;
  Vec3 delta = Vec3::Zero();  // step taken by the raw output
};

/// Event forced at a given time. Without an explicit delta the current drift
/// bias is removed, exactly as an organic loop closure would.
struct ScriptedLoopClosure {
  double t = 0.0;
  std::optional<Vec3> delta;
};

/// Per-axis noise standard deviation including altitude degradation.
Vec3 effective_noise_sigma(const SensorProfile& profile, double altitude);

/// Spreads loop-closure steps over the smoothing window by adding a decaying
/// residual that cancels each step at its onset. Residuals of overlapping
/// events superpose.
class StepSmoother {
 public:
  explicit StepSmoother(double window = 0.0);

  void add_event(const LoopClosureEvent& event);

  /// Offset to add to the raw output at time t.
  Vec3 offset(double t) const;
  PoseMeasurement apply(const PoseMeasurement& raw) const;

  double window() const { return window_; }
  double time_constant() const { return window_ / 5.0; }
  bool pass_through() const { return window_ <= 0.0; }

 private:
  double window_;
  std::vector<LoopClosureEvent> events_;
};

struct PoseSample {
  PoseMeasurement raw;
  PoseMeasurement smoothed;
  bool loop_closure = false;
};

/// Drift, noise and loop-closure state of one SLAM source. Samples only on
/// the profile's publish grid; between ticks sample() returns nullopt.
class SlamPoseSource {
 public:
  SlamPoseSource(SensorProfile profile, std::uint64_t seed,
                 std::vector<ScriptedLoopClosure> scripted = {});

  std::optional<PoseSample> sample(const VehicleState& truth);

  /// Organic loop-closure check, exposed for direct testing.
  std::optional<LoopClosureEvent> maybe_loop_close(const VehicleState& truth);

  const Vec3& drift_bias() const { return drift_; }
  void set_drift_bias(const Vec3& bias) { drift_ = bias; }
  const SensorProfile& profile() const { return profile_; }
  const std::vector<LoopClosureEvent>& events() const { return events_; }
  std::uint64_t emitted() const { return emitted_; }

 private:
  struct Place {
    double t;
    Vec3 position;
    bool left;  // vehicle has been outside the revisit radius since
  };

  void advance_drift(double t);
  void apply_event(const LoopClosureEvent& event);

  SensorProfile profile_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  StepSmoother smoother_;
  std::vector<ScriptedLoopClosure> scripted_;
  std::size_t next_scripted_ = 0;

  Vec3 drift_ = Vec3::Zero();
  std::optional<double> last_drift_time_;
  std::uint64_t tick_ = 0;       // next publish index on the rate grid
  std::uint64_t emitted_ = 0;
  std::vector<Place> places_;
  std::optional<double> last_place_time_;
  double last_optimization_time_ = 0.0;
  std::vector<LoopClosureEvent> events_;
};

struct ImuConfig {
  double rate_hz = 200.0;
  Vec3 noise_sigma = Vec3::Constant(0.05);  // m/s^2
  Vec3 bias = Vec3::Zero();                 // m/s^2, constant per run
  double range = 160.0;                     // m/s^2, norm clamp

  void validate() const;
};

class ImuSource {
 public:
  ImuSource(ImuConfig cfg, std::uint64_t seed);

  AccelMeasurement sample(double t, const Vec3& true_acceleration);

  const ImuConfig& config() const { return cfg_; }

 private:
  ImuConfig cfg_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace slamloop
