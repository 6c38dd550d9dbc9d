#pragma once

#include <memory>
#include <string>
#include <vector>

#include "slamloop/messages.hpp"
#include "slamloop/types.hpp"

namespace slamloop {

/// Rest-to-rest trapezoidal (or triangular) speed profile over a distance.
class TrapezoidalProfile {
 public:
  struct Sample {
    double s = 0.0;  // distance travelled
    double v = 0.0;
    double a = 0.0;
  };

  TrapezoidalProfile() = default;
  TrapezoidalProfile(double distance, double max_velocity, double max_acceleration);

  Sample at(double t) const;
  double duration() const { return total_; }
  double peak_velocity() const { return peak_; }
  /// Times at which the acceleration switches (excluding 0 and the end).
  std::vector<double> switch_times() const;

 private:
  double distance_ = 0.0;
  double accel_ = 1.0;
  double peak_ = 0.0;
  double t_accel_ = 0.0;
  double t_cruise_ = 0.0;
  double total_ = 0.0;
};

/// A time-parameterised reference piece, evaluated on local time [0, duration].
class ReferenceSegment {
 public:
  virtual ~ReferenceSegment() = default;
  virtual TrajectoryPoint at(double t) const = 0;
  virtual double duration() const = 0;
  /// Local times where velocity or acceleration may be discontinuous.
  virtual std::vector<double> breakpoints() const { return {}; }
};

/// Samples a segment at t = 0, dt, 2 dt, ... up to its duration.
std::vector<TrajectoryPoint> sample(const ReferenceSegment& segment, double dt);

/// Minimum hold between steps.
inline constexpr double kSettlingHorizon = 3.0;  // s

/// Alternating +/- amplitude steps about `origin` on one axis, preceded by
/// one hold at the origin. Velocity and acceleration setpoints are zero.
class StepSequence final : public ReferenceSegment {
 public:
  StepSequence(Axis axis, double amplitude, double hold_time, int repetitions,
               const Vec3& origin, double yaw = 0.0);

  TrajectoryPoint at(double t) const override;
  double duration() const override;
  std::vector<double> breakpoints() const override;

  Axis axis() const { return axis_; }
  double hold_time() const { return hold_; }
  int step_count() const { return 2 * repetitions_; }

 private:
  Axis axis_;
  double amplitude_;
  double hold_;
  int repetitions_;
  Vec3 origin_;
  double yaw_;
};

std::vector<TrajectoryPoint> step_sequence(Axis axis, double amplitude,
                                           double hold_time, int repetitions,
                                           double dt,
                                           const Vec3& origin = Vec3::Zero());

enum class YawMode { Fixed, Tangent };

struct HelixSpec {
  Vec3 center = Vec3::Zero();      // x, y used; z ignored
  double radius = 2.5;             // m
  double climb = 8.0;              // m
  double start_altitude = 1.5;     // m
  double turns = 3.0;
  double velocity_limit = 1.0;     // m/s, per axis
  double acceleration_limit = 0.5; // m/s^2, per axis
  YawMode yaw_mode = YawMode::Fixed;
  double fixed_yaw = 0.0;

  void validate() const;
  HelixSpec scaled(double factor) const;  // constraints times factor
};

/// Upward helix whose angle and height share one trapezoidal progress
/// profile, scaled so every axis respects the velocity and acceleration
/// limits (centripetal term included).
class HelixPlan final : public ReferenceSegment {
 public:
  explicit HelixPlan(HelixSpec spec);

  TrajectoryPoint at(double t) const override;
  double duration() const override { return progress_.duration(); }
  std::vector<double> breakpoints() const override { return progress_.switch_times(); }

  const HelixSpec& spec() const { return spec_; }
  Vec3 start_position() const;
  /// Progress-rate and progress-acceleration caps chosen by the planner.
  double progress_rate_limit() const { return rate_limit_; }
  double progress_accel_limit() const { return accel_limit_; }

 private:
  HelixSpec spec_;
  double sweep_;  // total angle, rad
  double rate_limit_ = 0.0;
  double accel_limit_ = 0.0;
  TrapezoidalProfile progress_;
};

std::vector<TrajectoryPoint> helix(const HelixSpec& spec, double dt);

/// Straight-line legs between waypoints, each a rest-to-rest trapezoid,
/// with an optional dwell at every waypoint after the first.
class WaypointPath final : public ReferenceSegment {
 public:
  WaypointPath(std::vector<Vec3> points, double max_velocity,
               double max_acceleration, double dwell = 0.0, double yaw = 0.0);

  TrajectoryPoint at(double t) const override;
  double duration() const override { return total_; }
  std::vector<double> breakpoints() const override;

 private:
  struct Leg {
    Vec3 from;
    Vec3 direction;
    double start;
    TrapezoidalProfile profile;
  };
  std::vector<Vec3> points_;
  std::vector<Leg> legs_;
  double dwell_;
  double yaw_;
  double total_ = 0.0;
};

/// Holds one point for a fixed time.
class Hold final : public ReferenceSegment {
 public:
  Hold(const Vec3& position, double duration, double yaw = 0.0);
  TrajectoryPoint at(double t) const override;
  double duration() const override { return duration_; }

 private:
  Vec3 position_;
  double duration_;
  double yaw_;
};

enum class Phase { Takeoff = 0, Main = 1, Landing = 2 };

const char* phase_name(Phase phase);

/// Concatenation of segments on a global clock. Past the end the final
/// point is held at rest.
class Timeline {
 public:
  void append(std::shared_ptr<const ReferenceSegment> segment, Phase phase);

  TrajectoryPoint at(double t) const;
  Phase phase_at(double t) const;
  double duration() const { return total_; }
  /// Global [start, end) of the first segment with the given phase through
  /// the last one with it.
  std::pair<double, double> phase_window(Phase phase) const;
  bool empty() const { return entries_.empty(); }

 private:
  struct Entry {
    std::shared_ptr<const ReferenceSegment> segment;
    Phase phase;
    double start;
  };
  const Entry* find(double t) const;

  std::vector<Entry> entries_;
  double total_ = 0.0;
};

}  // namespace slamloop
