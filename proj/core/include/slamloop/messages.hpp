#pragma once

// Plain records exchanged between the sensor, estimator, controller,
// plant and reference modules.

#include "slamloop/types.hpp"

namespace slamloop {

/// Pose reported by a SLAM source in the inertial frame.
struct PoseMeasurement {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

/// Gravity-compensated inertial-frame acceleration.
struct AccelMeasurement {
  double t = 0.0;
  Vec3 acceleration = Vec3::Zero();
};

inline constexpr double kMaxTiltAngle = 0.8;  // rad

/// Setpoint handed to the attitude loop.
struct AttitudeCommand {
  double roll = 0.0;       // rad
  double pitch = 0.0;      // rad
  double yaw_rate = 0.0;   // rad/s
  double thrust = 0.0;     // normalised, [0, 1]

  bool within_envelope() const;
};

struct TrajectoryPoint {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();
  double yaw = 0.0;
};

/// Ground truth of the simulated vehicle.
struct VehicleState {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  double yaw_rate = 0.0;
  // Acceleration applied over the last integration step.
  Vec3 acceleration = Vec3::Zero();
};

}  // namespace slamloop
