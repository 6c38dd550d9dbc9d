#pragma once

#include "slamloop/messages.hpp"
#include "slamloop/types.hpp"

namespace slamloop {

/// Translational point-mass quadrotor with first-order attitude and yaw-rate
/// lags standing in for the autopilot's attitude loop.
struct PlantParams {
  double mass = 9.0;                    // kg
  double thrust_to_weight = 3.08;       // 4 x 68 N against 9 kg
  double attitude_time_constant = 0.15; // s
  double yaw_time_constant = 0.1;       // s
  double drag = 0.1;                    // 1/s, linear
  double gravity = kGravity;            // m/s^2
  Vec3 disturbance = Vec3::Zero();      // m/s^2, constant

  void validate() const;
  /// Normalised thrust command that cancels gravity when level.
  double hover_thrust() const { return 1.0 / thrust_to_weight; }
};

inline constexpr double kMaxPlantStep = 0.01;

/// Acceleration produced by `cmd` at the given attitude and velocity.
Vec3 plant_acceleration(const VehicleState& state, const AttitudeCommand& cmd,
                        const PlantParams& params);

/// Advances the plant by dt with semi-implicit Euler (velocity, then position).
/// Throws ConfigError unless dt lies in (0, 0.01].
VehicleState step(const VehicleState& state, const AttitudeCommand& cmd,
                  const PlantParams& params, double dt);

}  // namespace slamloop
