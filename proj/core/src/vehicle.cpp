#include "slamloop/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slamloop {

void PlantParams::validate() const {
  if (!(mass > 0.0) || !(attitude_time_constant > 0.0) ||
      !(yaw_time_constant > 0.0) || !(gravity > 0.0)) {
    throw ConfigError("plant parameters must be positive");
  }
  if (!(drag >= 0.0)) {
    throw ConfigError("plant drag must be >= 0");
  }
  if (!(thrust_to_weight > 1.0)) {
    throw ConfigError("plant thrust-to-weight must exceed 1");
  }
  if (!disturbance.allFinite()) {
    throw ConfigError("plant disturbance must be finite");
  }
}

Vec3 plant_acceleration(const VehicleState& state, const AttitudeCommand& cmd,
                        const PlantParams& params) {
  const double cr = std::cos(state.roll), sr = std::sin(state.roll);
  const double cp = std::cos(state.pitch), sp = std::sin(state.pitch);
  const double cy = std::cos(state.yaw), sy = std::sin(state.yaw);
  // Body z axis of R = Rz(yaw) Ry(pitch) Rx(roll).
  const Vec3 body_z{cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr};
  const double specific_thrust =
      std::clamp(cmd.thrust, 0.0, 1.0) * params.thrust_to_weight * params.gravity;
  return specific_thrust * body_z + Vec3(0.0, 0.0, -params.gravity) -
         params.drag * state.velocity + params.disturbance;
}

VehicleState step(const VehicleState& state, const AttitudeCommand& cmd,
                  const PlantParams& params, double dt) {
  if (!(dt > 0.0 && dt <= kMaxPlantStep)) {
    throw ConfigError("plant step dt must lie in (0, 0.01], got " + std::to_string(dt));
  }
  VehicleState next = state;
  const double k_att = 1.0 - std::exp(-dt / params.attitude_time_constant);
  const double k_yaw = 1.0 - std::exp(-dt / params.yaw_time_constant);
  const double roll_cmd = std::clamp(cmd.roll, -kMaxTiltAngle, kMaxTiltAngle);
  const double pitch_cmd = std::clamp(cmd.pitch, -kMaxTiltAngle, kMaxTiltAngle);

  next.roll = std::clamp(state.roll + (roll_cmd - state.roll) * k_att,
                         -kMaxTiltAngle, kMaxTiltAngle);
  next.pitch = std::clamp(state.pitch + (pitch_cmd - state.pitch) * k_att,
                          -kMaxTiltAngle, kMaxTiltAngle);
  next.yaw_rate = state.yaw_rate + (cmd.yaw_rate - state.yaw_rate) * k_yaw;
  next.yaw = wrap_angle(state.yaw + next.yaw_rate * dt);

  next.acceleration = plant_acceleration(next, cmd, params);
  next.velocity = state.velocity + next.acceleration * dt;
  next.position = state.position + next.velocity * dt;
  next.t = state.t + dt;
  return next;
}

}  // namespace slamloop
