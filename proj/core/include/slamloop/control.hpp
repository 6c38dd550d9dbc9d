#pragma once

#include "slamloop/estimator.hpp"
#include "slamloop/messages.hpp"
#include "slamloop/types.hpp"

namespace slamloop {

/// Gains of the position (outer, P) and velocity (inner, PID) loops.
/// Vector-valued entries are per axis.
struct PidGains {
  Vec3 position_p{1.0, 1.0, 1.0};          // 1/s
  Vec3 position_i = Vec3::Zero();          // optional outer-loop terms
  Vec3 position_d = Vec3::Zero();
  Vec3 velocity_p{1.0, 1.0, 1.0};          // 1/s
  Vec3 velocity_i{0.2, 0.2, 0.2};          // 1/s^2
  Vec3 velocity_d{0.05, 0.05, 0.05};       // unitless
  Vec3 integrator_limit = Vec3::Constant(2.0);   // m/s^2
  Vec3 acceleration_limit{6.0, 6.0, 6.0};        // m/s^2, inner-loop output
  Vec3 velocity_limit{3.0, 3.0, 2.0};            // m/s, outer-loop output
  double feedforward_velocity = 1.0;
  double feedforward_acceleration = 1.0;
  double yaw_p = 1.5;                      // 1/s
  double max_yaw_rate = 1.5;               // rad/s
  double derivative_cutoff = 20.0;         // rad/s

  void validate() const;
};

/// Per-axis integrators and derivative filter memory.
struct ControlState {
  Vec3 position_integrator = Vec3::Zero();
  Vec3 velocity_integrator = Vec3::Zero();
  Vec3 filtered_derivative = Vec3::Zero();
  Vec3 previous_velocity = Vec3::Zero();
  Vec3 previous_position = Vec3::Zero();
  bool has_previous = false;
  AttitudeCommand last_command;
};

/// v_sp = Kp (ref.pos - est.pos) + Kff_v ref.vel, clamped per axis.
/// Uses only the proportional outer gain; see CascadeController for the
/// optional I/D outer terms.
Vec3 position_loop(const TrajectoryPoint& ref, const StateVector& est,
                   const PidGains& gains);

/// a_des = PID(v_sp - est.vel) + Kff_a ref_acc. Derivative acts on the
/// estimated velocity, low-passed at `gains.derivative_cutoff`.
Vec3 velocity_loop(const Vec3& velocity_setpoint, const StateVector& est,
                   const Vec3& reference_acceleration, const PidGains& gains,
                   ControlState& state, double dt);

struct AttitudeLimits {
  double max_tilt = kMaxTiltAngle;
  double yaw_p = 1.5;
  double max_yaw_rate = 1.5;
};

/// Small-angle map from desired inertial acceleration to roll, pitch and
/// normalised thrust. Every output is clamped into the command envelope.
AttitudeCommand acceleration_to_attitude(const Vec3& desired_acceleration,
                                         double yaw_estimate,
                                         double yaw_reference,
                                         double hover_thrust,
                                         const AttitudeLimits& limits = {});

class CascadeController {
 public:
  CascadeController(PidGains gains, double hover_thrust);

  AttitudeCommand update(const TrajectoryPoint& ref, const StateVector& est,
                         double yaw_estimate, double dt);

  void reset();

  const PidGains& gains() const { return gains_; }
  const ControlState& state() const { return state_; }
  double hover_thrust() const { return hover_thrust_; }

 private:
  PidGains gains_;
  double hover_thrust_;
  ControlState state_;
};

}  // namespace slamloop
