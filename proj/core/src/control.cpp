#include "slamloop/control.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace slamloop {

namespace {

Vec3 clamp3(const Vec3& v, const Vec3& limit) {
  return v.cwiseMax(-limit).cwiseMin(limit);
}

double finite_or(double value, double fallback) {
  return std::isfinite(value) ? value : fallback;
}

}  // namespace

void PidGains::validate() const {
  auto nonneg = [](const Vec3& v) {
    return v.allFinite() && (v.array() >= 0.0).all();
  };
  auto positive = [](const Vec3& v) {
    return v.allFinite() && (v.array() > 0.0).all();
  };
  if (!nonneg(position_p) || !nonneg(position_i) || !nonneg(position_d) ||
      !nonneg(velocity_p) || !nonneg(velocity_i) || !nonneg(velocity_d) ||
      !(feedforward_velocity >= 0.0) || !(feedforward_acceleration >= 0.0) ||
      !(yaw_p >= 0.0)) {
    throw ConfigError("controller gains must be >= 0");
  }
  if (!positive(integrator_limit) || !positive(acceleration_limit) ||
      !positive(velocity_limit) || !(max_yaw_rate > 0.0) ||
      !(derivative_cutoff > 0.0)) {
    throw ConfigError("controller limits must be > 0");
  }
}

Vec3 position_loop(const TrajectoryPoint& ref, const StateVector& est,
                   const PidGains& gains) {
  const Vec3 error = ref.position - est.position();
  const Vec3 v_sp = gains.position_p.cwiseProduct(error) +
                    gains.feedforward_velocity * ref.velocity;
  return clamp3(v_sp, gains.velocity_limit);
}

Vec3 velocity_loop(const Vec3& velocity_setpoint, const StateVector& est,
                   const Vec3& reference_acceleration, const PidGains& gains,
                   ControlState& state, double dt) {
  if (!(dt > 0.0)) throw ConfigError("controller dt must be > 0");
  const Vec3 velocity = est.velocity();
  const Vec3 error = velocity_setpoint - velocity;

  Vec3 raw_derivative = Vec3::Zero();
  if (state.has_previous) {
    raw_derivative = -gains.velocity_d.cwiseProduct(velocity - state.previous_velocity) / dt;
  }
  const double wc_dt = gains.derivative_cutoff * dt;
  const double alpha = wc_dt / (1.0 + wc_dt);
  state.filtered_derivative += alpha * (raw_derivative - state.filtered_derivative);
  state.previous_velocity = velocity;
  state.has_previous = true;

  const Vec3 feedforward = gains.feedforward_acceleration * reference_acceleration;
  const Vec3 proportional = gains.velocity_p.cwiseProduct(error);
  const Vec3 trial = clamp3(state.velocity_integrator +
                                gains.velocity_i.cwiseProduct(error) * dt,
                            gains.integrator_limit);

  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const double base = proportional(i) + state.filtered_derivative(i) + feedforward(i);
    double u = base + trial(i);
    // Conditional integration: hold the integrator while the output is
    // saturated and the error would drive it further out.
    if (std::abs(u) > gains.acceleration_limit(i) && error(i) * u > 0.0) {
      u = base + state.velocity_integrator(i);
    } else {
      state.velocity_integrator(i) = trial(i);
    }
    out(i) = std::clamp(u, -gains.acceleration_limit(i), gains.acceleration_limit(i));
  }
  return out;
}

AttitudeCommand acceleration_to_attitude(const Vec3& desired_acceleration,
                                         double yaw_estimate,
                                         double yaw_reference,
                                         double hover_thrust,
                                         const AttitudeLimits& limits) {
  if (!(hover_thrust > 0.0 && hover_thrust < 1.0)) {
    throw ConfigError("hover thrust must lie in (0, 1)");
  }
  const double c = std::cos(yaw_estimate);
  const double s = std::sin(yaw_estimate);
  const Vec3& a = desired_acceleration;
  const double tilt = std::min(limits.max_tilt, kMaxTiltAngle);

  AttitudeCommand cmd;
  cmd.pitch = std::clamp(finite_or((a.x() * c + a.y() * s) / kGravity, 0.0), -tilt, tilt);
  cmd.roll = std::clamp(finite_or((a.x() * s - a.y() * c) / kGravity, 0.0), -tilt, tilt);
  cmd.thrust = std::clamp(finite_or(hover_thrust * (1.0 + a.z() / kGravity), hover_thrust),
                          0.0, 1.0);
  const double yaw_error = finite_or(wrap_angle(yaw_reference - yaw_estimate), 0.0);
  cmd.yaw_rate = std::clamp(limits.yaw_p * yaw_error, -limits.max_yaw_rate,
                            limits.max_yaw_rate);
  return cmd;
}

CascadeController::CascadeController(PidGains gains, double hover_thrust)
    : gains_(std::move(gains)), hover_thrust_(hover_thrust) {
  gains_.validate();
  if (!(hover_thrust_ > 0.0 && hover_thrust_ < 1.0)) {
    throw ConfigError("hover thrust must lie in (0, 1)");
  }
}

void CascadeController::reset() { state_ = ControlState{}; }

AttitudeCommand CascadeController::update(const TrajectoryPoint& ref,
                                          const StateVector& est,
                                          double yaw_estimate, double dt) {
  Vec3 v_sp = position_loop(ref, est, gains_);
  if (gains_.position_i.any() || gains_.position_d.any()) {
    const Vec3 error = ref.position - est.position();
    state_.position_integrator =
        clamp3(state_.position_integrator + gains_.position_i.cwiseProduct(error) * dt,
               gains_.velocity_limit);
    Vec3 derivative = Vec3::Zero();
    if (state_.has_previous) {
      derivative = -gains_.position_d.cwiseProduct(est.position() - state_.previous_position) / dt;
    }
    v_sp = clamp3(v_sp + state_.position_integrator + derivative, gains_.velocity_limit);
  }
  state_.previous_position = est.position();

  const Vec3 a_des = velocity_loop(v_sp, est, ref.acceleration, gains_, state_, dt);
  const AttitudeLimits limits{kMaxTiltAngle, gains_.yaw_p, gains_.max_yaw_rate};
  state_.last_command =
      acceleration_to_attitude(a_des, yaw_estimate, ref.yaw, hover_thrust_, limits);
  return state_.last_command;
}

}  // namespace slamloop
