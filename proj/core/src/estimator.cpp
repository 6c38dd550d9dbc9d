#include "slamloop/estimator.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace slamloop {

namespace {

void symmetrize(Matrix9& m) { m = 0.5 * (m + m.transpose()).eval(); }

bool finite_pose(const PoseMeasurement& p) {
  return std::isfinite(p.t) && p.position.allFinite() && std::isfinite(p.yaw);
}

bool finite_accel(const AccelMeasurement& a) {
  return std::isfinite(a.t) && a.acceleration.allFinite();
}

}  // namespace

Vec3 StateVector::position() const {
  return {values(position_slot(0)), values(position_slot(1)),
          values(position_slot(2))};
}

Vec3 StateVector::velocity() const {
  return {values(velocity_slot(0)), values(velocity_slot(1)),
          values(velocity_slot(2))};
}

Vec3 StateVector::acceleration() const {
  return {values(acceleration_slot(0)), values(acceleration_slot(1)),
          values(acceleration_slot(2))};
}

StateVector StateVector::from_blocks(const Vec3& position, const Vec3& velocity,
                                     const Vec3& acceleration) {
  StateVector s;
  for (int axis = 0; axis < 3; ++axis) {
    s.values(position_slot(axis)) = position(axis);
    s.values(velocity_slot(axis)) = velocity(axis);
    s.values(acceleration_slot(axis)) = acceleration(axis);
  }
  return s;
}

Covariance Covariance::diagonal(const Vector9& diag) {
  Covariance c;
  c.values = diag.asDiagonal();
  return c;
}

Covariance Covariance::from_block_diagonal(const Vec3& block_diag) {
  Vector9 diag;
  for (int axis = 0; axis < 3; ++axis) diag.segment<3>(3 * axis) = block_diag;
  return diagonal(diag);
}

Matrix3 kinematic_block(double ts) {
  Matrix3 a;
  a << 1.0, ts, 0.5 * ts * ts,
       0.0, 1.0, ts,
       0.0, 0.0, 1.0;
  return a;
}

TransitionModel TransitionModel::make(double ts, const Vec3& process_noise) {
  if (!(ts > 0.0) || !std::isfinite(ts)) {
    throw ConfigError("filter sample time must be positive, got " +
                      std::to_string(ts));
  }
  if (!process_noise.allFinite() || (process_noise.array() <= 0.0).any()) {
    throw ConfigError("process noise diagonal entries must be > 0");
  }
  TransitionModel m;
  m.ts = ts;
  m.F.setZero();
  const Matrix3 a = kinematic_block(ts);
  Vector9 q;
  for (int axis = 0; axis < 3; ++axis) {
    m.F.block<3, 3>(3 * axis, 3 * axis) = a;
    q.segment<3>(3 * axis) = process_noise;
  }
  m.Q = q.asDiagonal();
  return m;
}

ObservationModel ObservationModel::make(const Vec3& position_variance,
                                        const Vec3& acceleration_variance,
                                        double velocity_placeholder) {
  if (!position_variance.allFinite() || (position_variance.array() <= 0.0).any()) {
    throw ConfigError("position measurement variance must be > 0");
  }
  if (!acceleration_variance.allFinite() ||
      (acceleration_variance.array() <= 0.0).any()) {
    throw ConfigError("acceleration measurement variance must be > 0");
  }
  if (!(velocity_placeholder > 0.0)) {
    throw ConfigError("velocity slot variance must be > 0");
  }
  ObservationModel m;
  m.H.setZero();
  Vector9 r;
  for (int axis = 0; axis < 3; ++axis) {
    m.H(position_slot(axis), position_slot(axis)) = 1.0;
    m.H(acceleration_slot(axis), acceleration_slot(axis)) = 1.0;
    r(position_slot(axis)) = position_variance(axis);
    r(velocity_slot(axis)) = velocity_placeholder;
    r(acceleration_slot(axis)) = acceleration_variance(axis);
  }
  m.R = r.asDiagonal();
  return m;
}

MeasurementVector MeasurementVector::from_sensors(const Vec3& position,
                                                  const Vec3& acceleration) {
  MeasurementVector z;
  z.values = StateVector::from_blocks(position, Vec3::Zero(), acceleration).values;
  return z;
}

Estimate predict(const StateVector& state, const Covariance& cov,
                 const TransitionModel& model) {
  if (!(model.ts > 0.0)) {
    throw ConfigError("transition model has non-positive sample time");
  }
  if (!state.values.allFinite() || !cov.values.allFinite()) {
    throw NumericalError("predict: non-finite state or covariance");
  }
  Estimate out;
  out.state.values = model.F * state.values;
  out.cov.values = model.F * cov.values * model.F.transpose() + model.Q;
  symmetrize(out.cov.values);
  return out;
}

Matrix9 kalman_gain(const Matrix9& P, const ObservationModel& obs) {
  const Matrix9 S = obs.H * P * obs.H.transpose() + obs.R;
  Eigen::LLT<Matrix9> llt(S);
  if (llt.info() != Eigen::Success) {
    int worst = 0;
    for (int i = 1; i < 9; ++i) {
      if (S(i, i) < S(worst, worst)) worst = i;
    }
    throw NumericalError("innovation covariance is singular; smallest diagonal "
                         "entry S(" + std::to_string(worst) + "," +
                         std::to_string(worst) + ") = " +
                         std::to_string(S(worst, worst)));
  }
  // K^T = S^-1 (H P), using P = P^T.
  const Matrix9 hp = obs.H * P;
  return llt.solve(hp).transpose();
}

Correction correct(const StateVector& state, const Covariance& cov,
                   const MeasurementVector& z, const ObservationModel& obs) {
  Correction out;
  if (!z.values.allFinite()) {
    out.posterior = {state, cov};
    out.dropped = true;
    return out;
  }
  if (!state.values.allFinite() || !cov.values.allFinite()) {
    throw NumericalError("correct: non-finite state or covariance");
  }
  out.gain = kalman_gain(cov.values, obs);
  const Vector9 innovation = z.values - obs.H * state.values;
  out.posterior.state.values = state.values + out.gain * innovation;
  out.posterior.cov.values =
      (Matrix9::Identity() - out.gain * obs.H) * cov.values;
  symmetrize(out.posterior.cov.values);
  return out;
}

void FilterConfig::validate() const {
  if (!(ts > 0.0) || !std::isfinite(ts)) {
    throw ConfigError("filter period must be positive");
  }
  if (!prior_diagonal.allFinite() || (prior_diagonal.array() < 0.0).any()) {
    throw ConfigError("prior covariance diagonal must be >= 0");
  }
  if (!(hold_factor >= 1e6)) {
    throw ConfigError("hold factor must be >= 1e6");
  }
  // Q and R are checked by their builders.
  (void)TransitionModel::make(ts, process_noise);
  (void)ObservationModel::make(position_variance, acceleration_variance);
}

FusionFilter::FusionFilter(const PoseMeasurement& pose0, const FilterConfig& cfg)
    : cfg_(cfg) {
  cfg_.validate();
  if (!finite_pose(pose0)) {
    throw ConfigError("initial pose must be finite");
  }
  transition_ = TransitionModel::make(cfg_.ts, cfg_.process_noise);
  nominal_ = ObservationModel::make(cfg_.position_variance,
                                    cfg_.acceleration_variance);
  hold_position_ = ObservationModel::make(
      cfg_.position_variance * cfg_.hold_factor, cfg_.acceleration_variance);
  hold_acceleration_ = ObservationModel::make(
      cfg_.position_variance, cfg_.acceleration_variance * cfg_.hold_factor);

  estimate_.state = StateVector::from_blocks(pose0.position, Vec3::Zero(),
                                             Vec3::Zero());
  estimate_.cov = Covariance::from_block_diagonal(cfg_.prior_diagonal);
  yaw_ = pose0.yaw;
  time_ = pose0.t;
}

void FusionFilter::step(const std::optional<PoseMeasurement>& pose,
                        const std::optional<AccelMeasurement>& accel, double ts) {
  if (std::abs(ts - cfg_.ts) > 1e-12 * cfg_.ts) {
    throw ConfigError("filter stepped with period " + std::to_string(ts) +
                      " but configured for " + std::to_string(cfg_.ts));
  }
  time_ += ts;
  estimate_ = predict(estimate_.state, estimate_.cov, transition_);
  ++predicts_;

  const PoseMeasurement* use_pose = nullptr;
  if (pose) {
    if (!finite_pose(*pose)) {
      ++dropped_non_finite_;
    } else if (last_pose_time_ && pose->t <= *last_pose_time_) {
      ++dropped_out_of_order_;
    } else {
      use_pose = &*pose;
    }
  }
  const AccelMeasurement* use_accel = nullptr;
  if (accel) {
    if (!finite_accel(*accel)) {
      ++dropped_non_finite_;
    } else if (last_accel_time_ && accel->t <= *last_accel_time_) {
      ++dropped_out_of_order_;
    } else {
      use_accel = &*accel;
    }
  }
  if (!use_pose && !use_accel) return;

  // A missing channel is filled with the predicted value (zero innovation)
  // and its variance inflated by the hold factor.
  const Vec3 position = use_pose ? use_pose->position : estimate_.state.position();
  const Vec3 acceleration =
      use_accel ? use_accel->acceleration : estimate_.state.acceleration();
  const ObservationModel& obs = !use_pose    ? hold_position_
                                : !use_accel ? hold_acceleration_
                                             : nominal_;

  const Correction c = correct(estimate_.state, estimate_.cov,
                               MeasurementVector::from_sensors(position, acceleration),
                               obs);
  estimate_ = c.posterior;
  ++corrections_;

  if (use_pose) {
    last_pose_time_ = use_pose->t;
    yaw_ = use_pose->yaw;
  }
  if (use_accel) last_accel_time_ = use_accel->t;
}

FusionFilter initialize(const PoseMeasurement& pose0, const FilterConfig& cfg) {
  return FusionFilter(pose0, cfg);
}

}  // namespace slamloop
