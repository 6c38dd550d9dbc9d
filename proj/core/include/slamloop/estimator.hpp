#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>

#include "slamloop/messages.hpp"
#include "slamloop/types.hpp"

namespace slamloop {

using Vector9 = Eigen::Matrix<double, 9, 1>;
using Matrix9 = Eigen::Matrix<double, 9, 9>;
using Matrix3 = Eigen::Matrix3d;

// Slot layout shared by the state and measurement vectors:
// [x, vx, ax, y, vy, ay, z, vz, az].
inline constexpr int position_slot(int axis) { return 3 * axis; }
inline constexpr int velocity_slot(int axis) { return 3 * axis + 1; }
inline constexpr int acceleration_slot(int axis) { return 3 * axis + 2; }

/// Translational filter state, three (position, velocity, acceleration)
/// blocks in x, y, z order.
struct StateVector {
  Vector9 values = Vector9::Zero();

  Vec3 position() const;
  Vec3 velocity() const;
  Vec3 acceleration() const;

  static StateVector from_blocks(const Vec3& position, const Vec3& velocity,
                                 const Vec3& acceleration);
};

/// Filter covariance. Kept symmetric by the operations that produce it.
struct Covariance {
  Matrix9 values = Matrix9::Identity();

  static Covariance diagonal(const Vector9& diag);
  static Covariance from_block_diagonal(const Vec3& block_diag);
};

/// Constant-acceleration kinematics block for one axis.
Matrix3 kinematic_block(double ts);

struct TransitionModel {
  double ts = 0.0;
  Matrix9 F = Matrix9::Identity();
  Matrix9 Q = Matrix9::Zero();

  /// Builds F from three copies of the kinematic block and a diagonal Q
  /// whose per-axis (position, velocity, acceleration) entries are taken
  /// from `process_noise`. Throws ConfigError unless ts > 0 and every
  /// entry of `process_noise` is > 0.
  static TransitionModel make(double ts, const Vec3& process_noise);
};

/// Position and acceleration are observed; the velocity rows of H are zero.
struct ObservationModel {
  Matrix9 H = Matrix9::Zero();
  Matrix9 R = Matrix9::Identity();

  /// `position_variance` and `acceleration_variance` are per-axis variances.
  /// Velocity slots of R get `velocity_placeholder`; H zeroes them anyway.
  static ObservationModel make(const Vec3& position_variance,
                               const Vec3& acceleration_variance,
                               double velocity_placeholder = 1.0);
};

/// Observation in state ordering. Velocity slots are zero when built
/// through from_sensors(); correct() is insensitive to them regardless.
struct MeasurementVector {
  Vector9 values = Vector9::Zero();

  static MeasurementVector from_sensors(const Vec3& position,
                                        const Vec3& acceleration);
};

struct Estimate {
  StateVector state;
  Covariance cov;
};

struct Correction {
  Estimate posterior;
  Matrix9 gain = Matrix9::Zero();
  bool dropped = false;  // measurement was non-finite, prior returned
};

/// state <- F state, cov <- F cov F^T + Q.
Estimate predict(const StateVector& state, const Covariance& cov,
                 const TransitionModel& model);

/// Standard Kalman correction with post-hoc symmetrisation.
/// Throws NumericalError when the innovation covariance cannot be factored.
Correction correct(const StateVector& state, const Covariance& cov,
                   const MeasurementVector& z, const ObservationModel& obs);

/// Kalman gain P H^T (H P H^T + R)^-1, factored with a Cholesky solve so
/// the columns belonging to the zero rows of H come out exactly zero.
Matrix9 kalman_gain(const Matrix9& P, const ObservationModel& obs);

struct FilterConfig {
  double ts = 1.0 / 200.0;
  Vec3 process_noise{1e-4, 1e-3, 1e-2};
  Vec3 position_variance{1e-4, 1e-4, 1e-4};
  Vec3 acceleration_variance{2.5e-3, 2.5e-3, 2.5e-3};
  Vec3 prior_diagonal{1e-2, 1e-1, 1.0};  // per axis block
  double hold_factor = 1e6;

  void validate() const;
};

/// Multi-rate position/acceleration fusion driven at the IMU period.
class FusionFilter {
 public:
  FusionFilter(const PoseMeasurement& pose0, const FilterConfig& cfg);

  /// One predict, then at most one correct. `ts` must equal the configured
  /// period. Out-of-order or non-finite messages are dropped and counted.
  void step(const std::optional<PoseMeasurement>& pose,
            const std::optional<AccelMeasurement>& accel, double ts);

  const StateVector& state() const { return estimate_.state; }
  const Covariance& covariance() const { return estimate_.cov; }
  const Estimate& estimate() const { return estimate_; }
  double yaw() const { return yaw_; }
  double time() const { return time_; }

  std::optional<double> last_pose_time() const { return last_pose_time_; }
  std::optional<double> last_accel_time() const { return last_accel_time_; }

  std::uint64_t predict_count() const { return predicts_; }
  std::uint64_t correct_count() const { return corrections_; }
  std::uint64_t dropped_out_of_order() const { return dropped_out_of_order_; }
  std::uint64_t dropped_non_finite() const { return dropped_non_finite_; }

  const FilterConfig& config() const { return cfg_; }

 private:
  FilterConfig cfg_;
  TransitionModel transition_;
  ObservationModel nominal_;
  ObservationModel hold_position_;
  ObservationModel hold_acceleration_;

  Estimate estimate_;
  double yaw_ = 0.0;
  double time_ = 0.0;
  std::optional<double> last_pose_time_;
  std::optional<double> last_accel_time_;

  std::uint64_t predicts_ = 0;
  std::uint64_t corrections_ = 0;
  std::uint64_t dropped_out_of_order_ = 0;
  std::uint64_t dropped_non_finite_ = 0;
};

/// Filter initialised from a first pose: positions from the pose, all
/// derivative slots zero, covariance from `cfg.prior_diagonal`.
FusionFilter initialize(const PoseMeasurement& pose0, const FilterConfig& cfg);

}  // namespace slamloop
