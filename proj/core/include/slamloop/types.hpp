#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace slamloop {

using Vec3 = Eigen::Vector3d;

inline constexpr double kGravity = 9.81;

/// Invalid parameters or a malformed configuration document.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical operation could not be carried out (singular matrix,
/// non-finite intermediate).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A step response never reached its upper rise threshold.
class UnsettledResponse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Axis { X = 0, Y = 1, Z = 2 };

inline constexpr int index(Axis axis) { return static_cast<int>(axis); }

inline const char* axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

Axis parse_axis(const std::string& name);

/// Maps an angle to (-pi, pi].
double wrap_angle(double angle);

inline bool all_finite(const Vec3& v) { return v.allFinite(); }

}  // namespace slamloop
