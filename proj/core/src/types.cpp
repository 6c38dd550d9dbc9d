#include "slamloop/types.hpp"

#include <cmath>
#include <numbers>

#include "slamloop/messages.hpp"

namespace slamloop {

Axis parse_axis(const std::string& name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw ConfigError("unknown axis '" + name + "' (expected x, y or z)");
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(angle, two_pi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

bool AttitudeCommand::within_envelope() const {
  return std::isfinite(roll) && std::isfinite(pitch) &&
         std::isfinite(yaw_rate) && std::isfinite(thrust) &&
         std::abs(roll) <= kMaxTiltAngle && std::abs(pitch) <= kMaxTiltAngle &&
         thrust >= 0.0 && thrust <= 1.0;
}

}  // namespace slamloop
