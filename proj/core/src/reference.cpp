#include "slamloop/reference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace slamloop {

namespace {

constexpr double kTimeEpsilon = 1e-9;

}  // namespace

TrapezoidalProfile::TrapezoidalProfile(double distance, double max_velocity,
                                       double max_acceleration)
    : distance_(distance), accel_(max_acceleration) {
  if (!(distance >= 0.0) || !std::isfinite(distance)) {
    throw ConfigError("profile distance must be finite and >= 0");
  }
  if (!(max_velocity > 0.0) || !(max_acceleration > 0.0) ||
      !std::isfinite(max_velocity) || !std::isfinite(max_acceleration)) {
    throw ConfigError("profile limits must be finite and > 0");
  }
  if (distance == 0.0) return;
  if (distance < max_velocity * max_velocity / max_acceleration) {
    peak_ = std::sqrt(distance * max_acceleration);
    t_accel_ = peak_ / max_acceleration;
    t_cruise_ = 0.0;
  } else {
    peak_ = max_velocity;
    t_accel_ = max_velocity / max_acceleration;
    t_cruise_ = (distance - max_velocity * max_velocity / max_acceleration) / max_velocity;
  }
  total_ = 2.0 * t_accel_ + t_cruise_;
}

TrapezoidalProfile::Sample TrapezoidalProfile::at(double t) const {
  if (t <= 0.0 || total_ == 0.0) return {t >= total_ ? distance_ : 0.0, 0.0, 0.0};
  if (t >= total_) return {distance_, 0.0, 0.0};
  if (t < t_accel_) {
    return {0.5 * accel_ * t * t, accel_ * t, accel_};
  }
  if (t < t_accel_ + t_cruise_) {
    return {0.5 * accel_ * t_accel_ * t_accel_ + peak_ * (t - t_accel_), peak_, 0.0};
  }
  const double remaining = total_ - t;
  return {distance_ - 0.5 * accel_ * remaining * remaining, accel_ * remaining, -accel_};
}

std::vector<double> TrapezoidalProfile::switch_times() const {
  if (total_ == 0.0) return {};
  if (t_cruise_ > 0.0) return {t_accel_, t_accel_ + t_cruise_};
  return {t_accel_};
}

std::vector<TrajectoryPoint> sample(const ReferenceSegment& segment, double dt) {
  if (!(dt > 0.0)) throw ConfigError("sample period must be > 0");
  const double duration = segment.duration();
  const auto n = static_cast<std::size_t>(std::floor(duration / dt + kTimeEpsilon));
  std::vector<TrajectoryPoint> out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * dt;
    TrajectoryPoint p = segment.at(t);
    p.t = t;
    out.push_back(p);
  }
  if (static_cast<double>(n) * dt < duration - 1e-12) {
    TrajectoryPoint p = segment.at(duration);
    p.t = duration;
    out.push_back(p);
  }
  return out;
}

StepSequence::StepSequence(Axis axis, double amplitude, double hold_time,
                           int repetitions, const Vec3& origin, double yaw)
    : axis_(axis),
      amplitude_(amplitude),
      hold_(hold_time),
      repetitions_(repetitions),
      origin_(origin),
      yaw_(yaw) {
  if (amplitude == 0.0 || !std::isfinite(amplitude)) {
    throw ConfigError("step amplitude must be finite and non-zero");
  }
  if (!(hold_time > kSettlingHorizon) || !std::isfinite(hold_time)) {
    throw ConfigError("step hold time must exceed the settling horizon of " +
                      std::to_string(kSettlingHorizon) + " s");
  }
  if (repetitions < 1) throw ConfigError("step repetitions must be >= 1");
  if (!origin.allFinite()) throw ConfigError("step origin must be finite");
}

double StepSequence::duration() const {
  return hold_ * static_cast<double>(1 + 2 * repetitions_);
}

std::vector<double> StepSequence::breakpoints() const {
  std::vector<double> out;
  for (int k = 1; k <= 2 * repetitions_; ++k) out.push_back(hold_ * k);
  return out;
}

TrajectoryPoint StepSequence::at(double t) const {
  TrajectoryPoint p;
  p.t = t;
  p.position = origin_;
  p.yaw = yaw_;
  const int k = std::clamp(static_cast<int>(std::floor(t / hold_ + kTimeEpsilon)), 0,
                           2 * repetitions_);
  if (k > 0) p.position(index(axis_)) += (k % 2 == 1) ? amplitude_ : -amplitude_;
  return p;
}

std::vector<TrajectoryPoint> step_sequence(Axis axis, double amplitude,
                                           double hold_time, int repetitions,
                                           double dt, const Vec3& origin) {
  return sample(StepSequence(axis, amplitude, hold_time, repetitions, origin), dt);
}

void HelixSpec::validate() const {
  if (!center.allFinite() || !std::isfinite(start_altitude) || !std::isfinite(fixed_yaw)) {
    throw ConfigError("helix geometry must be finite");
  }
  if (!(radius > 0.0) || !(climb > 0.0) || !(turns > 0.0)) {
    throw ConfigError("helix radius, climb and turns must be > 0");
  }
  if (!(velocity_limit > 0.0) || !(acceleration_limit > 0.0) ||
      !std::isfinite(velocity_limit) || !std::isfinite(acceleration_limit)) {
    throw ConfigError("helix velocity and acceleration limits must be > 0");
  }
}

HelixSpec HelixSpec::scaled(double factor) const {
  HelixSpec out = *this;
  out.velocity_limit *= factor;
  out.acceleration_limit *= factor;
  return out;
}

HelixPlan::HelixPlan(HelixSpec spec) : spec_(spec) {
  spec_.validate();
  sweep_ = 2.0 * std::numbers::pi * spec_.turns;
  const double r = spec_.radius;
  const double arc = r * sweep_;                   // horizontal speed per unit rate
  const double centripetal = r * sweep_ * sweep_;  // accel per unit rate^2
  const double v = spec_.velocity_limit;
  const double a = spec_.acceleration_limit;

  // Progress rate cap; the centripetal term alone must leave room for
  // tangential acceleration.
  const double cap = std::min({v / arc, v / spec_.climb, std::sqrt(a / centripetal)}) *
                     (1.0 - 1e-9);
  auto accel_for = [&](double rate) {
    return std::min((a - centripetal * rate * rate) / arc, a / spec_.climb);
  };
  auto duration_for = [&](double rate) {
    const double acc = accel_for(rate);
    if (!(acc > 0.0)) return std::numeric_limits<double>::infinity();
    return TrapezoidalProfile(1.0, rate, acc).duration();
  };

  // Coarse scan, then golden-section refinement around the best cell.
  constexpr int kGrid = 400;
  double best_rate = cap;
  double best_time = duration_for(cap);
  for (int i = 1; i < kGrid; ++i) {
    const double rate = cap * static_cast<double>(i) / kGrid;
    const double time = duration_for(rate);
    if (time < best_time) {
      best_time = time;
      best_rate = rate;
    }
  }
  double lo = std::max(cap / kGrid * 1e-3, best_rate - cap / kGrid);
  double hi = std::min(cap, best_rate + cap / kGrid);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int iter = 0; iter < 80; ++iter) {
    const double m1 = hi - inv_phi * (hi - lo);
    const double m2 = lo + inv_phi * (hi - lo);
    if (duration_for(m1) < duration_for(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double refined = 0.5 * (lo + hi);
  if (duration_for(refined) < best_time) best_rate = refined;

  rate_limit_ = best_rate;
  accel_limit_ = accel_for(best_rate);
  if (!(accel_limit_ > 0.0) || !(rate_limit_ > 0.0) || !std::isfinite(accel_limit_)) {
    throw ConfigError("helix constraints are infeasible for this geometry");
  }
  progress_ = TrapezoidalProfile(1.0, rate_limit_, accel_limit_);
}

Vec3 HelixPlan::start_position() const {
  return {spec_.center.x() + spec_.radius, spec_.center.y(), spec_.start_altitude};
}

TrajectoryPoint HelixPlan::at(double t) const {
  const auto u = progress_.at(t);
  const double r = spec_.radius;
  const double theta = sweep_ * u.s;
  const double rate = sweep_ * u.v;
  const double accel = sweep_ * u.a;
  const double c = std::cos(theta);
  const double s = std::sin(theta);

  TrajectoryPoint p;
  p.t = t;
  p.position = {spec_.center.x() + r * c, spec_.center.y() + r * s,
                spec_.start_altitude + spec_.climb * u.s};
  p.velocity = {-r * s * rate, r * c * rate, spec_.climb * u.v};
  p.acceleration = {-r * c * rate * rate - r * s * accel,
                    -r * s * rate * rate + r * c * accel, spec_.climb * u.a};
  p.yaw = spec_.yaw_mode == YawMode::Tangent ? wrap_angle(theta + std::numbers::pi / 2.0)
                                             : spec_.fixed_yaw;
  return p;
}

std::vector<TrajectoryPoint> helix(const HelixSpec& spec, double dt) {
  return sample(HelixPlan(spec), dt);
}

WaypointPath::WaypointPath(std::vector<Vec3> points, double max_velocity,
                           double max_acceleration, double dwell, double yaw)
    : points_(std::move(points)), dwell_(dwell), yaw_(yaw) {
  if (points_.empty()) throw ConfigError("waypoint path needs at least one point");
  if (!(dwell >= 0.0)) throw ConfigError("waypoint dwell must be >= 0");
  for (const auto& p : points_) {
    if (!p.allFinite()) throw ConfigError("waypoints must be finite");
  }
  double t = 0.0;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    const Vec3 d = points_[i + 1] - points_[i];
    const double length = d.norm();
    Leg leg{points_[i], length > 0.0 ? Vec3(d / length) : Vec3::Zero(), t,
            TrapezoidalProfile(length, max_velocity, max_acceleration)};
    t += leg.profile.duration() + dwell_;
    legs_.push_back(leg);
  }
  total_ = t;
}

std::vector<double> WaypointPath::breakpoints() const {
  std::vector<double> out;
  for (const auto& leg : legs_) {
    out.push_back(leg.start);
    for (double s : leg.profile.switch_times()) out.push_back(leg.start + s);
    out.push_back(leg.start + leg.profile.duration());
  }
  return out;
}

TrajectoryPoint WaypointPath::at(double t) const {
  TrajectoryPoint p;
  p.t = t;
  p.yaw = yaw_;
  p.position = points_.back();
  for (const auto& leg : legs_) {
    const double local = t - leg.start;
    if (local < 0.0) break;
    const double moving = leg.profile.duration();
    if (local < moving) {
      const auto s = leg.profile.at(local);
      p.position = leg.from + leg.direction * s.s;
      p.velocity = leg.direction * s.v;
      p.acceleration = leg.direction * s.a;
      return p;
    }
    if (local < moving + dwell_) {
      p.position = leg.from + leg.direction * leg.profile.at(moving).s;
      return p;
    }
  }
  if (legs_.empty()) p.position = points_.front();
  return p;
}

Hold::Hold(const Vec3& position, double duration, double yaw)
    : position_(position), duration_(duration), yaw_(yaw) {
  if (!position.allFinite()) throw ConfigError("hold position must be finite");
  if (!(duration >= 0.0)) throw ConfigError("hold duration must be >= 0");
}

TrajectoryPoint Hold::at(double t) const {
  TrajectoryPoint p;
  p.t = t;
  p.position = position_;
  p.yaw = yaw_;
  return p;
}

const char* phase_name(Phase phase) {
  switch (phase) {
    case Phase::Takeoff: return "takeoff";
    case Phase::Main: return "main";
    case Phase::Landing: return "landing";
  }
  return "?";
}

void Timeline::append(std::shared_ptr<const ReferenceSegment> segment, Phase phase) {
  if (!segment) throw ConfigError("null reference segment");
  entries_.push_back({segment, phase, total_});
  total_ += segment->duration();
}

const Timeline::Entry* Timeline::find(double t) const {
  if (entries_.empty()) return nullptr;
  for (const auto& e : entries_) {
    if (t < e.start + e.segment->duration()) return &e;
  }
  return &entries_.back();
}

TrajectoryPoint Timeline::at(double t) const {
  const Entry* e = find(t);
  if (!e) throw ConfigError("empty reference timeline");
  TrajectoryPoint p;
  if (t >= total_) {
    p = e->segment->at(e->segment->duration());
    p.velocity.setZero();
    p.acceleration.setZero();
  } else {
    p = e->segment->at(std::max(0.0, t - e->start));
  }
  p.t = t;
  return p;
}

Phase Timeline::phase_at(double t) const {
  const Entry* e = find(t);
  if (!e) throw ConfigError("empty reference timeline");
  return e->phase;
}

std::pair<double, double> Timeline::phase_window(Phase phase) const {
  double begin = std::numeric_limits<double>::infinity();
  double end = -std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) {
    if (e.phase != phase) continue;
    begin = std::min(begin, e.start);
    end = std::max(end, e.start + e.segment->duration());
  }
  return {begin, end};
}

}  // namespace slamloop
