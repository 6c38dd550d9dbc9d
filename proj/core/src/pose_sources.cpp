#include "slamloop/pose_sources.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace slamloop {

namespace {

constexpr double kGridEpsilon = 1e-9;
constexpr double kPlaceSpacing = 1.0;  // s between remembered places

Vec3 draw3(std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  const double a = normal(rng);
  const double b = normal(rng);
  const double c = normal(rng);
  return {a, b, c};
}

}  // namespace

void SensorProfile::validate() const {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw ConfigError("sensor profile '" + name + "': rate must be > 0");
  }
  if (!noise_sigma.allFinite() || (noise_sigma.array() < 0.0).any() ||
      !drift_density.allFinite() || (drift_density.array() < 0.0).any() ||
      !(yaw_noise_sigma >= 0.0)) {
    throw ConfigError("sensor profile '" + name + "': sigmas must be >= 0");
  }
  if (!(z_drift_multiplier >= 0.0)) {
    throw ConfigError("sensor profile '" + name + "': z drift multiplier must be >= 0");
  }
  if (!(latency_periods >= 0.0)) {
    throw ConfigError("sensor profile '" + name + "': latency must be >= 0");
  }
  if (!(degradation_altitude > 0.0) || !(degradation_slope >= 0.0)) {
    throw ConfigError("sensor profile '" + name +
                      "': degradation altitude must be > 0 and slope >= 0");
  }
  if (!(smoothing_window >= 0.0)) {
    throw ConfigError("sensor profile '" + name + "': smoothing window must be >= 0");
  }
  if (!(revisit_radius > 0.0) || !(min_excursion_time >= 0.0) ||
      !(min_loop_drift >= 0.0) || !(global_optimization_period >= 0.0)) {
    throw ConfigError("sensor profile '" + name + "': invalid loop-closure trigger");
  }
}

SensorProfile builtin_profile(const std::string& name) {
  SensorProfile p;
  p.name = name;
  if (name == "carto-like") {
    p.rate_hz = 50.0;
    p.noise_sigma = {0.01, 0.01, 0.015};
    p.drift_density = {0.012, 0.012, 0.012};
    p.z_drift_multiplier = 1.0;
    p.yaw_noise_sigma = 0.002;
    p.latency_periods = 1.0;
    p.degradation_slope = 0.0;
    p.loop_closure_enabled = true;
    p.min_loop_drift = 0.02;
    p.global_optimization_period = 10.0;
    p.smoothing_window = 5.0;
    return p;
  }
  if (name == "loam-like") {
    p.rate_hz = 20.0;
    p.noise_sigma = {0.015, 0.015, 0.02};
    p.drift_density = {0.004, 0.004, 0.004};
    p.z_drift_multiplier = 4.0;
    p.yaw_noise_sigma = 0.003;
    p.latency_periods = 1.0;
    p.degradation_altitude = 4.0;
    p.degradation_slope = 10.0;
    p.loop_closure_enabled = false;
    p.smoothing_window = 0.0;
    return p;
  }
  throw ConfigError("unknown sensor profile '" + name + "'");
}

std::vector<std::string> builtin_profile_names() {
  return {"carto-like", "loam-like"};
}

Vec3 effective_noise_sigma(const SensorProfile& profile, double altitude) {
  const double excess = std::max(0.0, altitude - profile.degradation_altitude);
  return profile.noise_sigma * (1.0 + profile.degradation_slope * excess);
}

StepSmoother::StepSmoother(double window) : window_(window) {
  if (!(window >= 0.0)) throw ConfigError("smoothing window must be >= 0");
}

void StepSmoother::add_event(const LoopClosureEvent& event) {
  if (pass_through()) return;
  events_.push_back(event);
}

Vec3 StepSmoother::offset(double t) const {
  Vec3 out = Vec3::Zero();
  if (pass_through()) return out;
  const double tau = time_constant();
  for (const auto& e : events_) {
    if (t < e.t) continue;
    out -= e.delta * std::exp(-(t - e.t) / tau);
  }
  return out;
}

PoseMeasurement StepSmoother::apply(const PoseMeasurement& raw) const {
  PoseMeasurement out = raw;
  out.position += offset(raw.t);
  return out;
}

SlamPoseSource::SlamPoseSource(SensorProfile profile, std::uint64_t seed,
                               std::vector<ScriptedLoopClosure> scripted)
    : profile_(std::move(profile)),
      rng_(seed),
      smoother_(profile_.smoothing_window),
      scripted_(std::move(scripted)) {
  profile_.validate();
  std::stable_sort(scripted_.begin(), scripted_.end(),
                   [](const auto& a, const auto& b) { return a.t < b.t; });
}

void SlamPoseSource::advance_drift(double t) {
  if (last_drift_time_) {
    const double dt = t - *last_drift_time_;
    if (dt > 0.0) {
      Vec3 step = draw3(rng_, normal_).cwiseProduct(profile_.drift_density) *
                  std::sqrt(dt);
      step.z() *= profile_.z_drift_multiplier;
      drift_ += step;
    }
  }
  last_drift_time_ = t;
}

void SlamPoseSource::apply_event(const LoopClosureEvent& event) {
  drift_ += event.delta;
  smoother_.add_event(event);
  events_.push_back(event);
}

std::optional<LoopClosureEvent> SlamPoseSource::maybe_loop_close(
    const VehicleState& truth) {
  const double t = truth.t;
  if (!last_place_time_ || t - *last_place_time_ >= kPlaceSpacing - kGridEpsilon) {
    places_.push_back({t, truth.position, false});
    last_place_time_ = t;
  }
  const double radius = profile_.revisit_radius;
  bool revisit = false;
  for (auto& place : places_) {
    const double d = (truth.position - place.position).norm();
    if (d > radius) {
      place.left = true;
    } else if (place.left && t - place.t >= profile_.min_excursion_time) {
      revisit = true;
    }
  }
  const double period = profile_.global_optimization_period;
  if (period > 0.0 && t - last_optimization_time_ >= period - kGridEpsilon) {
    last_optimization_time_ = t;
    revisit = true;
  }
  if (!revisit) return std::nullopt;
  // One event per revisit: every place inside the radius is consumed.
  for (auto& place : places_) {
    if ((truth.position - place.position).norm() <= radius) place.left = false;
  }
  if (drift_.norm() <= profile_.min_loop_drift) return std::nullopt;
  return LoopClosureEvent{t, -drift_};
}

std::optional<PoseSample> SlamPoseSource::sample(const VehicleState& truth) {
  const double period = profile_.period();
  const double t = truth.t;
  if (t + kGridEpsilon < static_cast<double>(tick_) * period) return std::nullopt;
  while (static_cast<double>(tick_) * period <= t + kGridEpsilon) ++tick_;

  advance_drift(t);

  bool closed = false;
  while (next_scripted_ < scripted_.size() &&
         scripted_[next_scripted_].t <= t + kGridEpsilon) {
    const auto& s = scripted_[next_scripted_++];
    const Vec3 delta = s.delta ? *s.delta : Vec3(-drift_);
    if (delta.norm() > 0.0) {
      apply_event({t, delta});
      closed = true;
    }
  }
  if (!closed && profile_.loop_closure_enabled) {
    if (auto event = maybe_loop_close(truth)) {
      apply_event(*event);
      closed = true;
    }
  }

  const Vec3 sigma = effective_noise_sigma(profile_, truth.position.z());
  const Vec3 noise = draw3(rng_, normal_).cwiseProduct(sigma);
  const double yaw_noise = normal_(rng_) * profile_.yaw_noise_sigma;

  PoseSample out;
  out.raw.t = t;
  out.raw.position = truth.position + drift_ + noise;
  out.raw.yaw = wrap_angle(truth.yaw + yaw_noise);
  out.smoothed = smoother_.apply(out.raw);
  out.loop_closure = closed;
  ++emitted_;
  return out;
}

void ImuConfig::validate() const {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw ConfigError("IMU rate must be > 0");
  }
  if (!noise_sigma.allFinite() || (noise_sigma.array() < 0.0).any()) {
    throw ConfigError("IMU noise sigma must be >= 0");
  }
  if (!bias.allFinite()) throw ConfigError("IMU bias must be finite");
  if (!(range > 0.0)) throw ConfigError("IMU range must be > 0");
}

ImuSource::ImuSource(ImuConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rng_(seed) {
  cfg_.validate();
}

AccelMeasurement ImuSource::sample(double t, const Vec3& true_acceleration) {
  Vec3 a = true_acceleration + cfg_.bias +
           draw3(rng_, normal_).cwiseProduct(cfg_.noise_sigma);
  const double n = a.norm();
  if (n > cfg_.range) a *= cfg_.range / n;
  return {t, a};
}

}  // namespace slamloop
