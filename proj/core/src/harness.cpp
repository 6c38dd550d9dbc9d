#include "slamloop/harness.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <fmt/format.h>

#include "slamloop/record_io.hpp"

namespace slamloop {

namespace {

// splitmix64, used to derive independent per-source seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr double kTickEpsilon = 1e-9;

Vec3 main_start(const ScenarioConfig& cfg) {
  switch (cfg.reference.kind) {
    case ReferenceKind::Steps: return cfg.reference.steps.hold_point;
    case ReferenceKind::Helix: return HelixPlan(cfg.reference.helix).start_position();
    case ReferenceKind::Waypoints: return cfg.reference.waypoints.points.front();
  }
  return Vec3::Zero();
}

double main_yaw(const ScenarioConfig& cfg) {
  switch (cfg.reference.kind) {
    case ReferenceKind::Steps: return cfg.reference.steps.yaw;
    case ReferenceKind::Helix: return HelixPlan(cfg.reference.helix).at(0.0).yaw;
    case ReferenceKind::Waypoints: return cfg.reference.waypoints.yaw;
  }
  return 0.0;
}

std::shared_ptr<const ReferenceSegment> vertical(const Vec3& from, const Vec3& to,
                                                 const BracketConfig& b, double yaw) {
  return std::make_shared<WaypointPath>(std::vector<Vec3>{from, to}, b.velocity,
                                        b.acceleration, 0.0, yaw);
}

Vec3 at_ground(Vec3 p, const BracketConfig& b) {
  p.z() = b.ground_altitude;
  return p;
}

bool diverged(const VehicleState& s, double bound) {
  return !s.position.allFinite() || !s.velocity.allFinite() ||
         !std::isfinite(s.roll) || !std::isfinite(s.pitch) || !std::isfinite(s.yaw) ||
         s.position.norm() > bound;
}

}  // namespace

const char* reference_kind_name(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::Steps: return "steps";
    case ReferenceKind::Helix: return "helix";
    case ReferenceKind::Waypoints: return "waypoints";
  }
  return "?";
}

const char* status_name(RunStatus status) {
  return status == RunStatus::Completed ? "completed" : "diverged";
}

void ScenarioConfig::validate() const {
  if (duration && !(*duration > 0.0)) throw ConfigError("duration must be > 0");
  if (!(sim_dt > 0.0 && sim_dt <= kMaxPlantStep)) {
    throw ConfigError("sim_dt must lie in (0, 0.01]");
  }
  if (!(divergence_bound > 0.0)) throw ConfigError("divergence bound must be > 0");
  plant.validate();
  sensor.validate();
  imu.validate();
  gains.validate();
  const double ratio = (1.0 / imu.rate_hz) / sim_dt;
  if (ratio < 1.0 - kTickEpsilon || std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw ConfigError("IMU period must be an integer multiple of sim_dt");
  }
  (void)FilterConfig(filter_config(*this)).validate();
  if (!(bracket.velocity > 0.0) || !(bracket.acceleration > 0.0) ||
      !(bracket.takeoff_settle >= 0.0) || !(bracket.landing_settle >= 0.0) ||
      !std::isfinite(bracket.ground_altitude)) {
    throw ConfigError("invalid takeoff/landing bracket");
  }
  if (reference.kind == ReferenceKind::Steps && reference.steps.axes.empty()) {
    throw ConfigError("step reference needs at least one axis");
  }
  if (reference.kind == ReferenceKind::Waypoints) {
    if (reference.waypoints.points.empty()) throw ConfigError("waypoint list is empty");
    if (reference.waypoints.repeat < 1) throw ConfigError("waypoint repeat must be >= 1");
  }
  for (const auto& lc : loop_closures) {
    if (!std::isfinite(lc.t) || (lc.delta && !lc.delta->allFinite())) {
      throw ConfigError("scripted loop closure must be finite");
    }
  }
  (void)build_timeline(*this);
}

FilterConfig filter_config(const ScenarioConfig& cfg) {
  FilterConfig f;
  f.ts = 1.0 / cfg.imu.rate_hz;
  f.process_noise = cfg.filter.process_noise;
  f.position_variance = cfg.filter.position_variance.value_or(
      cfg.sensor.noise_sigma.cwiseProduct(cfg.sensor.noise_sigma).cwiseMax(1e-8));
  f.acceleration_variance = cfg.filter.acceleration_variance.value_or(
      cfg.imu.noise_sigma.cwiseProduct(cfg.imu.noise_sigma).cwiseMax(1e-6));
  f.prior_diagonal = cfg.filter.prior_diagonal;
  f.hold_factor = cfg.filter.hold_factor;
  return f;
}

Timeline build_timeline(const ScenarioConfig& cfg) {
  const BracketConfig& b = cfg.bracket;
  const Vec3 start = main_start(cfg);
  const double yaw0 = main_yaw(cfg);

  Timeline tl;
  tl.append(vertical(at_ground(start, b), start, b, yaw0), Phase::Takeoff);
  tl.append(std::make_shared<Hold>(start, b.takeoff_settle, yaw0), Phase::Takeoff);

  switch (cfg.reference.kind) {
    case ReferenceKind::Steps: {
      const StepsSpec& s = cfg.reference.steps;
      for (Axis axis : s.axes) {
        tl.append(std::make_shared<StepSequence>(axis, s.amplitude, s.hold_time,
                                                 s.repetitions, s.hold_point, s.yaw),
                  Phase::Main);
      }
      break;
    }
    case ReferenceKind::Helix:
      tl.append(std::make_shared<HelixPlan>(cfg.reference.helix), Phase::Main);
      break;
    case ReferenceKind::Waypoints: {
      const WaypointSpec& w = cfg.reference.waypoints;
      std::vector<Vec3> points;
      for (int r = 0; r < w.repeat; ++r) {
        for (std::size_t i = 0; i < w.points.size(); ++i) {
          if (r > 0 && i == 0 && (w.points.front() - w.points.back()).norm() == 0.0) continue;
          points.push_back(w.points[i]);
        }
      }
      tl.append(std::make_shared<WaypointPath>(points, w.max_velocity, w.max_acceleration,
                                               w.dwell, w.yaw),
                Phase::Main);
      break;
    }
  }

  const TrajectoryPoint end = tl.at(tl.duration());
  tl.append(vertical(end.position, at_ground(end.position, b), b, end.yaw), Phase::Landing);
  tl.append(std::make_shared<Hold>(at_ground(end.position, b), b.landing_settle, end.yaw),
            Phase::Landing);
  return tl;
}

std::string RunRecord::header_value(const std::string& key) const {
  for (const auto& [k, v] : header) {
    if (k == key) return v;
  }
  return {};
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  const Timeline timeline = build_timeline(cfg);
  const double dt = cfg.sim_dt;
  const double duration = cfg.duration.value_or(timeline.duration());
  const auto ticks = static_cast<std::uint64_t>(std::llround(duration / dt));
  const auto imu_every = static_cast<std::uint64_t>(
      std::max(1LL, std::llround((1.0 / cfg.imu.rate_hz) / dt)));
  const FilterConfig fcfg = filter_config(cfg);
  const double latency = cfg.sensor.latency();

  const TrajectoryPoint ref0 = timeline.at(0.0);
  VehicleState truth;
  truth.position = ref0.position;
  truth.yaw = ref0.yaw;

  SlamPoseSource source(cfg.sensor, mix_seed(cfg.seed, 1), cfg.loop_closures);
  ImuSource imu(cfg.imu, mix_seed(cfg.seed, 2));
  FusionFilter filter = initialize({0.0, truth.position, truth.yaw}, fcfg);
  CascadeController controller(cfg.gains, cfg.plant.hover_thrust());

  RunResult result;
  RunRecord& record = result.record;
  record.header = {
      {"scenario", cfg.name},
      {"seed", std::to_string(cfg.seed)},
      {"reference", reference_kind_name(cfg.reference.kind)},
      {"profile", cfg.sensor.name},
      {"pose_rate_hz", fmt::format("{}", cfg.sensor.rate_hz)},
      {"pose_latency_s", fmt::format("{}", latency)},
      {"imu_rate_hz", fmt::format("{}", cfg.imu.rate_hz)},
      {"sim_dt", fmt::format("{}", dt)},
      {"attitude_time_constant", fmt::format("{}", cfg.plant.attitude_time_constant)},
  };
  if (cfg.reference.kind == ReferenceKind::Steps) {
    const auto& s = cfg.reference.steps;
    record.header.emplace_back("step_amplitude", fmt::format("{}", s.amplitude));
    record.header.emplace_back("step_hold_time", fmt::format("{}", s.hold_time));
    record.header.emplace_back("hover_altitude", fmt::format("{}", s.hold_point.z()));
  }
  record.rows.reserve(ticks + 1);

  struct Pending {
    PoseSample sample;
    double deliver_at;
  };
  std::deque<Pending> in_flight;
  std::optional<PoseSample> ready;
  AttitudeCommand command{0.0, 0.0, 0.0, cfg.plant.hover_thrust()};

  for (std::uint64_t k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    truth.t = t;

    if (auto s = source.sample(truth)) {
      in_flight.push_back({*s, t + latency});
    }
    std::optional<PoseSample> delivered;
    while (!in_flight.empty() && in_flight.front().deliver_at <= t + kTickEpsilon) {
      delivered = in_flight.front().sample;
      in_flight.pop_front();
      ++result.counters.poses_delivered;
    }
    if (delivered) ready = delivered;

    RunRow row;
    row.t = t;
    row.phase = timeline.phase_at(t);
    row.reference = timeline.at(t);
    if (delivered) {
      row.pose_valid = true;
      row.raw = delivered->raw;
      row.measured = delivered->smoothed;
      row.loop_closure = delivered->loop_closure;
    }

    if (k % imu_every == 0) {
      const AccelMeasurement accel = imu.sample(t, truth.acceleration);
      ++result.counters.imu_samples;
      if (k > 0) {
        std::optional<PoseMeasurement> pose;
        if (ready) pose = ready->smoothed;
        filter.step(pose, accel, fcfg.ts);
        ready.reset();
      }
      command = controller.update(row.reference, filter.state(), filter.yaw(), fcfg.ts);
    }

    row.truth = truth;
    row.estimate = filter.state().values;
    row.covariance_diagonal = filter.covariance().values.diagonal();
    row.estimate_yaw = filter.yaw();
    row.command = command;
    record.rows.push_back(row);

    if (k == ticks) break;
    truth = step(truth, command, cfg.plant, dt);
    if (diverged(truth, cfg.divergence_bound)) {
      result.status = RunStatus::Diverged;
      result.message = fmt::format("diverged at t = {:.3f} s", truth.t);
      break;
    }
  }

  result.simulated_time = record.rows.back().t;
  result.counters.poses_emitted = source.emitted();
  result.counters.filter_predicts = filter.predict_count();
  result.counters.filter_corrections = filter.correct_count();
  result.counters.dropped_measurements =
      filter.dropped_out_of_order() + filter.dropped_non_finite();
  result.counters.loop_closures = source.events().size();
  record.header.emplace_back("status", status_name(result.status));

  result.metrics = compute_metrics(record, cfg.reference.kind);
  if (!cfg.output_dir.empty()) {
    write_run_outputs(cfg.output_dir, result);
  }
  return result;
}

bool ScenarioMetrics::any_unsettled() const {
  return std::any_of(axes.begin(), axes.end(),
                     [](const AxisStepResult& a) { return a.unsettled > 0; });
}

std::map<std::pair<std::string, std::string>, double> ScenarioMetrics::flatten() const {
  std::map<std::pair<std::string, std::string>, double> out;
  for (const auto& a : axes) {
    const std::string axis = axis_name(a.axis);
    out[{"iae", axis}] = a.integrals.iae;
    out[{"ise", axis}] = a.integrals.ise;
    out[{"itae", axis}] = a.integrals.itae;
    out[{"itse", axis}] = a.integrals.itse;
    if (a.overshoot) out[{"po", axis}] = *a.overshoot;
    if (a.rise_time) out[{"rise_time", axis}] = *a.rise_time;
  }
  if (hausdorff_rms) out[{"hausdorff_rms", ""}] = *hausdorff_rms;
  if (hausdorff_max) out[{"hausdorff_max", ""}] = *hausdorff_max;
  if (landing_error) out[{"landing_error", ""}] = *landing_error;
  return out;
}

ScenarioMetrics compute_metrics(const RunRecord& record, ReferenceKind kind) {
  ScenarioMetrics out;
  const auto& rows = record.rows;
  if (rows.size() < 2) return out;
  const double dt = rows[1].t - rows[0].t;

  std::size_t main_begin = rows.size(), main_end = rows.size();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].phase == Phase::Main) {
      if (main_begin == rows.size()) main_begin = i;
      main_end = i + 1;
    }
  }

  if (kind == ReferenceKind::Steps && main_begin < rows.size()) {
    // A step is a jump of the position setpoint between two rest samples.
    struct Step {
      std::size_t at;
      Axis axis;
    };
    std::vector<Step> steps;
    for (std::size_t i = std::max<std::size_t>(main_begin, 1); i < main_end; ++i) {
      const auto& prev = rows[i - 1].reference;
      const auto& curr = rows[i].reference;
      if (prev.velocity.norm() != 0.0 || curr.velocity.norm() != 0.0) continue;
      const Vec3 jump = curr.position - prev.position;
      Eigen::Index axis = 0;
      if (jump.cwiseAbs().maxCoeff(&axis) > 1e-9) {
        steps.push_back({i, static_cast<Axis>(axis)});
      }
    }
    std::map<Axis, AxisStepResult> per_axis;
    std::map<Axis, std::vector<double>> po, tr;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      const std::size_t begin = steps[s].at - 1;
      const std::size_t end = s + 1 < steps.size() ? steps[s + 1].at : main_end;
      const int a = index(steps[s].axis);
      ResponseLog log;
      log.start = rows[begin].t;
      log.dt = dt;
      for (std::size_t i = begin; i < end; ++i) {
        log.reference.push_back(rows[i].reference.position(a));
        log.response.push_back(rows[i].truth.position(a));
      }
      if (log.size() < 3) continue;
      const double t0 = rows[steps[s].at].t;
      AxisStepResult& res = per_axis[steps[s].axis];
      res.axis = steps[s].axis;
      ++res.steps;
      const IntegralCriteria ic = integral_criteria(log, t0);
      res.integrals.iae += ic.iae;
      res.integrals.ise += ic.ise;
      res.integrals.itae += ic.itae;
      res.integrals.itse += ic.itse;
      po[steps[s].axis].push_back(overshoot(log, t0));
      try {
        tr[steps[s].axis].push_back(rise_time(log, t0));
      } catch (const UnsettledResponse&) {
        ++res.unsettled;
      }
    }
    for (auto& [axis, res] : per_axis) {
      auto mean = [](const std::vector<double>& v) -> std::optional<double> {
        if (v.empty()) return std::nullopt;
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      res.overshoot = mean(po[axis]);
      res.rise_time = mean(tr[axis]);
      out.axes.push_back(res);
    }
  }

  if ((kind == ReferenceKind::Helix || kind == ReferenceKind::Waypoints) &&
      main_begin < main_end) {
    std::vector<Vec3> planned, executed;
    planned.reserve(main_end - main_begin);
    executed.reserve(main_end - main_begin);
    for (std::size_t i = main_begin; i < main_end; ++i) {
      planned.push_back(rows[i].reference.position);
      executed.push_back(rows[i].truth.position);
    }
    out.hausdorff_rms = hausdorff_rms(planned, executed);
    out.hausdorff_max = hausdorff_distance(planned, executed);
  }

  for (std::size_t i = rows.size(); i-- > 0;) {
    if (rows[i].pose_valid) {
      out.landing_error = landing_error(rows[i].measured.position, rows.back().truth.position);
      break;
    }
  }
  return out;
}

std::optional<double> altitude_error_ratio(const RunRecord& record, double altitude) {
  double above = -1.0, below = -1.0;
  for (const auto& row : record.rows) {
    if (row.phase != Phase::Main) continue;
    const Vec3 est{row.estimate(position_slot(0)), row.estimate(position_slot(1)),
                   row.estimate(position_slot(2))};
    const double err = (est - row.truth.position).norm();
    if (!std::isfinite(err)) {
      above = std::numeric_limits<double>::infinity();
      continue;
    }
    if (row.truth.position.z() > altitude) {
      above = std::max(above, err);
    } else {
      below = std::max(below, err);
    }
  }
  if (above < 0.0 || below <= 0.0) return std::nullopt;
  return above / below;
}

}  // namespace slamloop
