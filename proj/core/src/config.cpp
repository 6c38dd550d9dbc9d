#include "slamloop/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace slamloop {

namespace {

using nlohmann::json;

// Object view that records which keys were read and rejects the rest.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& what) {
    throw ConfigError(fmt_path(path) + ": " + what);
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }
  const json& at(const std::string& key) { return j_.at(key); }
  std::string sub(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    out = as_number(at(key), sub(key));
  }
  void integer(const std::string& key, int& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_integer()) fail(sub(key), "expected an integer");
    out = v.get<int>();
  }
  void unsigned_integer(const std::string& key, std::uint64_t& out) {
    if (!has(key)) return;
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      fail(sub(key), "expected a non-negative integer");
    }
    out = v.get<std::uint64_t>();
  }
  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    if (!at(key).is_boolean()) fail(sub(key), "expected true or false");
    out = at(key).get<bool>();
  }
  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    if (!at(key).is_string()) fail(sub(key), "expected a string");
    out = at(key).get<std::string>();
  }
  // Accepts [x, y, z] or a scalar applied to all three axes.
  void vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    out = as_vec3(at(key), sub(key));
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(sub(it.key()), "unknown key");
    }
  }

  static double as_number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }
  static Vec3 as_vec3(const json& v, const std::string& path) {
    if (v.is_number()) return Vec3::Constant(v.get<double>());
    if (!v.is_array() || v.size() != 3) fail(path, "expected a number or [x, y, z]");
    Vec3 out;
    for (int i = 0; i < 3; ++i) out(i) = as_number(v[i], path + "[" + std::to_string(i) + "]");
    return out;
  }

 private:
  static std::string fmt_path(const std::string& p) { return p.empty() ? "<root>" : p; }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json parse_text(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end(), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void read_profile_fields(Fields& f, SensorProfile& p) {
  f.string("name", p.name);
  f.number("rate_hz", p.rate_hz);
  f.vec3("noise_sigma", p.noise_sigma);
  f.vec3("drift_density", p.drift_density);
  f.number("z_drift_multiplier", p.z_drift_multiplier);
  f.number("yaw_noise_sigma", p.yaw_noise_sigma);
  f.number("latency_periods", p.latency_periods);
  f.number("degradation_altitude", p.degradation_altitude);
  f.number("degradation_slope", p.degradation_slope);
  f.boolean("loop_closure_enabled", p.loop_closure_enabled);
  f.number("revisit_radius", p.revisit_radius);
  f.number("min_excursion_time", p.min_excursion_time);
  f.number("min_loop_drift", p.min_loop_drift);
  f.number("global_optimization_period", p.global_optimization_period);
  f.number("smoothing_window", p.smoothing_window);
}

SensorProfile read_sensor(const json& j, const std::string& path) {
  if (j.is_string()) {
    try {
      return builtin_profile(j.get<std::string>());
    } catch (const ConfigError& e) {
      Fields::fail(path, e.what());
    }
  }
  Fields f(j, path);
  SensorProfile p;
  if (f.has("base")) {
    if (!f.at("base").is_string()) Fields::fail(f.sub("base"), "expected a profile name");
    try {
      p = builtin_profile(f.at("base").get<std::string>());
    } catch (const ConfigError& e) {
      Fields::fail(f.sub("base"), e.what());
    }
  }
  read_profile_fields(f, p);
  f.finish();
  return p;
}

PlantParams read_plant(const json& j, const std::string& path) {
  Fields f(j, path);
  PlantParams p;
  f.number("mass", p.mass);
  f.number("thrust_to_weight", p.thrust_to_weight);
  f.number("attitude_time_constant", p.attitude_time_constant);
  f.number("yaw_time_constant", p.yaw_time_constant);
  f.number("drag", p.drag);
  f.number("gravity", p.gravity);
  f.vec3("disturbance", p.disturbance);
  f.finish();
  return p;
}

ImuConfig read_imu(const json& j, const std::string& path) {
  Fields f(j, path);
  ImuConfig c;
  f.number("rate_hz", c.rate_hz);
  f.vec3("noise_sigma", c.noise_sigma);
  f.vec3("bias", c.bias);
  f.number("range", c.range);
  f.finish();
  return c;
}

FilterSettings read_filter(const json& j, const std::string& path) {
  Fields f(j, path);
  FilterSettings s;
  f.vec3("process_noise", s.process_noise);
  if (f.has("position_variance")) {
    s.position_variance = Fields::as_vec3(f.at("position_variance"), f.sub("position_variance"));
  }
  if (f.has("acceleration_variance")) {
    s.acceleration_variance =
        Fields::as_vec3(f.at("acceleration_variance"), f.sub("acceleration_variance"));
  }
  f.vec3("prior_diagonal", s.prior_diagonal);
  f.number("hold_factor", s.hold_factor);
  f.finish();
  return s;
}

PidGains read_gains(const json& j, const std::string& path) {
  Fields f(j, path);
  PidGains g;
  f.vec3("position_p", g.position_p);
  f.vec3("position_i", g.position_i);
  f.vec3("position_d", g.position_d);
  f.vec3("velocity_p", g.velocity_p);
  f.vec3("velocity_i", g.velocity_i);
  f.vec3("velocity_d", g.velocity_d);
  f.vec3("integrator_limit", g.integrator_limit);
  f.vec3("acceleration_limit", g.acceleration_limit);
  f.vec3("velocity_limit", g.velocity_limit);
  f.number("feedforward_velocity", g.feedforward_velocity);
  f.number("feedforward_acceleration", g.feedforward_acceleration);
  f.number("yaw_p", g.yaw_p);
  f.number("max_yaw_rate", g.max_yaw_rate);
  f.number("derivative_cutoff", g.derivative_cutoff);
  f.finish();
  return g;
}

BracketConfig read_bracket(const json& j, const std::string& path) {
  Fields f(j, path);
  BracketConfig b;
  f.number("ground_altitude", b.ground_altitude);
  f.number("velocity", b.velocity);
  f.number("acceleration", b.acceleration);
  f.number("takeoff_settle", b.takeoff_settle);
  f.number("landing_settle", b.landing_settle);
  f.finish();
  return b;
}

ReferenceConfig read_reference(const json& j, const std::string& path) {
  Fields f(j, path);
  ReferenceConfig r;
  std::string type = "steps";
  f.string("type", type);
  if (type == "steps") {
    r.kind = ReferenceKind::Steps;
    StepsSpec& s = r.steps;
    if (f.has("axes")) {
      const json& a = f.at("axes");
      const std::string p = f.sub("axes");
      std::vector<Axis> axes;
      if (a.is_string()) {
        for (char c : a.get<std::string>()) {
          try {
            axes.push_back(parse_axis(std::string(1, c)));
          } catch (const ConfigError& e) {
            Fields::fail(p, e.what());
          }
        }
      } else if (a.is_array()) {
        for (const auto& e : a) {
          if (!e.is_string()) Fields::fail(p, "expected axis names");
          try {
            axes.push_back(parse_axis(e.get<std::string>()));
          } catch (const ConfigError& err) {
            Fields::fail(p, err.what());
          }
        }
      } else {
        Fields::fail(p, "expected \"xyz\" or [\"x\", ...]");
      }
      if (axes.empty()) Fields::fail(p, "at least one axis is required");
      s.axes = axes;
    }
    f.number("amplitude", s.amplitude);
    f.number("hold_time", s.hold_time);
    f.integer("repetitions", s.repetitions);
    f.vec3("hold_point", s.hold_point);
    f.number("yaw", s.yaw);
  } else if (type == "helix") {
    r.kind = ReferenceKind::Helix;
    HelixSpec& h = r.helix;
    f.vec3("center", h.center);
    f.number("radius", h.radius);
    f.number("climb", h.climb);
    f.number("start_altitude", h.start_altitude);
    f.number("turns", h.turns);
    f.number("velocity_limit", h.velocity_limit);
    f.number("acceleration_limit", h.acceleration_limit);
    if (f.has("speed_scale")) {
      const double k = Fields::as_number(f.at("speed_scale"), f.sub("speed_scale"));
      if (!(k > 0.0)) Fields::fail(f.sub("speed_scale"), "must be positive");
      h = h.scaled(k);
    }
    std::string yaw_mode = "fixed";
    f.string("yaw_mode", yaw_mode);
    if (yaw_mode == "fixed") {
      h.yaw_mode = YawMode::Fixed;
    } else if (yaw_mode == "tangent") {
      h.yaw_mode = YawMode::Tangent;
    } else {
      Fields::fail(f.sub("yaw_mode"), "expected \"fixed\" or \"tangent\"");
    }
    f.number("fixed_yaw", h.fixed_yaw);
  } else if (type == "waypoints") {
    r.kind = ReferenceKind::Waypoints;
    WaypointSpec& w = r.waypoints;
    if (f.has("points")) {
      const json& pts = f.at("points");
      if (!pts.is_array()) Fields::fail(f.sub("points"), "expected a list of [x, y, z]");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        w.points.push_back(
            Fields::as_vec3(pts[i], f.sub("points") + "[" + std::to_string(i) + "]"));
      }
    }
    f.number("max_velocity", w.max_velocity);
    f.number("max_acceleration", w.max_acceleration);
    f.number("dwell", w.dwell);
    f.integer("repeat", w.repeat);
    f.number("yaw", w.yaw);
  } else {
    Fields::fail(f.sub("type"), "expected \"steps\", \"helix\" or \"waypoints\"");
  }
  f.finish();
  return r;
}

std::vector<ScriptedLoopClosure> read_loop_closures(const json& j, const std::string& path) {
  if (!j.is_array()) Fields::fail(path, "expected a list");
  std::vector<ScriptedLoopClosure> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    Fields f(j[i], p);
    ScriptedLoopClosure e;
    if (!f.has("t")) Fields::fail(p, "missing \"t\"");
    f.number("t", e.t);
    if (f.has("delta")) e.delta = Fields::as_vec3(f.at("delta"), f.sub("delta"));
    f.finish();
    out.push_back(e);
  }
  return out;
}

ScenarioConfig read_scenario(const json& j, const std::string& path) {
  Fields f(j, path);
  ScenarioConfig c;
  f.string("name", c.name);
  f.unsigned_integer("seed", c.seed);
  if (f.has("duration")) c.duration = Fields::as_number(f.at("duration"), f.sub("duration"));
  f.number("sim_dt", c.sim_dt);
  if (f.has("plant")) c.plant = read_plant(f.at("plant"), f.sub("plant"));
  if (f.has("sensor")) c.sensor = read_sensor(f.at("sensor"), f.sub("sensor"));
  if (f.has("imu")) c.imu = read_imu(f.at("imu"), f.sub("imu"));
  if (f.has("filter")) c.filter = read_filter(f.at("filter"), f.sub("filter"));
  if (f.has("gains")) c.gains = read_gains(f.at("gains"), f.sub("gains"));
  if (f.has("reference")) c.reference = read_reference(f.at("reference"), f.sub("reference"));
  if (f.has("bracket")) c.bracket = read_bracket(f.at("bracket"), f.sub("bracket"));
  if (f.has("loop_closures")) {
    c.loop_closures = read_loop_closures(f.at("loop_closures"), f.sub("loop_closures"));
  }
  f.string("output_dir", c.output_dir);
  f.number("divergence_bound", c.divergence_bound);
  f.finish();
  return c;
}

}  // namespace

ScenarioConfig parse_scenario(std::string_view json_text) {
  ScenarioConfig c = read_scenario(parse_text(json_text), "");
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  try {
    return parse_scenario(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SuiteConfig parse_suite(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = parse_text(json_text);
  Fields f(doc, "");
  SuiteConfig s;
  f.string("name", s.name);
  if (!f.has("scenarios")) Fields::fail("scenarios", "missing");
  const json& list = f.at("scenarios");
  if (!list.is_array() || list.empty()) Fields::fail("scenarios", "expected a non-empty list");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string p = "scenarios[" + std::to_string(i) + "]";
    if (list[i].is_string()) {
      std::filesystem::path file = list[i].get<std::string>();
      if (file.is_relative()) file = base_dir / file;
      s.scenarios.push_back(load_scenario(file));
    } else {
      ScenarioConfig c = read_scenario(list[i], p);
      try {
        c.validate();
      } catch (const ConfigError& e) {
        Fields::fail(p, e.what());
      }
      s.scenarios.push_back(std::move(c));
    }
  }
  if (f.has("seeds")) {
    const json& seeds = f.at("seeds");
    s.seeds.clear();
    if (seeds.is_array()) {
      for (const auto& v : seeds) {
        if (!v.is_number_unsigned()) Fields::fail("seeds", "expected non-negative integers");
        s.seeds.push_back(v.get<std::uint64_t>());
      }
    } else {
      Fields sf(seeds, "seeds");
      std::uint64_t first = 1;
      std::uint64_t count = 1;
      sf.unsigned_integer("first", first);
      sf.unsigned_integer("count", count);
      sf.finish();
      for (std::uint64_t k = 0; k < count; ++k) s.seeds.push_back(first + k);
    }
    if (s.seeds.empty()) Fields::fail("seeds", "at least one seed is required");
  }
  std::uint64_t threads = 0;
  f.unsigned_integer("threads", threads);
  s.threads = static_cast<unsigned>(threads);
  f.string("output_dir", s.output_dir);
  f.finish();
  return s;
}

SuiteConfig load_suite(const std::filesystem::path& path) {
  try {
    return parse_suite(read_file(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string profile_to_json(const SensorProfile& p) {
  auto v3 = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  json j = {
      {"name", p.name},
      {"rate_hz", p.rate_hz},
      {"noise_sigma", v3(p.noise_sigma)},
      {"drift_density", v3(p.drift_density)},
      {"z_drift_multiplier", p.z_drift_multiplier},
      {"yaw_noise_sigma", p.yaw_noise_sigma},
      {"latency_periods", p.latency_periods},
      {"degradation_altitude", p.degradation_altitude},
      {"degradation_slope", p.degradation_slope},
      {"loop_closure_enabled", p.loop_closure_enabled},
      {"revisit_radius", p.revisit_radius},
      {"min_excursion_time", p.min_excursion_time},
      {"min_loop_drift", p.min_loop_drift},
      {"global_optimization_period", p.global_optimization_period},
      {"smoothing_window", p.smoothing_window},
  };
  return j.dump(2);
}

}  // namespace slamloop
