#include "slamloop/record_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string_view>

namespace slamloop {

namespace {
std::string num(double v) {
  if (std::isnan(v)) return "nan";
  // Shortest representation that parses back to the same double.
  return fmt::format("{}", v);
}

double parse_number(std::string_view s) {
  if (s.empty() || s == "nan") return std::numeric_limits<double>::quiet_NaN();
  // libstdc++ 11 lacks floating-point from_chars for some targets; strtod is fine.
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end == tmp.c_str()) throw ConfigError("run CSV: cannot parse number '" + tmp + "'");
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? line.npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

const char* kStateSuffix[9] = {"x", "vx", "ax", "y", "vy", "ay", "z", "vz", "az"};

}  // namespace

const std::vector<std::string>& run_record_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {
        "t", "phase", "x", "y", "z", "vx", "vy", "vz", "roll", "pitch", "yaw",
        "ref_x", "ref_y", "ref_z", "ref_vx", "ref_vy", "ref_vz", "ref_ax", "ref_ay",
        "ref_az", "ref_yaw", "pose_valid", "pose_t", "raw_x", "raw_y", "raw_z", "raw_yaw",
        "meas_x", "meas_y", "meas_z", "meas_yaw", "event_flag"};
    for (const char* s : kStateSuffix) c.push_back(std::string("est_") + s);
    c.push_back("est_yaw");
    for (const char* s : kStateSuffix) c.push_back(std::string("P_") + s);
    for (const char* s : {"cmd_roll", "cmd_pitch", "cmd_yaw_rate", "cmd_thrust"}) c.push_back(s);
    return c;
  }();
  return cols;
}

void write_run_csv(std::ostream& out, const RunRecord& record) {
  out << "# slamloop run record\n";
  for (const auto& [k, v] : record.header) out << "# " << k << '=' << v << '\n';
  const auto& cols = run_record_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';

  std::string line;
  for (const auto& r : record.rows) {
    line.clear();
    auto add = [&](double v) {
      if (!line.empty()) line += ',';
      line += num(v);
    };
    auto blank = [&]() { line += ','; };
    add(r.t);
    add(static_cast<int>(r.phase));
    for (int i = 0; i < 3; ++i) add(r.truth.position(i));
    for (int i = 0; i < 3; ++i) add(r.truth.velocity(i));
    add(r.truth.roll);
    add(r.truth.pitch);
    add(r.truth.yaw);
    for (int i = 0; i < 3; ++i) add(r.reference.position(i));
    for (int i = 0; i < 3; ++i) add(r.reference.velocity(i));
    for (int i = 0; i < 3; ++i) add(r.reference.acceleration(i));
    add(r.reference.yaw);
    add(r.pose_valid ? 1 : 0);
    if (r.pose_valid) {
      add(r.raw.t);
      for (int i = 0; i < 3; ++i) add(r.raw.position(i));
      add(r.raw.yaw);
      for (int i = 0; i < 3; ++i) add(r.measured.position(i));
      add(r.measured.yaw);
    } else {
      for (int i = 0; i < 9; ++i) blank();
    }
    add(r.loop_closure ? 1 : 0);
    for (int i = 0; i < 9; ++i) add(r.estimate(i));
    add(r.estimate_yaw);
    for (int i = 0; i < 9; ++i) add(r.covariance_diagonal(i));
    add(r.command.roll);
    add(r.command.pitch);
    add(r.command.yaw_rate);
    add(r.command.thrust);
    out << line << '\n';
  }
}

RunRecord read_run_csv(std::istream& in) {
  RunRecord record;
  const auto& cols = run_record_columns();
  std::string line;
  bool have_columns = false;
  std::vector<int> index_of(cols.size(), -1);
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        std::string key = line.substr(1, eq - 1);
        key.erase(0, key.find_first_not_of(' '));
        record.header.emplace_back(key, line.substr(eq + 1));
      }
      continue;
    }
    const auto fields = split(line);
    if (!have_columns) {
      for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t f = 0; f < fields.size(); ++f) {
          if (fields[f] == cols[c]) index_of[c] = static_cast<int>(f);
        }
        if (index_of[c] < 0) throw ConfigError("run CSV: missing column '" + cols[c] + "'");
      }
      have_columns = true;
      continue;
    }
    auto get = [&](std::size_t c) {
      const auto f = static_cast<std::size_t>(index_of[c]);
      if (f >= fields.size()) {
        throw ConfigError("run CSV: short row at line " + std::to_string(line_no));
      }
      return parse_number(fields[f]);
    };
    RunRow r;
    std::size_t c = 0;
    r.t = get(c++);
    r.phase = static_cast<Phase>(static_cast<int>(get(c++)));
    for (int i = 0; i < 3; ++i) r.truth.position(i) = get(c++);
    for (int i = 0; i < 3; ++i) r.truth.velocity(i) = get(c++);
    r.truth.roll = get(c++);
    r.truth.pitch = get(c++);
    r.truth.yaw = get(c++);
    r.truth.t = r.t;
    for (int i = 0; i < 3; ++i) r.reference.position(i) = get(c++);
    for (int i = 0; i < 3; ++i) r.reference.velocity(i) = get(c++);
    for (int i = 0; i < 3; ++i) r.reference.acceleration(i) = get(c++);
    r.reference.yaw = get(c++);
    r.reference.t = r.t;
    r.pose_valid = get(c++) != 0.0;
    r.raw.t = get(c++);
    for (int i = 0; i < 3; ++i) r.raw.position(i) = get(c++);
    r.raw.yaw = get(c++);
    r.measured.t = r.raw.t;
    for (int i = 0; i < 3; ++i) r.measured.position(i) = get(c++);
    r.measured.yaw = get(c++);
    r.loop_closure = get(c++) != 0.0;
    for (int i = 0; i < 9; ++i) r.estimate(i) = get(c++);
    r.estimate_yaw = get(c++);
    for (int i = 0; i < 9; ++i) r.covariance_diagonal(i) = get(c++);
    r.command.roll = get(c++);
    r.command.pitch = get(c++);
    r.command.yaw_rate = get(c++);
    r.command.thrust = get(c++);
    record.rows.push_back(r);
  }
  if (!have_columns) throw ConfigError("run CSV: no column header found");
  return record;
}

RunRecord read_run_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run CSV '" + path.string() + "'");
  return read_run_csv(in);
}

void write_metrics_csv(std::ostream& out, const ScenarioMetrics& metrics,
                       const RunRecord& record) {
  out << "# slamloop metrics\n";
  for (const auto& [k, v] : record.header) out << "# " << k << '=' << v << '\n';
  out << "metric,axis,value\n";
  for (const auto& [key, value] : metrics.flatten()) {
    out << key.first << ',' << key.second << ',' << num(value) << '\n';
  }
  for (const auto& a : metrics.axes) {
    out << "steps," << axis_name(a.axis) << ',' << a.steps << '\n';
    if (a.unsettled > 0) out << "unsettled," << axis_name(a.axis) << ',' << a.unsettled << '\n';
  }
}

std::string format_metrics_table(const ScenarioMetrics& metrics) {
  std::string out;
  if (!metrics.axes.empty()) {
    out += fmt::format("{:>4} | {:>10} {:>10} {:>10} {:>10} | {:>7} {:>7}\n", "axis", "IAE",
                       "ISE", "ITAE", "ITSE", "PO[%]", "t_r[s]");
    out += std::string(70, '-') + '\n';
    for (const auto& a : metrics.axes) {
      out += fmt::format("{:>4} | {:>10.4f} {:>10.4f} {:>10.4f} {:>10.4f} | {:>7.2f} {:>7}\n",
                         axis_name(a.axis), a.integrals.iae, a.integrals.ise, a.integrals.itae,
                         a.integrals.itse, a.overshoot.value_or(0.0),
                         a.rise_time ? fmt::format("{:.3f}", *a.rise_time) : "n/a");
    }
  }
  if (metrics.hausdorff_rms) {
    out += fmt::format("Hausdorff RMS : {:.4f} m\n", *metrics.hausdorff_rms);
  }
  if (metrics.hausdorff_max) {
    out += fmt::format("Hausdorff max : {:.4f} m\n", *metrics.hausdorff_max);
  }
  if (metrics.landing_error) {
    out += fmt::format("Landing error : {:.4f} m\n", *metrics.landing_error);
  }
  return out;
}

std::string format_suite_table(const SuiteReport& report) {
  std::string out = fmt::format("suite: {}\n", report.name);
  auto stat = [](const ScenarioAggregate& s, const char* metric, const std::string& axis) {
    const auto it = s.metrics.find({metric, axis});
    if (it == s.metrics.end()) return std::string("n/a");
    return fmt::format("{:.3f}", it->second.mean);
  };
  bool steps_header = false;
  for (const auto& s : report.scenarios) {
    if (s.kind != ReferenceKind::Steps) continue;
    if (!steps_header) {
      out += fmt::format("{:<16} {:>4} | {:>10} {:>10} {:>10} {:>10} | {:>7} {:>7}\n", "profile",
                         "axis", "IAE", "ISE", "ITAE", "ITSE", "PO[%]", "t_r[s]");
      out += std::string(86, '-') + '\n';
      steps_header = true;
    }
    for (const char* axis : {"x", "y", "z"}) {
      if (!s.metrics.count({"iae", axis})) continue;
      out += fmt::format("{:<16} {:>4} | {:>10} {:>10} {:>10} {:>10} | {:>7} {:>7}\n",
                         s.profile, axis, stat(s, "iae", axis), stat(s, "ise", axis),
                         stat(s, "itae", axis), stat(s, "itse", axis), stat(s, "po", axis),
                         stat(s, "rise_time", axis));
    }
  }
  for (const auto& s : report.scenarios) {
    out += fmt::format("{:<24} runs={} diverged={}", s.scenario, s.runs, s.diverged);
    for (const char* m : {"hausdorff_rms", "hausdorff_max", "landing_error"}) {
      const auto it = s.metrics.find({m, ""});
      if (it != s.metrics.end()) {
        out += fmt::format(" {}={:.4f}+-{:.4f}", m, it->second.mean, it->second.stddev);
      }
    }
    out += '\n';
  }
  return out;
}

void write_suite_csv(std::ostream& out, const SuiteReport& report) {
  out << "scenario,profile,metric,axis,mean,stddev,count\n";
  for (const auto& s : report.scenarios) {
    for (const auto& [key, st] : s.metrics) {
      out << s.scenario << ',' << s.profile << ',' << key.first << ',' << key.second << ','
          << num(st.mean) << ',' << num(st.stddev) << ',' << st.count << '\n';
    }
  }
}

void write_run_outputs(const std::filesystem::path& dir, const RunResult& result) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "series");
  const RunRecord& record = result.record;
  {
    std::ofstream out(dir / "run.csv");
    write_run_csv(out, record);
  }
  {
    std::ofstream out(dir / "metrics.csv");
    write_metrics_csv(out, result.metrics, record);
  }
  {
    std::ofstream raw(dir / "pose_raw.csv");
    std::ofstream smooth(dir / "pose_smoothed.csv");
    raw << "t,x,y,z,yaw,event_flag\n";
    smooth << "t,x,y,z,yaw,event_flag\n";
    for (const auto& r : record.rows) {
      if (!r.pose_valid) continue;
      const int flag = r.loop_closure ? 1 : 0;
      raw << fmt::format("{},{},{},{},{},{}\n", num(r.raw.t), num(r.raw.position.x()),
                         num(r.raw.position.y()), num(r.raw.position.z()), num(r.raw.yaw), flag);
      smooth << fmt::format("{},{},{},{},{},{}\n", num(r.measured.t),
                            num(r.measured.position.x()), num(r.measured.position.y()),
                            num(r.measured.position.z()), num(r.measured.yaw), flag);
    }
  }
  {
    std::ofstream out(dir / "commands.csv");
    out << "t,roll,pitch,yaw_rate,thrust\n";
    for (const auto& r : record.rows) {
      out << fmt::format("{},{},{},{},{}\n", num(r.t), num(r.command.roll),
                         num(r.command.pitch), num(r.command.yaw_rate), num(r.command.thrust));
    }
  }
  {
    std::ofstream out(dir / "truth.csv");
    out << "t,x,y,z,vx,vy,vz,roll,pitch,yaw\n";
    for (const auto& r : record.rows) {
      const auto& s = r.truth;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{}\n", num(r.t), num(s.position.x()),
                         num(s.position.y()), num(s.position.z()), num(s.velocity.x()),
                         num(s.velocity.y()), num(s.velocity.z()), num(s.roll), num(s.pitch),
                         num(s.yaw));
    }
  }
  {
    std::ofstream out(dir / "reference.csv");
    out << "t,x,y,z,vx,vy,vz,ax,ay,az,yaw\n";
    for (const auto& r : record.rows) {
      const auto& p = r.reference;
      out << fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", num(r.t), num(p.position.x()),
                         num(p.position.y()), num(p.position.z()), num(p.velocity.x()),
                         num(p.velocity.y()), num(p.velocity.z()), num(p.acceleration.x()),
                         num(p.acceleration.y()), num(p.acceleration.z()), num(p.yaw));
    }
  }
  // One (t, value) file per series for generic plotting tools.
  auto series = [&](const std::string& name, auto&& value) {
    std::ofstream out(dir / "series" / (name + ".dat"));
    out << "# t " << name << '\n';
    for (const auto& r : record.rows) out << num(r.t) << ' ' << num(value(r)) << '\n';
  };
  for (int a = 0; a < 3; ++a) {
    const std::string axis = axis_name(static_cast<Axis>(a));
    series("truth_" + axis, [a](const RunRow& r) { return r.truth.position(a); });
    series("ref_" + axis, [a](const RunRow& r) { return r.reference.position(a); });
    series("est_" + axis, [a](const RunRow& r) { return r.estimate(position_slot(a)); });
    series("est_v" + axis, [a](const RunRow& r) { return r.estimate(velocity_slot(a)); });
    series("error_" + axis, [a](const RunRow& r) {
      return r.reference.position(a) - r.truth.position(a);
    });
  }
  series("feedback_error", [](const RunRow& r) {
    const Vec3 est{r.estimate(0), r.estimate(3), r.estimate(6)};
    return (est - r.truth.position).norm();
  });
}

}  // namespace slamloop
