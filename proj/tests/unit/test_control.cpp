#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "slamloop/control.hpp"
#include "slamloop/vehicle.hpp"

using namespace slamloop;

namespace {

StateVector estimate_of(const VehicleState& s) {
  return StateVector::from_blocks(s.position, s.velocity, s.acceleration);
}

PidGains pure_p(double kp_pos, double kp_vel) {
  PidGains g;
  g.position_p = Vec3::Constant(kp_pos);
  g.velocity_p = Vec3::Constant(kp_vel);
  g.velocity_i.setZero();
  g.velocity_d.setZero();
  return g;
}

struct StepRun {
  std::vector<double> x;         // sampled every 0.05 s
  double overshoot_percent = 0;  // relative to the amplitude
  double max_integrator = 0;
};

// Closed loop with perfect state feedback: hover at the origin, then an
// x step of `amplitude` at t = 0, simulated for 20 s.
StepRun step_response(double amplitude) {
  const PlantParams plant;
  CascadeController ctl(PidGains{}, plant.hover_thrust());
  VehicleState s;
  s.position = {0.0, 0.0, 2.0};
  TrajectoryPoint ref;
  ref.position = {amplitude, 0.0, 2.0};
  StepRun out;
  double peak = 0.0;
  const double dt = 0.005;
  for (int k = 0; k < 4000; ++k) {
    ref.t = k * dt;
    const AttitudeCommand cmd = ctl.update(ref, estimate_of(s), s.yaw, dt);
    s = step(s, cmd, plant, dt);
    peak = std::max(peak, s.position.x());
    out.max_integrator =
        std::max(out.max_integrator, ctl.state().velocity_integrator.cwiseAbs().maxCoeff());
    if (k % 10 == 9) out.x.push_back(s.position.x());
  }
  out.overshoot_percent = 100.0 * std::max(0.0, peak - amplitude) / amplitude;
  return out;
}

std::filesystem::path golden_path() {
  return std::filesystem::path(SLAMLOOP_TEST_DATA_DIR) / "anti_windup_golden.csv";
}

}  // namespace

TEST_CASE("position loop") {
  PidGains g = pure_p(1.0, 1.0);
  g.velocity_limit = Vec3::Constant(5.0);
  g.feedforward_velocity = 0.0;
  StateVector est;
  TrajectoryPoint ref;
  SUBCASE("no error, no reference velocity") {
    CHECK(position_loop(ref, est, g).isZero(0.0));
  }
  SUBCASE("proportional law") {
    ref.position = {2.0, 0.0, 0.0};
    CHECK(position_loop(ref, est, g) == Vec3(2.0, 0.0, 0.0));
  }
  SUBCASE("clamped to the velocity limit") {
    ref.position = {100.0, 0.0, -100.0};
    CHECK(position_loop(ref, est, g) == Vec3(5.0, 0.0, -5.0));
  }
  SUBCASE("velocity feedforward adds the reference velocity") {
    g.feedforward_velocity = 1.0;
    ref.velocity = {0.5, -0.25, 0.0};
    CHECK(position_loop(ref, est, g) == Vec3(0.5, -0.25, 0.0));
  }
}

TEST_CASE("velocity loop") {
  ControlState st;
  StateVector est;
  SUBCASE("zero everything gives zero") {
    PidGains g;
    CHECK(velocity_loop(Vec3::Zero(), est, Vec3::Zero(), g, st, 0.005).isZero(0.0));
  }
  SUBCASE("pure P") {
    PidGains g = pure_p(1.0, 2.0);
    CHECK(velocity_loop({1.0, 0.0, 0.0}, est, Vec3::Zero(), g, st, 0.005) == Vec3(2.0, 0, 0));
  }
  SUBCASE("integral of a constant error") {
    PidGains g = pure_p(1.0, 0.0);
    g.velocity_i = Vec3::Constant(0.5);
    g.integrator_limit = Vec3::Constant(100.0);
    g.acceleration_limit = Vec3::Constant(100.0);
    const double dt = 0.01;
    const double T = 4.0;
    Vec3 a;
    for (int k = 0; k < 400; ++k) a = velocity_loop({1.0, 0, 0}, est, Vec3::Zero(), g, st, dt);
    CHECK(a.x() == doctest::Approx(0.5 * T).epsilon(1e-12));
  }
  SUBCASE("acceleration feedforward") {
    PidGains g = pure_p(1.0, 0.0);
    CHECK(velocity_loop(Vec3::Zero(), est, {0.3, 0.0, -0.2}, g, st, 0.005) ==
          Vec3(0.3, 0.0, -0.2));
  }
  SUBCASE("derivative acts on the measurement, not the setpoint") {
    PidGains g = pure_p(1.0, 0.0);
    g.velocity_d = Vec3::Constant(1.0);
    (void)velocity_loop(Vec3::Zero(), est, Vec3::Zero(), g, st, 0.005);
    const Vec3 a = velocity_loop({10.0, 0, 0}, est, Vec3::Zero(), g, st, 0.005);
    CHECK(a.isZero(0.0));
  }
  SUBCASE("non-positive dt is rejected") {
    PidGains g;
    CHECK_THROWS_AS(velocity_loop(Vec3::Zero(), est, Vec3::Zero(), g, st, 0.0), ConfigError);
  }
}

TEST_CASE("acceleration to attitude") {
  const double hover = 0.3;
  SUBCASE("hover") {
    const AttitudeCommand c = acceleration_to_attitude(Vec3::Zero(), 0.2, 0.2, hover);
    CHECK(c.roll == 0.0);
    CHECK(c.pitch == 0.0);
    CHECK(c.thrust == hover);
    CHECK(c.yaw_rate == 0.0);
  }
  SUBCASE("small-angle map") {
    const AttitudeCommand c = acceleration_to_attitude({kGravity * 0.1, 0, 0}, 0.0, 0.0, hover);
    CHECK(c.pitch == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(c.roll == 0.0);
  }
  SUBCASE("rotated by yaw") {
    const double psi = std::numbers::pi / 2;
    const AttitudeCommand c = acceleration_to_attitude({0, kGravity * 0.1, 0}, psi, psi, hover);
    CHECK(c.pitch == doctest::Approx(0.1));
    CHECK(std::abs(c.roll) < 1e-15);
  }
  SUBCASE("tilt saturates at 0.8 rad") {
    const AttitudeCommand c = acceleration_to_attitude({kGravity * 10, 0, 0}, 0.0, 0.0, hover);
    CHECK(c.pitch == 0.8);
  }
  SUBCASE("thrust is clamped to [0, 1]") {
    CHECK(acceleration_to_attitude({0, 0, -100}, 0, 0, hover).thrust == 0.0);
    CHECK(acceleration_to_attitude({0, 0, 1000}, 0, 0, hover).thrust == 1.0);
  }
  SUBCASE("yaw error wraps") {
    const double est = 0.7;
    CHECK(acceleration_to_attitude(Vec3::Zero(), est, est + 2 * std::numbers::pi, hover)
              .yaw_rate == doctest::Approx(0.0).epsilon(1e-12));
    const AttitudeCommand c =
        acceleration_to_attitude(Vec3::Zero(), 3.0, -3.0, hover, {0.8, 1.0, 10.0});
    CHECK(c.yaw_rate == doctest::Approx(2 * std::numbers::pi - 6.0));
  }
  SUBCASE("hover thrust outside (0, 1) is rejected") {
    CHECK_THROWS_AS(acceleration_to_attitude(Vec3::Zero(), 0, 0, 1.0), ConfigError);
  }
}

TEST_CASE("wrap_angle maps to (-pi, pi]") {
  const double pi = std::numbers::pi;
  CHECK(wrap_angle(pi) == pi);
  CHECK(wrap_angle(-pi) == pi);
  CHECK(wrap_angle(3 * pi) == doctest::Approx(pi));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(u(rng));
    REQUIRE(w > -pi);
    REQUIRE(w <= pi);
  }
}

TEST_CASE("every command satisfies the envelope for adversarial inputs") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> huge(-1e6, 1e6);
  CascadeController ctl(PidGains{}, 0.3);
  for (int k = 0; k < 5000; ++k) {
    TrajectoryPoint ref;
    ref.position = {huge(rng), huge(rng), huge(rng)};
    ref.velocity = {huge(rng), huge(rng), huge(rng)};
    ref.acceleration = {huge(rng), huge(rng), huge(rng)};
    ref.yaw = huge(rng);
    StateVector est;
    for (int i = 0; i < 9; ++i) est.values(i) = huge(rng);
    const AttitudeCommand c = ctl.update(ref, est, huge(rng), 0.005);
    REQUIRE(c.within_envelope());
    REQUIRE((ctl.state().velocity_integrator.array().abs() <= PidGains{}.integrator_limit.array())
                .all());
  }
  const AttitudeCommand nan_cmd = acceleration_to_attitude(
      Vec3::Constant(std::numeric_limits<double>::quiet_NaN()), 0.0, 0.0, 0.3);
  CHECK(nan_cmd.within_envelope());
}

TEST_CASE("integrator stays bounded under prolonged saturation") {
  PidGains g;
  g.integrator_limit = Vec3::Constant(0.5);
  CascadeController ctl(g, 0.3);
  TrajectoryPoint ref;
  ref.position = {1000.0, -1000.0, 1000.0};
  StateVector est;
  for (int k = 0; k < 100000; ++k) {
    (void)ctl.update(ref, est, 0.0, 0.005);
    REQUIRE(ctl.state().velocity_integrator.cwiseAbs().maxCoeff() <= 0.5);
  }
}

TEST_CASE("recovery from saturation against the golden run") {
  const StepRun unsaturated = step_response(1.0);
  const StepRun saturated = step_response(20.0);
  CHECK(saturated.max_integrator <= PidGains{}.integrator_limit.maxCoeff());
  CHECK(saturated.overshoot_percent <= unsaturated.overshoot_percent * 1.10);

  if (std::getenv("SLAMLOOP_REGENERATE_GOLDEN")) {
    std::ofstream out(golden_path());
    out.precision(17);
    out << "# x position every 0.05 s after a 20 m step, default gains\n";
    for (double v : saturated.x) out << v << '\n';
  }
  std::ifstream in(golden_path());
  REQUIRE(in.good());
  std::vector<double> golden;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    golden.push_back(std::stod(line));
  }
  REQUIRE(golden.size() == saturated.x.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < golden.size(); ++i) {
    worst = std::max(worst, std::abs(golden[i] - saturated.x[i]));
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("pure feedforward tracks exactly like the open-loop plant") {
  PidGains g;
  g.position_p.setZero();
  g.velocity_p.setZero();
  g.velocity_i.setZero();
  g.velocity_d.setZero();
  const PlantParams plant;
  CascadeController ctl(g, plant.hover_thrust());
  auto reference = [](double t) {
    TrajectoryPoint r;
    r.t = t;
    const double w = 0.5;
    r.position = {std::sin(w * t), 1.0 - std::cos(w * t), 2.0};
    r.velocity = {w * std::cos(w * t), w * std::sin(w * t), 0.0};
    r.acceleration = {-w * w * std::sin(w * t), w * w * std::cos(w * t), 0.0};
    return r;
  };
  VehicleState closed, open;
  closed.position = open.position = reference(0).position;
  closed.velocity = open.velocity = reference(0).velocity;
  const double dt = 0.005;
  for (int k = 0; k < 2000; ++k) {
    const TrajectoryPoint r = reference(k * dt);
    const AttitudeCommand c1 = ctl.update(r, estimate_of(closed), closed.yaw, dt);
    const AttitudeCommand c2 =
        acceleration_to_attitude(r.acceleration, open.yaw, r.yaw, plant.hover_thrust(),
                                 {kMaxTiltAngle, g.yaw_p, g.max_yaw_rate});
    closed = step(closed, c1, plant, dt);
    open = step(open, c2, plant, dt);
  }
  CHECK((closed.position - open.position).norm() == 0.0);
  // The residual error is plant lag only: small but nonzero.
  const double err = (closed.position - reference(2000 * dt).position).norm();
  CHECK(err > 0.0);
  CHECK(err < 1.0);
}

TEST_CASE("gain validation") {
  PidGains g;
  g.velocity_p.x() = -1.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  g = PidGains{};
  g.integrator_limit.z() = 0.0;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  CHECK_THROWS_AS(CascadeController(PidGains{}, 1.5), ConfigError);
}
