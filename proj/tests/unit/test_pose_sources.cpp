#include <doctest.h>

#include <cmath>
#include <vector>

#include "slamloop/pose_sources.hpp"

using namespace slamloop;

namespace {

SensorProfile quiet_profile(double rate = 50.0) {
  SensorProfile p;
  p.name = "quiet";
  p.rate_hz = rate;
  p.noise_sigma.setZero();
  p.drift_density.setZero();
  p.yaw_noise_sigma = 0.0;
  return p;
}

VehicleState at(double t, const Vec3& pos = Vec3::Zero()) {
  VehicleState s;
  s.t = t;
  s.position = pos;
  return s;
}

// Feeds the source on a fine clock and returns every emitted sample.
std::vector<PoseSample> drive(SlamPoseSource& src, double duration, double dt,
                              const Vec3& pos = {0, 0, 2}) {
  std::vector<PoseSample> out;
  const int n = static_cast<int>(std::lround(duration / dt));
  for (int k = 0; k <= n; ++k) {
    if (auto s = src.sample(at(k * dt, pos))) out.push_back(*s);
  }
  return out;
}

double sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("built-in profiles") {
  const SensorProfile carto = builtin_profile("carto-like");
  const SensorProfile loam = builtin_profile("loam-like");
  CHECK(carto.rate_hz == 50.0);
  CHECK(loam.rate_hz == 20.0);
  CHECK(carto.loop_closure_enabled);
  CHECK(carto.smoothing_window == 5.0);
  CHECK(!loam.loop_closure_enabled);
  CHECK(loam.z_drift_multiplier == 4.0);
  CHECK(loam.degradation_altitude == 4.0);
  CHECK(loam.degradation_slope > 0.0);
  CHECK(carto.degradation_slope == 0.0);
  CHECK_THROWS_AS(builtin_profile("orb-like"), ConfigError);
  CHECK(builtin_profile_names().size() == 2);
}

TEST_CASE("profile validation") {
  SensorProfile p = quiet_profile();
  p.rate_hz = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = quiet_profile();
  p.noise_sigma.x() = -0.1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = quiet_profile();
  p.degradation_altitude = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = quiet_profile();
  p.smoothing_window = -1.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("noise-free, drift-free source reports the truth exactly") {
  SlamPoseSource src(quiet_profile(), 7);
  VehicleState truth = at(0.0, {1.25, -3.5, 2.0});
  truth.yaw = 0.4;
  const auto s = src.sample(truth);
  REQUIRE(s);
  CHECK(s->raw.position == truth.position);
  CHECK(s->raw.yaw == 0.4);
  CHECK(s->smoothed.position == truth.position);
}

TEST_CASE("degradation applies only above the threshold altitude") {
  SensorProfile p = quiet_profile();
  p.noise_sigma = {0.01, 0.02, 0.03};
  p.degradation_altitude = 4.0;
  p.degradation_slope = 2.0;
  CHECK(effective_noise_sigma(p, 2.0) == p.noise_sigma);
  CHECK(effective_noise_sigma(p, 4.0) == p.noise_sigma);
  CHECK((effective_noise_sigma(p, 5.5) - p.noise_sigma * 4.0).norm() < 1e-15);
}

TEST_CASE("white-noise standard deviation matches the profile") {
  SensorProfile p = quiet_profile(50.0);
  p.noise_sigma = Vec3::Constant(0.02);
  SlamPoseSource src(p, 123);
  std::vector<double> xs, ys, zs;
  const Vec3 truth{1, 2, 3};
  for (int k = 0; k < 100000; ++k) {
    const auto s = src.sample(at(k * 0.02, truth));
    REQUIRE(s);
    xs.push_back(s->raw.position.x());
    ys.push_back(s->raw.position.y());
    zs.push_back(s->raw.position.z());
  }
  for (const auto* v : {&xs, &ys, &zs}) {
    const double sd = sample_std(*v);
    CHECK(sd >= 0.019);
    CHECK(sd <= 0.021);
  }
}

TEST_CASE("emission follows the rate grid") {
  for (double rate : {50.0, 20.0, 30.0}) {
    SlamPoseSource src(quiet_profile(rate), 1);
    const auto samples = drive(src, 60.0, 0.005);
    const double expected = rate * 60.0;
    CHECK(std::abs(static_cast<double>(samples.size()) - expected) <= 1.0);
    CHECK(src.emitted() == samples.size());
    for (std::size_t i = 1; i < samples.size(); ++i) {
      REQUIRE(samples[i].raw.t > samples[i - 1].raw.t);
    }
  }
}

TEST_CASE("identical seeds give identical streams") {
  const SensorProfile p = builtin_profile("carto-like");
  SlamPoseSource a(p, 42), b(p, 42), c(p, 43);
  bool differs = false;
  for (int k = 0; k < 2000; ++k) {
    VehicleState truth = at(k * 0.005, {std::sin(0.01 * k), 0.0, 2.0});
    const auto sa = a.sample(truth);
    const auto sb = b.sample(truth);
    const auto sc = c.sample(truth);
    REQUIRE(sa.has_value() == sb.has_value());
    if (sa) {
      REQUIRE(sa->raw.position == sb->raw.position);
      REQUIRE(sa->smoothed.position == sb->smoothed.position);
      differs = differs || sa->raw.position != sc->raw.position;
    }
  }
  CHECK(differs);
}

TEST_CASE("drift random walk grows as sigma_d^2 T per axis") {
  SensorProfile p = quiet_profile(20.0);
  p.drift_density = Vec3::Constant(0.05);
  const double T = 30.0;
  const int seeds = 400;
  double sum = 0.0;
  for (int s = 0; s < seeds; ++s) {
    SlamPoseSource src(p, 1000 + s);
    (void)drive(src, T, 0.05);
    sum += src.drift_bias().squaredNorm();
  }
  const double mean = sum / seeds;
  const double expected = 3.0 * 0.05 * 0.05 * T;
  // |b|^2 / (sigma_d^2 T) is chi-square with 3 dof: variance 6.
  const double se = std::sqrt(6.0 / seeds) * 0.05 * 0.05 * T;
  CHECK(std::abs(mean - expected) <= 3.0 * se);
}

TEST_CASE("z drift multiplier scales the vertical walk") {
  SensorProfile p = quiet_profile(20.0);
  p.drift_density = Vec3::Constant(0.05);
  p.z_drift_multiplier = 4.0;
  double xy = 0.0, z = 0.0;
  for (int s = 0; s < 300; ++s) {
    SlamPoseSource src(p, 77 + s);
    (void)drive(src, 20.0, 0.05);
    xy += 0.5 * (std::pow(src.drift_bias().x(), 2) + std::pow(src.drift_bias().y(), 2));
    z += std::pow(src.drift_bias().z(), 2);
  }
  const double ratio = z / xy;
  CHECK(ratio > 10.0);
  CHECK(ratio < 25.0);
}

TEST_CASE("organic loop closure") {
  SensorProfile p = quiet_profile(10.0);
  p.loop_closure_enabled = true;
  p.revisit_radius = 3.0;
  p.min_excursion_time = 30.0;
  p.min_loop_drift = 0.1;

  auto fly_loop = [](SlamPoseSource& src, const Vec3& bias) {
    // Out to 20 m, hover, then back home after 40 s.
    std::vector<PoseSample> out;
    for (int k = 0; k <= 600; ++k) {
      const double t = k * 0.1;
      Vec3 pos = Vec3::Zero();
      if (t >= 5.0 && t < 40.0) pos = {20.0, 0.0, 2.0};
      if (k == 300) src.set_drift_bias(bias);
      if (auto s = src.sample(at(t, pos))) out.push_back(*s);
    }
    return out;
  };

  SUBCASE("zero drift on revisit produces no event") {
    SlamPoseSource src(p, 1);
    const auto samples = fly_loop(src, Vec3::Zero());
    CHECK(src.events().empty());
  }
  SUBCASE("bias is removed on revisit and later poses are unbiased") {
    SlamPoseSource src(p, 1);
    const auto samples = fly_loop(src, {0.5, 0.0, 0.0});
    REQUIRE(src.events().size() == 1);
    CHECK(src.events()[0].delta == Vec3(-0.5, 0.0, 0.0));
    CHECK(src.events()[0].t >= 40.0);
    CHECK(src.drift_bias().isZero(0.0));
    const auto& last = samples.back();
    CHECK(last.raw.position == Vec3::Zero());
    int flagged = 0;
    for (const auto& s : samples) flagged += s.loop_closure ? 1 : 0;
    CHECK(flagged == 1);
  }
  SUBCASE("drift below the trigger threshold is kept") {
    SlamPoseSource src(p, 1);
    (void)fly_loop(src, {0.05, 0.0, 0.0});
    CHECK(src.events().empty());
    CHECK(src.drift_bias().x() == 0.05);
  }
  SUBCASE("a short excursion does not count as a revisit") {
    SlamPoseSource src(p, 1);
    for (int k = 0; k <= 200; ++k) {
      const double t = k * 0.1;
      const Vec3 pos = (t >= 5.0 && t < 10.0) ? Vec3(20, 0, 2) : Vec3::Zero();
      if (k == 60) src.set_drift_bias({1.0, 0, 0});
      (void)src.sample(at(t, pos));
    }
    CHECK(src.events().empty());
  }
}

TEST_CASE("periodic global optimization removes drift without a revisit") {
  SensorProfile p = quiet_profile(10.0);
  p.loop_closure_enabled = true;
  p.min_loop_drift = 0.05;
  p.global_optimization_period = 10.0;
  SlamPoseSource src(p, 2);
  for (int k = 0; k <= 350; ++k) {
    const double t = k * 0.1;
    // Drift appears just after the 10 s check and is below the threshold at 20 s.
    if (k == 101) src.set_drift_bias({0.2, 0.0, 0.0});
    if (k == 199) src.set_drift_bias({0.01, 0.0, 0.0});
    if (k == 251) src.set_drift_bias({0.0, -0.3, 0.0});
    (void)src.sample(at(t));
  }
  // Hovering in place never triggers a revisit, only the 30 s check does.
  REQUIRE(src.events().size() == 1);
  CHECK(src.events()[0].t == doctest::Approx(30.0));
  CHECK(src.events()[0].delta == Vec3(0.0, 0.3, 0.0));
  CHECK(src.drift_bias().isZero(0.0));
  CHECK_THROWS_AS([&] {
    SensorProfile bad = p;
    bad.global_optimization_period = -1.0;
    bad.validate();
  }(), ConfigError);
}

TEST_CASE("scripted loop closures fire at their times") {
  SensorProfile p = quiet_profile(50.0);
  p.drift_density = Vec3::Constant(0.02);
  SlamPoseSource src(p, 5, {{2.0, Vec3(0.3, 0.0, 0.0)}, {1.0, std::nullopt}});
  Vec3 bias_before_first;
  for (int k = 0; k <= 150; ++k) {
    const double t = k * 0.02;
    if (k == 50) bias_before_first = src.drift_bias();
    (void)src.sample(at(t));
  }
  REQUIRE(src.events().size() == 2);
  CHECK(src.events()[0].t == doctest::Approx(1.0));
  CHECK(src.events()[1].t == doctest::Approx(2.0));
  CHECK(src.events()[1].delta == Vec3(0.3, 0.0, 0.0));
  // The default delta cancels the bias present at the event.
  CHECK(src.events()[0].delta.norm() > 0.0);
}

TEST_CASE("step smoother closed form") {
  StepSmoother sm(5.0);
  CHECK(sm.time_constant() == 1.0);
  sm.add_event({10.0, Vec3(1.0, 0.0, 0.0)});
  SUBCASE("no instantaneous jump at the event") {
    CHECK(sm.offset(10.0) == Vec3(-1.0, 0.0, 0.0));
    CHECK(sm.offset(9.999).isZero(0.0));
  }
  SUBCASE("residual at the end of the window is e^-5") {
    const double r = sm.offset(15.0).norm();
    CHECK(r == doctest::Approx(std::exp(-5.0)).epsilon(1e-12));
    CHECK(r == doctest::Approx(0.00674).epsilon(1e-3));
    CHECK(r <= 0.01);
    CHECK(sm.offset(20.0).norm() <= 0.01);
  }
  SUBCASE("overlapping events superpose") {
    sm.add_event({11.0, Vec3(0.0, 2.0, 0.0)});
    const Vec3 o = sm.offset(12.0);
    CHECK(o.x() == doctest::Approx(-std::exp(-2.0)));
    CHECK(o.y() == doctest::Approx(-2.0 * std::exp(-1.0)));
  }
  SUBCASE("pass-through with a zero window") {
    StepSmoother off(0.0);
    off.add_event({1.0, Vec3(1, 1, 1)});
    CHECK(off.offset(1.0).isZero(0.0));
  }
  CHECK_THROWS_AS(StepSmoother(-1.0), ConfigError);
}

TEST_CASE("smoothed stream absorbs a loop-closure step") {
  SensorProfile p = quiet_profile(50.0);
  p.smoothing_window = 5.0;
  const double dt = p.period();
  const double tau = p.smoothing_window / 5.0;
  const Vec3 delta(1.0, 0.0, 0.0);
  SlamPoseSource src(p, 3, {{10.0, delta}});
  const auto samples = drive(src, 20.0, dt, Vec3::Zero());
  double max_jump = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double jump =
        (samples[i].smoothed.position - samples[i - 1].smoothed.position).norm();
    max_jump = std::max(max_jump, jump);
    if (samples[i].raw.t >= 15.0 - 1e-9) {
      REQUIRE((samples[i].smoothed.position - samples[i].raw.position).norm() <=
              0.01 * delta.norm());
    }
  }
  CHECK(max_jump < delta.norm());
  CHECK(max_jump <= delta.norm() * (1.0 - std::exp(-dt / tau)) + 1e-12);
  // Raw output does step by the full delta.
  double raw_jump = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    raw_jump = std::max(raw_jump, (samples[i].raw.position - samples[i - 1].raw.position).norm());
  }
  CHECK(raw_jump == doctest::Approx(1.0));
}

TEST_CASE("IMU model") {
  SUBCASE("noise-free and unbiased returns the truth") {
    ImuConfig cfg;
    cfg.noise_sigma.setZero();
    ImuSource imu(cfg, 1);
    const AccelMeasurement m = imu.sample(0.5, {0.1, -0.2, 0.3});
    CHECK(m.acceleration == Vec3(0.1, -0.2, 0.3));
    CHECK(m.t == 0.5);
  }
  SUBCASE("bias shows up in the mean") {
    ImuConfig cfg;
    cfg.noise_sigma = Vec3::Constant(0.05);
    cfg.bias = {0.05, 0.0, 0.0};
    ImuSource imu(cfg, 2);
    double sum = 0.0;
    for (int k = 0; k < 10000; ++k) sum += imu.sample(k * 0.005, Vec3::Zero()).acceleration.x();
    CHECK(std::abs(sum / 10000 - 0.05) <= 3.0 * 0.05 / 100.0);
  }
  SUBCASE("noise standard deviation") {
    ImuConfig cfg;
    cfg.noise_sigma = Vec3::Constant(0.1);
    ImuSource imu(cfg, 3);
    std::vector<double> v;
    for (int k = 0; k < 100000; ++k) v.push_back(imu.sample(k * 0.005, Vec3::Zero()).acceleration.y());
    const double sd = sample_std(v);
    CHECK(sd >= 0.095);
    CHECK(sd <= 0.105);
  }
  SUBCASE("output magnitude never exceeds the range") {
    ImuConfig cfg;
    cfg.range = 20.0;
    ImuSource imu(cfg, 4);
    const AccelMeasurement m = imu.sample(0.0, {100.0, 50.0, 0.0});
    CHECK(m.acceleration.norm() <= 20.0 + 1e-12);
  }
  SUBCASE("invalid configuration") {
    ImuConfig cfg;
    cfg.range = 0.0;
    CHECK_THROWS_AS(ImuSource(cfg, 1), ConfigError);
  }
}
