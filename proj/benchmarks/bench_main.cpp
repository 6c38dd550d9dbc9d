#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "slamloop/estimator.hpp"
#include "slamloop/harness.hpp"
#include "slamloop/metrics.hpp"
#include "slamloop/spatial_index.hpp"

using namespace slamloop;

namespace {

std::vector<Vec3> helix_points(int n, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> e(0.0, noise);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = 6.0 * 3.14159265358979 * i / n;
    pts.push_back({2.5 * std::cos(s) + e(rng), 2.5 * std::sin(s) + e(rng), 1.5 + 0.4 * s + e(rng)});
  }
  return pts;
}

void BM_FilterStep(benchmark::State& state) {
  FilterConfig cfg;
  FusionFilter f({0.0, Vec3::Zero(), 0.0}, cfg);
  double t = 0.0;
  std::uint64_t k = 0;
  for (auto _ : state) {
    t += cfg.ts;
    std::optional<PoseMeasurement> pose;
    if (++k % 4 == 0) pose = PoseMeasurement{t, {0.1, 0.2, 0.3}, 0.0};
    f.step(pose, AccelMeasurement{t, {0.01, 0.0, -0.01}}, cfg.ts);
    benchmark::DoNotOptimize(f.state().values.data());
  }
}
BENCHMARK(BM_FilterStep);

void BM_KalmanGain(benchmark::State& state) {
  const Matrix9 P = Matrix9::Identity() * 0.3;
  const ObservationModel obs = ObservationModel::make(Vec3::Constant(1e-4), Vec3::Constant(1e-2));
  for (auto _ : state) {
    Matrix9 K = kalman_gain(P, obs);
    benchmark::DoNotOptimize(K.data());
  }
}
BENCHMARK(BM_KalmanGain);

void BM_HausdorffKdTree(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto planned = helix_points(n, 0.0, 1);
  const auto executed = helix_points(n, 0.05, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff_rms(planned, executed));
  state.SetComplexityN(n);
}
BENCHMARK(BM_HausdorffKdTree)->RangeMultiplier(4)->Range(256, 16384)->Complexity();

void BM_HausdorffBruteForce(benchmark::State& state) {
  const auto n = static_cast<int>(state.range(0));
  const auto planned = helix_points(n, 0.0, 1);
  const auto executed = helix_points(n, 0.05, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hausdorff_rms_bruteforce(planned, executed));
  state.SetComplexityN(n);
}
BENCHMARK(BM_HausdorffBruteForce)->RangeMultiplier(4)->Range(256, 4096)->Complexity();

void BM_StepScenario(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.reference.steps.axes = {Axis::X};
  cfg.reference.steps.repetitions = 1;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(cfg).metrics.landing_error);
}
BENCHMARK(BM_StepScenario)->Unit(benchmark::kMillisecond);

void BM_HelixScenario(benchmark::State& state) {
  ScenarioConfig cfg;
  cfg.reference.kind = ReferenceKind::Helix;
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(cfg).metrics.hausdorff_rms);
}
BENCHMARK(BM_HelixScenario)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
