#include "slamloop/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "slamloop/spatial_index.hpp"

namespace slamloop {

namespace {

constexpr double kSnapEpsilon = 1e-9;

std::size_t onset_index(const ResponseLog& log, double t0) {
  log.validate();
  const double slack = kSnapEpsilon * std::max(1.0, log.dt);
  if (!std::isfinite(t0) || t0 < log.start - slack || t0 > log.end() + slack) {
    throw ConfigError("step onset t0 = " + std::to_string(t0) + " lies outside the log [" +
                      std::to_string(log.start) + ", " + std::to_string(log.end()) + "]");
  }
  const double k = std::ceil((t0 - log.start) / log.dt - kSnapEpsilon);
  return std::min(static_cast<std::size_t>(std::max(0.0, k)), log.size() - 1);
}

double level_before(const ResponseLog& log, std::size_t i0) {
  return i0 > 0 ? log.reference[i0 - 1] : log.response[i0];
}

// Time at which the response first reaches `level` moving in direction
// `sign`, interpolated linearly; nullopt when it never does.
std::optional<double> first_crossing(const ResponseLog& log, std::size_t i0,
                                     double level, double sign) {
  for (std::size_t i = i0; i < log.size(); ++i) {
    if (sign * (log.response[i] - level) < 0.0) continue;
    if (i == i0) return log.time(i);
    const double prev = log.response[i - 1];
    const double curr = log.response[i];
    const double frac = (level - prev) / (curr - prev);
    return log.time(i - 1) + log.dt * frac;
  }
  return std::nullopt;
}

void require_points(std::span<const Vec3> a, const char* what) {
  if (a.empty()) throw ConfigError(std::string(what) + " trajectory is empty");
}

}  // namespace

void ResponseLog::validate() const {
  if (reference.size() != response.size()) {
    throw ConfigError("response log: reference and response lengths differ");
  }
  if (response.size() < 2) throw ConfigError("response log needs at least two samples");
  if (!(dt > 0.0) || !std::isfinite(dt) || !std::isfinite(start)) {
    throw ConfigError("response log: sample period must be > 0");
  }
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (!std::isfinite(reference[i]) || !std::isfinite(response[i])) {
      throw ConfigError("response log: non-finite sample at index " + std::to_string(i));
    }
  }
}

IntegralCriteria integral_criteria(const ResponseLog& log, double t0) {
  const std::size_t i0 = onset_index(log, t0);
  IntegralCriteria out;
  const double h = 0.5 * log.dt;
  for (std::size_t i = i0; i + 1 < log.size(); ++i) {
    const double e0 = log.reference[i] - log.response[i];
    const double e1 = log.reference[i + 1] - log.response[i + 1];
    const double tau0 = log.time(i) - t0;
    const double tau1 = log.time(i + 1) - t0;
    out.iae += h * (std::abs(e0) + std::abs(e1));
    out.ise += h * (e0 * e0 + e1 * e1);
    out.itae += h * (tau0 * std::abs(e0) + tau1 * std::abs(e1));
    out.itse += h * (tau0 * e0 * e0 + tau1 * e1 * e1);
  }
  return out;
}

double step_amplitude(const ResponseLog& log, double t0) {
  const std::size_t i0 = onset_index(log, t0);
  return log.reference.back() - level_before(log, i0);
}

double overshoot(const ResponseLog& log, double t0) {
  const std::size_t i0 = onset_index(log, t0);
  const double amplitude = log.reference.back() - level_before(log, i0);
  if (amplitude == 0.0) throw ConfigError("overshoot of a zero-amplitude step");
  const double sign = amplitude > 0.0 ? 1.0 : -1.0;

  const std::size_t window = log.size() - i0;
  const std::size_t tail = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(window))));
  double final_value = 0.0;
  for (std::size_t i = log.size() - tail; i < log.size(); ++i) final_value += log.response[i];
  final_value /= static_cast<double>(tail);

  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = i0; i < log.size(); ++i) peak = std::max(peak, sign * log.response[i]);
  return 100.0 * std::max(0.0, peak - sign * final_value) / std::abs(amplitude);
}

double rise_time(const ResponseLog& log, double t0) {
  const std::size_t i0 = onset_index(log, t0);
  const double base = level_before(log, i0);
  const double amplitude = log.reference.back() - base;
  if (amplitude == 0.0) throw ConfigError("rise time of a zero-amplitude step");
  const double sign = amplitude > 0.0 ? 1.0 : -1.0;
  const auto low = first_crossing(log, i0, base + 0.1 * amplitude, sign);
  const auto high = first_crossing(log, i0, base + 0.9 * amplitude, sign);
  if (!low || !high) {
    throw UnsettledResponse("unsettled response: 90% of the step was never reached");
  }
  return std::max(0.0, *high - *low);
}

double hausdorff_rms(std::span<const Vec3> planned, std::span<const Vec3> executed) {
  require_points(planned, "planned");
  require_points(executed, "executed");
  const KdTree tree(planned);
  double sum = 0.0;
  for (const auto& p : executed) sum += tree.nearest_squared(p);
  return std::sqrt(sum / static_cast<double>(executed.size()));
}

double hausdorff_rms_bruteforce(std::span<const Vec3> planned,
                                std::span<const Vec3> executed) {
  require_points(planned, "planned");
  require_points(executed, "executed");
  double sum = 0.0;
  for (const auto& p : executed) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : planned) best = std::min(best, (p - q).squaredNorm());
    sum += best;
  }
  return std::sqrt(sum / static_cast<double>(executed.size()));
}

double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b) {
  require_points(a, "first");
  require_points(b, "second");
  auto directed = [](std::span<const Vec3> from, std::span<const Vec3> to) {
    const KdTree tree(to);
    double worst = 0.0;
    for (const auto& p : from) worst = std::max(worst, tree.nearest_squared(p));
    return std::sqrt(worst);
  };
  return std::max(directed(a, b), directed(b, a));
}

double landing_error(const Vec3& reported_final, const Vec3& truth_final) {
  if (!reported_final.allFinite() || !truth_final.allFinite()) {
    throw ConfigError("landing positions must be finite");
  }
  return (reported_final - truth_final).norm();
}

}  // namespace slamloop
