#pragma once

#include <optional>
#include <span>
#include <vector>

#include "slamloop/types.hpp"

namespace slamloop {

/// Uniformly sampled single-axis record of reference and response.
struct ResponseLog {
  double start = 0.0;  // time of the first sample
  double dt = 0.0;
  std::vector<double> reference;
  std::vector<double> response;

  std::size_t size() const { return response.size(); }
  double time(std::size_t i) const { return start + dt * static_cast<double>(i); }
  double end() const { return time(size() - 1); }
  /// Throws ConfigError on fewer than two samples, dt <= 0, mismatched
  /// lengths or non-finite entries.
  void validate() const;
};

struct IntegralCriteria {
  double iae = 0.0;
  double ise = 0.0;
  double itae = 0.0;
  double itse = 0.0;
};

/// Trapezoidal IAE, ISE, ITAE and ITSE of e = reference - response over
/// [t0, end], with time weights measured from t0. t0 snaps to the first
/// sample at or after it.
IntegralCriteria integral_criteria(const ResponseLog& log, double t0);

/// Signed step amplitude seen by the response starting at t0. The level
/// before the step is the reference at the sample preceding t0 when there is
/// one, otherwise the response at t0.
double step_amplitude(const ResponseLog& log, double t0);

/// Percent overshoot past the final value (mean of the last 10% of the
/// window), measured in the step direction. Throws ConfigError on a zero
/// amplitude.
double overshoot(const ResponseLog& log, double t0);

/// 10%-90% rise time with linear interpolation between samples. Throws
/// UnsettledResponse when the 90% level is never reached.
double rise_time(const ResponseLog& log, double t0);

/// Directed RMS of each executed point's distance to the nearest planned
/// point, answered with a k-d tree over the planned set.
double hausdorff_rms(std::span<const Vec3> planned, std::span<const Vec3> executed);

/// Same quantity by exhaustive scan.
double hausdorff_rms_bruteforce(std::span<const Vec3> planned,
                                std::span<const Vec3> executed);

/// Classical symmetric Hausdorff distance (max of both directed maxima).
double hausdorff_distance(std::span<const Vec3> a, std::span<const Vec3> b);

/// Euclidean distance between the reported and true landing positions.
double landing_error(const Vec3& reported_final, const Vec3& truth_final);

struct StepMetrics {
  IntegralCriteria integrals;
  double overshoot = 0.0;   // %
  double rise_time = 0.0;   // s
};

struct MetricsReport {
  IntegralCriteria integrals;
  double overshoot = 0.0;
  double rise_time = 0.0;
  std::optional<double> hausdorff_rms;
  std::optional<double> hausdorff_max;
  std::optional<double> landing_error;
};

}  // namespace slamloop
