#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "slamloop/harness.hpp"

namespace slamloop {

/// Column order of the run-record CSV.
const std::vector<std::string>& run_record_columns();

void write_run_csv(std::ostream& out, const RunRecord& record);
RunRecord read_run_csv(std::istream& in);
RunRecord read_run_csv(const std::filesystem::path& path);

/// Long format: metric,axis,value.
void write_metrics_csv(std::ostream& out, const ScenarioMetrics& metrics,
                       const RunRecord& record);

/// Human-readable table (rows per axis: IAE ISE ITAE ITSE PO t_r).
std::string format_metrics_table(const ScenarioMetrics& metrics);

/// Suite comparison table: rows profile x axis, columns as above.
std::string format_suite_table(const SuiteReport& report);
void write_suite_csv(std::ostream& out, const SuiteReport& report);

/// Writes run.csv, metrics.csv, per-stream CSVs and one (t, value) file per
/// plotted series under `dir`.
void write_run_outputs(const std::filesystem::path& dir, const RunResult& result);

}  // namespace slamloop
