#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "slamloop/harness.hpp"
#include "slamloop/record_io.hpp"

namespace slamloop {

MetricStats summarize(const std::vector<double>& values) {
  MetricStats s;
  s.count = values.size();
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

SuiteReport run_suite(const SuiteConfig& suite) {
  if (suite.scenarios.empty()) throw ConfigError("suite has no scenarios");
  if (suite.seeds.empty()) throw ConfigError("suite has no seeds");
  for (std::size_t i = 0; i < suite.scenarios.size(); ++i) {
    try {
      suite.scenarios[i].validate();
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("scenario {} ('{}'): {}", i, suite.scenarios[i].name,
                                    e.what()));
    }
  }

  struct Job {
    std::size_t scenario;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < suite.scenarios.size(); ++s) {
    for (std::size_t k = 0; k < suite.seeds.size(); ++k) jobs.push_back({s, k});
  }
  std::vector<RunResult> results(jobs.size());

  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    while (true) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      ScenarioConfig cfg = suite.scenarios[jobs[j].scenario];
      cfg.seed = suite.seeds[jobs[j].seed];
      cfg.output_dir.clear();
      if (!suite.output_dir.empty()) {
        cfg.output_dir = (std::filesystem::path(suite.output_dir) /
                          fmt::format("{}_{}", cfg.name, cfg.seed))
                             .string();
      }
      try {
        results[j] = run_scenario(cfg);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = jobs.size();
      }
    }
  };
  unsigned threads = suite.threads ? suite.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1, static_cast<unsigned>(jobs.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  SuiteReport report;
  report.name = suite.name;
  for (std::size_t s = 0; s < suite.scenarios.size(); ++s) {
    const ScenarioConfig& cfg = suite.scenarios[s];
    ScenarioAggregate agg;
    agg.scenario = cfg.name;
    agg.profile = cfg.sensor.name;
    agg.kind = cfg.reference.kind;
    std::map<std::pair<std::string, std::string>, std::vector<double>> values;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].scenario != s) continue;
      const RunResult& r = results[j];
      ++agg.runs;
      if (r.status == RunStatus::Diverged) {
        ++agg.diverged;
        continue;
      }
      for (const auto& [key, v] : r.metrics.flatten()) values[key].push_back(v);
      if (r.metrics.landing_error) agg.per_seed_landing_error.push_back(*r.metrics.landing_error);
    }
    for (const auto& [key, v] : values) agg.metrics[key] = summarize(v);
    report.scenarios.push_back(std::move(agg));
  }

  if (!suite.output_dir.empty()) {
    std::filesystem::create_directories(suite.output_dir);
    std::ofstream out(std::filesystem::path(suite.output_dir) / "suite.csv");
    write_suite_csv(out, report);
  }
  return report;
}

}  // namespace slamloop
