#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "slamloop/harness.hpp"

namespace slamloop {

/// Scenario from a JSON document. Unknown keys are rejected with
/// ConfigError naming the offending path.
ScenarioConfig parse_scenario(std::string_view json_text);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Suite document: {"name", "scenarios": [object | "relative/path.json"],
/// "seeds": [..] | {"first", "count"}, "threads", "output_dir"}.
SuiteConfig parse_suite(std::string_view json_text,
                        const std::filesystem::path& base_dir = {});
SuiteConfig load_suite(const std::filesystem::path& path);

/// Profile JSON as accepted in the "sensor" field.
std::string profile_to_json(const SensorProfile& profile);

}  // namespace slamloop
