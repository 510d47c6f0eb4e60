#pragma once

// JSON config files and artifacts. Field names match the C++ struct fields;
// unknown keys are rejected so typos surface as errors.

#include <optional>
#include <string>

#include <json.hpp>

#include "fedwire/harness.hpp"
#include "fedwire/model.hpp"
#include "fedwire/report.hpp"

namespace fedwire::config_io {

using nlohmann::json;

/// Top-level config: optional "scenario", "fl", "sweep", "training" sections.
struct Config {
  harness::ScenarioConfig scenario{};
  std::optional<FlParams> fl;
  harness::SweepSpec sweep{};
  harness::TrainingSpec training{};
};

Config parse_config(const json& j);
Config load_config(const std::string& path);

harness::ScenarioConfig scenario_config_from_json(const json& j);
json to_json(const harness::ScenarioConfig& c);

FlParams fl_params_from_json(const json& j);
json to_json(const FlParams& fl);

json to_json(const NetworkScenario& sc);
NetworkScenario scenario_from_json(const json& j);
NetworkScenario load_scenario(const std::string& path);

json to_json(const Allocation& a);
json to_json(const SolveReport& r);

/// Pretty-printed JSON text ending in a newline.
std::string dump(const json& j);
void write_text(const std::string& path, const std::string& text);

}  // namespace fedwire::config_io
