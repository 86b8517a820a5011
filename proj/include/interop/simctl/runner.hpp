#pragma once

#include <string>

#include "interop/simctl/scenario.hpp"
#include "json.hpp"

namespace interop::simctl {

struct RunResult {
  /// "ok", or "MaxTicksExceeded" when the script did not settle in time.
  std::string status = "ok";
  nlohmann::ordered_json metrics;
  /// Pretty-printed metrics, exactly as embedded in the log.
  std::string metrics_text;
  std::string log;
};

/// Builds the world, runs setup and the script on the tick loop until
/// quiescence or max_ticks, and returns metrics plus the replayable log.
/// Throws ConfigError for configs that fail at setup.
RunResult run_scenario(const ScenarioConfig& cfg);

/// The bundled three-chain auction scenario.
std::string demo_scenario_text();

}  // namespace interop::simctl
