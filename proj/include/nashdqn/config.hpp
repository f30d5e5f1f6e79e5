#pragma once

#include <string>

#include <json.hpp>

#include "nashdqn/market.hpp"
#include "nashdqn/model.hpp"
#include "nashdqn/trainer.hpp"

namespace nashdqn {

// Everything a run needs: game constants, initial-state distribution,
// network sizes and the training schedule. Defaults reproduce the reference
// five-agent linear-impact experiment.
struct RunConfig {
  MarketParams market;
  InitConfig init;
  ModelConfig model;
  TrainConfig train;
  std::string output_dir = "runs/default";
};

// Parsing is strict: unknown keys and malformed values are rejected with the
// offending key in the message (std::invalid_argument).
RunConfig parse_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);

RunConfig load_config_file(const std::string& path);
void save_config_file(const std::string& path, const RunConfig& config);

}  // namespace nashdqn
