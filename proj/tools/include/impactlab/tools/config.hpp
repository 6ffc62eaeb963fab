#pragma once

// Experiment configuration: one JSON document with blocks
//   model, params, grid, experiment, mc.

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "impactlab/drift.hpp"
#include "impactlab/model.hpp"

namespace impactlab::tools {

struct RunConfig {
  std::string experiment;
  nlohmann::json options = nlohmann::json::object();  // experiment block minus "name"
  DriftModel model = ZeroDrift{};
  ModelParams params;
  std::size_t n_steps = 256;
  MartingaleSpec martingale;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;

  TimeGrid grid() const { return TimeGrid::uniform(params.T, params.T == 0.0 ? 0 : n_steps); }
};

const std::vector<std::string>& experiment_names();

// Throws ConfigError for malformed JSON, unknown experiments, models or keys,
// and invalid parameter values.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

nlohmann::json model_to_json(const DriftModel& model);
DriftModel model_from_json(const nlohmann::json& j);

// Canonical form of the configuration; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);

}  // namespace impactlab::tools
