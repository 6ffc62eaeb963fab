#pragma once

#include <string>
#include <vector>

#include "impactlab/tools/config.hpp"

namespace impactlab::tools {

struct Artifact {
  std::string name;
  std::string content;
};

// Runs config.experiment and returns the files to write, including
// manifest.json. Nothing is written here, so a failing run leaves no output.
// Throws ConfigError for invalid options and ModelMismatch for model/strategy
// combinations without a meaning (e.g. the optimal strategy of a jump drift).
std::vector<Artifact> run_experiment(const RunConfig& config);

// Writes the artifacts into `dir`, creating it if needed.
void write_artifacts(const std::string& dir, const std::vector<Artifact>& artifacts);

}  // namespace impactlab::tools
