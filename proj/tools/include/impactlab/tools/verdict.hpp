#pragma once

// Acceptance checks. Each criterion returns one result; failures are
// reported, never thrown.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "impactlab/drift.hpp"

namespace impactlab::tools {

struct CriterionResult {
  int id = 0;
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

struct SuiteOptions {
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  std::optional<std::size_t> max_n;        // caps every grid size
  std::optional<DriftModel> exploit_target;  // default: predator drift
};

const std::vector<std::string>& suite_names();

// Criterion ids for a suite ("all" lists every criterion). Throws
// ConfigError for unknown names.
std::vector<int> suite_criteria(const std::string& suite);

CriterionResult run_criterion(int id, const SuiteOptions& options);
std::vector<CriterionResult> run_suite(const std::string& suite, const SuiteOptions& options);

// One JSON object per line.
std::string to_json_line(const CriterionResult& result);

}  // namespace impactlab::tools
