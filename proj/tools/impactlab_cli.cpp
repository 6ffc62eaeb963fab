#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "impactlab/errors.hpp"
#include "impactlab/tools/config.hpp"
#include "impactlab/tools/experiments.hpp"
#include "impactlab/tools/verdict.hpp"

namespace {

enum Exit : int { ok = 0, failure = 1, config_error = 2, mismatch = 3, acceptance_failure = 4 };

int run_suite(const std::string& suite, std::optional<std::uint64_t> seed,
              std::optional<unsigned> threads, std::optional<std::size_t> max_n) {
  using namespace impactlab::tools;
  SuiteOptions options;
  if (seed) options.seed = *seed;
  if (threads) options.threads = *threads;
  options.max_n = max_n;
  bool all_pass = true;
  for (int id : suite_criteria(suite)) {
    const CriterionResult r = run_criterion(id, options);
    std::cout << to_json_line(r) << std::endl;
    all_pass = all_pass && r.pass;
  }
  return all_pass ? ok : acceptance_failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"impactlab: optimal execution experiments under transient price impact"};
  std::string config_path;
  std::string out_dir = "impactlab_out";
  std::string suite;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::size_t> max_n;
  app.add_option("--config", config_path, "Experiment configuration (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Overrides mc.seed");
  app.add_option("--out", out_dir, "Artifact directory");
  app.add_option("--threads", threads, "Worker threads (default: IMPACTLAB_THREADS or all cores)");
  app.add_option("--suite", suite, "Acceptance suite: identities, convergence, optimality, exploit, cost-risk, all");
  app.add_option("--max-n", max_n, "Caps every grid size of the acceptance suite");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }
  if (config_path.empty() == suite.empty()) {
    std::cerr << "error: pass exactly one of --config or --suite\n";
    return config_error;
  }

  try {
    if (!suite.empty()) return run_suite(suite, seed, threads, max_n);

    auto config = impactlab::tools::load_config(config_path);
    if (seed) config.seed = *seed;
    if (threads) config.threads = *threads;
    const auto artifacts = impactlab::tools::run_experiment(config);
    impactlab::tools::write_artifacts(out_dir, artifacts);
    for (const auto& a : artifacts) std::cout << out_dir << '/' << a.name << '\n';
    return ok;
  } catch (const impactlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const impactlab::ModelMismatch& e) {
    std::cerr << "model mismatch: " << e.what() << '\n';
    return mismatch;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
}
