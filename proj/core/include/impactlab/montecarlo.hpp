#pragma once

// Monte Carlo estimation with common random numbers. Path i of every
// estimator is sample_path(model, martingale, grid, params, seed, i), so two
// estimators sharing a seed see identical paths. Results are reduced in index
// order with pairwise summation and do not depend on the worker count.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "impactlab/drift.hpp"
#include "impactlab/model.hpp"
#include "impactlab/strategies.hpp"

namespace impactlab {

struct SimulationSetup {
  DriftModel model;
  MartingaleSpec martingale;
  TimeGrid grid;
  ModelParams params;
  SampleOptions options;
};

struct McConfig {
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: IMPACTLAB_THREADS, else hardware concurrency
};

// Worker count used for `requested` (see McConfig::threads).
unsigned resolve_threads(unsigned requested);

double pairwise_sum(std::span<const double> values);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

// Sample mean and standard error (sample standard deviation / sqrt(n)).
Estimate estimate_from(std::span<const double> values);

// Runs `fn(path, out)` on every path; `out` has `columns` entries. Returns the
// per-column estimates. Exceptions from `fn` are rethrown with the path index
// and seed attached (AdmissibilityError keeps its type).
using PathFunctional = std::function<void(const SamplePath&, std::span<double>)>;

std::vector<Estimate> estimate_many(const SimulationSetup& setup, const McConfig& config,
                                    std::size_t columns, const PathFunctional& fn);

// Builds a strategy on the grid of a sampled path.
using StrategyBuilder = std::function<Strategy(const SamplePath&)>;

struct EstimateReport {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  CostBreakdown breakdown;  // component means
};

// Mean of liquidation_cost over paths. Throws ParameterError for n_paths < 2
// and AdmissibilityError naming the path whose strategy is not admissible.
EstimateReport estimate_expected_cost(const StrategyBuilder& builder, const SimulationSetup& setup,
                                      const McConfig& config);

struct PairedReport {
  EstimateReport first;
  EstimateReport second;
  Estimate difference;  // second - first on common paths
};

PairedReport compare_strategies(const StrategyBuilder& first, const StrategyBuilder& second,
                                const SimulationSetup& setup, const McConfig& config);

struct ConvergenceRow {
  std::size_t n = 0;
  double mean_abs_gap = 0.0;
  double se = 0.0;
};

// Paths and the strategy live on the uniform reference grid setup.grid (drift
// events are not added). For each N the strategy and S0 are sampled at every
// (N_ref / N)-th node and priced with cost_discrete; the reference is
// cost_discrete on the full grid. Every N must divide the reference size.
std::vector<ConvergenceRow> lemma1_convergence_study(const StrategyBuilder& builder,
                                                     const SimulationSetup& setup,
                                                     std::span<const std::size_t> n_list,
                                                     const McConfig& config);

// Perturbation direction h on [0, T] with h(T) = 0.
using Direction = std::function<double(double)>;

// X + eps h: node values shifted by eps h(t_k); the jump at 0 absorbs eps h(0).
Strategy perturb(const Strategy& base, const Direction& h, double eps, const TimeGrid& grid);

struct PerturbationRow {
  std::size_t direction = 0;
  double eps = 0.0;
  Estimate difference;  // E[C(X + eps h)] - E[C(X)]
};

std::vector<PerturbationRow> perturbation_test(const StrategyBuilder& base,
                                               std::span<const Direction> directions,
                                               std::span<const double> eps_list,
                                               const SimulationSetup& setup,
                                               const McConfig& config);

struct ExploitSpec {
  DriftModel target = PredatorDrift{};
  std::vector<double> k_values{1.0, 2.0, 4.0, 8.0};
  double bound_multiple = 2.0;  // allowed sup |X - alpha / (2 rho)| relative to the bound
};

struct ExploitRow {
  double k = 0.0;
  double window = 0.0;      // delta
  double alpha_l2 = 0.0;    // int alpha^2 dt
  Estimate cost;
  double xi_sup = 0.0;      // sup over nodes of |X - alpha / (2 rho)|
  double xi_bound = 0.0;    // a-priori bound for xi_sup
};

// Location and size of the drift jump of a non absolutely continuous target.
struct DriftJump {
  double time = 0.0;
  double size = 0.0;
};
DriftJump drift_jump(const DriftModel& model, const ModelParams& params);

// Bound on sup |X_t - alpha_t / (2 rho)| for the alpha strategy with
// int alpha^2 = alpha_l2.
double alpha_strategy_bound(double alpha_l2, const ModelParams& params);

// For each K: alpha = (K / size) 1[time - delta, time) with
// delta = min((size / K)^2, 4 dt), the grid refined inside the window, and the
// alpha strategy priced over the paths of `setup` (whose grid is the base
// grid). Throws ModelMismatch for absolutely continuous targets and
// std::logic_error when xi_sup exceeds bound_multiple * xi_bound.
std::vector<ExploitRow> exploit_run(const ExploitSpec& spec, const SimulationSetup& setup,
                                    const McConfig& config);

struct SmoothingRow {
  double width = 0.0;
  double derivative_l2 = 0.0;  // int (A')^2 dt
  double optimal_cost = 0.0;
};

// Absolutely continuous approximations of a jump drift: A' = size / w on
// [time - w, time). Optimal expected costs diverge as w -> 0.
std::vector<SmoothingRow> smoothed_jump_study(const DriftJump& jump,
                                              std::span<const double> widths,
                                              const ModelParams& params);

struct McCsvRow {
  std::string experiment;
  std::string model;
  std::string strategy;
  std::size_t n = 0;
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double mean = 0.0;
  double se = 0.0;
  CostBreakdown breakdown;
};

// CSV with header experiment,model,strategy,N,n_paths,seed,mean,se,price_leg,impact_leg,qv_leg.
void write_mc_csv(std::ostream& out, std::span<const McCsvRow> rows);

}  // namespace impactlab
