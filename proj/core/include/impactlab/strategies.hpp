#pragma once

// Closed-form liquidation strategies: Obizhaeva-Wang, the drift-adjusted
// optimum built from an auxiliary process alpha, its pathwise form for
// martingale A', the cost-risk optimum and an Almgren-Chriss style baseline.

#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "impactlab/drift.hpp"
#include "impactlab/model.hpp"

namespace impactlab {

// alpha_t = scale * A'_t (from a drift realization) + a + b t + sum of
// indicator windows h 1[start, end). Z^alpha and Y^alpha follow from
//   Z^alpha_t = -E[ int_0^T alpha + rho int_0^T int_0^s alpha | F_t ],
//   Y^alpha_t = Z^alpha_t + rho int_0^t int_0^s alpha + (1 + rho (T - t)) int_0^t alpha.
// The drift part must come from an absolutely continuous drift whose Z is
// available in closed form; the deterministic part contributes a constant.
class AlphaProcess {
 public:
  explicit AlphaProcess(const ModelParams& params);

  static AlphaProcess from_drift(std::shared_ptr<const DriftPath> drift, double scale,
                                 const ModelParams& params);

  AlphaProcess& add_affine(double a, double b);
  AlphaProcess& add_window(double start, double end, double height);

  double value(double t) const;
  double left(double t) const;
  double integral(double t) const;         // int_0^t alpha
  double double_integral(double t) const;  // int_0^t int_0^s alpha
  double z(double t) const;
  double z_left(double t) const;
  double y(double t) const;
  double y_left(double t) const;

  // Points in (0, T) where alpha or Z^alpha may jump.
  std::vector<double> breakpoints() const;

  // sup |alpha| over the grid nodes and their left limits.
  double sup_on(const TimeGrid& grid) const;

  const ModelParams& params() const { return params_; }

 private:
  struct Window {
    double start, end, height;
  };
  double det_value(double t, bool left_limit) const;
  double det_integral(double t) const;
  double det_double_integral(double t) const;
  void refresh_z();

  ModelParams params_;
  std::shared_ptr<const DriftPath> drift_;
  double scale_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<Window> windows_;
  double z_det_ = 0.0;
};

// X_t = x (1 + rho (T - t)) / (2 + rho T) with blocks -x / (2 + rho T) at 0
// and T. T = 0 gives the single block.
Strategy ow_strategy(const ModelParams& params, const TimeGrid& grid);

// The strategy making phi X + (1 - phi) E + phi Y^alpha / 2 - alpha / (2 rho)
// vanish. Requires every alpha breakpoint inside (0, T) to be a grid node;
// throws ShapeError otherwise and ParameterError for alpha beyond `alpha_cap`.
Strategy alpha_strategy(const AlphaProcess& alpha, const ModelParams& params,
                        const TimeGrid& grid,
                        StrategyKind kind = StrategyKind::bounded_variation,
                        double alpha_cap = 1e8);

// max over interior nodes of |phi X + (1 - phi) E + phi Y^alpha / 2 - alpha / (2 rho)|.
double optimality_residual(const Strategy& strategy, const AlphaProcess& alpha,
                           const ModelParams& params, const TimeGrid& grid);

// Throws NotAbsolutelyContinuous, NoOptimalStrategy or UnsupportedDrift when
// the capability flags rule out a closed-form optimum.
void check_theorem1_applicable(const DriftCapabilities& caps);

// alpha_strategy with alpha = A' of the sampled path (on the path's grid).
Strategy optimal_strategy_theorem1(const DriftModel& model, const SamplePath& path,
                                   const ModelParams& params);

// X_t = OW_t + (2 + rho (T - t)) A'_t / (4 rho) + (1 + rho (T - t)) A_t / 4,
// evaluated on the path. Jumps of A' at nodes become strategy jumps.
Strategy optimal_strategy_corollary1(const SamplePath& path, const ModelParams& params);

// int_0^t S0 ds as left-point sums on the grid.
std::vector<double> running_integral(std::span<const double> s0, const TimeGrid& grid);

// derived: Corollary-1 formula applied to the tilde drift,
//   X_t = OW_t - c ((2 + rho (T - t)) S0_t / (4 rho) + (1 + rho (T - t)) int_0^t S0 / 4).
// printed: the same with (2 - rho (T - t)) in the first term. Only `derived`
// minimizes the cost-risk functional.
enum class CostRiskForm { derived, printed };

// Minimizer of E[C(X)] + lambda E[int S^X X dt] for martingale S0, with
// c = rho lambda / (rho + lambda). Throws ParameterError when lambda and x
// have opposite signs.
Strategy cost_risk_strategy(std::span<const double> s0, double risk_lambda,
                            const ModelParams& params, const TimeGrid& grid,
                            CostRiskForm form = CostRiskForm::derived);

struct TildeDrift {
  std::vector<double> a;        // rho / (rho + lambda) (A_t - lambda int_0^t S0)
  std::vector<double> a_prime;  // -rho lambda S0_t / (rho + lambda) + rho A'_t / (rho + lambda)
  std::vector<double> s0;       // S0 - A + tilde A
};

// `a` and `a_prime` are the drift samples of S0 (empty spans mean A = 0).
TildeDrift tilde_drift(std::span<const double> s0, std::span<const double> a,
                       std::span<const double> a_prime, double risk_lambda,
                       const ModelParams& params, const TimeGrid& grid);

// X_t = ((T - t) / T) (x - T A_t / (4 eta_ac)); `include_drift = false` drops
// the drift term. Throws ParameterError for T = 0 or eta_ac <= 0.
Strategy ac_drift_strategy(std::span<const double> a, const ModelParams& params,
                           const TimeGrid& grid, double eta_ac = 1.0,
                           bool include_drift = true);

// CSV with header time,X,E,jump; `jump` is the genuine jump at the node.
void write_strategy_csv(std::ostream& out, const Strategy& strategy, const TimeGrid& grid,
                        const ModelParams& params);

}  // namespace impactlab
