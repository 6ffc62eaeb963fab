#pragma once

// Market-impact primitives: parameters, time grids, strategies, the volume
// impact process E^X, the affected price and the liquidation cost functionals.
//
// Conventions used throughout the library:
//  * Positions are right-continuous. A strategy stores X_{0-} = x separately
//    from its node values X_{t_0}, ..., X_{t_N}; the last value is always 0.
//  * The trade at node k is xi_k = X_{t_k} - X_{t_{k-1}} (xi_0 = X_0 - X_{0-}).
//  * Unaffected prices S0 are sampled right-continuously: a trade at a node
//    where S0 jumps is executed at the post-jump price.
//  * Impact enters prices through the left limit E_{t-}, with E_{0-} = 0.

#include <cstddef>
#include <span>
#include <vector>

namespace impactlab {

struct ModelParams {
  double rho = 2.0;  // resilience rate, > 0
  double T = 1.0;    // liquidation horizon, >= 0
  double x = 1.0;    // initial position X_{0-}
  double s0 = 0.0;   // initial unaffected price
  double eta = 1.0;  // impact magnitude; only eta = 1 is supported

  // Throws ParameterError unless rho > 0, T >= 0 and eta == 1.
  void validate() const;

  // Largest admissible |X_t|. Default cap is 1e6 * max(|x|, 1).
  double position_cap() const;
  double position_cap_factor = 1e6;
};

// phi(t) = 1 / (2 + rho (T - t)) on [0, T]. Throws DomainError outside.
double phi(double t, const ModelParams& params);

class TimeGrid {
 public:
  // t_k = k T / N. N = 0 is allowed only for T = 0 (a single node).
  static TimeGrid uniform(double T, std::size_t n_steps);

  // Validates strict monotonicity, t_0 = 0.
  explicit TimeGrid(std::vector<double> times);

  // Union of `base` with `extra` points inside (0, T). Points closer than
  // `merge_tol` to an existing node are snapped onto it.
  static TimeGrid merged(const TimeGrid& base, std::span<const double> extra,
                         double merge_tol = 1e-12);

  std::size_t n_steps() const { return times_.size() - 1; }
  std::size_t size() const { return times_.size(); }
  double horizon() const { return times_.back(); }
  double operator[](std::size_t k) const { return times_[k]; }
  std::span<const double> times() const { return times_; }

  // Index of the node equal to t within tol, or size() if none.
  std::size_t find_node(double t, double tol = 1e-12) const;

  // True when every node of `coarse` is bitwise a node of this grid.
  bool refines(const TimeGrid& coarse) const;

 private:
  std::vector<double> times_;
};

enum class StrategyKind { bounded_variation, semimartingale };

// Position trajectory on a grid. `jumps[k]` is the part of the trade at node k
// that is a genuine jump X_{t_k} - X_{t_k-}; the remainder of xi_k is
// continuous trading over (t_{k-1}, t_k). For strategies built from node values
// alone every trade is treated as a block (jumps == trades).
class Strategy {
 public:
  Strategy(double x_pre, std::vector<double> values, std::vector<double> jumps,
           StrategyKind kind);

  // Step strategy: every increment is a block trade.
  static Strategy from_values(double x_pre, std::vector<double> values,
                              StrategyKind kind = StrategyKind::bounded_variation);

  // Strategy built from a trade sequence xi_0..xi_N with sum(xi) = -x_pre.
  static Strategy from_trades(double x_pre, std::span<const double> trades);

  double x_pre() const { return x_pre_; }
  std::span<const double> values() const { return values_; }
  std::span<const double> jumps() const { return jumps_; }
  StrategyKind kind() const { return kind_; }
  std::size_t size() const { return values_.size(); }

  double jump0() const { return jumps_.front(); }
  double jump_t() const { return jumps_.back(); }

  std::vector<double> trades() const;

  // Throws ShapeError / AdmissibilityError. `cap` bounds every |X_t|.
  void validate(const TimeGrid& grid, double cap) const;

 private:
  double x_pre_;
  std::vector<double> values_;
  std::vector<double> jumps_;
  StrategyKind kind_;
};

struct ImpactState {
  double e = 0.0;      // E_{t_k}
  double e_pre = 0.0;  // E_{t_k-}
};

// E_k = exp(-rho dt_k) E_{k-1} + xi_k, E_{0-} = 0, E_0 = xi_0.
std::vector<ImpactState> impact_path(const Strategy& strategy, const TimeGrid& grid,
                                     const ModelParams& params);

// S^X_{t_k} = S0_{t_k} + E_{t_k-}.
std::vector<double> price_path(std::span<const double> unaffected,
                               std::span<const ImpactState> impact);

struct CostBreakdown {
  double price_leg = 0.0;   // int S0_{t-} dX + [S0, X]_T
  double impact_leg = 0.0;  // int E_{t-} dX
  double qv_leg = 0.0;      // 1/2 [X]_T
  double total = 0.0;
};

// Cost of a bounded-variation strategy. Block trades are priced exactly. The
// continuous part of each trade is spread linearly over the preceding
// interval: its impact integral is exact for that interpolation and S0 is
// averaged trapezoidally. 1/2 [X]_T only collects the jumps. Throws ParameterError for semimartingale strategies.
CostBreakdown cost_bv(const Strategy& strategy, std::span<const double> s0,
                      const TimeGrid& grid, const ModelParams& params);

// Cost of a general strategy: left-point stochastic integrals including the
// t = 0 jump, quadratic (co)variations as sums of squared grid increments.
CostBreakdown cost_semimartingale(const Strategy& strategy, std::span<const double> s0,
                                  const TimeGrid& grid, const ModelParams& params);

// Dispatches on Strategy::kind.
CostBreakdown liquidation_cost(const Strategy& strategy, std::span<const double> s0,
                               const TimeGrid& grid, const ModelParams& params);

// Discrete-time cost sum_k (S0_k xi_k + sum_{i<k} e^{-rho (t_k - t_i)} xi_i xi_k
// + xi_k^2 / 2). Throws ConstraintViolation if sum(xi) != -x.
double cost_discrete(std::span<const double> xi, std::span<const double> s0,
                     const TimeGrid& grid, const ModelParams& params);

// C(X) + lambda int_0^T S^X_t X_t dt for the step strategy on the grid, with
// int S0 X dt taken as a left-point sum.
double cost_risk_value(const Strategy& strategy, std::span<const double> s0,
                       double risk_lambda, const TimeGrid& grid,
                       const ModelParams& params);

}  // namespace impactlab
