#include "impactlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "impactlab/errors.hpp"

namespace impactlab {

void ModelParams::validate() const {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw ParameterError("rho must be positive, got " + std::to_string(rho));
  }
  if (!(T >= 0.0) || !std::isfinite(T)) {
    throw ParameterError("T must be nonnegative, got " + std::to_string(T));
  }
  if (eta != 1.0) {
    throw ParameterError("only eta = 1 is supported");
  }
  if (!std::isfinite(x) || !std::isfinite(s0)) {
    throw ParameterError("x and s0 must be finite");
  }
}

double ModelParams::position_cap() const {
  return position_cap_factor * std::max(std::abs(x), 1.0);
}

double phi(double t, const ModelParams& params) {
  if (t < 0.0 || t > params.T) {
    throw DomainError("phi: t = " + std::to_string(t) + " outside [0, T]");
  }
  return 1.0 / (2.0 + params.rho * (params.T - t));
}

// ---------------------------------------------------------------------------
// TimeGrid

TimeGrid TimeGrid::uniform(double T, std::size_t n_steps) {
  if (T < 0.0) throw ParameterError("TimeGrid: negative horizon");
  if (T == 0.0) return TimeGrid({0.0});
  if (n_steps == 0) throw ParameterError("TimeGrid: n_steps must be positive when T > 0");
  std::vector<double> t(n_steps + 1);
  for (std::size_t k = 0; k <= n_steps; ++k) {
    t[k] = T * static_cast<double>(k) / static_cast<double>(n_steps);
  }
  t.back() = T;
  return TimeGrid(std::move(t));
}

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.empty()) throw ShapeError("TimeGrid: empty");
  if (times_.front() != 0.0) throw ShapeError("TimeGrid: first node must be 0");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) {
      throw ShapeError("TimeGrid: nodes must be strictly increasing");
    }
  }
}

TimeGrid TimeGrid::merged(const TimeGrid& base, std::span<const double> extra,
                          double merge_tol) {
  std::vector<double> t(base.times_.begin(), base.times_.end());
  const double T = base.horizon();
  std::vector<double> add;
  for (double s : extra) {
    if (s <= 0.0 || s >= T) continue;
    auto it = std::lower_bound(t.begin(), t.end(), s);
    bool close = (it != t.end() && *it - s <= merge_tol) ||
                 (it != t.begin() && s - *(it - 1) <= merge_tol);
    if (!close) add.push_back(s);
  }
  t.insert(t.end(), add.begin(), add.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end(),
                      [merge_tol](double a, double b) { return b - a <= merge_tol; }),
          t.end());
  t.back() = T;
  return TimeGrid(std::move(t));
}

std::size_t TimeGrid::find_node(double t, double tol) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), t - tol);
  if (it != times_.end() && std::abs(*it - t) <= tol) {
    return static_cast<std::size_t>(it - times_.begin());
  }
  return times_.size();
}

bool TimeGrid::refines(const TimeGrid& coarse) const {
  for (double s : coarse.times_) {
    if (!std::binary_search(times_.begin(), times_.end(), s)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Strategy

Strategy::Strategy(double x_pre, std::vector<double> values, std::vector<double> jumps,
                   StrategyKind kind)
    : x_pre_(x_pre), values_(std::move(values)), jumps_(std::move(jumps)), kind_(kind) {
  if (values_.empty()) throw ShapeError("Strategy: no values");
  if (jumps_.size() != values_.size()) throw ShapeError("Strategy: jumps/values size mismatch");
}

Strategy Strategy::from_values(double x_pre, std::vector<double> values, StrategyKind kind) {
  std::vector<double> jumps(values.size());
  double prev = x_pre;
  for (std::size_t k = 0; k < values.size(); ++k) {
    jumps[k] = values[k] - prev;
    prev = values[k];
  }
  return Strategy(x_pre, std::move(values), std::move(jumps), kind);
}

Strategy Strategy::from_trades(double x_pre, std::span<const double> trades) {
  std::vector<double> values(trades.size());
  double pos = x_pre;
  for (std::size_t k = 0; k < trades.size(); ++k) {
    pos += trades[k];
    values[k] = pos;
  }
  if (!values.empty()) values.back() = 0.0;
  std::vector<double> jumps(trades.begin(), trades.end());
  return Strategy(x_pre, std::move(values), std::move(jumps),
                  StrategyKind::bounded_variation);
}

std::vector<double> Strategy::trades() const {
  std::vector<double> xi(values_.size());
  double prev = x_pre_;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    xi[k] = values_[k] - prev;
    prev = values_[k];
  }
  return xi;
}

void Strategy::validate(const TimeGrid& grid, double cap) const {
  if (values_.size() != grid.size()) {
    throw ShapeError("Strategy: " + std::to_string(values_.size()) + " values on a grid of " +
                     std::to_string(grid.size()) + " nodes");
  }
  if (values_.back() != 0.0) {
    throw AdmissibilityError("Strategy: position at T must be 0");
  }
  if (!std::isfinite(x_pre_) || std::abs(x_pre_) > cap) {
    throw AdmissibilityError("Strategy: initial position exceeds cap");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]) || !std::isfinite(jumps_[k])) {
      throw AdmissibilityError("Strategy: non-finite value at node " + std::to_string(k));
    }
    if (std::abs(values_[k]) > cap) {
      throw AdmissibilityError("Strategy: |X| exceeds position cap at node " +
                               std::to_string(k));
    }
  }
}

// ---------------------------------------------------------------------------
// Impact and prices

std::vector<ImpactState> impact_path(const Strategy& strategy, const TimeGrid& grid,
                                     const ModelParams& params) {
  if (strategy.size() != grid.size()) {
    throw ShapeError("impact_path: strategy and grid lengths differ");
  }
  const auto xi = strategy.trades();
  std::vector<ImpactState> out(grid.size());
  double e = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double e_pre = 0.0;
    if (k > 0) e_pre = std::exp(-params.rho * (grid[k] - grid[k - 1])) * e;
    e = e_pre + xi[k];
    out[k] = {e, e_pre};
  }
  return out;
}

std::vector<double> price_path(std::span<const double> unaffected,
                               std::span<const ImpactState> impact) {
  if (unaffected.size() != impact.size()) {
    throw ShapeError("price_path: price and impact lengths differ");
  }
  std::vector<double> out(unaffected.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = unaffected[k] + impact[k].e_pre;
  return out;
}

// ---------------------------------------------------------------------------
// Costs

namespace {

void check_inputs(const Strategy& strategy, std::span<const double> s0, const TimeGrid& grid) {
  if (strategy.size() != grid.size() || s0.size() != grid.size()) {
    throw ShapeError("cost: strategy, price path and grid lengths differ");
  }
}

}  // namespace

CostBreakdown cost_bv(const Strategy& strategy, std::span<const double> s0,
                      const TimeGrid& grid, const ModelParams& params) {
  if (strategy.kind() != StrategyKind::bounded_variation) {
    throw ParameterError("cost_bv: semimartingale strategy, use cost_semimartingale");
  }
  check_inputs(strategy, s0, grid);
  const auto xi = strategy.trades();
  const auto jumps = strategy.jumps();

  // The continuous part of the trade over (t_{k-1}, t_k) is spread linearly;
  // int E dX over the interval is then exact and S0 is trapezoidal.
  CostBreakdown c;
  double e = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double cont = xi[k] - jumps[k];
    double e_pre = 0.0;
    if (k > 0) {
      const double rh = params.rho * (grid[k] - grid[k - 1]);
      const double r = -std::expm1(-rh) / rh;
      c.price_leg += 0.5 * (s0[k - 1] + s0[k]) * cont;
      c.impact_leg += cont * e * r + cont * cont * (1.0 - r) / rh;
      e_pre = std::exp(-rh) * e + cont * r;
    }
    c.price_leg += s0[k] * jumps[k];
    c.impact_leg += e_pre * jumps[k];
    c.qv_leg += 0.5 * jumps[k] * jumps[k];
    e = e_pre + jumps[k];
  }
  c.total = c.price_leg + c.impact_leg + c.qv_leg;
  return c;
}

CostBreakdown cost_semimartingale(const Strategy& strategy, std::span<const double> s0,
                                  const TimeGrid& grid, const ModelParams& params) {
  check_inputs(strategy, s0, grid);
  const auto xi = strategy.trades();
  const auto impact = impact_path(strategy, grid, params);

  // int_{[0,T]} S0_{t-} dX = S0_{0-} dX_0 + sum S0_{k-1} xi_k and
  // [S0, X]_T = dS0_0 dX_0 + sum dS0_k xi_k; the S0_{0-} terms cancel.
  double integral = s0[0] * xi[0];
  double covariation = 0.0;
  double impact_leg = 0.0;
  double qv = xi[0] * xi[0];
  for (std::size_t k = 1; k < xi.size(); ++k) {
    integral += s0[k - 1] * xi[k];
    covariation += (s0[k] - s0[k - 1]) * xi[k];
    impact_leg += impact[k].e_pre * xi[k];
    qv += xi[k] * xi[k];
  }
  CostBreakdown c;
  c.price_leg = integral + covariation;
  c.impact_leg = impact_leg;
  c.qv_leg = 0.5 * qv;
  c.total = c.price_leg + c.impact_leg + c.qv_leg;
  return c;
}

CostBreakdown liquidation_cost(const Strategy& strategy, std::span<const double> s0,
                               const TimeGrid& grid, const ModelParams& params) {
  if (strategy.kind() == StrategyKind::bounded_variation) {
    return cost_bv(strategy, s0, grid, params);
  }
  return cost_semimartingale(strategy, s0, grid, params);
}

double cost_discrete(std::span<const double> xi, std::span<const double> s0,
                     const TimeGrid& grid, const ModelParams& params) {
  if (xi.size() != grid.size() || s0.size() != grid.size()) {
    throw ShapeError("cost_discrete: trade, price and grid lengths differ");
  }
  double sum = 0.0;
  double abs_sum = 0.0;
  for (double v : xi) {
    sum += v;
    abs_sum += std::abs(v);
  }
  if (std::abs(sum + params.x) > 1e-12 * std::max(1.0, abs_sum)) {
    throw ConstraintViolation("cost_discrete: trades do not sum to -x");
  }

  // Inner sum sum_{i<k} e^{-rho (t_k - t_i)} xi_i, carried across the nonzero
  // trades only so that zero trades leave the arithmetic untouched.
  double total = 0.0;
  double carried = 0.0;
  double t_last = 0.0;
  bool any = false;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    if (xi[k] == 0.0) continue;
    const double inner = any ? std::exp(-params.rho * (grid[k] - t_last)) * carried : 0.0;
    total += s0[k] * xi[k] + inner * xi[k] + 0.5 * xi[k] * xi[k];
    carried = inner + xi[k];
    t_last = grid[k];
    any = true;
  }
  return total;
}

double cost_risk_value(const Strategy& strategy, std::span<const double> s0,
                       double risk_lambda, const TimeGrid& grid, const ModelParams& params) {
  const CostBreakdown c = cost_semimartingale(strategy, s0, grid, params);
  const auto impact = impact_path(strategy, grid, params);
  const auto x = strategy.values();
  double risk = 0.0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double dt = grid[k + 1] - grid[k];
    const double impact_integral = impact[k].e * (-std::expm1(-params.rho * dt)) / params.rho;
    risk += x[k] * (s0[k] * dt + impact_integral);
  }
  return c.total + risk_lambda * risk;
}

}  // namespace impactlab
