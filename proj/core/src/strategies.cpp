#include "impactlab/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "impactlab/detail/quadrature.hpp"
#include "impactlab/errors.hpp"

namespace impactlab {

// ---------------------------------------------------------------------------
// AlphaProcess

AlphaProcess::AlphaProcess(const ModelParams& params) : params_(params) {
  params_.validate();
}

AlphaProcess AlphaProcess::from_drift(std::shared_ptr<const DriftPath> drift, double scale,
                                      const ModelParams& params) {
  AlphaProcess a(params);
  a.drift_ = std::move(drift);
  a.scale_ = scale;
  return a;
}

AlphaProcess& AlphaProcess::add_affine(double a, double b) {
  a_ += a;
  b_ += b;
  refresh_z();
  return *this;
}

AlphaProcess& AlphaProcess::add_window(double start, double end, double height) {
  if (!(end > start) || start < 0.0) throw ParameterError("alpha window must satisfy 0 <= start < end");
  windows_.push_back({start, end, height});
  refresh_z();
  return *this;
}

void AlphaProcess::refresh_z() {
  const double T = params_.T;
  z_det_ = -(det_integral(T) + params_.rho * det_double_integral(T));
}

double AlphaProcess::det_value(double t, bool left_limit) const {
  double v = a_ + b_ * t;
  for (const Window& w : windows_) {
    const bool inside = left_limit ? (w.start < t && t <= w.end) : (w.start <= t && t < w.end);
    if (inside) v += w.height;
  }
  return v;
}

double AlphaProcess::det_integral(double t) const {
  double v = a_ * t + 0.5 * b_ * t * t;
  for (const Window& w : windows_) v += w.height * std::clamp(t - w.start, 0.0, w.end - w.start);
  return v;
}

double AlphaProcess::det_double_integral(double t) const {
  double v = 0.5 * a_ * t * t + b_ * t * t * t / 6.0;
  for (const Window& w : windows_) {
    if (t <= w.start) continue;
    const double width = w.end - w.start;
    if (t <= w.end) {
      v += w.height * 0.5 * (t - w.start) * (t - w.start);
    } else {
      v += w.height * (0.5 * width * width + width * (t - w.end));
    }
  }
  return v;
}

double AlphaProcess::value(double t) const {
  double v = det_value(t, false);
  if (drift_) v += scale_ * drift_->at(t).a_prime;
  return v;
}

double AlphaProcess::left(double t) const {
  double v = det_value(t, true);
  if (drift_) v += scale_ * drift_->left(t).a_prime;
  return v;
}

double AlphaProcess::integral(double t) const {
  double v = det_integral(t);
  if (drift_) v += scale_ * drift_->at(t).a;
  return v;
}

double AlphaProcess::double_integral(double t) const {
  double v = det_double_integral(t);
  if (drift_) v += scale_ * drift_->at(t).int_a;
  return v;
}

double AlphaProcess::z(double t) const {
  return z_det_ + (drift_ ? scale_ * drift_->z(t) : 0.0);
}

double AlphaProcess::z_left(double t) const {
  return z_det_ + (drift_ ? scale_ * drift_->z_left(t) : 0.0);
}

double AlphaProcess::y(double t) const {
  return z(t) + params_.rho * double_integral(t) +
         (1.0 + params_.rho * (params_.T - t)) * integral(t);
}

double AlphaProcess::y_left(double t) const {
  return z_left(t) + params_.rho * double_integral(t) +
         (1.0 + params_.rho * (params_.T - t)) * integral(t);
}

std::vector<double> AlphaProcess::breakpoints() const {
  std::vector<double> out;
  if (drift_) out = drift_->breakpoints();
  for (const Window& w : windows_) {
    out.push_back(w.start);
    out.push_back(w.end);
  }
  std::erase_if(out, [&](double s) { return s <= 0.0 || s >= params_.T; });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double AlphaProcess::sup_on(const TimeGrid& grid) const {
  double s = 0.0;
  for (double t : grid.times()) s = std::max({s, std::abs(value(t)), std::abs(left(t))});
  return s;
}

// ---------------------------------------------------------------------------

namespace {

Strategy single_block(const ModelParams& params) {
  return Strategy(params.x, {0.0}, {-params.x}, StrategyKind::bounded_variation);
}

void check_grid(const ModelParams& params, const TimeGrid& grid) {
  params.validate();
  if (std::abs(grid.horizon() - params.T) > 1e-12) {
    throw ShapeError("grid horizon does not match T");
  }
}

Strategy finish(double x_pre, std::vector<double> values, std::vector<double> jumps,
                StrategyKind kind, const TimeGrid& grid, const ModelParams& params) {
  values.back() = 0.0;
  Strategy s(x_pre, std::move(values), std::move(jumps), kind);
  s.validate(grid, params.position_cap());
  return s;
}

}  // namespace

Strategy ow_strategy(const ModelParams& params, const TimeGrid& grid) {
  check_grid(params, grid);
  if (params.T == 0.0) return single_block(params);
  const double denom = 2.0 + params.rho * params.T;
  const std::size_t n = grid.size();
  std::vector<double> values(n), jumps(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = params.x * (1.0 + params.rho * (params.T - grid[k])) / denom;
  }
  jumps.front() = -params.x / denom;
  jumps.back() = -params.x / denom;
  return finish(params.x, std::move(values), std::move(jumps), StrategyKind::bounded_variation,
                grid, params);
}

Strategy alpha_strategy(const AlphaProcess& alpha, const ModelParams& params,
                        const TimeGrid& grid, StrategyKind kind, double alpha_cap) {
  check_grid(params, grid);
  if (params.T == 0.0) return single_block(params);
  for (double b : alpha.breakpoints()) {
    if (grid.find_node(b) == grid.size()) {
      throw ShapeError("alpha_strategy: alpha breakpoint " + std::to_string(b) +
                       " is not a grid node");
    }
  }
  if (!(alpha.sup_on(grid) <= alpha_cap)) {
    throw ParameterError("alpha_strategy: alpha exceeds the admissible bound");
  }

  const double rho = params.rho;
  const double T = params.T;
  const double x = params.x;
  const double denom = 2.0 + rho * T;
  const double phi0 = phi(0.0, params);
  const double z0 = alpha.z(0.0);
  const double y0 = alpha.y(0.0);
  const auto& gl = detail::gauss7();

  // J0 = int phi Z, J1 = int Z phi', J2 = int r Z(r) phi'(r), phi' = rho phi^2.
  double j0 = 0.0, j1 = 0.0, j2 = 0.0;
  const std::size_t n = grid.size();
  std::vector<double> values(n), jumps(n, 0.0);
  double x_left_T = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = grid[k];
    if (k > 0) {
      std::array<double, detail::GaussLegendre7::points> nodes{}, w{};
      gl.map(grid[k - 1], t, nodes, w);
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const double r = nodes[i];
        const double ph = 1.0 / (2.0 + rho * (T - r));
        const double zr = alpha.z(r);
        j0 += w[i] * ph * zr;
        j1 += w[i] * rho * ph * ph * zr;
        j2 += w[i] * r * rho * ph * ph * zr;
      }
    }
    const double ph = phi(t, params);
    const double base = (x * (1.0 + rho * (T - t)) - 0.5 * (1.0 + rho * t) * y0) / denom;
    const double int_i = j0 - t * phi0 * z0 - (t * j1 - j2);
    const double drift_part = -0.5 * rho * (int_i + alpha.double_integral(t));
    const double i_right = ph * alpha.z(t) - phi0 * z0 - j1;
    const double i_left = ph * alpha.z_left(t) - phi0 * z0 - j1;
    const double right = base - 0.5 * i_right + alpha.value(t) / (2.0 * rho) + drift_part;
    const double left = base - 0.5 * i_left + alpha.left(t) / (2.0 * rho) + drift_part;
    values[k] = right;
    if (k == 0) {
      jumps[k] = right - x;
    } else if (k + 1 < n) {
      jumps[k] = right - left;
    } else {
      x_left_T = left;
    }
  }
  jumps.back() = -x_left_T;
  return finish(x, std::move(values), std::move(jumps), kind, grid, params);
}

double optimality_residual(const Strategy& strategy, const AlphaProcess& alpha,
                           const ModelParams& params, const TimeGrid& grid) {
  const auto impact = impact_path(strategy, grid, params);
  const auto x = strategy.values();
  double worst = 0.0;
  for (std::size_t k = 1; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const double ph = phi(t, params);
    const double r = ph * x[k] + (1.0 - ph) * impact[k].e + 0.5 * ph * alpha.y(t) -
                     alpha.value(t) / (2.0 * params.rho);
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

void check_theorem1_applicable(const DriftCapabilities& caps) {
  if (!caps.absolutely_continuous) {
    throw NotAbsolutelyContinuous(
        "drift is not absolutely continuous: expected costs are unbounded below, see the "
        "exploit experiment");
  }
  if (!caps.derivative_semimartingale) {
    throw NoOptimalStrategy("A' is not a semimartingale: no optimal strategy exists");
  }
  if (!caps.analytic_z) {
    throw UnsupportedDrift("no closed-form Z for this drift");
  }
}

Strategy optimal_strategy_theorem1(const DriftModel& model, const SamplePath& path,
                                   const ModelParams& params) {
  check_theorem1_applicable(capabilities(model, params));
  if (!path.drift) throw ParameterError("optimal_strategy_theorem1: path has no drift realization");
  const auto alpha = AlphaProcess::from_drift(path.drift, 1.0, params);
  const StrategyKind kind = std::holds_alternative<TruncatedBrownianDerivative>(model)
                                ? StrategyKind::semimartingale
                                : StrategyKind::bounded_variation;
  return alpha_strategy(alpha, params, path.grid, kind);
}

Strategy optimal_strategy_corollary1(const SamplePath& path, const ModelParams& params) {
  const TimeGrid& grid = path.grid;
  check_grid(params, grid);
  if (params.T == 0.0) return single_block(params);
  if (!path.a_prime) throw ParameterError("optimal_strategy_corollary1: path has no A'");
  const auto& ap = *path.a_prime;
  const double rho = params.rho;
  const double T = params.T;
  const double denom = 2.0 + rho * T;
  const std::size_t n = grid.size();

  auto formula = [&](double t, double a_prime, double a) {
    const double tau = T - t;
    return params.x * (1.0 + rho * tau) / denom + (2.0 + rho * tau) * a_prime / (4.0 * rho) +
           (1.0 + rho * tau) * a / 4.0;
  };

  std::vector<double> values(n), jumps(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) values[k] = formula(grid[k], ap[k], path.a[k]);
  jumps.front() = values.front() - params.x;
  for (std::size_t k = 1; k < n; ++k) {
    double left_ap = ap[k];
    double left_a = path.a[k];
    if (path.drift) {
      const DriftState s = path.drift->left(grid[k]);
      left_ap = s.a_prime;
      left_a = s.a;
    }
    const double left = formula(grid[k], left_ap, left_a);
    jumps[k] = k + 1 < n ? values[k] - left : -left;
  }
  return finish(params.x, std::move(values), std::move(jumps), StrategyKind::bounded_variation,
                grid, params);
}

std::vector<double> running_integral(std::span<const double> s0, const TimeGrid& grid) {
  if (s0.size() != grid.size()) throw ShapeError("running_integral: length mismatch");
  std::vector<double> out(s0.size(), 0.0);
  for (std::size_t k = 1; k < out.size(); ++k) {
    out[k] = out[k - 1] + s0[k - 1] * (grid[k] - grid[k - 1]);
  }
  return out;
}

Strategy cost_risk_strategy(std::span<const double> s0, double risk_lambda,
                            const ModelParams& params, const TimeGrid& grid, CostRiskForm form) {
  check_grid(params, grid);
  if (risk_lambda * params.x < 0.0) {
    throw ParameterError("cost_risk_strategy: lambda must have the sign of x");
  }
  if (risk_lambda < 0.0 && params.x == 0.0) {
    throw ParameterError("cost_risk_strategy: lambda must have the sign of x");
  }
  if (params.T == 0.0) return single_block(params);
  if (s0.size() != grid.size()) throw ShapeError("cost_risk_strategy: length mismatch");
  if (risk_lambda == 0.0) return ow_strategy(params, grid);

  const double rho = params.rho;
  const double T = params.T;
  const double c = rho * risk_lambda / (rho + risk_lambda);
  const double sign = form == CostRiskForm::derived ? 1.0 : -1.0;
  const auto integral = running_integral(s0, grid);
  const std::size_t n = grid.size();
  std::vector<double> values(n), jumps(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = T - grid[k];
    values[k] = params.x * (1.0 + rho * tau) / (2.0 + rho * T) -
                c * ((2.0 + sign * rho * tau) * s0[k] / (4.0 * rho) +
                     (1.0 + rho * tau) * integral[k] / 4.0);
  }
  jumps.front() = values.front() - params.x;
  jumps.back() = -values[n - 1];
  return finish(params.x, std::move(values), std::move(jumps), StrategyKind::semimartingale, grid,
                params);
}

TildeDrift tilde_drift(std::span<const double> s0, std::span<const double> a,
                       std::span<const double> a_prime, double risk_lambda,
                       const ModelParams& params, const TimeGrid& grid) {
  params.validate();
  const std::size_t n = grid.size();
  if (s0.size() != n || (!a.empty() && a.size() != n) ||
      (!a_prime.empty() && a_prime.size() != n)) {
    throw ShapeError("tilde_drift: length mismatch");
  }
  const double w = params.rho / (params.rho + risk_lambda);
  const auto integral = running_integral(s0, grid);
  TildeDrift out;
  out.a.resize(n);
  out.a_prime.resize(n);
  out.s0.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double ak = a.empty() ? 0.0 : a[k];
    const double apk = a_prime.empty() ? 0.0 : a_prime[k];
    out.a[k] = w * (ak - risk_lambda * integral[k]);
    out.a_prime[k] = w * (apk - risk_lambda * s0[k]);
    out.s0[k] = s0[k] - ak + out.a[k];
  }
  return out;
}

Strategy ac_drift_strategy(std::span<const double> a, const ModelParams& params,
                           const TimeGrid& grid, double eta_ac, bool include_drift) {
  check_grid(params, grid);
  if (params.T == 0.0) throw ParameterError("ac_drift_strategy: T must be positive");
  if (!(eta_ac > 0.0)) throw ParameterError("ac_drift_strategy: eta_ac must be positive");
  if (include_drift && a.size() != grid.size()) throw ShapeError("ac_drift_strategy: length mismatch");
  const double T = params.T;
  const std::size_t n = grid.size();
  std::vector<double> values(n), jumps(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double drift = include_drift ? T * a[k] / (4.0 * eta_ac) : 0.0;
    values[k] = (T - grid[k]) / T * (params.x - drift);
  }
  jumps.front() = values.front() - params.x;
  return finish(params.x, std::move(values), std::move(jumps), StrategyKind::bounded_variation,
                grid, params);
}

void write_strategy_csv(std::ostream& out, const Strategy& strategy, const TimeGrid& grid,
                        const ModelParams& params) {
  const auto impact = impact_path(strategy, grid, params);
  const auto x = strategy.values();
  const auto j = strategy.jumps();
  const auto old = out.precision(17);
  out << "time,X,E,jump\n";
  for (std::size_t k = 0; k < grid.size(); ++k) {
    out << grid[k] << ',' << x[k] << ',' << impact[k].e << ',' << j[k] << '\n';
  }
  out.precision(old);
}

}  // namespace impactlab
