#include "impactlab/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <Eigen/Dense>

#include "impactlab/detail/quadrature.hpp"
#include "impactlab/errors.hpp"
#include "impactlab/rng.hpp"

namespace impactlab {

namespace {

// Integrate f over [0, T] piecewise between the sorted breakpoints.
template <class F>
double integrate_pieces(F&& f, std::vector<double> cuts, double T) {
  cuts.push_back(0.0);
  cuts.push_back(T);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double s = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (cuts[i] > T) break;
    s += detail::gauss7().integrate(f, cuts[i - 1], cuts[i]);
  }
  return s;
}

}  // namespace

ClosedFormCost expected_cost_closed_form(const DriftModel& model, const ModelParams& params,
                                         ClosedFormOptions options) {
  params.validate();
  validate(model, params);
  const double rho = params.rho;
  const double T = params.T;
  const double x = params.x;
  const DriftCapabilities caps = capabilities(model, params);

  ClosedFormCost out;
  if (!caps.absolutely_continuous) {
    out.value = -std::numeric_limits<double>::infinity();
    out.unbounded = true;
    return out;
  }
  if (!caps.analytic_z) throw UnsupportedDrift("expected_cost_closed_form: no closed-form Z");

  const double phi0 = 1.0 / (2.0 + rho * T);
  if (T == 0.0) {
    out.value = -x * params.s0 + 0.5 * x * x;
    return out;
  }

  // Martingale A' with A'_0 = 0: Y_0 = 0 and phi Y - A'/rho = -A' (2 + rho (T - s)) / (2 rho).
  auto weight = [&](double s) {
    const double c = 2.0 + rho * (T - s);
    return c * c / (16.0 * rho);
  };

  if (caps.deterministic) {
    const auto path = sample_drift(model, TimeGrid::uniform(T, 1), params, options.seed, 0);
    out.value = deterministic_optimal_cost(*path, params);
    return out;
  }

  if (const auto* poisson = std::get_if<CompensatedPoissonDerivative>(&model)) {
    const double lambda = poisson->intensity;
    const double integral =
        detail::gauss7().integrate([&](double s) { return lambda * s * weight(s); }, 0.0, T);
    out.value = -x * params.s0 + x * x * phi0 - integral;
    return out;
  }

  if (std::holds_alternative<TruncatedBrownianDerivative>(model)) {
    const TimeGrid grid = TimeGrid::uniform(T, options.mc_steps);
    const std::size_t n = options.mc_paths;
    if (n < 2) throw ParameterError("expected_cost_closed_form: need at least 2 paths");
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const auto path = sample_drift(model, grid, params, options.seed, p);
      double integral = 0.0;
      for (std::size_t k = 1; k < grid.size(); ++k) {
        integral += detail::gauss7().integrate(
            [&](double s) {
              const double ap = path->at(s).a_prime;
              return ap * ap * weight(s);
            },
            grid[k - 1], grid[k]);
      }
      sum += integral;
      sum_sq += integral * integral;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = (sum_sq - sum * mean) / static_cast<double>(n - 1);
    out.value = -x * params.s0 + x * x * phi0 - mean;
    out.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(n));
    out.exact = false;
    return out;
  }

  throw UnsupportedDrift("expected_cost_closed_form: no second-moment formula for model '" +
                         model_id(model) + "'");
}

double deterministic_optimal_cost(const DriftPath& drift, const ModelParams& params) {
  params.validate();
  const double rho = params.rho;
  const double T = params.T;
  const double x = params.x;
  const double s0 = params.s0 + drift.price_offset();
  if (T == 0.0) return -x * s0 + 0.5 * x * x;
  const double phi0 = 1.0 / (2.0 + rho * T);
  auto integrand = [&](double s) {
    const double r = drift.y(s) / (2.0 + rho * (T - s)) - drift.at(s).a_prime / rho;
    return r * r;
  };
  const double integral = integrate_pieces(integrand, drift.breakpoints(), T);
  return -x * s0 + x * x * phi0 + x * drift.y(0.0) * phi0 - 0.25 * rho * integral;
}

// ---------------------------------------------------------------------------

DecompositionTerms lemma2_decomposition(const Strategy& strategy, const AlphaProcess& alpha,
                                        const SamplePath& path, const ModelParams& params) {
  const TimeGrid& grid = path.grid;
  if (strategy.size() != grid.size() || path.a.size() != grid.size()) {
    throw ShapeError("lemma2_decomposition: strategy and path lengths differ");
  }
  const double rho = params.rho;
  const double T = params.T;
  const double x = params.x;
  const auto values = strategy.values();
  const auto impact = impact_path(strategy, grid, params);
  const auto& gl = detail::gauss7();

  DecompositionTerms d;
  const double phi0 = phi(0.0, params);
  d.constant = -x * path.initial_price + phi0 * x * x + phi0 * x * alpha.z(0.0);

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t0 = grid[k];
    const double t1 = grid[k + 1];
    const double xk = values[k];
    const double ek = impact[k].e;
    d.alpha_square -= rho * gl.integrate(
                                [&](double t) {
                                  const double ph = 1.0 / (2.0 + rho * (T - t));
                                  const double r = 0.5 * ph * alpha.y(t) - alpha.value(t) / (2.0 * rho);
                                  return r * r;
                                },
                                t0, t1);
    d.penalty += rho * gl.integrate(
                           [&](double t) {
                             const double ph = 1.0 / (2.0 + rho * (T - t));
                             const double e = ek * std::exp(-rho * (t - t0));
                             const double r = ph * xk + (1.0 - ph) * e + 0.5 * ph * alpha.y(t) -
                                              alpha.value(t) / (2.0 * rho);
                             return r * r;
                           },
                           t0, t1);
    d.alpha_pairing += xk * (alpha.integral(t1) - alpha.integral(t0));
    d.alpha_pairing -= xk * (path.a[k + 1] - path.a[k]);
  }
  d.rhs = d.constant + d.alpha_square + d.alpha_pairing + d.penalty;
  return d;
}

// ---------------------------------------------------------------------------

QpResult qp_oracle(std::span<const double> a, const TimeGrid& grid, const ModelParams& params) {
  params.validate();
  const std::size_t n = grid.size();
  if (a.size() != n) throw ShapeError("qp_oracle: drift samples and grid lengths differ");
  Eigen::MatrixXd g(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      g(i, j) = std::exp(-params.rho * std::abs(grid[i] - grid[j]));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  if (llt.info() != Eigen::Success) throw std::logic_error("qp_oracle: G is not positive definite");

  Eigen::VectorXd lin(n);
  for (std::size_t i = 0; i < n; ++i) lin(i) = params.s0 + a[i];
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  const Eigen::VectorXd g_inv_one = llt.solve(ones);
  const Eigen::VectorXd g_inv_a = llt.solve(lin);
  const double mu = (params.x - ones.dot(g_inv_a)) / ones.dot(g_inv_one);
  const Eigen::VectorXd xi = -(g_inv_a + mu * g_inv_one);

  QpResult r;
  r.xi.assign(xi.data(), xi.data() + xi.size());
  r.value = lin.dot(xi) + 0.5 * xi.dot(g * xi);
  return r;
}

// ---------------------------------------------------------------------------

DriftChain deterministic_chain(std::span<const double> a, const TimeGrid& grid) {
  if (a.size() != grid.size()) throw ShapeError("deterministic_chain: length mismatch");
  DriftChain chain;
  chain.states.resize(grid.n_steps());
  for (std::size_t k = 0; k < grid.n_steps(); ++k) {
    chain.states[k] = {ChainState{a[k + 1] - a[k], {{0, 1.0}}}};
  }
  return chain;
}

DriftChain binomial_martingale_chain(double variance_rate, const TimeGrid& grid) {
  if (!(variance_rate >= 0.0)) throw ParameterError("binomial chain: variance must be >= 0");
  const std::size_t n = grid.n_steps();
  const double dt = grid.horizon() / static_cast<double>(n);
  for (std::size_t k = 1; k <= n; ++k) {
    if (std::abs(grid[k] - grid[k - 1] - dt) > 1e-12) {
      throw ParameterError("binomial chain: grid must be uniform");
    }
  }
  const double h = std::sqrt(variance_rate * dt);
  DriftChain chain;
  chain.states.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    chain.states[k].resize(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
      const double level = (2.0 * static_cast<double>(j) - static_cast<double>(k)) * h;
      chain.states[k][j] = {level * dt, {{j, 0.5}, {j + 1, 0.5}}};
    }
  }
  return chain;
}

DriftChain poisson_chain(double intensity, const TimeGrid& grid) {
  if (!(intensity > 0.0)) throw ParameterError("poisson chain: intensity must be > 0");
  const std::size_t n = grid.n_steps();
  DriftChain chain;
  chain.states.resize(n);
  double chain_var = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt = grid[k + 1] - grid[k];
    const double p = intensity * dt;
    if (p > 1.0) throw ParameterError("poisson chain: intensity * dt must be <= 1");
    chain.states[k].resize(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
      const double level = static_cast<double>(j) - intensity * grid[k];
      chain.states[k][j] = {level * dt, {{j, 1.0 - p}, {j + 1, p}}};
    }
    chain_var += p * (1.0 - p);
    chain.moment_gap = std::max(chain.moment_gap, std::abs(intensity * grid[k + 1] - chain_var));
  }
  return chain;
}

namespace {

// Quadratic form in v = (x, e, xi): v' P v + l' v + c.
struct Form3 {
  double p[3][3] = {};
  double l[3] = {};
  double c = 0.0;

  void add_outer(const double u[3], const double w[3], double coeff) {
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) p[i][j] += 0.5 * coeff * (u[i] * w[j] + w[i] * u[j]);
    }
  }
};

}  // namespace

DpResult dp_oracle(const DriftChain& chain, const TimeGrid& grid, const ModelParams& params) {
  params.validate();
  const std::size_t n = grid.n_steps();
  if (chain.states.size() != n) throw ShapeError("dp_oracle: chain length differs from grid");

  DpResult out;
  QuadraticValue terminal;  // forced block -x at T: -e x + x^2 / 2
  terminal.a = 0.5;
  terminal.b = -1.0;
  if (n == 0) {
    out.value = terminal(params.x, 0.0) - params.x * params.s0;
    return out;
  }
  out.value_functions.resize(n);
  out.policy.resize(n);

  for (std::size_t k = n; k-- > 0;) {
    const double q = std::exp(-params.rho * (grid[k + 1] - grid[k]));
    const auto& states = chain.states[k];
    out.value_functions[k].resize(states.size());
    out.policy[k].resize(states.size());
    for (std::size_t s = 0; s < states.size(); ++s) {
      QuadraticValue w;
      if (k + 1 == n) {
        w = terminal;
      } else {
        const auto& next = out.value_functions[k + 1];
        for (const auto& [j, prob] : states[s].next) {
          if (j >= next.size()) throw std::logic_error("dp_oracle: transition out of range");
          const QuadraticValue& v = next[j];
          w.a += prob * v.a;
          w.b += prob * v.b;
          w.c += prob * v.c;
          w.d += prob * v.d;
          w.f += prob * v.f;
          w.g += prob * v.g;
        }
      }
      const double lx[3] = {1.0, 0.0, 1.0};
      const double le[3] = {0.0, q, q};
      const double ex[3] = {0.0, 1.0, 0.0};
      const double xi[3] = {0.0, 0.0, 1.0};
      const double m = states[s].increment;

      Form3 f;
      f.add_outer(lx, lx, w.a);
      f.add_outer(lx, le, w.b);
      f.add_outer(le, le, w.c);
      f.add_outer(ex, xi, 1.0);
      f.add_outer(xi, xi, 0.5);
      for (int i = 0; i < 3; ++i) f.l[i] = w.d * lx[i] + w.f * le[i] - m * lx[i];
      f.c = w.g;

      const double p22 = f.p[2][2];
      if (!(p22 > 0.0)) throw std::logic_error("dp_oracle: stage quadratic is not convex in the trade");
      DpPolicy pol{f.p[2][0] / p22, f.p[2][1] / p22, 0.5 * f.l[2] / p22};
      QuadraticValue v;
      v.a = f.p[0][0] - f.p[0][2] * f.p[0][2] / p22;
      v.b = 2.0 * (f.p[0][1] - f.p[0][2] * f.p[1][2] / p22);
      v.c = f.p[1][1] - f.p[1][2] * f.p[1][2] / p22;
      v.d = f.l[0] - f.l[2] * f.p[0][2] / p22;
      v.f = f.l[1] - f.l[2] * f.p[1][2] / p22;
      v.g = f.c - f.l[2] * f.l[2] / (4.0 * p22);
      out.value_functions[k][s] = v;
      out.policy[k][s] = pol;
    }
  }
  if (out.value_functions[0].size() != 1) throw ShapeError("dp_oracle: chain root must have one state");
  out.value = out.value_functions[0][0](params.x, 0.0) - params.x * params.s0;
  return out;
}

double value_guess_eval(double t, double x_shares, double e_impact, double y_value,
                        const ModelParams& params) {
  const double ph = phi(t, params);
  const double gap = x_shares - e_impact;
  return -0.5 * e_impact * e_impact + ph * gap * gap + ph * gap * y_value;
}

VerificationProcess verification_process(const Strategy& strategy, const AlphaProcess& alpha,
                                         const SamplePath& path, const ModelParams& params) {
  const TimeGrid& grid = path.grid;
  if (strategy.size() != grid.size()) throw ShapeError("verification_process: length mismatch");
  const double rho = params.rho;
  const double T = params.T;
  const auto values = strategy.values();
  const auto xi = strategy.trades();
  const auto impact = impact_path(strategy, grid, params);
  const auto s0 = path.unaffected();
  const auto& gl = detail::gauss7();

  VerificationProcess vp;
  vp.p.resize(grid.size());
  vp.penalty.resize(grid.size());
  double cost = 0.0, square = 0.0, penalty = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (k > 0) {
      const double t0 = grid[k - 1];
      const double xk = values[k - 1];
      const double ek = impact[k - 1].e;
      square += rho * gl.integrate(
                          [&](double t) {
                            const double ph = 1.0 / (2.0 + rho * (T - t));
                            const double r = 0.5 * ph * alpha.y(t) - alpha.value(t) / (2.0 * rho);
                            return r * r;
                          },
                          t0, grid[k]);
      penalty += rho * gl.integrate(
                           [&](double t) {
                             const double ph = 1.0 / (2.0 + rho * (T - t));
                             const double e = ek * std::exp(-rho * (t - t0));
                             const double r = ph * xk + (1.0 - ph) * e + 0.5 * ph * alpha.y(t) -
                                              alpha.value(t) / (2.0 * rho);
                             return r * r;
                           },
                           t0, grid[k]);
    }
    cost += (s0[k] + impact[k].e_pre) * xi[k] + 0.5 * xi[k] * xi[k];
    const double t = grid[k];
    vp.p[k] = cost - s0[k] * values[k] +
              value_guess_eval(t, values[k], impact[k].e, alpha.y(t), params) + square;
    vp.penalty[k] = penalty;
  }
  return vp;
}

void write_oracle_csv(std::ostream& out, std::span<const OracleRow> rows) {
  const auto old = out.precision(17);
  out << "N,model,value,reference,gap\n";
  for (const OracleRow& r : rows) {
    out << r.n << ',' << r.model << ',' << r.value << ',' << r.reference << ','
        << r.value - r.reference << '\n';
  }
  out.precision(old);
}

}  // namespace impactlab
