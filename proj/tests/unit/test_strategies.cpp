#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "impactlab/errors.hpp"
#include "impactlab/oracles.hpp"
#include "impactlab/strategies.hpp"

namespace impactlab {
namespace {

TEST(Ow, FrozenValues) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const Strategy s = ow_strategy(p, g);
  EXPECT_DOUBLE_EQ(s.values()[0], 0.75);
  EXPECT_DOUBLE_EQ(s.jump0(), -0.25);
  EXPECT_DOUBLE_EQ(s.jump_t(), -0.25);
  EXPECT_DOUBLE_EQ(s.values()[4], 0.5);
  for (std::size_t k = 1; k + 1 < g.size(); ++k) EXPECT_EQ(s.jumps()[k], 0.0);
}

TEST(Ow, ZeroHorizonIsSingleBlock) {
  ModelParams p;
  p.T = 0.0;
  const Strategy s = ow_strategy(p, TimeGrid::uniform(0.0, 0));
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.values()[0], 0.0);
  EXPECT_EQ(s.jump0(), -1.0);
}

TEST(Alpha, ConstantAlphaFrozenValues) {
  ModelParams p;
  AlphaProcess alpha(p);
  alpha.add_affine(4.0, 0.0);
  const Strategy s = alpha_strategy(alpha, p, TimeGrid::uniform(1.0, 16));
  EXPECT_NEAR(s.values()[0], 2.75, 1e-14);
  EXPECT_NEAR(s.jump0(), 1.75, 1e-14);
  EXPECT_NEAR(s.jump_t(), -2.25, 1e-14);
}

TEST(Alpha, WindowOffGridThrows) {
  ModelParams p;
  AlphaProcess alpha(p);
  alpha.add_window(0.3, 0.4, 1.0);
  EXPECT_THROW(alpha_strategy(alpha, p, TimeGrid::uniform(1.0, 4)), ShapeError);
  const std::vector<double> extra{0.3, 0.4};
  EXPECT_NO_THROW(alpha_strategy(alpha, p, TimeGrid::merged(TimeGrid::uniform(1.0, 4), extra)));
}

TEST(Alpha, CapIsEnforced) {
  ModelParams p;
  AlphaProcess alpha(p);
  alpha.add_affine(1e9, 0.0);
  EXPECT_THROW(alpha_strategy(alpha, p, TimeGrid::uniform(1.0, 4)), ParameterError);
}

TEST(Alpha, IntegralsOfAffinePart) {
  ModelParams p;
  AlphaProcess alpha(p);
  alpha.add_affine(1.0, 3.0);
  EXPECT_NEAR(alpha.integral(0.5), 0.5 + 1.5 * 0.25, 1e-15);
  EXPECT_NEAR(alpha.double_integral(1.0), 0.5 + 0.5, 1e-15);
  EXPECT_NEAR(alpha.y(1.0), 0.0, 1e-14);
}

TEST(Theorem1, ReducesToOwForZeroDrift) {
  ModelParams p;
  const SamplePath s = sample_path(ZeroDrift{}, {}, TimeGrid::uniform(1.0, 1024), p, 1);
  const Strategy a = optimal_strategy_theorem1(ZeroDrift{}, s, p);
  const Strategy b = ow_strategy(p, s.grid);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    EXPECT_NEAR(a.values()[k], b.values()[k], 1e-12);
    EXPECT_NEAR(a.jumps()[k], b.jumps()[k], 1e-12);
  }
}

TEST(Theorem1, RejectsDriftsWithoutOptimum) {
  ModelParams p;
  const SamplePath s = sample_path(JumpDrift{0.5, 1.0}, {}, TimeGrid::uniform(1.0, 8), p, 1);
  EXPECT_THROW(optimal_strategy_theorem1(JumpDrift{0.5, 1.0}, s, p), NotAbsolutelyContinuous);
  DriftCapabilities caps;
  caps.derivative_semimartingale = false;
  EXPECT_THROW(check_theorem1_applicable(caps), NoOptimalStrategy);
  caps = {};
  caps.analytic_z = false;
  EXPECT_THROW(check_theorem1_applicable(caps), UnsupportedDrift);
}

TEST(Theorem1, LinearDriftMatchesFrozenAlphaValues) {
  ModelParams p;
  const SamplePath s = sample_path(LinearDrift{4.0}, {}, TimeGrid::uniform(1.0, 32), p, 1);
  const Strategy x = optimal_strategy_theorem1(LinearDrift{4.0}, s, p);
  EXPECT_NEAR(x.values()[0], 2.75, 1e-12);
  EXPECT_NEAR(x.jump0(), 1.75, 1e-12);
}

TEST(Theorem1, CornersAndResidualOnPoissonPaths) {
  ModelParams p;
  const DriftModel m = CompensatedPoissonDerivative{20.0};
  const SamplePath s = sample_path(m, {}, TimeGrid::uniform(1.0, 2048), p, 4, 2);
  const Strategy x = optimal_strategy_theorem1(m, s, p);
  EXPECT_EQ(x.values().back(), 0.0);
  const auto alpha = AlphaProcess::from_drift(s.drift, 1.0, p);
  EXPECT_LT(optimality_residual(x, alpha, p, s.grid), 5e-3);
  // Jumps of X at event times (derivative of A jumps by 1).
  for (double t : s.drift->breakpoints()) {
    const std::size_t k = s.grid.find_node(t);
    ASSERT_NE(k, s.grid.size());
    EXPECT_GT(x.jumps()[k], 0.0);
  }
}

TEST(Corollary1, AgreesWithTheorem1) {
  ModelParams p;
  for (const DriftModel& m : {DriftModel{LinearDrift{-2.0}}, DriftModel{CompensatedPoissonDerivative{20.0}}}) {
    for (std::uint64_t i = 0; i < 10; ++i) {
      const SamplePath s = sample_path(m, {}, TimeGrid::uniform(1.0, 256), p, 6, i);
      const Strategy a = optimal_strategy_theorem1(m, s, p);
      const Strategy b = optimal_strategy_corollary1(s, p);
      for (std::size_t k = 0; k < s.grid.size(); ++k) {
        EXPECT_NEAR(a.values()[k], b.values()[k], 1e-10);
        EXPECT_NEAR(a.jumps()[k], b.jumps()[k], 1e-10);
      }
    }
  }
}

// Deterministic drift: on each grid the optimizer's discrete cost sits just
// above the quadratic-program optimum, and the Riemann-sum cost approaches
// the closed form as the grid is refined.
TEST(Theorem1, NearQpOptimumForDeterministicDrift) {
  ModelParams p;
  const DriftModel m = TabulatedDerivative{{0.0, 0.25, 1.0}, {2.0, -3.0, 1.0}};
  double previous_gap = 1.0;
  for (std::size_t n : {512u, 2048u, 8192u}) {
    const SamplePath s = sample_path(m, {MartingaleKind::brownian, 0.0}, TimeGrid::uniform(1.0, n), p, 1);
    const auto s0 = s.unaffected();
    const Strategy x = optimal_strategy_theorem1(m, s, p);
    const auto trades = x.trades();
    const double discrete = cost_discrete(trades, s0, s.grid, p);
    if (n <= 512) {
      const double qp = qp_oracle(s.a, s.grid, p).value;
      EXPECT_LE(qp, discrete + 1e-12);
      EXPECT_NEAR(discrete, qp, 1e-4);
    }
    const double gap = std::abs(liquidation_cost(x, s0, s.grid, p).total -
                                deterministic_optimal_cost(*s.drift, p));
    EXPECT_LT(gap, previous_gap);
    previous_gap = gap;
  }
  EXPECT_LT(previous_gap, 1e-3);
}

TEST(CostRisk, LambdaZeroIsOwBitwise) {
  ModelParams p;
  p.s0 = 10.0;
  const SamplePath s =
      sample_path(ZeroDrift{}, {MartingaleKind::geometric, 0.3}, TimeGrid::uniform(1.0, 64), p, 2);
  const Strategy a = cost_risk_strategy(s.unaffected(), 0.0, p, s.grid);
  const Strategy b = ow_strategy(p, s.grid);
  for (std::size_t k = 0; k < s.grid.size(); ++k) {
    EXPECT_EQ(a.values()[k], b.values()[k]);
    EXPECT_EQ(a.jumps()[k], b.jumps()[k]);
  }
  EXPECT_THROW(cost_risk_strategy(s.unaffected(), -0.5, p, s.grid), ParameterError);
}

// With constant S0 the cost-risk strategy is the optimum for the deterministic
// tilde drift, so it must beat any perturbation of itself.
TEST(CostRisk, MinimizesFunctionalOnConstantPrice) {
  ModelParams p;
  p.s0 = 10.0;
  const TimeGrid g = TimeGrid::uniform(1.0, 256);
  const std::vector<double> s0(g.size(), 10.0);
  const double lambda = 0.5;
  const Strategy x = cost_risk_strategy(s0, lambda, p, g);
  const double base = cost_risk_value(x, s0, lambda, g, p);
  EXPECT_LT(base, cost_risk_value(ow_strategy(p, g), s0, lambda, g, p));
  for (double c : {0.05, -0.05}) {
    std::vector<double> v(x.values().begin(), x.values().end());
    for (std::size_t k = 0; k + 1 < v.size(); ++k) v[k] += c * std::sin(std::numbers::pi * g[k]);
    EXPECT_GT(cost_risk_value(Strategy::from_values(p.x, v), s0, lambda, g, p), base);
  }
}

TEST(CostRisk, PrintedFormInitialPosition) {
  // S0 constant 1, lambda = 1: 2 - rho T = 0 and the running integral vanishes at 0.
  ModelParams p;
  p.s0 = 1.0;
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const std::vector<double> s0(g.size(), 1.0);
  EXPECT_NEAR(cost_risk_strategy(s0, 1.0, p, g, CostRiskForm::printed).values()[0], 0.75, 1e-15);
  EXPECT_NEAR(cost_risk_strategy(s0, 1.0, p, g).values()[0], 0.75 - 2.0 / 3.0 * 0.5, 1e-15);
}

// Brute force: the functional is quadratic in the node values, so its
// minimizer solves a dense linear system assembled from function values.
TEST(CostRisk, DerivedFormMatchesNumericalMinimum) {
  ModelParams p;
  p.s0 = 10.0;
  const double lambda = 0.5;
  const std::size_t n = 32;
  const TimeGrid g = TimeGrid::uniform(1.0, n);
  const std::vector<double> s0(g.size(), 10.0);
  auto f = [&](const std::vector<double>& v) {
    std::vector<double> values(v);
    values.push_back(0.0);
    return cost_risk_value(Strategy::from_values(p.x, values), s0, lambda, g, p);
  };
  const std::vector<double> zero(n, 0.0);
  const double f0 = f(zero);
  std::vector<double> fe(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto e = zero;
    e[i] = 1.0;
    fe[i] = f(e);
  }
  // Gaussian elimination on H v = -g.
  std::vector<std::vector<double>> h(n, std::vector<double>(n + 1));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      auto e = zero;
      e[i] += 1.0;
      e[j] += 1.0;
      h[i][j] = f(e) - fe[i] - fe[j] + f0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) h[i][n] = -(fe[i] - f0 - h[i][i] / 2.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = c + 1; r < n; ++r) {
      const double m = h[r][c] / h[c][c];
      for (std::size_t k = c; k <= n; ++k) h[r][k] -= m * h[c][k];
    }
  }
  std::vector<double> v(n);
  for (std::size_t c = n; c-- > 0;) {
    double acc = h[c][n];
    for (std::size_t k = c + 1; k < n; ++k) acc -= h[c][k] * v[k];
    v[c] = acc / h[c][c];
  }
  const double best = f(v);
  const Strategy derived = cost_risk_strategy(s0, lambda, p, g);
  const Strategy printed = cost_risk_strategy(s0, lambda, p, g, CostRiskForm::printed);
  const double d = cost_risk_value(derived, s0, lambda, g, p);
  EXPECT_LE(best, d + 1e-9);
  EXPECT_NEAR(d, best, 5e-3);
  EXPECT_GT(cost_risk_value(printed, s0, lambda, g, p), d + 1.0);
}

TEST(TildeDriftTest, ScalesRunningIntegral) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  const std::vector<double> s0(g.size(), 2.0);
  const auto td = tilde_drift(s0, {}, {}, 2.0, p, g);
  // rho / (rho + lambda) = 1/2, A = 0: tilde A_t = -1/2 * 2 * int_0^t 2.
  EXPECT_NEAR(td.a[2], -0.5 * 2.0 * 1.0, 1e-15);
  EXPECT_NEAR(td.a_prime[1], -0.5 * 2.0 * 2.0, 1e-15);
  const auto integral = running_integral(s0, g);
  EXPECT_NEAR(integral.back(), 2.0, 1e-15);
}

TEST(AcBaseline, ShapeAndErrors) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  const std::vector<double> a{0.0, 1.0, 2.0, 3.0, 4.0};
  const Strategy with = ac_drift_strategy(a, p, g);
  const Strategy without = ac_drift_strategy(a, p, g, 1.0, false);
  EXPECT_DOUBLE_EQ(without.values()[2], 0.5);
  EXPECT_DOUBLE_EQ(with.values()[2], 0.5 * (1.0 - 2.0 / 4.0));
  EXPECT_EQ(with.values().back(), 0.0);
  ModelParams z = p;
  z.T = 0.0;
  const std::vector<double> a0{0.0};
  EXPECT_THROW(ac_drift_strategy(a0, z, TimeGrid::uniform(0.0, 0)), ParameterError);
  EXPECT_THROW(ac_drift_strategy(a, p, g, 0.0), ParameterError);
}

TEST(StrategyCsv, HeaderAndRows) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  std::ostringstream out;
  write_strategy_csv(out, ow_strategy(p, g), g, p);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,X,E,jump");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

}  // namespace
}  // namespace impactlab
