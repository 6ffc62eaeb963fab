#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "impactlab/errors.hpp"
#include "impactlab/oracles.hpp"
#include "impactlab/strategies.hpp"

namespace impactlab {
namespace {

// Frozen from tests/oracle/frozen_values.py (scipy quadrature, numpy KKT solves).
constexpr double kPoisson = -2.0416666666666665;
constexpr double kLinear = -6.416666666666666;

TEST(ClosedForm, FrozenValues) {
  ModelParams p;
  EXPECT_NEAR(expected_cost_closed_form(ZeroDrift{}, p).value, 0.25, 1e-14);
  const auto poisson = expected_cost_closed_form(CompensatedPoissonDerivative{20.0}, p);
  EXPECT_NEAR(poisson.value, kPoisson, 1e-12);
  EXPECT_TRUE(poisson.exact);
  EXPECT_NEAR(expected_cost_closed_form(LinearDrift{4.0}, p).value, kLinear, 1e-12);
}

TEST(ClosedForm, InitialPriceShiftsCost) {
  ModelParams p;
  p.s0 = 3.0;
  p.x = 2.0;
  EXPECT_NEAR(expected_cost_closed_form(ZeroDrift{}, p).value, -6.0 + 4.0 / 4.0, 1e-13);
}

TEST(ClosedForm, NonContinuousDriftIsUnbounded) {
  ModelParams p;
  const auto c = expected_cost_closed_form(JumpDrift{0.5, 1.0}, p);
  EXPECT_TRUE(c.unbounded);
  EXPECT_TRUE(std::isinf(c.value) && c.value < 0.0);
  EXPECT_TRUE(expected_cost_closed_form(PredatorDrift{}, p).unbounded);
}

TEST(ClosedForm, TruncatedBrownianFallsBackToSimulation) {
  ModelParams p;
  const auto c = expected_cost_closed_form(TruncatedBrownianDerivative{1.0, 0.0}, p, {2000, 128, 3});
  EXPECT_FALSE(c.exact);
  EXPECT_GT(c.se, 0.0);
  EXPECT_LT(c.value, 0.25);
}

TEST(Qp, FrozenZeroDriftValues) {
  ModelParams p;
  const std::vector<std::pair<std::size_t, double>> frozen{{1, 0.28383382080915326},
                                                           {4, 0.25256675388416944},
                                                           {16, 0.25016261220714064},
                                                           {64, 0.25001017194658626},
                                                           {256, 0.25000063578061377}};
  for (const auto& [n, value] : frozen) {
    const TimeGrid g = TimeGrid::uniform(1.0, n);
    const auto r = qp_oracle(std::vector<double>(g.size(), 0.0), g, p);
    EXPECT_NEAR(r.value, value, 1e-12) << "N=" << n;
    double sum = 0.0;
    for (double v : r.xi) sum += v;
    EXPECT_NEAR(sum, -1.0, 1e-12);
  }
}

TEST(Qp, FrozenLinearDriftValues) {
  ModelParams p;
  for (const auto& [n, value] : {std::pair<std::size_t, double>{4, -6.401223984661902},
                                 std::pair<std::size_t, double>{16, -6.415640060735641}}) {
    const TimeGrid g = TimeGrid::uniform(1.0, n);
    std::vector<double> a(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) a[k] = 4.0 * g[k];
    EXPECT_NEAR(qp_oracle(a, g, p).value, value, 1e-12);
  }
}

// Quadratic-form identity and positive definiteness of G on random grids,
// using an in-test Cholesky factorization.
TEST(Qp, QuadraticFormIdentityAndCholesky) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 0.2);
  std::normal_distribution<double> n01;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> t{0.0};
    for (int k = 0; k < 40; ++k) t.push_back(t.back() + u(rng));
    const std::size_t n = t.size();
    ModelParams p;
    p.T = t.back();
    const TimeGrid g(t);
    std::vector<std::vector<double>> G(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) G[i][j] = std::exp(-p.rho * std::abs(t[i] - t[j]));
    auto L = G;
    bool pd = true;
    for (std::size_t j = 0; j < n && pd; ++j) {
      double d = L[j][j];
      for (std::size_t k = 0; k < j; ++k) d -= L[j][k] * L[j][k];
      if (d <= 0.0) pd = false;
      L[j][j] = std::sqrt(d);
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = L[i][j];
        for (std::size_t k = 0; k < j; ++k) s -= L[i][k] * L[j][k];
        L[i][j] = s / L[j][j];
      }
    }
    EXPECT_TRUE(pd);
    std::vector<double> xi(n);
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) sum += (xi[k] = n01(rng));
    xi.back() = -p.x - sum;
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) quad += 0.5 * xi[i] * G[i][j] * xi[j];
    EXPECT_NEAR(cost_discrete(xi, std::vector<double>(n, 0.0), g, p), quad, 1e-10 * (1.0 + quad));
    EXPECT_LE(qp_oracle(std::vector<double>(n, 0.0), g, p).value, quad + 1e-12);
  }
}

TEST(Dp, MatchesQpForDeterministicChains) {
  ModelParams p;
  for (std::size_t n : {1u, 4u, 16u, 64u, 256u}) {
    const TimeGrid g = TimeGrid::uniform(1.0, n);
    std::vector<double> a(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) a[k] = std::sin(3.0 * g[k]) - g[k];
    const double qp = qp_oracle(a, g, p).value;
    const auto dp = dp_oracle(deterministic_chain(a, g), g, p);
    EXPECT_NEAR(dp.value, qp, 1e-10) << "N=" << n;
    EXPECT_EQ(dp.policy.size(), n);
  }
}

TEST(Dp, DpPolicyReproducesQpTrades) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 8);
  const std::vector<double> a(g.size(), 0.0);
  const auto qp = qp_oracle(a, g, p);
  const auto dp = dp_oracle(deterministic_chain(a, g), g, p);
  double x = p.x, e = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (k > 0) e *= std::exp(-p.rho * (g[k] - g[k - 1]));
    const auto& pol = dp.policy[k][0];
    const double xi = k + 1 == g.size() ? -x : -(pol.px * x + pol.pe * e + pol.p1);
    EXPECT_NEAR(xi, qp.xi[k], 1e-10);
    x += xi;
    e += xi;
  }
}

TEST(Dp, BinomialChainApproximatesPoissonClosedForm) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 512);
  const auto chain = binomial_martingale_chain(20.0, g);
  const double v = dp_oracle(chain, g, p).value;
  EXPECT_NEAR(v, kPoisson, 0.02 * std::abs(kPoisson));
}

TEST(Decomposition, ExactForDeterministicDrift) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 64);
  const SamplePath zero = sample_path(ZeroDrift{}, {MartingaleKind::brownian, 0.0}, g, p, 1);
  const Strategy ow = ow_strategy(p, g);
  const auto t1 = lemma2_decomposition(ow, AlphaProcess(p), zero, p);
  EXPECT_NEAR(t1.rhs, cost_discrete(ow.trades(), zero.unaffected(), g, p), 1e-12);
  EXPECT_NEAR(t1.rhs, 0.250023365739109, 1e-12);
  EXPECT_NEAR(t1.constant + t1.alpha_square + t1.alpha_pairing + t1.penalty, t1.rhs, 1e-14);

  const SamplePath lin = sample_path(LinearDrift{4.0}, {MartingaleKind::brownian, 0.0}, g, p, 1);
  AlphaProcess alpha(p);
  alpha.add_affine(1.0, 3.0);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n01;
  std::vector<double> values(g.size(), 0.0);
  for (std::size_t k = 0; k + 1 < g.size(); ++k) values[k] = 1.0 - g[k] + 0.1 * n01(rng);
  const Strategy x = Strategy::from_values(p.x, values);
  const auto t2 = lemma2_decomposition(x, alpha, lin, p);
  EXPECT_NEAR(t2.rhs, cost_discrete(x.trades(), lin.unaffected(), g, p), 1e-11);
  EXPECT_GE(t2.penalty, 0.0);
}

TEST(ValueGuess, TerminalAndOwValues) {
  ModelParams p;
  EXPECT_NEAR(value_guess_eval(0.0, 1.0, 0.0, 0.0, p), 0.25, 1e-15);
  EXPECT_NEAR(value_guess_eval(1.0, 0.0, 0.0, 0.0, p), 0.0, 1e-15);
  // phi(T) = 1/2: -e^2/2 + (x - e)^2/2.
  EXPECT_NEAR(value_guess_eval(1.0, 1.0, 0.5, 0.0, p), -0.125 + 0.125, 1e-15);
}

TEST(Verification, ConstantForOptimalAndIncreasingOtherwise) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 256);
  const SamplePath s = sample_path(LinearDrift{2.0}, {MartingaleKind::brownian, 0.0}, g, p, 1);
  const auto alpha = AlphaProcess::from_drift(s.drift, 1.0, p);
  const auto opt = verification_process(alpha_strategy(alpha, p, g), alpha, s, p);
  for (std::size_t k = 0; k < g.size(); ++k) {
    EXPECT_NEAR(opt.p[k] - opt.penalty[k], opt.p[0] - opt.penalty[0], 1e-10);
  }
  const auto ow = verification_process(ow_strategy(p, g), alpha, s, p);
  for (std::size_t k = 1; k < g.size(); ++k) EXPECT_GE(ow.penalty[k], ow.penalty[k - 1]);
  EXPECT_GT(ow.penalty.back(), opt.penalty.back() + 1e-3);
}

TEST(OracleCsv, Header) {
  std::ostringstream out;
  const std::vector<OracleRow> rows{{4, "zero:qp", 0.3, 0.25}};
  write_oracle_csv(out, rows);
  EXPECT_EQ(out.str().substr(0, out.str().find('\n')), "N,model,value,reference,gap");
}

}  // namespace
}  // namespace impactlab
