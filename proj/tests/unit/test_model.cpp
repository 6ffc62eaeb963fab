#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "impactlab/errors.hpp"
#include "impactlab/model.hpp"

namespace impactlab {
namespace {

// sum_k S0_k xi_k + sum_{i<k} exp(-rho (t_k - t_i)) xi_i xi_k + xi_k^2 / 2
double double_sum_cost(const std::vector<double>& xi, const std::vector<double>& s0,
                       const std::vector<double>& t, double rho) {
  double c = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    c += s0[k] * xi[k] + 0.5 * xi[k] * xi[k];
    for (std::size_t i = 0; i < k; ++i) c += std::exp(-rho * (t[k] - t[i])) * xi[i] * xi[k];
  }
  return c;
}

TEST(Params, Validation) {
  ModelParams p;
  EXPECT_NO_THROW(p.validate());
  p.rho = 0.0;
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.T = -1.0;
  EXPECT_THROW(p.validate(), ParameterError);
  p = {};
  p.eta = 2.0;
  EXPECT_THROW(p.validate(), ParameterError);
}

TEST(Params, PhiAndCap) {
  ModelParams p;
  EXPECT_DOUBLE_EQ(phi(0.0, p), 0.25);
  EXPECT_DOUBLE_EQ(phi(1.0, p), 0.5);
  EXPECT_THROW(phi(1.5, p), DomainError);
  EXPECT_THROW(phi(-0.1, p), DomainError);
  p.x = 0.1;
  EXPECT_DOUBLE_EQ(p.position_cap(), 1e6);
  p.x = -3.0;
  EXPECT_DOUBLE_EQ(p.position_cap(), 3e6);
}

TEST(Grid, UniformAndMerged) {
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g[2], 0.5);
  EXPECT_EQ(g[4], 1.0);
  const std::vector<double> extra{0.3, 0.5 + 1e-14, 2.0};
  const TimeGrid m = TimeGrid::merged(g, extra);
  EXPECT_EQ(m.size(), 6u);
  EXPECT_NE(m.find_node(0.3), m.size());
  EXPECT_TRUE(m.refines(g));
  EXPECT_EQ(TimeGrid::uniform(0.0, 0).size(), 1u);
  EXPECT_THROW(TimeGrid(std::vector<double>{0.0, 0.5, 0.5}), ShapeError);
  EXPECT_THROW(TimeGrid(std::vector<double>{0.1, 0.5}), ShapeError);
}

TEST(StrategyShape, TradesAndValidation) {
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  const std::vector<double> trades{-0.5, 0.2, -0.7};
  const Strategy s = Strategy::from_trades(1.0, trades);
  EXPECT_DOUBLE_EQ(s.values()[1], 0.7);
  EXPECT_EQ(s.values().back(), 0.0);
  const auto back = s.trades();
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(back[k], trades[k], 1e-15);
  EXPECT_NO_THROW(s.validate(g, 10.0));
  EXPECT_THROW(s.validate(TimeGrid::uniform(1.0, 3), 10.0), ShapeError);
  EXPECT_THROW(s.validate(g, 0.5), AdmissibilityError);
  EXPECT_THROW(Strategy::from_values(1.0, {0.5, 0.1}).validate(TimeGrid::uniform(1.0, 1), 10.0),
               AdmissibilityError);
}

TEST(Impact, DecaysExponentially) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  const Strategy s = Strategy::from_values(1.0, {0.0, 0.0, 0.0});
  const auto e = impact_path(s, g, p);
  EXPECT_DOUBLE_EQ(e[0].e_pre, 0.0);
  EXPECT_DOUBLE_EQ(e[0].e, -1.0);
  EXPECT_NEAR(e[1].e, -0.36787944117144233, 1e-15);
  EXPECT_NEAR(e[2].e_pre, -std::exp(-2.0), 1e-15);
}

TEST(Cost, FrozenBlockValues) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 1);
  const std::vector<double> s0(2, 0.0);
  const Strategy two_blocks = Strategy::from_values(1.0, {0.5, 0.0});
  EXPECT_NEAR(cost_bv(two_blocks, s0, g, p).total, 0.2838338208091532, 1e-15);
  ModelParams q = p;
  q.x = 0.0;
  const Strategy round_trip = Strategy::from_values(0.0, {1.0, 0.0});
  EXPECT_NEAR(cost_bv(round_trip, s0, g, q).total, 0.8646647167633873, 1e-15);
  const Strategy single = Strategy::from_values(1.0, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(cost_bv(single, s0, g, p).total, 0.5);
}

TEST(Cost, MatchesDoubleSumOnRandomGrids) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> times{0.0};
    for (int k = 0; k < 15; ++k) times.push_back(times.back() + 0.01 + u(rng));
    const TimeGrid g(times);
    ModelParams p;
    p.T = times.back();
    p.rho = 0.5 + 3.0 * u(rng);
    p.x = 2.0 * n01(rng);
    std::vector<double> xi(times.size()), s0(times.size());
    double sum = 0.0;
    for (std::size_t k = 0; k + 1 < xi.size(); ++k) {
      xi[k] = n01(rng);
      sum += xi[k];
    }
    xi.back() = -p.x - sum;
    for (auto& v : s0) v = 10.0 + n01(rng);
    const double ref = double_sum_cost(xi, s0, times, p.rho);
    const Strategy s = Strategy::from_trades(p.x, xi);
    EXPECT_NEAR(cost_discrete(xi, s0, g, p), ref, 1e-10 * (1.0 + std::abs(ref)));
    EXPECT_NEAR(cost_bv(s, s0, g, p).total, ref, 1e-10 * (1.0 + std::abs(ref)));
    EXPECT_NEAR(cost_semimartingale(s, s0, g, p).total, ref, 1e-10 * (1.0 + std::abs(ref)));
  }
}

TEST(Cost, BreakdownSumsToTotal) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 4);
  const std::vector<double> s0{1.0, 1.1, 0.9, 1.2, 1.0};
  const Strategy s = Strategy::from_values(1.0, {0.6, 0.5, 0.2, 0.1, 0.0});
  const CostBreakdown c = liquidation_cost(s, s0, g, p);
  EXPECT_NEAR(c.price_leg + c.impact_leg + c.qv_leg, c.total, 1e-14);
}

TEST(Cost, RejectsBrokenTradeSums) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 1);
  const std::vector<double> xi{-0.5, -0.4};
  const std::vector<double> s0{0.0, 0.0};
  EXPECT_THROW(cost_discrete(xi, s0, g, p), ConstraintViolation);
}

TEST(Cost, SemimartingaleStrategyRejectedByBvPricing) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  const std::vector<double> s0(3, 0.0);
  const Strategy s = Strategy::from_values(1.0, {0.5, 0.2, 0.0}, StrategyKind::semimartingale);
  EXPECT_THROW(cost_bv(s, s0, g, p), ParameterError);
  EXPECT_NO_THROW(liquidation_cost(s, s0, g, p));
}

TEST(Cost, CostRiskAddsRunningInventoryTerm) {
  ModelParams p;
  const TimeGrid g = TimeGrid::uniform(1.0, 2);
  const std::vector<double> s0{2.0, 2.0, 2.0};
  const Strategy s = Strategy::from_values(1.0, {0.5, 0.25, 0.0});
  EXPECT_DOUBLE_EQ(cost_risk_value(s, s0, 0.0, g, p), liquidation_cost(s, s0, g, p).total);
  EXPECT_GT(cost_risk_value(s, s0, 1.0, g, p), cost_risk_value(s, s0, 0.0, g, p));
}

}  // namespace
}  // namespace impactlab
