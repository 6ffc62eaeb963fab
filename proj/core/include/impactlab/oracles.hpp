#pragma once

// Reference values for expected liquidation costs: the closed-form optimum,
// the cost decomposition for an arbitrary (strategy, alpha) pair, and two
// brute-force discrete-time solvers (a KKT quadratic program for
// deterministic drift and backward induction over a finite drift chain).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "impactlab/drift.hpp"
#include "impactlab/model.hpp"
#include "impactlab/strategies.hpp"

namespace impactlab {

struct ClosedFormCost {
  double value = 0.0;
  double se = 0.0;     // nonzero only for the Monte Carlo fallback
  bool exact = true;   // false when part of the expectation was simulated
  bool unbounded = false;  // drift not absolutely continuous: value is -inf
};

struct ClosedFormOptions {
  std::size_t mc_paths = 4000;  // truncated Brownian fallback
  std::size_t mc_steps = 256;
  std::uint64_t seed = 1;
};

// Optimal expected cost
//   -x S0 + x^2 phi(0) + x Y_0 phi(0) - (rho / 4) E int (Y_s phi(s) - A'_s / rho)^2 ds.
// Non absolutely continuous drifts return value = -inf with unbounded = true.
ClosedFormCost expected_cost_closed_form(const DriftModel& model, const ModelParams& params,
                                         ClosedFormOptions options = {});

// Same formula for one deterministic drift realization.
double deterministic_optimal_cost(const DriftPath& drift, const ModelParams& params);

// Per-path pieces of the cost decomposition for a step strategy on the path
// grid. `rhs` excludes the martingale term int X dM, whose mean is zero.
struct DecompositionTerms {
  double constant = 0.0;       // -x S0 + phi(0) x^2 + phi(0) x Z^alpha_0
  double alpha_square = 0.0;   // -rho int (phi Y^alpha / 2 - alpha / (2 rho))^2
  double alpha_pairing = 0.0;  // int X alpha dt - int X_{t-} dA
  double penalty = 0.0;        // rho int {phi X + (1 - phi) E + phi Y^alpha / 2 - alpha / (2 rho)}^2
  double rhs = 0.0;
};

DecompositionTerms lemma2_decomposition(const Strategy& strategy, const AlphaProcess& alpha,
                                        const SamplePath& path, const ModelParams& params);

struct QpResult {
  std::vector<double> xi;
  double value = 0.0;
};

// min sum (S0 + A_k) xi_k + xi' G xi / 2 subject to sum xi = -x,
// G_ij = exp(-rho |t_i - t_j|).
QpResult qp_oracle(std::span<const double> a, const TimeGrid& grid, const ModelParams& params);

// Finite-state drift chain on a grid with N steps. At node k < N the chain is
// in one of states[k]; state s determines the drift increment
// A_{k+1} - A_k and the transition law to node k + 1. Node 0 has one state.
struct ChainState {
  double increment = 0.0;
  std::vector<std::pair<std::size_t, double>> next;  // (state at k + 1, probability)
};

struct DriftChain {
  std::vector<std::vector<ChainState>> states;  // size N
  double moment_gap = 0.0;  // max |Var(model A'_t) - Var(chain A'_t)| over nodes
};

DriftChain deterministic_chain(std::span<const double> a, const TimeGrid& grid);

// Recombining binomial lattice for a martingale A' with Var(A'_t) = variance_rate t,
// A'_0 = 0, and A_{k+1} - A_k = A'_k dt_k.
DriftChain binomial_martingale_chain(double variance_rate, const TimeGrid& grid);

// A'_t = N_t - intensity t with at most one jump per step (probability
// intensity dt), A_{k+1} - A_k = A'_k dt_k.
DriftChain poisson_chain(double intensity, const TimeGrid& grid);

// V(x, e) = a x^2 + b x e + c e^2 + d x + f e + g.
struct QuadraticValue {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0, f = 0.0, g = 0.0;
  double operator()(double x, double e) const {
    return a * x * x + b * x * e + c * e * e + d * x + f * e + g;
  }
};

// Optimal trade at node k, state s: xi = -(px x + pe e + p1).
struct DpPolicy {
  double px = 0.0, pe = 0.0, p1 = 0.0;
};

struct DpResult {
  double value = 0.0;  // optimal expected discrete cost from (x, E = 0, root)
  std::vector<std::vector<QuadraticValue>> value_functions;  // before trading, per node/state
  std::vector<std::vector<DpPolicy>> policy;
};

// Backward induction. The trade at node k is chosen after observing the
// chain state at k. Throws std::logic_error if a stage quadratic is not
// strictly convex in the trade.
DpResult dp_oracle(const DriftChain& chain, const TimeGrid& grid, const ModelParams& params);

// -e^2 / 2 + phi(t) (x - e)^2 + phi(t) (x - e) y.
double value_guess_eval(double t, double x_shares, double e_impact, double y_value,
                        const ModelParams& params);

// P_k = C_k - S0_k X_k + V(t_k, X_k, E_k, Y^alpha_k) + rho int_0^{t_k} (phi Y^alpha / 2 - alpha / (2 rho))^2
// for a step strategy, with C_k the cost of the trades at nodes 0..k, and the
// cumulative penalty of the decomposition. For alpha = A' on an absolutely
// continuous drift, E[P_k - penalty_k] does not depend on k, so P has
// constant mean for the optimal strategy and increases otherwise.
struct VerificationProcess {
  std::vector<double> p;
  std::vector<double> penalty;
};

VerificationProcess verification_process(const Strategy& strategy, const AlphaProcess& alpha,
                                         const SamplePath& path, const ModelParams& params);

struct OracleRow {
  std::size_t n = 0;
  std::string model;
  double value = 0.0;
  double reference = 0.0;
};

// CSV with header N,model,value,reference,gap.
void write_oracle_csv(std::ostream& out, std::span<const OracleRow> rows);

}  // namespace impactlab
