#pragma once

// Drift models for the unaffected price S0 = S0_0 + M + A, their sampled
// realizations, and the auxiliary processes
//   Z_t = -E[A_T + rho int_0^T A ds | F_t],
//   Y_t = Z_t + rho int_0^t A ds + (1 + rho (T - t)) A_t.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "impactlab/model.hpp"

namespace impactlab {

struct ZeroDrift {};

// A_t = slope * t.
struct LinearDrift {
  double slope = 0.0;
};

// Deterministic A' given on a table and linearly interpolated; the table must
// start at 0 and reach T.
struct TabulatedDerivative {
  std::vector<double> times;
  std::vector<double> values;
};

// A'_t = N_t - intensity * t with N a Poisson process.
struct CompensatedPoissonDerivative {
  double intensity = 20.0;
};

// A' a Brownian motion with volatility `sigma`, stopped when |A'| reaches
// `cap` (cap <= 0 selects 5 sigma sqrt(T)).
struct TruncatedBrownianDerivative {
  double sigma = 1.0;
  double cap = 0.0;
};

// A_t = size * 1{t >= time}; not absolutely continuous when time < T.
struct JumpDrift {
  double time = 0.5;
  double size = 1.0;
};

// Drift perceived by a second trader when a seller liquidates
// `seller_position` shares over [0, seller_horizon] with the OW strategy.
struct PredatorDrift {
  double seller_position = 1.0;
  double seller_horizon = 0.5;
};

using DriftModel = std::variant<ZeroDrift, LinearDrift, TabulatedDerivative,
                                CompensatedPoissonDerivative, TruncatedBrownianDerivative,
                                JumpDrift, PredatorDrift>;

std::string model_id(const DriftModel& model);

// Throws ParameterError for non-positive intensity, sigma, or cap, malformed
// tables and seller horizons outside (0, T].
void validate(const DriftModel& model, const ModelParams& params);

struct DriftCapabilities {
  bool absolutely_continuous = true;    // A = int A' on [0, T)
  bool square_integrable = true;        // E int (A')^2 < infinity
  bool derivative_semimartingale = true;
  bool derivative_martingale = false;
  bool derivative_bounded = true;
  bool deterministic = true;
  bool analytic_z = true;
};

DriftCapabilities capabilities(const DriftModel& model, const ModelParams& params);

struct ContinuityReport {
  bool absolutely_continuous = true;
  std::optional<bool> square_integrable;  // empty when not absolutely continuous
};

ContinuityReport is_absolutely_continuous(const DriftModel& model, const ModelParams& params);

struct DriftState {
  double a_prime = 0.0;  // A'_t (0 where A has no derivative)
  double a = 0.0;        // A_t
  double int_a = 0.0;    // int_0^t A_s ds
};

// One realization of the drift in continuous time. Immutable after
// construction; safe to share between threads.
class DriftPath {
 public:
  virtual ~DriftPath() = default;

  virtual DriftState at(double t) const = 0;    // right-continuous
  virtual DriftState left(double t) const = 0;  // left limit
  virtual double z(double t) const = 0;
  virtual double z_left(double t) const = 0;

  // Times in (0, T] where A, A' or Z may jump or kink. Grids that should
  // represent the path exactly contain these as nodes.
  virtual const std::vector<double>& breakpoints() const = 0;

  // Constant added to the initial price (e.g. the seller's initial impact).
  virtual double price_offset() const { return 0.0; }

  double y(double t) const;
  double y_left(double t) const;

 protected:
  DriftPath(double rho, double T) : rho_(rho), T_(T) {}
  double rho_;
  double T_;
};

// Piecewise-linear A' with optional jumps of A' and of A at the knots.
// Z is either the constant -(A_T + rho int_0^T A) (deterministic drift) or
// the closed form for a martingale A':
//   -Z_t = (1 + rho (T - t)) A_t + (2 + rho (T - t)) (T - t) A'_t / 2 + rho int_0^t A.
class PiecewiseDriftPath final : public DriftPath {
 public:
  enum class ZMode { deterministic, martingale };

  struct Knot {
    double time = 0.0;
    double a_prime = 0.0;  // A'_{time} (right value)
    double slope = 0.0;    // dA'/dt on [time, next knot)
    double a_jump = 0.0;   // A_{time} - A_{time-}
  };

  PiecewiseDriftPath(std::vector<Knot> knots, ZMode mode, std::vector<double> breakpoints,
                     double rho, double T);

  DriftState at(double t) const override;
  DriftState left(double t) const override;
  double z(double t) const override;
  double z_left(double t) const override;
  const std::vector<double>& breakpoints() const override { return breakpoints_; }

 private:
  struct Segment {
    double start, a_prime, slope, a, int_a;
  };
  DriftState eval(std::size_t seg, double t) const;
  double z_from(const DriftState& s, double t) const;

  std::vector<Segment> segments_;
  ZMode mode_;
  std::vector<double> breakpoints_;
  double z_const_ = 0.0;
};

// Impact of a seller's OW liquidation seen as drift, shifted so that A_0 = 0:
// A = 0 on [0, T_s), A_t = 2 j e^{-rho (t - T_s)} - j afterwards, with
// j = -x_s / (2 + rho T_s) carried by price_offset().
class SellerImpactDriftPath final : public DriftPath {
 public:
  SellerImpactDriftPath(double seller_position, double seller_horizon, double rho, double T);

  DriftState at(double t) const override;
  DriftState left(double t) const override;
  double z(double) const override { return z_const_; }
  double z_left(double) const override { return z_const_; }
  const std::vector<double>& breakpoints() const override { return breakpoints_; }
  double price_offset() const override { return block_; }

 private:
  double block_;
  double horizon_;
  std::vector<double> breakpoints_;
  double z_const_;
};

enum class MartingaleKind { brownian, geometric };

// M is sigma * W (brownian) or S0_0 (exp(sigma W_t - sigma^2 t / 2) - 1).
struct MartingaleSpec {
  MartingaleKind kind = MartingaleKind::brownian;
  double sigma = 0.2;
};

struct SampleOptions {
  bool augment_events = true;  // add drift breakpoints to the grid
};

struct SamplePath {
  TimeGrid grid;
  std::vector<double> m;
  std::vector<double> a;
  std::vector<double> int_a;
  std::optional<std::vector<double>> a_prime;
  std::vector<double> z;
  std::vector<double> y;
  double initial_price = 0.0;  // S0_0 including any drift offset
  std::uint64_t seed = 0;
  std::uint64_t path_index = 0;
  std::shared_ptr<const DriftPath> drift;

  // S0_{t_k} = initial_price + M_{t_k} + A_{t_k}.
  std::vector<double> unaffected() const;
};

// Deterministic in (seed, path_index). The martingale and the drift use
// independent random streams.
SamplePath sample_path(const DriftModel& model, const MartingaleSpec& martingale,
                       const TimeGrid& grid, const ModelParams& params, std::uint64_t seed,
                       std::uint64_t path_index = 0, SampleOptions options = {});

// Draws only the drift realization (no grid sampling).
std::shared_ptr<const DriftPath> sample_drift(const DriftModel& model, const TimeGrid& grid,
                                              const ModelParams& params, std::uint64_t seed,
                                              std::uint64_t path_index = 0);

// Z sampled on the path grid. Throws UnsupportedDrift when the model has no
// closed-form conditional expectation.
std::vector<double> z_process(const DriftModel& model, const SamplePath& path,
                              const ModelParams& params);

// Y_t = Z_t + rho int_0^t A + (1 + rho (T - t)) A_t nodewise.
std::vector<double> y_process(const SamplePath& path, const ModelParams& params);

}  // namespace impactlab
