#include "impactlab/drift.hpp"

#include <algorithm>
#include <cmath>

#include "impactlab/errors.hpp"
#include "impactlab/rng.hpp"

namespace impactlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double truncation_cap(const TruncatedBrownianDerivative& m, double T) {
  return m.cap > 0.0 ? m.cap : 5.0 * m.sigma * std::sqrt(T);
}

}  // namespace

std::string model_id(const DriftModel& model) {
  return std::visit(overloaded{
                        [](const ZeroDrift&) { return std::string("zero"); },
                        [](const LinearDrift&) { return std::string("linear"); },
                        [](const TabulatedDerivative&) { return std::string("tabulated"); },
                        [](const CompensatedPoissonDerivative&) {
                          return std::string("compensated_poisson");
                        },
                        [](const TruncatedBrownianDerivative&) {
                          return std::string("truncated_brownian");
                        },
                        [](const JumpDrift&) { return std::string("jump"); },
                        [](const PredatorDrift&) { return std::string("predator"); },
                    },
                    model);
}

void validate(const DriftModel& model, const ModelParams& params) {
  std::visit(overloaded{
                 [](const ZeroDrift&) {},
                 [](const LinearDrift& m) {
                   if (!std::isfinite(m.slope)) throw ParameterError("linear: slope not finite");
                 },
                 [&](const TabulatedDerivative& m) {
                   if (m.times.size() < 2 || m.times.size() != m.values.size()) {
                     throw ParameterError("tabulated: need matching times/values, >= 2 points");
                   }
                   if (m.times.front() != 0.0 || m.times.back() < params.T) {
                     throw ParameterError("tabulated: table must cover [0, T]");
                   }
                   for (std::size_t i = 1; i < m.times.size(); ++i) {
                     if (!(m.times[i] > m.times[i - 1])) {
                       throw ParameterError("tabulated: times must increase");
                     }
                   }
                 },
                 [](const CompensatedPoissonDerivative& m) {
                   if (!(m.intensity > 0.0)) throw ParameterError("poisson: intensity must be > 0");
                 },
                 [](const TruncatedBrownianDerivative& m) {
                   if (!(m.sigma > 0.0)) throw ParameterError("truncated brownian: sigma must be > 0");
                   if (m.cap < 0.0) throw ParameterError("truncated brownian: cap must be > 0");
                 },
                 [](const JumpDrift& m) {
                   if (!(m.time > 0.0) || !std::isfinite(m.size)) {
                     throw ParameterError("jump: time must be > 0 and size finite");
                   }
                 },
                 [&](const PredatorDrift& m) {
                   if (!(m.seller_horizon > 0.0) || m.seller_horizon > params.T) {
                     throw ParameterError("predator: seller horizon must lie in (0, T]");
                   }
                 },
             },
             model);
}

DriftCapabilities capabilities(const DriftModel& model, const ModelParams& params) {
  return std::visit(
      overloaded{
          [](const ZeroDrift&) {
            DriftCapabilities c;
            c.derivative_martingale = true;
            return c;
          },
          [](const LinearDrift&) {
            DriftCapabilities c;
            c.derivative_martingale = true;
            return c;
          },
          [](const TabulatedDerivative&) { return DriftCapabilities{}; },
          [](const CompensatedPoissonDerivative&) {
            DriftCapabilities c;
            c.derivative_martingale = true;
            c.derivative_bounded = false;
            c.deterministic = false;
            return c;
          },
          [](const TruncatedBrownianDerivative&) {
            DriftCapabilities c;
            c.derivative_martingale = true;
            c.deterministic = false;
            return c;
          },
          [&](const JumpDrift& m) {
            DriftCapabilities c;
            c.absolutely_continuous = m.time >= params.T;
            return c;
          },
          [&](const PredatorDrift& m) {
            DriftCapabilities c;
            c.absolutely_continuous = m.seller_horizon >= params.T;
            return c;
          },
      },
      model);
}

ContinuityReport is_absolutely_continuous(const DriftModel& model, const ModelParams& params) {
  const DriftCapabilities c = capabilities(model, params);
  ContinuityReport r;
  r.absolutely_continuous = c.absolutely_continuous;
  if (c.absolutely_continuous) r.square_integrable = c.square_integrable;
  return r;
}

// ---------------------------------------------------------------------------

double DriftPath::y(double t) const {
  const DriftState s = at(t);
  return z(t) + rho_ * s.int_a + (1.0 + rho_ * (T_ - t)) * s.a;
}

double DriftPath::y_left(double t) const {
  const DriftState s = left(t);
  return z_left(t) + rho_ * s.int_a + (1.0 + rho_ * (T_ - t)) * s.a;
}

PiecewiseDriftPath::PiecewiseDriftPath(std::vector<Knot> knots, ZMode mode,
                                       std::vector<double> breakpoints, double rho, double T)
    : DriftPath(rho, T), mode_(mode), breakpoints_(std::move(breakpoints)) {
  if (knots.empty() || knots.front().time != 0.0) {
    throw ParameterError("PiecewiseDriftPath: first knot must be at 0");
  }
  if (knots.front().a_jump != 0.0) {
    throw ParameterError("PiecewiseDriftPath: A_0 must be 0");
  }
  segments_.reserve(knots.size());
  double a = 0.0;
  double int_a = 0.0;
  for (std::size_t j = 0; j < knots.size(); ++j) {
    if (j > 0) {
      const Segment& p = segments_.back();
      const double u = knots[j].time - p.start;
      if (!(u > 0.0)) throw ParameterError("PiecewiseDriftPath: knots must increase");
      a = p.a + p.a_prime * u + 0.5 * p.slope * u * u;
      int_a = p.int_a + p.a * u + 0.5 * p.a_prime * u * u + p.slope * u * u * u / 6.0;
      a += knots[j].a_jump;
    }
    segments_.push_back({knots[j].time, knots[j].a_prime, knots[j].slope, a, int_a});
  }
  if (mode_ == ZMode::deterministic) {
    const DriftState end = at(T_);
    z_const_ = -(end.a + rho_ * end.int_a);
  }
}

DriftState PiecewiseDriftPath::eval(std::size_t seg, double t) const {
  const Segment& s = segments_[seg];
  const double u = t - s.start;
  DriftState out;
  out.a_prime = s.a_prime + s.slope * u;
  out.a = s.a + s.a_prime * u + 0.5 * s.slope * u * u;
  out.int_a = s.int_a + s.a * u + 0.5 * s.a_prime * u * u + s.slope * u * u * u / 6.0;
  return out;
}

DriftState PiecewiseDriftPath::at(double t) const {
  auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                             [](double v, const Segment& s) { return v < s.start; });
  const std::size_t seg = it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
  return eval(seg, t);
}

DriftState PiecewiseDriftPath::left(double t) const {
  auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                             [](const Segment& s, double v) { return s.start < v; });
  const std::size_t seg = it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
  return eval(seg, t);
}

double PiecewiseDriftPath::z_from(const DriftState& s, double t) const {
  if (mode_ == ZMode::deterministic) return z_const_;
  const double tau = T_ - t;
  return -((1.0 + rho_ * tau) * s.a + 0.5 * (2.0 + rho_ * tau) * tau * s.a_prime +
           rho_ * s.int_a);
}

double PiecewiseDriftPath::z(double t) const { return z_from(at(t), t); }
double PiecewiseDriftPath::z_left(double t) const { return z_from(left(t), t); }

SellerImpactDriftPath::SellerImpactDriftPath(double seller_position, double seller_horizon,
                                             double rho, double T)
    : DriftPath(rho, T),
      block_(-seller_position / (2.0 + rho * seller_horizon)),
      horizon_(seller_horizon),
      breakpoints_{seller_horizon} {
  const DriftState end = at(T_);
  z_const_ = -(end.a + rho_ * end.int_a);
}

DriftState SellerImpactDriftPath::at(double t) const {
  if (t < horizon_) return {};
  const double u = t - horizon_;
  const double decay = std::exp(-rho_ * u);
  DriftState s;
  s.a = 2.0 * block_ * decay - block_;
  s.a_prime = -2.0 * rho_ * block_ * decay;
  s.int_a = 2.0 * block_ * (-std::expm1(-rho_ * u)) / rho_ - block_ * u;
  return s;
}

DriftState SellerImpactDriftPath::left(double t) const {
  if (t <= horizon_) return {};
  return at(t);
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

using Knot = PiecewiseDriftPath::Knot;
using ZMode = PiecewiseDriftPath::ZMode;

std::shared_ptr<const DriftPath> realize(const DriftModel& model, const TimeGrid& grid,
                                         const ModelParams& params, std::mt19937_64& rng) {
  const double rho = params.rho;
  const double T = params.T;
  return std::visit(
      overloaded{
          [&](const ZeroDrift&) -> std::shared_ptr<const DriftPath> {
            return std::make_shared<PiecewiseDriftPath>(std::vector<Knot>{{}}, ZMode::deterministic,
                                                        std::vector<double>{}, rho, T);
          },
          [&](const LinearDrift& m) -> std::shared_ptr<const DriftPath> {
            return std::make_shared<PiecewiseDriftPath>(std::vector<Knot>{{0.0, m.slope, 0.0, 0.0}},
                                                        ZMode::deterministic,
                                                        std::vector<double>{}, rho, T);
          },
          [&](const TabulatedDerivative& m) -> std::shared_ptr<const DriftPath> {
            std::vector<Knot> knots;
            std::vector<double> bps;
            for (std::size_t i = 0; i < m.times.size(); ++i) {
              double slope = 0.0;
              if (i + 1 < m.times.size()) {
                slope = (m.values[i + 1] - m.values[i]) / (m.times[i + 1] - m.times[i]);
              }
              knots.push_back({m.times[i], m.values[i], slope, 0.0});
              if (i > 0 && m.times[i] < T) bps.push_back(m.times[i]);
            }
            return std::make_shared<PiecewiseDriftPath>(std::move(knots), ZMode::deterministic,
                                                        std::move(bps), rho, T);
          },
          [&](const CompensatedPoissonDerivative& m) -> std::shared_ptr<const DriftPath> {
            std::exponential_distribution<double> gap(m.intensity);
            std::vector<Knot> knots{{0.0, 0.0, -m.intensity, 0.0}};
            std::vector<double> events;
            double t = gap(rng);
            while (t < T) {
              events.push_back(t);
              const double count = static_cast<double>(events.size());
              knots.push_back({t, count - m.intensity * t, -m.intensity, 0.0});
              t += gap(rng);
            }
            return std::make_shared<PiecewiseDriftPath>(std::move(knots), ZMode::martingale,
                                                        std::move(events), rho, T);
          },
          [&](const TruncatedBrownianDerivative& m) -> std::shared_ptr<const DriftPath> {
            std::normal_distribution<double> normal;
            const double cap = truncation_cap(m, T);
            const auto times = grid.times();
            std::vector<double> values(times.size(), 0.0);
            bool stopped = false;
            for (std::size_t k = 1; k < times.size(); ++k) {
              if (stopped) {
                values[k] = values[k - 1];
                continue;
              }
              double v = values[k - 1] + m.sigma * std::sqrt(times[k] - times[k - 1]) * normal(rng);
              if (std::abs(v) >= cap) {
                v = std::copysign(cap, v);
                stopped = true;
              }
              values[k] = v;
            }
            std::vector<Knot> knots;
            knots.reserve(times.size());
            for (std::size_t k = 0; k < times.size(); ++k) {
              double slope = 0.0;
              if (k + 1 < times.size()) {
                slope = (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
              }
              knots.push_back({times[k], values[k], slope, 0.0});
            }
            std::vector<double> bps(times.begin() + 1, times.end());
            return std::make_shared<PiecewiseDriftPath>(std::move(knots), ZMode::martingale,
                                                        std::move(bps), rho, T);
          },
          [&](const JumpDrift& m) -> std::shared_ptr<const DriftPath> {
            std::vector<Knot> knots{{}};
            std::vector<double> bps;
            knots.push_back({m.time, 0.0, 0.0, m.size});
            if (m.time <= T) bps.push_back(m.time);
            return std::make_shared<PiecewiseDriftPath>(std::move(knots), ZMode::deterministic,
                                                        std::move(bps), rho, T);
          },
          [&](const PredatorDrift& m) -> std::shared_ptr<const DriftPath> {
            return std::make_shared<SellerImpactDriftPath>(m.seller_position, m.seller_horizon,
                                                           rho, T);
          },
      },
      model);
}

}  // namespace

std::shared_ptr<const DriftPath> sample_drift(const DriftModel& model, const TimeGrid& grid,
                                              const ModelParams& params, std::uint64_t seed,
                                              std::uint64_t path_index) {
  params.validate();
  validate(model, params);
  auto rng = make_stream(seed, path_index, Stream::drift);
  return realize(model, grid, params, rng);
}

std::vector<double> SamplePath::unaffected() const {
  std::vector<double> s(grid.size());
  for (std::size_t k = 0; k < s.size(); ++k) s[k] = initial_price + m[k] + a[k];
  return s;
}

SamplePath sample_path(const DriftModel& model, const MartingaleSpec& martingale,
                       const TimeGrid& grid, const ModelParams& params, std::uint64_t seed,
                       std::uint64_t path_index, SampleOptions options) {
  if (!(martingale.sigma >= 0.0)) throw ParameterError("martingale sigma must be >= 0");
  if (martingale.kind == MartingaleKind::geometric && !(params.s0 > 0.0)) {
    throw ParameterError("geometric martingale needs s0 > 0");
  }
  auto drift = sample_drift(model, grid, params, seed, path_index);

  SamplePath p{options.augment_events ? TimeGrid::merged(grid, drift->breakpoints()) : grid,
               {}, {}, {}, {}, {}, {}, 0.0, 0, 0, {}};
  const auto times = p.grid.times();
  const std::size_t n = times.size();

  p.m.assign(n, 0.0);
  if (martingale.sigma > 0.0) {
    auto rng = make_stream(seed, path_index, Stream::martingale);
    std::normal_distribution<double> normal;
    double w = 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      w += std::sqrt(times[k] - times[k - 1]) * normal(rng);
      if (martingale.kind == MartingaleKind::brownian) {
        p.m[k] = martingale.sigma * w;
      } else {
        const double s = martingale.sigma;
        p.m[k] = params.s0 * std::expm1(s * w - 0.5 * s * s * times[k]);
      }
    }
  }

  const DriftCapabilities caps = capabilities(model, params);
  p.a.resize(n);
  p.int_a.resize(n);
  std::vector<double> a_prime(n);
  p.z.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const DriftState s = drift->at(times[k]);
    p.a[k] = s.a;
    p.int_a[k] = s.int_a;
    a_prime[k] = s.a_prime;
    p.z[k] = drift->z(times[k]);
  }
  if (caps.absolutely_continuous) p.a_prime = std::move(a_prime);
  p.initial_price = params.s0 + drift->price_offset();
  p.seed = seed;
  p.path_index = path_index;
  p.drift = std::move(drift);
  p.y = y_process(p, params);
  return p;
}

std::vector<double> z_process(const DriftModel& model, const SamplePath& path,
                              const ModelParams& params) {
  if (!capabilities(model, params).analytic_z || !path.drift) {
    throw UnsupportedDrift("z_process: no closed-form conditional expectation for model '" +
                           model_id(model) + "'");
  }
  std::vector<double> z(path.grid.size());
  for (std::size_t k = 0; k < z.size(); ++k) z[k] = path.drift->z(path.grid[k]);
  return z;
}

std::vector<double> y_process(const SamplePath& path, const ModelParams& params) {
  const std::size_t n = path.grid.size();
  if (path.z.size() != n || path.a.size() != n || path.int_a.size() != n) {
    throw ShapeError("y_process: path is missing Z or A samples");
  }
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = path.z[k] + params.rho * path.int_a[k] +
           (1.0 + params.rho * (params.T - path.grid[k])) * path.a[k];
  }
  return y;
}

}  // namespace impactlab
