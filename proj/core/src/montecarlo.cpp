#include "impactlab/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "impactlab/errors.hpp"
#include "impactlab/oracles.hpp"

namespace impactlab {

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("IMPACTLAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Estimate estimate_from(std::span<const double> values) {
  Estimate e;
  const std::size_t n = values.size();
  if (n == 0) return e;
  e.mean = pairwise_sum(values) / static_cast<double>(n);
  if (n < 2) return e;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = (values[i] - e.mean) * (values[i] - e.mean);
  const double var = pairwise_sum(sq) / static_cast<double>(n - 1);
  e.se = std::sqrt(var / static_cast<double>(n));
  return e;
}

namespace {

// Column-major result table: column c of path i at data[c * n + i].
std::vector<double> run_paths(const SimulationSetup& setup, const McConfig& config,
                              std::size_t columns, const PathFunctional& fn) {
  const std::size_t n = config.n_paths;
  std::vector<double> data(n * columns, 0.0);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::size_t>(resolve_threads(config.threads), std::max<std::size_t>(n, 1)));

  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::size_t failed_index = n;
  std::exception_ptr failure;
  std::atomic<bool> stop{false};

  auto work = [&] {
    std::vector<double> row(columns);
    for (;;) {
      if (stop.load(std::memory_order_relaxed)) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        const SamplePath path =
            sample_path(setup.model, setup.martingale, setup.grid, setup.params, config.seed, i,
                        setup.options);
        std::fill(row.begin(), row.end(), 0.0);
        fn(path, row);
        for (std::size_t c = 0; c < columns; ++c) data[c * n + i] = row[c];
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
        stop = true;
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  if (failure) {
    const std::string where = " (path " + std::to_string(failed_index) + ", seed " +
                              std::to_string(config.seed) + ")";
    try {
      std::rethrow_exception(failure);
    } catch (const AdmissibilityError& e) {
      throw AdmissibilityError(e.what() + where);
    } catch (const ModelMismatch&) {
      throw;
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error(e.what() + where);
    }
  }
  return data;
}

void require_paths(const McConfig& config) {
  if (config.n_paths < 2) throw ParameterError("Monte Carlo needs at least 2 paths");
}

}  // namespace

std::vector<Estimate> estimate_many(const SimulationSetup& setup, const McConfig& config,
                                    std::size_t columns, const PathFunctional& fn) {
  require_paths(config);
  const auto data = run_paths(setup, config, columns, fn);
  const std::size_t n = config.n_paths;
  std::vector<Estimate> out(columns);
  for (std::size_t c = 0; c < columns; ++c) {
    out[c] = estimate_from(std::span<const double>(data).subspan(c * n, n));
  }
  return out;
}

namespace {

void write_costs(const Strategy& s, const SamplePath& path, const ModelParams& params,
                 std::span<double> out) {
  s.validate(path.grid, params.position_cap());
  const CostBreakdown c = liquidation_cost(s, path.unaffected(), path.grid, params);
  out[0] = c.total;
  out[1] = c.price_leg;
  out[2] = c.impact_leg;
  out[3] = c.qv_leg;
}

EstimateReport report_from(std::span<const Estimate> e, std::size_t offset,
                           const McConfig& config) {
  EstimateReport r;
  r.mean = e[offset].mean;
  r.se = e[offset].se;
  r.n_paths = config.n_paths;
  r.seed = config.seed;
  r.breakdown.total = e[offset].mean;
  r.breakdown.price_leg = e[offset + 1].mean;
  r.breakdown.impact_leg = e[offset + 2].mean;
  r.breakdown.qv_leg = e[offset + 3].mean;
  return r;
}

}  // namespace

EstimateReport estimate_expected_cost(const StrategyBuilder& builder, const SimulationSetup& setup,
                                      const McConfig& config) {
  const auto e = estimate_many(setup, config, 4, [&](const SamplePath& path, std::span<double> out) {
    write_costs(builder(path), path, setup.params, out);
  });
  return report_from(e, 0, config);
}

PairedReport compare_strategies(const StrategyBuilder& first, const StrategyBuilder& second,
                                const SimulationSetup& setup, const McConfig& config) {
  const auto e = estimate_many(setup, config, 9, [&](const SamplePath& path, std::span<double> out) {
    write_costs(first(path), path, setup.params, out.subspan(0, 4));
    write_costs(second(path), path, setup.params, out.subspan(4, 4));
    out[8] = out[4] - out[0];
  });
  PairedReport r;
  r.first = report_from(e, 0, config);
  r.second = report_from(e, 4, config);
  r.difference = e[8];
  return r;
}

// ---------------------------------------------------------------------------

std::vector<ConvergenceRow> lemma1_convergence_study(const StrategyBuilder& builder,
                                                     const SimulationSetup& setup,
                                                     std::span<const std::size_t> n_list,
                                                     const McConfig& config) {
  const std::size_t n_ref = setup.grid.n_steps();
  for (std::size_t n : n_list) {
    if (n == 0 || n >= n_ref || n_ref % n != 0) {
      throw ParameterError("lemma1_convergence_study: every N must divide the reference size " +
                           std::to_string(n_ref) + " and be smaller");
    }
  }
  SimulationSetup fine = setup;
  fine.options.augment_events = false;
  const ModelParams& params = setup.params;

  std::vector<TimeGrid> coarse;
  for (std::size_t n : n_list) {
    std::vector<double> t(n + 1);
    for (std::size_t j = 0; j <= n; ++j) t[j] = setup.grid[j * (n_ref / n)];
    coarse.emplace_back(std::move(t));
  }

  const auto e = estimate_many(fine, config, n_list.size(), [&](const SamplePath& path,
                                                                std::span<double> out) {
    const Strategy s = builder(path);
    s.validate(path.grid, params.position_cap());
    const auto s0 = path.unaffected();
    const auto xi = s.trades();
    const double reference = cost_discrete(xi, s0, path.grid, params);
    for (std::size_t i = 0; i < n_list.size(); ++i) {
      const std::size_t n = n_list[i];
      const std::size_t step = n_ref / n;
      std::vector<double> xi_c(n + 1), s0_c(n + 1);
      double prev = s.x_pre();
      for (std::size_t j = 0; j <= n; ++j) {
        const double v = s.values()[j * step];
        xi_c[j] = v - prev;
        prev = v;
        s0_c[j] = s0[j * step];
      }
      out[i] = std::abs(cost_discrete(xi_c, s0_c, coarse[i], params) - reference);
    }
  });

  std::vector<ConvergenceRow> rows;
  for (std::size_t i = 0; i < n_list.size(); ++i) rows.push_back({n_list[i], e[i].mean, e[i].se});
  return rows;
}

// ---------------------------------------------------------------------------

Strategy perturb(const Strategy& base, const Direction& h, double eps, const TimeGrid& grid) {
  if (base.size() != grid.size()) throw ShapeError("perturb: strategy and grid lengths differ");
  std::vector<double> values(base.values().begin(), base.values().end());
  std::vector<double> jumps(base.jumps().begin(), base.jumps().end());
  for (std::size_t k = 0; k + 1 < values.size(); ++k) values[k] += eps * h(grid[k]);
  jumps.front() += eps * h(grid[0]);
  jumps.back() -= eps * h(grid[grid.size() - 1]);
  return Strategy(base.x_pre(), std::move(values), std::move(jumps), base.kind());
}

std::vector<PerturbationRow> perturbation_test(const StrategyBuilder& base,
                                               std::span<const Direction> directions,
                                               std::span<const double> eps_list,
                                               const SimulationSetup& setup,
                                               const McConfig& config) {
  const std::size_t cols = directions.size() * eps_list.size();
  const ModelParams& params = setup.params;
  const auto e = estimate_many(setup, config, cols, [&](const SamplePath& path,
                                                        std::span<double> out) {
    const Strategy x = base(path);
    const auto s0 = path.unaffected();
    x.validate(path.grid, params.position_cap());
    const double c0 = liquidation_cost(x, s0, path.grid, params).total;
    for (std::size_t d = 0; d < directions.size(); ++d) {
      for (std::size_t j = 0; j < eps_list.size(); ++j) {
        const Strategy y = perturb(x, directions[d], eps_list[j], path.grid);
        y.validate(path.grid, params.position_cap());
        out[d * eps_list.size() + j] = liquidation_cost(y, s0, path.grid, params).total - c0;
      }
    }
  });
  std::vector<PerturbationRow> rows;
  for (std::size_t d = 0; d < directions.size(); ++d) {
    for (std::size_t j = 0; j < eps_list.size(); ++j) {
      rows.push_back({d, eps_list[j], e[d * eps_list.size() + j]});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

DriftJump drift_jump(const DriftModel& model, const ModelParams& params) {
  validate(model, params);
  if (capabilities(model, params).absolutely_continuous) {
    throw ModelMismatch("drift '" + model_id(model) +
                        "' is absolutely continuous: expected costs are bounded, no exploit exists");
  }
  if (const auto* j = std::get_if<JumpDrift>(&model)) return {j->time, j->size};
  if (const auto* p = std::get_if<PredatorDrift>(&model)) {
    return {p->seller_horizon, -p->seller_position / (2.0 + params.rho * p->seller_horizon)};
  }
  throw ModelMismatch("no jump description for drift '" + model_id(model) + "'");
}

double alpha_strategy_bound(double alpha_l2, const ModelParams& params) {
  const double rho = params.rho;
  const double T = params.T;
  const double root = std::sqrt(T * alpha_l2);
  return (std::abs(params.x) * (1.0 + rho * T) + 0.5 * (1.0 + rho * T) * (1.0 + rho * T) * root) /
             (2.0 + rho * T) +
         0.5 * rho * T * root + (1.0 + rho * T) * root;
}

std::vector<ExploitRow> exploit_run(const ExploitSpec& spec, const SimulationSetup& setup,
                                    const McConfig& config) {
  const ModelParams& params = setup.params;
  params.validate();
  const DriftJump jump = drift_jump(spec.target, params);
  if (jump.size == 0.0) throw ModelMismatch("exploit_run: drift jump has size 0");
  if (setup.grid.n_steps() == 0) throw ParameterError("exploit_run: empty grid");
  const double dt = setup.grid[1] - setup.grid[0];

  std::vector<ExploitRow> rows;
  for (double k : spec.k_values) {
    if (k < 0.0) throw ParameterError("exploit_run: K must be >= 0");
    ExploitRow row;
    row.k = k;
    AlphaProcess alpha(params);
    std::vector<double> extra{jump.time};
    if (k > 0.0) {
      const double ratio = jump.size / k;
      row.window = std::min(ratio * ratio, 4.0 * dt);
      row.window = std::min(row.window, jump.time);
      const double height = k / jump.size;
      const double start = jump.time - row.window;
      alpha.add_window(start, jump.time, height);
      row.alpha_l2 = height * height * row.window;
      for (int i = 0; i < 4; ++i) extra.push_back(start + row.window * i / 4.0);
    }

    SimulationSetup local = setup;
    local.model = spec.target;
    local.grid = TimeGrid::merged(setup.grid, extra);

    const Strategy x = alpha_strategy(alpha, params, local.grid);
    row.xi_bound = alpha_strategy_bound(row.alpha_l2, params);
    for (std::size_t n = 0; n < local.grid.size(); ++n) {
      const double t = local.grid[n];
      const double right = std::abs(x.values()[n] - alpha.value(t) / (2.0 * params.rho));
      const double left =
          std::abs(x.values()[n] - x.jumps()[n] - alpha.left(t) / (2.0 * params.rho));
      row.xi_sup = std::max({row.xi_sup, right, n > 0 ? left : 0.0});
    }
    if (row.xi_sup > spec.bound_multiple * row.xi_bound) {
      throw std::logic_error("exploit_run: sup |X - alpha / (2 rho)| = " +
                             std::to_string(row.xi_sup) + " exceeds the bound " +
                             std::to_string(spec.bound_multiple * row.xi_bound));
    }

    const auto e = estimate_many(local, config, 1, [&](const SamplePath& path, std::span<double> out) {
      if (path.grid.size() != local.grid.size()) {
        throw ShapeError("exploit_run: sampled grid differs from the refined grid");
      }
      out[0] = liquidation_cost(x, path.unaffected(), path.grid, params).total;
    });
    row.cost = e[0];
    rows.push_back(row);
  }
  return rows;
}

std::vector<SmoothingRow> smoothed_jump_study(const DriftJump& jump, std::span<const double> widths,
                                              const ModelParams& params) {
  params.validate();
  std::vector<SmoothingRow> rows;
  for (double w : widths) {
    if (!(w > 0.0) || w >= jump.time || jump.time > params.T) {
      throw ParameterError("smoothed_jump_study: need 0 < w < jump time <= T");
    }
    using Knot = PiecewiseDriftPath::Knot;
    std::vector<Knot> knots{{0.0, 0.0, 0.0, 0.0},
                            {jump.time - w, jump.size / w, 0.0, 0.0}};
    std::vector<double> bps{jump.time - w};
    if (jump.time < params.T) {
      knots.push_back({jump.time, 0.0, 0.0, 0.0});
      bps.push_back(jump.time);
    }
    const PiecewiseDriftPath drift(std::move(knots), PiecewiseDriftPath::ZMode::deterministic,
                                   std::move(bps), params.rho, params.T);
    rows.push_back({w, jump.size * jump.size / w, deterministic_optimal_cost(drift, params)});
  }
  return rows;
}

void write_mc_csv(std::ostream& out, std::span<const McCsvRow> rows) {
  const auto old = out.precision(17);
  out << "experiment,model,strategy,N,n_paths,seed,mean,se,price_leg,impact_leg,qv_leg\n";
  for (const McCsvRow& r : rows) {
    out << r.experiment << ',' << r.model << ',' << r.strategy << ',' << r.n << ',' << r.n_paths
        << ',' << r.seed << ',' << r.mean << ',' << r.se << ',' << r.breakdown.price_leg << ','
        << r.breakdown.impact_leg << ',' << r.breakdown.qv_leg << '\n';
  }
  out.precision(old);
}

}  // namespace impactlab
