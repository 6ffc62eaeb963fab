#include "impactlab/tools/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "impactlab/errors.hpp"
#include "impactlab/montecarlo.hpp"
#include "impactlab/oracles.hpp"
#include "impactlab/strategies.hpp"

namespace impactlab::tools {

using nlohmann::json;

namespace {

const char* const kVersion = "0.1.0";

void check_options(const RunConfig& c, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : c.options.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("experiment '" + c.experiment + "': unknown option '" + key + "'");
    }
  }
}

template <class T>
T option(const RunConfig& c, const std::string& key, T fallback) {
  if (!c.options.contains(key)) return fallback;
  try {
    return c.options.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("experiment." + key + ": wrong type");
  }
}

SimulationSetup setup_of(const RunConfig& c) {
  return SimulationSetup{c.model, c.martingale, c.grid(), c.params, {}};
}

McConfig mc_of(const RunConfig& c) {
  if (c.n_paths < 2) throw ConfigError("mc.n_paths must be at least 2");
  return McConfig{c.n_paths, c.seed, c.threads};
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Strategy ids accepted by the experiments.
StrategyBuilder make_builder(const std::string& name, const RunConfig& c) {
  const ModelParams params = c.params;
  const DriftModel model = c.model;
  if (name == "ow") {
    return [params](const SamplePath& p) { return ow_strategy(params, p.grid); };
  }
  if (name == "block") {
    return [params](const SamplePath& p) {
      std::vector<double> values(p.grid.size(), 0.0);
      return Strategy::from_values(params.x, std::move(values));
    };
  }
  if (name == "theorem1") {
    check_theorem1_applicable(capabilities(model, params));
    return [model, params](const SamplePath& p) {
      return optimal_strategy_theorem1(model, p, params);
    };
  }
  if (name == "corollary1") {
    const auto caps = capabilities(model, params);
    check_theorem1_applicable(caps);
    if (!caps.derivative_martingale) {
      throw ModelMismatch("corollary1 strategy needs a martingale A' (model '" + model_id(model) + "')");
    }
    return [params](const SamplePath& p) { return optimal_strategy_corollary1(p, params); };
  }
  if (name == "ac") {
    const double eta_ac = option(c, "eta_ac", 1.0);
    const bool include = option(c, "include_drift", true);
    return [params, eta_ac, include](const SamplePath& p) {
      return ac_drift_strategy(p.a, params, p.grid, eta_ac, include);
    };
  }
  throw ConfigError("unknown strategy '" + name + "' (expected ow, block, theorem1, corollary1, ac)");
}

Artifact mc_artifact(const std::string& experiment, const std::string& model,
                     const std::string& strategy, const RunConfig& c, const EstimateReport& r) {
  std::ostringstream out;
  McCsvRow row{experiment, model, strategy, c.n_steps, r.n_paths, r.seed, r.mean, r.se, r.breakdown};
  write_mc_csv(out, std::span<const McCsvRow>(&row, 1));
  return {"mc.csv", out.str()};
}

std::vector<Artifact> run_simulate(const RunConfig& c) {
  check_options(c, {"strategy", "paths_to_write", "eta_ac", "include_drift"});
  const std::string strategy = option<std::string>(c, "strategy", "ow");
  const auto builder = make_builder(strategy, c);
  const std::size_t n_write = option<std::size_t>(c, "paths_to_write", 1);
  const SimulationSetup setup = setup_of(c);

  std::ostringstream paths;
  paths.precision(17);
  paths << "path,time,M,A,A_prime,Z,Y,S0\n";
  std::string strategy_csv;
  for (std::size_t i = 0; i < n_write; ++i) {
    const SamplePath p = sample_path(c.model, c.martingale, setup.grid, c.params, c.seed, i);
    const auto s0 = p.unaffected();
    for (std::size_t k = 0; k < p.grid.size(); ++k) {
      paths << i << ',' << p.grid[k] << ',' << p.m[k] << ',' << p.a[k] << ',';
      if (p.a_prime) paths << (*p.a_prime)[k];
      paths << ',' << p.z[k] << ',' << p.y[k] << ',' << s0[k] << '\n';
    }
    if (i == 0) {
      std::ostringstream s;
      write_strategy_csv(s, builder(p), p.grid, c.params);
      strategy_csv = s.str();
    }
  }
  std::vector<Artifact> out{{"paths.csv", paths.str()}};
  if (!strategy_csv.empty()) out.push_back({"strategy.csv", strategy_csv});
  const auto report = estimate_expected_cost(builder, setup, mc_of(c));
  out.push_back(mc_artifact("simulate", model_id(c.model), strategy, c, report));
  return out;
}

std::vector<Artifact> run_optimal_cost(const RunConfig& c) {
  check_options(c, {"monte_carlo", "closed_form_paths"});
  ClosedFormOptions opts;
  opts.seed = c.seed;
  opts.mc_paths = option<std::size_t>(c, "closed_form_paths", opts.mc_paths);
  const ClosedFormCost cf = expected_cost_closed_form(c.model, c.params, opts);
  std::ostringstream s;
  s << "model,value,se,exact,unbounded\n"
    << model_id(c.model) << ',' << fmt(cf.value) << ',' << fmt(cf.se) << ','
    << (cf.exact ? "true" : "false") << ',' << (cf.unbounded ? "true" : "false") << '\n';
  std::vector<Artifact> out{{"optimal_cost.csv", s.str()}};
  if (!cf.unbounded && option(c, "monte_carlo", true)) {
    const auto report = estimate_expected_cost(make_builder("theorem1", c), setup_of(c), mc_of(c));
    out.push_back(mc_artifact("optimal-cost", model_id(c.model), "theorem1", c, report));
  }
  return out;
}

std::vector<Artifact> run_oracle_compare(const RunConfig& c) {
  check_options(c, {"n_list"});
  const auto n_list = option(c, "n_list", std::vector<std::size_t>{4, 16, 64, 256});
  const DriftCapabilities caps = capabilities(c.model, c.params);
  if (!caps.absolutely_continuous) {
    throw ModelMismatch("oracle-compare: drift '" + model_id(c.model) +
                        "' is not absolutely continuous, expected costs are unbounded");
  }
  const double reference = expected_cost_closed_form(c.model, c.params, {1000, 256, c.seed}).value;
  std::vector<OracleRow> rows;
  const std::string id = model_id(c.model);
  for (std::size_t n : n_list) {
    const TimeGrid grid = TimeGrid::uniform(c.params.T, n);
    if (caps.deterministic) {
      const auto drift = sample_drift(c.model, grid, c.params, c.seed);
      std::vector<double> a(grid.size());
      for (std::size_t k = 0; k < grid.size(); ++k) a[k] = drift->at(grid[k]).a;
      rows.push_back({n, id + ":qp", qp_oracle(a, grid, c.params).value, reference});
      rows.push_back({n, id + ":dp", dp_oracle(deterministic_chain(a, grid), grid, c.params).value,
                      reference});
    } else if (const auto* poisson = std::get_if<CompensatedPoissonDerivative>(&c.model)) {
      rows.push_back({n, id + ":dp_binomial",
                      dp_oracle(binomial_martingale_chain(poisson->intensity, grid), grid, c.params).value,
                      reference});
    } else if (const auto* tb = std::get_if<TruncatedBrownianDerivative>(&c.model)) {
      rows.push_back({n, id + ":dp_binomial",
                      dp_oracle(binomial_martingale_chain(tb->sigma * tb->sigma, grid), grid, c.params).value,
                      reference});
    } else {
      throw ModelMismatch("oracle-compare: no oracle for drift '" + id + "'");
    }
  }
  std::ostringstream s;
  write_oracle_csv(s, rows);
  return {{"oracle.csv", s.str()}};
}

std::vector<Artifact> run_lemma1(const RunConfig& c) {
  check_options(c, {"strategy", "reference_n", "n_list", "eta_ac", "include_drift"});
  const std::string strategy = option<std::string>(c, "strategy", "theorem1");
  const auto n_list = option(c, "n_list", std::vector<std::size_t>{8, 32, 128, 512, 2048});
  const std::size_t n_ref = option<std::size_t>(c, "reference_n", 8192);
  SimulationSetup setup = setup_of(c);
  setup.grid = TimeGrid::uniform(c.params.T, n_ref);
  const auto rows = lemma1_convergence_study(make_builder(strategy, c), setup, n_list, mc_of(c));
  std::ostringstream s;
  s.precision(17);
  s << "N,reference_n,mean_abs_gap,se\n";
  for (const auto& r : rows) s << r.n << ',' << n_ref << ',' << r.mean_abs_gap << ',' << r.se << '\n';
  return {{"lemma1.csv", s.str()}};
}

std::vector<Direction> sine_directions(std::size_t count, double amplitude, double T) {
  std::vector<Direction> dirs;
  for (std::size_t j = 1; j <= count; ++j) {
    dirs.push_back([=](double t) {
      return amplitude * std::sin(static_cast<double>(j) * std::numbers::pi * t / T);
    });
  }
  return dirs;
}

std::vector<Artifact> run_perturb(const RunConfig& c) {
  check_options(c, {"strategy", "directions", "amplitude", "eps", "eta_ac", "include_drift"});
  const std::string strategy = option<std::string>(c, "strategy", "theorem1");
  const auto count = option<std::size_t>(c, "directions", 8);
  const double amplitude = option(c, "amplitude", 1.0);
  const auto eps = option(c, "eps", std::vector<double>{0.0, 0.1, 0.2});
  if (c.params.T == 0.0) throw ConfigError("perturb: T must be positive");
  const auto dirs = sine_directions(count, amplitude, c.params.T);
  const auto rows = perturbation_test(make_builder(strategy, c), dirs, eps, setup_of(c), mc_of(c));
  std::ostringstream s;
  s.precision(17);
  s << "direction,eps,mean_difference,se\n";
  for (const auto& r : rows) {
    s << r.direction + 1 << ',' << r.eps << ',' << r.difference.mean << ',' << r.difference.se << '\n';
  }
  return {{"perturb.csv", s.str()}};
}

std::vector<Artifact> run_exploit(const RunConfig& c) {
  check_options(c, {"k_values", "bound_multiple", "widths"});
  ExploitSpec spec;
  spec.target = c.model;
  spec.k_values = option(c, "k_values", spec.k_values);
  spec.bound_multiple = option(c, "bound_multiple", spec.bound_multiple);
  const auto rows = exploit_run(spec, setup_of(c), mc_of(c));
  std::ostringstream s;
  s.precision(17);
  s << "K,window,alpha_l2,mean,se,xi_sup,xi_bound\n";
  for (const auto& r : rows) {
    s << r.k << ',' << r.window << ',' << r.alpha_l2 << ',' << r.cost.mean << ',' << r.cost.se << ','
      << r.xi_sup << ',' << r.xi_bound << '\n';
  }
  std::vector<Artifact> out{{"exploit.csv", s.str()}};

  const auto jump = drift_jump(c.model, c.params);
  const auto widths = option(c, "widths", std::vector<double>{0.2, 0.1, 0.05, 0.02, 0.01});
  std::vector<double> usable;
  for (double w : widths) {
    if (w < jump.time) usable.push_back(w);
  }
  if (!usable.empty()) {
    std::ostringstream t;
    t.precision(17);
    t << "width,derivative_l2,optimal_cost\n";
    for (const auto& r : smoothed_jump_study(jump, usable, c.params)) {
      t << r.width << ',' << r.derivative_l2 << ',' << r.optimal_cost << '\n';
    }
    out.push_back({"smoothing.csv", t.str()});
  }
  return out;
}

std::vector<Artifact> run_cost_risk(const RunConfig& c) {
  check_options(c, {"lambda", "eta_ac", "include_drift", "form"});
  const double lambda = option(c, "lambda", 0.5);
  const std::string form_name = option<std::string>(c, "form", "derived");
  if (form_name != "derived" && form_name != "printed") {
    throw ConfigError("cost-risk: form must be 'derived' or 'printed'");
  }
  const CostRiskForm form = form_name == "derived" ? CostRiskForm::derived : CostRiskForm::printed;
  const double eta_ac = option(c, "eta_ac", 1.0);
  const bool include = option(c, "include_drift", true);
  if (!std::holds_alternative<ZeroDrift>(c.model)) {
    throw ModelMismatch("cost-risk: the closed-form strategy needs a martingale S0 (model 'zero')");
  }
  if (lambda * c.params.x < 0.0) throw ConfigError("cost-risk: lambda must have the sign of x");
  const ModelParams params = c.params;
  const auto e = estimate_many(setup_of(c), mc_of(c), 5, [&](const SamplePath& p, std::span<double> out) {
    const auto s0 = p.unaffected();
    const Strategy xs = cost_risk_strategy(s0, lambda, params, p.grid, form);
    const Strategy ow = ow_strategy(params, p.grid);
    const auto td = tilde_drift(s0, {}, {}, lambda, params, p.grid);
    const Strategy ac = ac_drift_strategy(td.a, params, p.grid, eta_ac, include);
    out[0] = cost_risk_value(xs, s0, lambda, p.grid, params);
    out[1] = cost_risk_value(ow, s0, lambda, p.grid, params);
    out[2] = cost_risk_value(ac, s0, lambda, p.grid, params);
    out[3] = out[1] - out[0];
    out[4] = out[2] - out[0];
  });
  std::ostringstream s;
  s.precision(17);
  s << "strategy,lambda,mean,se,excess_over_cost_risk,excess_se\n";
  s << "cost_risk," << lambda << ',' << e[0].mean << ',' << e[0].se << ",0,0\n";
  s << "ow," << lambda << ',' << e[1].mean << ',' << e[1].se << ',' << e[3].mean << ',' << e[3].se << '\n';
  s << "ac," << lambda << ',' << e[2].mean << ',' << e[2].se << ',' << e[4].mean << ',' << e[4].se << '\n';
  return {{"cost_risk.csv", s.str()}};
}

std::vector<Artifact> run_figure1(const RunConfig& c) {
  check_options(c, {"path_index"});
  const auto index = option<std::uint64_t>(c, "path_index", 0);
  check_theorem1_applicable(capabilities(c.model, c.params));
  const SamplePath p = sample_path(c.model, c.martingale, c.grid(), c.params, c.seed, index);
  const Strategy s = optimal_strategy_theorem1(c.model, p, c.params);
  std::ostringstream traj;
  write_strategy_csv(traj, s, p.grid, c.params);
  std::ostringstream events;
  events.precision(17);
  events << "event_time\n";
  for (double t : p.drift->breakpoints()) events << t << '\n';
  std::ostringstream ow;
  write_strategy_csv(ow, ow_strategy(c.params, p.grid), p.grid, c.params);
  return {{"figure1_strategy.csv", traj.str()}, {"figure1_events.csv", events.str()},
          {"figure1_ow.csv", ow.str()}};
}

}  // namespace

std::vector<Artifact> run_experiment(const RunConfig& c) {
  std::vector<Artifact> out;
  try {
    if (c.experiment == "simulate") out = run_simulate(c);
    else if (c.experiment == "optimal-cost") out = run_optimal_cost(c);
    else if (c.experiment == "oracle-compare") out = run_oracle_compare(c);
    else if (c.experiment == "lemma1") out = run_lemma1(c);
    else if (c.experiment == "perturb") out = run_perturb(c);
    else if (c.experiment == "exploit") out = run_exploit(c);
    else if (c.experiment == "cost-risk") out = run_cost_risk(c);
    else if (c.experiment == "figure1") out = run_figure1(c);
    else throw ConfigError("unknown experiment '" + c.experiment + "'");
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }

  json manifest = to_json(c);
  json files = json::array();
  for (const auto& a : out) files.push_back(a.name);
  manifest["manifest"] = {{"version", kVersion}, {"outputs", files}};
  out.push_back({"manifest.json", manifest.dump(2) + "\n"});
  return out;
}

void write_artifacts(const std::string& dir, const std::vector<Artifact>& artifacts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& a : artifacts) {
    std::ofstream f(fs::path(dir) / a.name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (fs::path(dir) / a.name).string());
    f << a.content;
  }
}

}  // namespace impactlab::tools
