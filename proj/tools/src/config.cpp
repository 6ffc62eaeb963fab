#include "impactlab/tools/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "impactlab/errors.hpp"

namespace impactlab::tools {

using nlohmann::json;

namespace {

void check_keys(const json& block, const std::string& where, const std::set<std::string>& allowed) {
  if (!block.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : block.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_or(const json& block, const std::string& key, T fallback, const std::string& where) {
  if (!block.contains(key)) return fallback;
  try {
    return block.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

}  // namespace

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"simulate", "optimal-cost", "oracle-compare",
                                              "lemma1",   "perturb",      "exploit",
                                              "cost-risk", "figure1"};
  return names;
}

DriftModel model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type")) throw ConfigError("model: missing 'type'");
  const std::string type = get_or<std::string>(j, "type", "", "model");
  if (type == "zero") {
    check_keys(j, "model", {"type"});
    return ZeroDrift{};
  }
  if (type == "linear") {
    check_keys(j, "model", {"type", "slope"});
    return LinearDrift{get_or(j, "slope", 0.0, "model")};
  }
  if (type == "tabulated") {
    check_keys(j, "model", {"type", "times", "values"});
    return TabulatedDerivative{get_or(j, "times", std::vector<double>{}, "model"),
                               get_or(j, "values", std::vector<double>{}, "model")};
  }
  if (type == "compensated_poisson") {
    check_keys(j, "model", {"type", "intensity"});
    return CompensatedPoissonDerivative{get_or(j, "intensity", 20.0, "model")};
  }
  if (type == "truncated_brownian") {
    check_keys(j, "model", {"type", "sigma", "cap"});
    return TruncatedBrownianDerivative{get_or(j, "sigma", 1.0, "model"),
                                       get_or(j, "cap", 0.0, "model")};
  }
  if (type == "jump") {
    check_keys(j, "model", {"type", "time", "size"});
    return JumpDrift{get_or(j, "time", 0.5, "model"), get_or(j, "size", 1.0, "model")};
  }
  if (type == "predator") {
    check_keys(j, "model", {"type", "seller_position", "seller_horizon"});
    return PredatorDrift{get_or(j, "seller_position", 1.0, "model"),
                         get_or(j, "seller_horizon", 0.5, "model")};
  }
  throw ConfigError("model: unknown type '" + type + "'");
}

json model_to_json(const DriftModel& model) {
  json j;
  j["type"] = model_id(model);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, LinearDrift>) {
          j["slope"] = m.slope;
        } else if constexpr (std::is_same_v<M, TabulatedDerivative>) {
          j["times"] = m.times;
          j["values"] = m.values;
        } else if constexpr (std::is_same_v<M, CompensatedPoissonDerivative>) {
          j["intensity"] = m.intensity;
        } else if constexpr (std::is_same_v<M, TruncatedBrownianDerivative>) {
          j["sigma"] = m.sigma;
          j["cap"] = m.cap;
        } else if constexpr (std::is_same_v<M, JumpDrift>) {
          j["time"] = m.time;
          j["size"] = m.size;
        } else if constexpr (std::is_same_v<M, PredatorDrift>) {
          j["seller_position"] = m.seller_position;
          j["seller_horizon"] = m.seller_horizon;
        }
      },
      model);
  return j;
}

RunConfig parse_config(const json& doc) {
  check_keys(doc, "config", {"model", "params", "grid", "experiment", "mc", "manifest"});
  RunConfig c;

  if (!doc.contains("experiment")) throw ConfigError("config: missing 'experiment' block");
  const json& exp = doc.at("experiment");
  if (!exp.is_object() || !exp.contains("name")) throw ConfigError("experiment: missing 'name'");
  c.experiment = get_or<std::string>(exp, "name", "", "experiment");
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
    throw ConfigError("experiment: unknown name '" + c.experiment + "'");
  }
  c.options = exp;
  c.options.erase("name");

  if (doc.contains("model")) c.model = model_from_json(doc.at("model"));

  if (doc.contains("params")) {
    const json& p = doc.at("params");
    check_keys(p, "params", {"rho", "T", "x", "s0", "eta", "position_cap_factor"});
    c.params.rho = get_or(p, "rho", c.params.rho, "params");
    c.params.T = get_or(p, "T", c.params.T, "params");
    c.params.x = get_or(p, "x", c.params.x, "params");
    c.params.s0 = get_or(p, "s0", c.params.s0, "params");
    c.params.eta = get_or(p, "eta", c.params.eta, "params");
    c.params.position_cap_factor =
        get_or(p, "position_cap_factor", c.params.position_cap_factor, "params");
  }

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    check_keys(g, "grid", {"n_steps"});
    c.n_steps = get_or(g, "n_steps", c.n_steps, "grid");
  }

  if (doc.contains("mc")) {
    const json& m = doc.at("mc");
    check_keys(m, "mc", {"n_paths", "seed", "threads", "martingale", "sigma_m"});
    c.n_paths = get_or(m, "n_paths", c.n_paths, "mc");
    c.seed = get_or(m, "seed", c.seed, "mc");
    c.threads = get_or(m, "threads", c.threads, "mc");
    const std::string kind = get_or<std::string>(m, "martingale", "brownian", "mc");
    if (kind == "brownian") {
      c.martingale.kind = MartingaleKind::brownian;
    } else if (kind == "geometric") {
      c.martingale.kind = MartingaleKind::geometric;
    } else {
      throw ConfigError("mc.martingale: expected 'brownian' or 'geometric'");
    }
    c.martingale.sigma = get_or(m, "sigma_m", c.martingale.sigma, "mc");
  }

  try {
    c.params.validate();
    validate(c.model, c.params);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (c.params.T > 0.0 && c.n_steps == 0) throw ConfigError("grid.n_steps must be positive");
  if (!(c.martingale.sigma >= 0.0)) throw ConfigError("mc.sigma_m must be >= 0");
  if (c.martingale.kind == MartingaleKind::geometric && !(c.params.s0 > 0.0)) {
    throw ConfigError("mc.martingale = geometric needs params.s0 > 0");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json to_json(const RunConfig& c) {
  json doc;
  doc["experiment"] = c.options;
  doc["experiment"]["name"] = c.experiment;
  doc["model"] = model_to_json(c.model);
  doc["params"] = {{"rho", c.params.rho},
                   {"T", c.params.T},
                   {"x", c.params.x},
                   {"s0", c.params.s0},
                   {"eta", c.params.eta},
                   {"position_cap_factor", c.params.position_cap_factor}};
  doc["grid"] = {{"n_steps", c.n_steps}};
  doc["mc"] = {{"n_paths", c.n_paths},
               {"seed", c.seed},
               {"threads", c.threads},
               {"martingale", c.martingale.kind == MartingaleKind::brownian ? "brownian" : "geometric"},
               {"sigma_m", c.martingale.sigma}};
  return doc;
}

}  // namespace impactlab::tools
