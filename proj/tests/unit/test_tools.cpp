#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "impactlab/errors.hpp"
#include "impactlab/tools/config.hpp"
#include "impactlab/tools/experiments.hpp"
#include "impactlab/tools/verdict.hpp"

namespace impactlab::tools {
namespace {

using nlohmann::json;

json base_doc(const std::string& experiment) {
  return json{{"experiment", {{"name", experiment}}},
              {"model", {{"type", "zero"}}},
              {"params", {{"rho", 2.0}, {"T", 1.0}, {"x", 1.0}}},
              {"grid", {{"n_steps", 32}}},
              {"mc", {{"n_paths", 200}, {"seed", 3}}}};
}

const Artifact* find(const std::vector<Artifact>& a, const std::string& name) {
  for (const auto& x : a)
    if (x.name == name) return &x;
  return nullptr;
}

TEST(Config, RoundTrip) {
  json doc = base_doc("simulate");
  doc["model"] = {{"type", "predator"}, {"seller_position", 2.0}, {"seller_horizon", 0.25}};
  doc["mc"]["martingale"] = "geometric";
  doc["params"]["s0"] = 5.0;
  const RunConfig c = parse_config(doc);
  const RunConfig d = parse_config(to_json(c));
  EXPECT_EQ(to_json(c), to_json(d));
  EXPECT_EQ(model_id(d.model), "predator");
  EXPECT_EQ(d.martingale.kind, MartingaleKind::geometric);
}

TEST(Config, RejectsMalformedInput) {
  json doc = base_doc("simulate");
  doc["extra"] = 1;
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = base_doc("nope");
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = base_doc("simulate");
  doc["params"]["rho"] = -1.0;
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = base_doc("simulate");
  doc["model"] = {{"type", "compensated_poisson"}, {"lambda", 3}};
  EXPECT_THROW(parse_config(doc), ConfigError);
  doc = base_doc("simulate");
  doc["params"]["T"] = "one";
  EXPECT_THROW(parse_config(doc), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Experiments, OptimalCostZeroDrift) {
  const auto out = run_experiment(parse_config(base_doc("optimal-cost")));
  const Artifact* csv = find(out, "optimal_cost.csv");
  ASSERT_NE(csv, nullptr);
  EXPECT_NE(csv->content.find("zero,0.25,"), std::string::npos) << csv->content;
  ASSERT_NE(find(out, "manifest.json"), nullptr);
}

TEST(Experiments, ManifestRerunsIdentically) {
  json doc = base_doc("simulate");
  doc["model"] = {{"type", "compensated_poisson"}, {"intensity", 20.0}};
  doc["experiment"]["strategy"] = "theorem1";
  const auto first = run_experiment(parse_config(doc));
  const json manifest = json::parse(find(first, "manifest.json")->content);
  const auto second = run_experiment(parse_config(manifest));
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(first[i].content, second[i].content) << first[i].name;
}

TEST(Experiments, Figure1JumpsAtEventTimes) {
  json doc = base_doc("figure1");
  doc["model"] = {{"type", "compensated_poisson"}, {"intensity", 20.0}};
  doc["grid"]["n_steps"] = 200;
  const auto out = run_experiment(parse_config(doc));
  std::istringstream events(find(out, "figure1_events.csv")->content);
  std::istringstream traj(find(out, "figure1_strategy.csv")->content);
  std::string line;
  std::getline(events, line);
  std::vector<double> event_times;
  while (std::getline(events, line)) event_times.push_back(std::stod(line));
  std::getline(traj, line);
  std::vector<double> jump_times;
  while (std::getline(traj, line)) {
    const double t = std::stod(line.substr(0, line.find(',')));
    const double jump = std::stod(line.substr(line.rfind(',') + 1));
    if (jump != 0.0 && t > 0.0 && t < 1.0) jump_times.push_back(t);
  }
  EXPECT_EQ(jump_times, event_times);
}

TEST(Experiments, ModelMismatchAndBadOptions) {
  json doc = base_doc("simulate");
  doc["model"] = {{"type", "jump"}, {"time", 0.5}, {"size", 1.0}};
  doc["experiment"]["strategy"] = "theorem1";
  EXPECT_THROW(run_experiment(parse_config(doc)), ModelMismatch);
  doc = base_doc("simulate");
  doc["experiment"]["bogus"] = 1;
  EXPECT_THROW(run_experiment(parse_config(doc)), ConfigError);
  doc = base_doc("cost-risk");
  doc["model"] = {{"type", "linear"}, {"slope", 1.0}};
  EXPECT_THROW(run_experiment(parse_config(doc)), ModelMismatch);
}

TEST(Experiments, WriteArtifacts) {
  const auto dir = std::filesystem::temp_directory_path() / "impactlab_test_artifacts";
  std::filesystem::remove_all(dir);
  write_artifacts(dir.string(), {{"a.csv", "x\n1\n"}});
  std::ifstream in(dir / "a.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "x");
  std::filesystem::remove_all(dir);
}

TEST(Verdict, SuitesAndJsonLines) {
  EXPECT_EQ(suite_criteria("identities"), (std::vector<int>{1, 5, 7}));
  EXPECT_EQ(suite_criteria("all").size(), 10u);
  EXPECT_THROW(suite_criteria("bogus"), ConfigError);
  const auto r = run_criterion(1, {});
  EXPECT_TRUE(r.pass);
  const json j = json::parse(to_json_line(r));
  for (const char* key : {"id", "measured", "expected", "tolerance", "pass"}) EXPECT_TRUE(j.contains(key));
}

TEST(Verdict, ExploitSkipsContinuousTargets) {
  SuiteOptions o;
  o.exploit_target = LinearDrift{1.0};
  const auto r = run_criterion(9, o);
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(r.detail, "skipped: model is absolutely continuous");
}

TEST(Verdict, UnderResolvedConvergenceFails) {
  SuiteOptions o;
  o.max_n = 8;
  const auto r = run_criterion(4, o);
  EXPECT_FALSE(r.pass);
  EXPECT_GT(r.measured, 0.25);
}

}  // namespace
}  // namespace impactlab::tools
