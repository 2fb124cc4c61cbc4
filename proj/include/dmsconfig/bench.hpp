#pragma once

// Experiment orchestration: dataset -> surrogate -> tuners per latency
// constraint factor, with every recommendation re-measured on the oracle.

#include <string>
#include <vector>

#include "dmsconfig/baselines.hpp"
#include "dmsconfig/oracle.hpp"

namespace dmsconfig {

/// The nine reference scenarios, test-1..test-9.
std::vector<Scenario> all_use_cases();

/// lcf = L_default / L_c; lcf == 0 means no latency limit.
double lcf_to_limit(double default_latency_ms, double lcf);

struct ExperimentPlan {
  std::vector<Scenario> scenarios = all_use_cases();
  std::vector<double> lcfs = {0, 1, 2, 4, 6, 8, 10};
  std::size_t dataset_size = 1000;
  double noise_sigma = 0.02;
  std::uint64_t data_seed = 1;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<std::string> methods = {"ddpg", "random", "anneal"};
  ForestHyperparams forest;
  double holdout_fraction = 0.2;
  AgentHyperparams agent;  // agent.total_steps is also the baseline budget
  AnnealOptions anneal;
  unsigned workers = 1;
  bool save_checkpoints = true;

  void check() const;
};

std::string serialize_plan(const ExperimentPlan& plan);
ExperimentPlan parse_plan(const std::string& text);
ExperimentPlan load_plan(const std::string& path);

struct CellResult {
  std::string scenario;
  double lcf = 0;
  std::uint64_t seed = 0;
  std::string method;
  bool completed = false;
  std::string error;
  double latency_limit = kUnconstrained;
  Configuration recommended;
  bool feasible_found = false;
  double predicted_throughput = 0;
  double predicted_latency = 0;
  double oracle_throughput = 0;
  double oracle_latency = 0;
  double improvement_percent = 0;
  bool violation = false;
};

struct ScenarioSummary {
  Scenario scenario;
  double default_throughput = 0;  // noise-free oracle
  double default_latency = 0;
  AccuracyReport accuracy;
};

struct Report {
  std::vector<ScenarioSummary> scenarios;
  std::vector<double> lcfs;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  std::vector<CellResult> cells;  // ordered scenario, lcf, seed, method

  /// Share of completed cells of `method` whose oracle latency broke the limit, in percent.
  double violation_percent(const std::string& method) const;
  bool all_completed() const;
};

/// Re-measures a recommendation on the noise-free oracle against the default.
CellResult assess(const Configuration& recommended, const ScenarioSummary& summary, double latency_limit,
                  const OracleProfile& profile);

/// Executes the plan, writing datasets, models, per-cell results, report
/// files and a manifest under run_dir.
Report run_plan(const ExperimentPlan& plan, const std::string& run_dir, const OracleProfile& profile = {},
                const ParameterSpace& space = default_space());

nlohmann::json report_to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);
std::string render_report(const Report& report);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

}  // namespace dmsconfig
