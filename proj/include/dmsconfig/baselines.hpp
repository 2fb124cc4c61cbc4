#pragma once

// Budget-matched black-box searches over the same reward, scored statelessly
// (the previous throughput is pinned to the default configuration's).

#include <optional>
#include <string>
#include <vector>

#include "dmsconfig/tuner.hpp"

namespace dmsconfig {

/// Scores actions through the surrogate and counts every prediction call.
class Objective {
 public:
  Objective(const SurrogateModel& model, double latency_limit_ms, RewardMode mode = RewardMode::corrected);

  Candidate evaluate(std::span<const double> action);
  std::size_t calls() const { return calls_; }
  const EnvState& env() const { return env_; }

 private:
  const SurrogateModel& model_;
  EnvState env_;
  RewardMode mode_;
  std::size_t calls_ = 0;
};

struct BaselineResult {
  std::string method;
  std::size_t evaluations = 0;
  std::optional<Candidate> best_feasible;
  Candidate best_reward;
  std::vector<double> reward_trace;     // reward of each evaluation
  std::vector<double> incumbent_trace;  // best reward so far
  std::vector<double> current_trace;    // annealing only: reward of the accepted point after each step
  std::size_t violation_count = 0;
  double latency_limit = kUnconstrained;

  const Candidate& recommended() const { return best_feasible ? *best_feasible : best_reward; }
};

BaselineResult random_search(const SurrogateModel& model, double latency_limit_ms, std::size_t budget,
                             std::uint64_t seed);

struct AnnealOptions {
  double step_scale = 0.1;           // initial proposal sigma in normalized units
  double cooling = 0.995;            // per-iteration factor for both sigma and temperature
  double initial_temperature = 1.0;  // 0 gives pure hill climbing
};

/// Simulated annealing from the default configuration's action vector.
BaselineResult anneal_search(const SurrogateModel& model, double latency_limit_ms, std::size_t budget,
                             std::uint64_t seed, const AnnealOptions& options = {});

nlohmann::json to_json(const BaselineResult& r, const ParameterSpace& space);

}  // namespace dmsconfig
