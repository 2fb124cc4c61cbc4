#pragma once

// Surrogate-backed tuning environment and the DDPG training loop.

#include <optional>
#include <span>
#include <vector>

#include "dmsconfig/agent.hpp"
#include "dmsconfig/surrogate.hpp"

namespace dmsconfig {

/// Floor applied to a normalized latency limit that falls at or below the
/// training minimum; such limits are unreachable and every step violates.
inline constexpr double kMinNormalizedLimit = 1e-6;

struct EnvState {
  double baseline_throughput = 0;  // T0 (normalized)
  double baseline_latency = 0;     // L0 (normalized)
  double previous_throughput = 0;  // T_{t-1}
  double latency_limit = kUnconstrained;      // normalized
  double latency_limit_raw = kUnconstrained;  // ms
  std::size_t step = 0;
  std::size_t episode_length = 20;
  std::vector<double> default_state;
  std::vector<double> default_action;
};

EnvState make_env(const SurrogateModel& model, double latency_limit_ms, std::size_t episode_length);
void reset_env(EnvState& env);

struct StepResult {
  std::vector<double> next_state;
  double reward = 0;
  Prediction prediction;
  Configuration config;
  bool done = false;
};

StepResult env_step(EnvState& env, const SurrogateModel& model, std::span<const double> action,
                    RewardMode mode = RewardMode::corrected);

struct Candidate {
  Configuration config;
  double predicted_throughput = 0;  // MiB/s
  double predicted_latency = 0;     // ms
  double reward = 0;
  std::size_t step = 0;
};

struct TuningResult {
  std::optional<Candidate> best_feasible;  // max predicted throughput with predicted latency <= limit
  Candidate best_reward;
  std::vector<double> reward_trace;
  std::size_t violation_count = 0;  // visited steps whose predicted latency exceeded the limit
  std::size_t network_updates = 0;
  double latency_limit = kUnconstrained;
  AgentHyperparams hyperparams;

  /// The feasible best when one was visited, otherwise the best-reward configuration.
  const Candidate& recommended() const { return best_feasible ? *best_feasible : best_reward; }
};

struct TuningRun {
  TuningResult result;
  Agent agent;
};

/// Runs hp.total_steps interactions. While the buffer holds fewer than
/// batch_size transitions actions are uniform random; afterwards they come
/// from the actor with decaying Gaussian noise and every step performs one
/// critic update, one actor update and a soft target update.
TuningRun tune(const SurrogateModel& model, double latency_limit_ms, const AgentHyperparams& hp);

nlohmann::json candidate_to_json(const Candidate& c, const ParameterSpace& space);
nlohmann::json to_json(const TuningResult& r, const ParameterSpace& space);

}  // namespace dmsconfig
