#include "dmsconfig/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dmsconfig {

Objective::Objective(const SurrogateModel& model, double latency_limit_ms, RewardMode mode)
    : model_(model), env_(make_env(model, latency_limit_ms, 1)), mode_(mode) {}

Candidate Objective::evaluate(std::span<const double> action) {
  ++calls_;
  Candidate c;
  c.config = denormalize(action, model_.space);
  const auto p = predict(model_, c.config);
  c.predicted_throughput = p.throughput_raw;
  c.predicted_latency = p.latency_raw;
  const RewardContext ctx{env_.baseline_throughput, env_.baseline_throughput, env_.latency_limit};
  c.reward = compute_reward(p.throughput_norm, p.latency_norm, ctx, mode_);
  return c;
}

namespace {

class Tracker {
 public:
  explicit Tracker(BaselineResult& r) : r_(r) {}

  void record(Candidate c, std::size_t index) {
    c.step = index;
    r_.reward_trace.push_back(c.reward);
    if (violates(c.predicted_latency, r_.latency_limit)) {
      ++r_.violation_count;
    } else if (!r_.best_feasible || c.predicted_throughput > r_.best_feasible->predicted_throughput) {
      r_.best_feasible = c;
    }
    if (r_.reward_trace.size() == 1 || c.reward > r_.best_reward.reward) r_.best_reward = c;
    r_.incumbent_trace.push_back(r_.best_reward.reward);
  }

 private:
  BaselineResult& r_;
};

}  // namespace

BaselineResult random_search(const SurrogateModel& model, double latency_limit_ms, std::size_t budget,
                             std::uint64_t seed) {
  if (budget < 1) throw std::invalid_argument("random_search: budget must be >= 1");
  Objective objective(model, latency_limit_ms);
  BaselineResult result;
  result.method = "random";
  result.latency_limit = latency_limit_ms;
  Tracker tracker(result);
  Rng rng(seed);
  std::vector<double> action(model.space.dim());
  for (std::size_t i = 0; i < budget; ++i) {
    for (auto& a : action) a = uniform01(rng);
    tracker.record(objective.evaluate(action), i);
  }
  result.evaluations = objective.calls();
  return result;
}

BaselineResult anneal_search(const SurrogateModel& model, double latency_limit_ms, std::size_t budget,
                             std::uint64_t seed, const AnnealOptions& options) {
  if (budget < 1) throw std::invalid_argument("anneal_search: budget must be >= 1");
  if (options.step_scale < 0 || options.cooling <= 0 || options.cooling > 1 || options.initial_temperature < 0)
    throw std::invalid_argument("anneal_search: invalid options");
  Objective objective(model, latency_limit_ms);
  BaselineResult result;
  result.method = "anneal";
  result.latency_limit = latency_limit_ms;
  Tracker tracker(result);
  Rng rng(seed);
  std::normal_distribution<double> normal;

  std::vector<double> current = objective.env().default_action;
  auto current_score = objective.evaluate(current);
  tracker.record(current_score, 0);
  result.current_trace.push_back(current_score.reward);

  double sigma = options.step_scale;
  double temperature = options.initial_temperature;
  std::vector<double> proposal(current.size());
  for (std::size_t i = 1; i < budget; ++i) {
    for (std::size_t k = 0; k < current.size(); ++k)
      proposal[k] = std::clamp(current[k] + sigma * normal(rng), 0.0, 1.0);
    auto score = objective.evaluate(proposal);
    tracker.record(score, i);
    const double delta = score.reward - current_score.reward;
    const double u = uniform01(rng);
    const bool accept = delta > 0 || (temperature > 0 && u < std::exp(delta / temperature));
    if (accept) {
      current = proposal;
      current_score = std::move(score);
    }
    result.current_trace.push_back(current_score.reward);
    sigma *= options.cooling;
    temperature *= options.cooling;
  }
  result.evaluations = objective.calls();
  return result;
}

nlohmann::json to_json(const BaselineResult& r, const ParameterSpace& space) {
  auto limit = std::isinf(r.latency_limit) ? nlohmann::json(nullptr) : nlohmann::json(r.latency_limit);
  return {{"method", r.method},
          {"latency_limit_ms", limit},
          {"recommended", candidate_to_json(r.recommended(), space)},
          {"feasible_found", r.best_feasible.has_value()},
          {"best_reward", candidate_to_json(r.best_reward, space)},
          {"evaluations", r.evaluations},
          {"violation_count", r.violation_count},
          {"reward_trace", r.reward_trace}};
}

}  // namespace dmsconfig
