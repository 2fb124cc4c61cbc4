#include "dmsconfig/tuner.hpp"

#include <algorithm>
#include <cmath>

#include "dmsconfig/error.hpp"

namespace dmsconfig {

namespace {

std::vector<double> state_vector(const Prediction& p) { return {p.state_norm.begin(), p.state_norm.end()}; }

}  // namespace

EnvState make_env(const SurrogateModel& model, double latency_limit_ms, std::size_t episode_length) {
  if (episode_length < 1) throw std::invalid_argument("episode length must be >= 1");
  if (std::isnan(latency_limit_ms) || !(latency_limit_ms > 0))
    throw std::invalid_argument("latency limit must be > 0 (or infinite)");
  const auto defaults = model.space.defaults();
  const auto base = predict(model, defaults);
  EnvState env;
  env.baseline_throughput = base.throughput_norm;
  env.baseline_latency = base.latency_norm;
  env.previous_throughput = base.throughput_norm;
  env.latency_limit_raw = latency_limit_ms;
  if (!std::isinf(latency_limit_ms))
    env.latency_limit =
        std::max(kMinNormalizedLimit, model.output_stats[kLatencyIndex].normalize(latency_limit_ms));
  env.episode_length = episode_length;
  env.default_state = state_vector(base);
  env.default_action = normalize(defaults, model.space);
  return env;
}

void reset_env(EnvState& env) {
  env.step = 0;
  env.previous_throughput = env.baseline_throughput;
}

StepResult env_step(EnvState& env, const SurrogateModel& model, std::span<const double> action, RewardMode mode) {
  StepResult out;
  out.config = denormalize(action, model.space);
  out.prediction = predict(model, out.config);
  const RewardContext ctx{env.baseline_throughput, env.previous_throughput, env.latency_limit};
  out.reward = compute_reward(out.prediction.throughput_norm, out.prediction.latency_norm, ctx, mode);
  out.next_state = state_vector(out.prediction);
  env.previous_throughput = out.prediction.throughput_norm;
  ++env.step;
  out.done = env.step >= env.episode_length;
  return out;
}

TuningRun tune(const SurrogateModel& model, double latency_limit_ms, const AgentHyperparams& hp) {
  hp.check();
  const std::size_t d = model.space.dim();
  TuningRun run{TuningResult{}, Agent(kStateDim, d, hp)};
  TuningResult& result = run.result;
  Agent& agent = run.agent;
  result.latency_limit = latency_limit_ms;
  result.hyperparams = hp;

  EnvState env = make_env(model, latency_limit_ms, hp.episode_length);
  ReplayBuffer buffer(hp.buffer_capacity);
  Rng explore(derive_seed(hp.seed, {0x6578706c}));
  Rng sampler(derive_seed(hp.seed, {0x73616d70}));

  std::vector<double> state = env.default_state;
  double sigma = hp.noise_sigma_start;
  bool have_best_reward = false;
  result.reward_trace.reserve(hp.total_steps);

  for (std::size_t t = 0; t < hp.total_steps; ++t) {
    std::vector<double> action;
    if (buffer.size() < hp.batch_size) {
      action.resize(d);
      for (auto& a : action) a = uniform01(explore);
    } else {
      action = agent.select_action(state, sigma);
      sigma *= hp.noise_decay;
    }

    auto step = env_step(env, model, action, hp.reward_mode);
    result.reward_trace.push_back(step.reward);

    const Candidate visit{step.config, step.prediction.throughput_raw, step.prediction.latency_raw, step.reward, t};
    if (violates(visit.predicted_latency, latency_limit_ms)) {
      ++result.violation_count;
    } else if (!result.best_feasible || visit.predicted_throughput > result.best_feasible->predicted_throughput) {
      result.best_feasible = visit;
    }
    if (!have_best_reward || visit.reward > result.best_reward.reward) {
      result.best_reward = visit;
      have_best_reward = true;
    }

    const double stored = std::clamp(step.reward, -hp.reward_clip, hp.reward_clip);
    buffer.add(Transition{state, action, stored, step.next_state, 0});

    if (buffer.size() >= hp.batch_size) {
      const double progress = hp.total_steps > 1 ? static_cast<double>(t) / static_cast<double>(hp.total_steps - 1) : 1.0;
      const double beta = hp.importance_exponent + (1.0 - hp.importance_exponent) * progress;
      auto batch = buffer.sample(hp.batch_size, hp.priority_exponent, beta, sampler);
      const auto update = agent.update_critic(batch.items, batch.weights);
      agent.update_actor(batch.items);
      agent.soft_update_targets();
      buffer.update_priorities(batch.indices, update.td_errors);
      ++result.network_updates;
    }

    if (step.done) {
      reset_env(env);
      state = env.default_state;
    } else {
      state = std::move(step.next_state);
    }
  }
  return run;
}

nlohmann::json candidate_to_json(const Candidate& c, const ParameterSpace& space) {
  nlohmann::json config = nlohmann::json::object();
  for (const auto& s : space.specs()) {
    const auto& v = c.config.values.at(s.name);
    if (const auto* i = std::get_if<std::int64_t>(&v))
      config[s.name] = *i;
    else
      config[s.name] = std::get<std::string>(v);
  }
  return {{"config", config},
          {"predicted_throughput_mbps", c.predicted_throughput},
          {"predicted_latency_ms", c.predicted_latency},
          {"reward", c.reward},
          {"step", c.step}};
}

nlohmann::json to_json(const TuningResult& r, const ParameterSpace& space) {
  auto limit = std::isinf(r.latency_limit) ? nlohmann::json(nullptr) : nlohmann::json(r.latency_limit);
  return {{"method", "ddpg"},
          {"latency_limit_ms", limit},
          {"recommended", candidate_to_json(r.recommended(), space)},
          {"feasible_found", r.best_feasible.has_value()},
          {"best_reward", candidate_to_json(r.best_reward, space)},
          {"evaluations", r.reward_trace.size()},
          {"violation_count", r.violation_count},
          {"network_updates", r.network_updates},
          {"reward_trace", r.reward_trace},
          {"hyperparams", to_json(r.hyperparams)}};
}

}  // namespace dmsconfig
