#pragma once

// DDPG actor/critic networks and their update rules.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dmsconfig/nn.hpp"
#include "dmsconfig/replay.hpp"
#include "dmsconfig/reward.hpp"

namespace dmsconfig {

struct AgentHyperparams {
  double gamma = 0.9;
  double tau = 0.005;
  double actor_lr = 1e-4;
  double critic_lr = 1e-3;
  std::size_t batch_size = 64;
  std::size_t buffer_capacity = 10000;
  double priority_exponent = 0.6;      // alpha
  double importance_exponent = 0.4;    // beta at step 0, annealed linearly to 1
  double noise_sigma_start = 0.2;
  double noise_decay = 0.995;          // per step
  std::size_t episode_length = 20;
  std::size_t total_steps = 5000;
  std::size_t hidden_units = 64;
  double reward_clip = 10.0;           // stored rewards are clipped to +-reward_clip
  RewardMode reward_mode = RewardMode::corrected;
  std::uint64_t seed = 0;

  void check() const;
  bool operator==(const AgentHyperparams&) const = default;
};

nlohmann::json to_json(const AgentHyperparams& hp);
AgentHyperparams agent_hyperparams_from_json(const nlohmann::json& j);

/// Q(s, a): state and action each pass a ReLU layer, the two are
/// concatenated and fed through one more ReLU layer to a scalar.
class Critic {
 public:
  Critic() = default;
  Critic(Eigen::Index state_dim, Eigen::Index action_dim, Eigen::Index hidden, Rng& rng);
  Critic(nn::Network state_branch, nn::Network action_branch, nn::Network head);

  nn::Matrix forward(const nn::Matrix& states, const nn::Matrix& actions);
  nn::Matrix infer(const nn::Matrix& states, const nn::Matrix& actions) const;

  struct Gradients {
    std::vector<nn::Matrix> params;
    nn::Matrix states;
    nn::Matrix actions;
  };
  /// Gradients of sum(Q .* upstream) for the last forward().
  Gradients backward(const nn::Matrix& upstream) const;

  /// dQ/da at (states, actions), one row per sample.
  nn::Matrix action_gradient(const nn::Matrix& states, const nn::Matrix& actions);

  std::vector<nn::Matrix*> parameters();
  std::vector<const nn::Matrix*> parameters() const;
  bool same_architecture(const Critic& other) const;
  friend void soft_update(const Critic& online, Critic& target, double tau);

  const nn::Network& state_branch() const { return state_branch_; }
  const nn::Network& action_branch() const { return action_branch_; }
  const nn::Network& head() const { return head_; }

 private:
  nn::Network state_branch_;
  nn::Network action_branch_;
  nn::Network head_;
};

void soft_update(const Critic& online, Critic& target, double tau);

/// state -> 64 ReLU -> batch norm -> 64 ReLU -> sigmoid action.
nn::Network make_actor(Eigen::Index state_dim, Eigen::Index action_dim, Eigen::Index hidden, Rng& rng);

/// One policy-gradient ascent step: moves the actor along dQ/da * da/dtheta
/// averaged over the batch. `q` needs `nn::Matrix action_gradient(states, actions)`.
template <class QFunction>
void actor_ascent_step(nn::Network& actor, nn::AdamState& opt, double learning_rate, const nn::Matrix& states,
                       QFunction& q) {
  const nn::Matrix actions = actor.forward(states);
  const nn::Matrix dq_da = q.action_gradient(states, actions);
  const auto n = static_cast<double>(states.rows());
  const auto grads = actor.backward(-dq_da / n);
  nn::adam_step(actor, grads, opt, learning_rate);
}

struct CriticUpdate {
  std::vector<double> td_errors;  // |y - Q|, floored for use as priorities
  double loss = 0;
};

class Agent {
 public:
  Agent(std::size_t state_dim, std::size_t action_dim, const AgentHyperparams& hp);

  /// Actor output (running batch-norm statistics) plus N(0, sigma^2) noise, clamped to [0,1].
  std::vector<double> select_action(std::span<const double> state, double sigma);

  /// Weighted TD regression toward r + gamma * Q'(s', mu'(s')); one Adam step on the critic.
  CriticUpdate update_critic(const std::vector<Transition>& batch, std::span<const double> weights);

  /// Deterministic policy-gradient step on the actor; critic parameters are untouched.
  void update_actor(const std::vector<Transition>& batch);

  void soft_update_targets();

  std::size_t state_dim() const { return state_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  const AgentHyperparams& hyperparams() const { return hp_; }
  Rng& rng() { return rng_; }

  nn::Network actor;
  nn::Network actor_target;
  Critic critic;
  Critic critic_target;
  nn::AdamState actor_opt;
  nn::AdamState critic_opt;

  nlohmann::json checkpoint() const;
  static Agent from_checkpoint(const nlohmann::json& j);

 private:
  std::size_t state_dim_;
  std::size_t action_dim_;
  AgentHyperparams hp_;
  Rng rng_;
};

nn::Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows);

}  // namespace dmsconfig
