#include "dmsconfig/agent.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "dmsconfig/error.hpp"

namespace dmsconfig {

using nn::Matrix;

void AgentHyperparams::check() const {
  if (!(gamma >= 0 && gamma <= 1)) throw std::invalid_argument("gamma must be in [0,1]");
  if (!(tau > 0 && tau <= 1)) throw std::invalid_argument("tau must be in (0,1]");
  if (!(actor_lr > 0) || !(critic_lr > 0)) throw std::invalid_argument("learning rates must be > 0");
  if (batch_size < 1 || buffer_capacity < 1 || episode_length < 1 || total_steps < 1 || hidden_units < 1)
    throw std::invalid_argument("agent counts must be >= 1");
  if (batch_size > buffer_capacity) throw std::invalid_argument("batch size exceeds buffer capacity");
  if (priority_exponent < 0 || importance_exponent < 0 || importance_exponent > 1)
    throw std::invalid_argument("priority exponents out of range");
  if (noise_sigma_start < 0 || noise_decay <= 0 || noise_decay > 1)
    throw std::invalid_argument("noise schedule out of range");
  if (!(reward_clip > 0)) throw std::invalid_argument("reward clip must be > 0");
}

nlohmann::json to_json(const AgentHyperparams& hp) {
  return {{"gamma", hp.gamma},
          {"tau", hp.tau},
          {"actor_lr", hp.actor_lr},
          {"critic_lr", hp.critic_lr},
          {"batch_size", hp.batch_size},
          {"buffer_capacity", hp.buffer_capacity},
          {"priority_exponent", hp.priority_exponent},
          {"importance_exponent", hp.importance_exponent},
          {"noise_sigma_start", hp.noise_sigma_start},
          {"noise_decay", hp.noise_decay},
          {"episode_length", hp.episode_length},
          {"total_steps", hp.total_steps},
          {"hidden_units", hp.hidden_units},
          {"reward_clip", hp.reward_clip},
          {"reward_mode", hp.reward_mode == RewardMode::corrected ? "corrected" : "literal"},
          {"seed", hp.seed}};
}

AgentHyperparams agent_hyperparams_from_json(const nlohmann::json& j) {
  AgentHyperparams hp;
  hp.gamma = j.at("gamma");
  hp.tau = j.at("tau");
  hp.actor_lr = j.at("actor_lr");
  hp.critic_lr = j.at("critic_lr");
  hp.batch_size = j.at("batch_size");
  hp.buffer_capacity = j.at("buffer_capacity");
  hp.priority_exponent = j.at("priority_exponent");
  hp.importance_exponent = j.at("importance_exponent");
  hp.noise_sigma_start = j.at("noise_sigma_start");
  hp.noise_decay = j.at("noise_decay");
  hp.episode_length = j.at("episode_length");
  hp.total_steps = j.at("total_steps");
  hp.hidden_units = j.at("hidden_units");
  hp.reward_clip = j.at("reward_clip");
  hp.reward_mode = j.at("reward_mode") == "literal" ? RewardMode::literal : RewardMode::corrected;
  hp.seed = j.at("seed");
  return hp;
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw DimensionMismatch("ragged batch");
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

// Critic --------------------------------------------------------------------

Critic::Critic(Eigen::Index state_dim, Eigen::Index action_dim, Eigen::Index hidden, Rng& rng)
    : state_branch_({nn::make_dense(state_dim, hidden, rng), nn::Act{nn::Activation::relu}}),
      action_branch_({nn::make_dense(action_dim, hidden, rng), nn::Act{nn::Activation::relu}}),
      head_({nn::make_dense(2 * hidden, hidden, rng), nn::Act{nn::Activation::relu},
             nn::make_dense(hidden, 1, rng)}) {}

Critic::Critic(nn::Network state_branch, nn::Network action_branch, nn::Network head)
    : state_branch_(std::move(state_branch)), action_branch_(std::move(action_branch)), head_(std::move(head)) {
  if (head_.input_dim() != state_branch_.output_dim() + action_branch_.output_dim() || head_.output_dim() != 1)
    throw DimensionMismatch("critic head does not match its branches");
}

Matrix Critic::forward(const Matrix& states, const Matrix& actions) {
  if (states.rows() != actions.rows()) throw DimensionMismatch("critic: state/action batch sizes differ");
  const Matrix hs = state_branch_.forward(states);
  const Matrix ha = action_branch_.forward(actions);
  Matrix joined(hs.rows(), hs.cols() + ha.cols());
  joined << hs, ha;
  return head_.forward(joined);
}

Matrix Critic::infer(const Matrix& states, const Matrix& actions) const {
  if (states.rows() != actions.rows()) throw DimensionMismatch("critic: state/action batch sizes differ");
  const Matrix hs = state_branch_.infer(states);
  const Matrix ha = action_branch_.infer(actions);
  Matrix joined(hs.rows(), hs.cols() + ha.cols());
  joined << hs, ha;
  return head_.infer(joined);
}

Critic::Gradients Critic::backward(const Matrix& upstream) const {
  auto gh = head_.backward(upstream);
  const auto ws = state_branch_.output_dim();
  const Matrix up_s = gh.input.leftCols(ws);
  const Matrix up_a = gh.input.rightCols(gh.input.cols() - ws);
  auto gs = state_branch_.backward(up_s);
  auto ga = action_branch_.backward(up_a);
  Gradients out;
  for (auto* src : {&gs.params, &ga.params, &gh.params})
    for (auto& m : *src) out.params.push_back(std::move(m));
  out.states = std::move(gs.input);
  out.actions = std::move(ga.input);
  return out;
}

Matrix Critic::action_gradient(const Matrix& states, const Matrix& actions) {
  const Matrix q = forward(states, actions);
  return backward(Matrix::Ones(q.rows(), 1)).actions;
}

std::vector<Matrix*> Critic::parameters() {
  std::vector<Matrix*> out;
  for (auto* net : {&state_branch_, &action_branch_, &head_})
    for (auto* p : net->parameters()) out.push_back(p);
  return out;
}

std::vector<const Matrix*> Critic::parameters() const {
  auto ps = const_cast<Critic*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

bool Critic::same_architecture(const Critic& other) const {
  return state_branch_.same_architecture(other.state_branch_) &&
         action_branch_.same_architecture(other.action_branch_) && head_.same_architecture(other.head_);
}

void soft_update(const Critic& online, Critic& target, double tau) {
  if (!online.same_architecture(target)) throw DimensionMismatch("soft_update: critic architectures differ");
  nn::soft_update(online.state_branch_, target.state_branch_, tau);
  nn::soft_update(online.action_branch_, target.action_branch_, tau);
  nn::soft_update(online.head_, target.head_, tau);
}

nn::Network make_actor(Eigen::Index state_dim, Eigen::Index action_dim, Eigen::Index hidden, Rng& rng) {
  return nn::Network({nn::make_dense(state_dim, hidden, rng), nn::Act{nn::Activation::relu},
                      nn::make_batch_norm(hidden), nn::make_dense(hidden, hidden, rng),
                      nn::Act{nn::Activation::relu}, nn::make_dense(hidden, action_dim, rng, 3e-3),
                      nn::Act{nn::Activation::sigmoid}});
}

// Agent ---------------------------------------------------------------------

Agent::Agent(std::size_t state_dim, std::size_t action_dim, const AgentHyperparams& hp)
    : state_dim_(state_dim), action_dim_(action_dim), hp_(hp), rng_(hp.seed) {
  hp_.check();
  const auto s = static_cast<Eigen::Index>(state_dim);
  const auto a = static_cast<Eigen::Index>(action_dim);
  const auto h = static_cast<Eigen::Index>(hp.hidden_units);
  actor = make_actor(s, a, h, rng_);
  critic = Critic(s, a, h, rng_);
  actor_target = actor;
  critic_target = critic;
  actor_target.set_mode(nn::Mode::eval);
}

std::vector<double> Agent::select_action(std::span<const double> state, double sigma) {
  if (state.size() != state_dim_) throw DimensionMismatch("select_action: wrong state length");
  Matrix s(1, static_cast<Eigen::Index>(state_dim_));
  for (std::size_t i = 0; i < state_dim_; ++i) s(0, static_cast<Eigen::Index>(i)) = state[i];
  actor.set_mode(nn::Mode::eval);
  const Matrix mu = actor.infer(s);
  std::vector<double> a(action_dim_);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t i = 0; i < action_dim_; ++i) {
    double v = mu(0, static_cast<Eigen::Index>(i));
    if (sigma > 0) v += sigma * noise(rng_);
    a[i] = std::clamp(v, 0.0, 1.0);
  }
  return a;
}

CriticUpdate Agent::update_critic(const std::vector<Transition>& batch, std::span<const double> weights) {
  if (batch.empty()) throw std::invalid_argument("update_critic: empty batch");
  if (weights.size() != batch.size()) throw DimensionMismatch("update_critic: weight count mismatch");
  std::vector<std::vector<double>> s, a, s2;
  for (const auto& t : batch) {
    s.push_back(t.state);
    a.push_back(t.action);
    s2.push_back(t.next_state);
  }
  const Matrix states = rows_to_matrix(s), actions = rows_to_matrix(a), next_states = rows_to_matrix(s2);
  if (states.cols() != static_cast<Eigen::Index>(state_dim_) ||
      actions.cols() != static_cast<Eigen::Index>(action_dim_) || next_states.cols() != states.cols())
    throw DimensionMismatch("update_critic: transition shapes do not match the agent");

  actor_target.set_mode(nn::Mode::eval);
  const Matrix next_q = critic_target.infer(next_states, actor_target.infer(next_states));
  const Matrix q = critic.forward(states, actions);

  const auto n = static_cast<double>(batch.size());
  Matrix upstream(q.rows(), 1);
  CriticUpdate out;
  out.td_errors.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    const double y = batch[i].reward + hp_.gamma * next_q(r, 0);
    const double diff = y - q(r, 0);
    out.loss += weights[i] * diff * diff / n;
    upstream(r, 0) = -2.0 * weights[i] * diff / n;
    out.td_errors[i] = std::max(std::abs(diff), kPriorityFloor);
  }
  const auto grads = critic.backward(upstream);
  const auto params = critic.parameters();
  nn::adam_step(params, grads.params, critic_opt, hp_.critic_lr);
  return out;
}

void Agent::update_actor(const std::vector<Transition>& batch) {
  if (batch.empty()) throw std::invalid_argument("update_actor: empty batch");
  std::vector<std::vector<double>> s;
  for (const auto& t : batch) s.push_back(t.state);
  const Matrix states = rows_to_matrix(s);
  if (states.cols() != static_cast<Eigen::Index>(state_dim_)) throw DimensionMismatch("update_actor: state shape");
  actor.set_mode(nn::Mode::train);
  actor_ascent_step(actor, actor_opt, hp_.actor_lr, states, critic);
  actor.set_mode(nn::Mode::eval);
}

void Agent::soft_update_targets() {
  nn::soft_update(actor, actor_target, hp_.tau);
  soft_update(critic, critic_target, hp_.tau);
}

nlohmann::json Agent::checkpoint() const {
  auto critic_json = [](const Critic& c) {
    return nlohmann::json{{"state_branch", nn::to_json(c.state_branch())},
                          {"action_branch", nn::to_json(c.action_branch())},
                          {"head", nn::to_json(c.head())}};
  };
  std::ostringstream rng_state;
  rng_state << rng_;
  return {{"format", "dmsconfig-agent"},
          {"version", 1},
          {"state_dim", state_dim_},
          {"action_dim", action_dim_},
          {"hyperparams", to_json(hp_)},
          {"actor", nn::to_json(actor)},
          {"actor_target", nn::to_json(actor_target)},
          {"critic", critic_json(critic)},
          {"critic_target", critic_json(critic_target)},
          {"actor_opt", nn::to_json(actor_opt)},
          {"critic_opt", nn::to_json(critic_opt)},
          {"rng", rng_state.str()}};
}

Agent Agent::from_checkpoint(const nlohmann::json& j) {
  if (j.at("format") != "dmsconfig-agent" || j.at("version") != 1) throw FormatError("not an agent checkpoint v1");
  auto critic_from = [](const nlohmann::json& c) {
    return Critic(nn::network_from_json(c.at("state_branch")), nn::network_from_json(c.at("action_branch")),
                  nn::network_from_json(c.at("head")));
  };
  Agent agent(j.at("state_dim").get<std::size_t>(), j.at("action_dim").get<std::size_t>(),
              agent_hyperparams_from_json(j.at("hyperparams")));
  agent.actor = nn::network_from_json(j.at("actor"));
  agent.actor_target = nn::network_from_json(j.at("actor_target"));
  agent.critic = critic_from(j.at("critic"));
  agent.critic_target = critic_from(j.at("critic_target"));
  agent.actor_opt = nn::adam_from_json(j.at("actor_opt"));
  agent.critic_opt = nn::adam_from_json(j.at("critic_opt"));
  std::istringstream rng_state(j.at("rng").get<std::string>());
  rng_state >> agent.rng_;
  return agent;
}

}  // namespace dmsconfig
