#pragma once

// Bounded experience store with proportional prioritized sampling.

#include <vector>

#include "dmsconfig/random.hpp"

namespace dmsconfig {

inline constexpr double kPriorityFloor = 1e-6;

struct Transition {
  std::vector<double> state;
  std::vector<double> action;
  double reward = 0;
  std::vector<double> next_state;
  double priority = 1;
};

struct Minibatch {
  std::vector<std::size_t> indices;
  std::vector<double> weights;  // importance weights, max over the buffer = 1
  std::vector<Transition> items;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  /// Inserts with the current maximum priority, evicting the oldest item when full.
  void add(Transition t);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const Transition& at(std::size_t i) const { return items_.at(i); }
  double max_priority() const { return max_priority_; }

  /// Draws n indices with replacement, P(i) proportional to priority_i^alpha;
  /// weight_i = (size * P(i))^-beta / max_j (size * P(j))^-beta.
  Minibatch sample(std::size_t n, double alpha, double beta, Rng& rng) const;

  /// Sets priorities to max(|td|, floor) and tracks the running maximum.
  void update_priorities(const std::vector<std::size_t>& indices, const std::vector<double>& td_errors);

  /// Sampling probabilities for the given alpha (test/diagnostic helper).
  std::vector<double> probabilities(double alpha) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t next_ = 0;
  double max_priority_ = 1.0;
};

}  // namespace dmsconfig
