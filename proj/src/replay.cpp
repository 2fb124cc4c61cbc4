#include "dmsconfig/replay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dmsconfig {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::add(Transition t) {
  t.priority = max_priority_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
}

std::vector<double> ReplayBuffer::probabilities(double alpha) const {
  std::vector<double> p(items_.size());
  double total = 0;
  for (std::size_t i = 0; i < items_.size(); ++i) total += p[i] = std::pow(items_[i].priority, alpha);
  for (auto& x : p) x /= total;
  return p;
}

Minibatch ReplayBuffer::sample(std::size_t n, double alpha, double beta, Rng& rng) const {
  if (n == 0 || items_.size() < n) throw std::length_error("replay buffer underflow");
  std::vector<double> cumulative(items_.size());
  double total = 0;
  double min_weight_term = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    const double w = std::pow(items_[i].priority, alpha);
    total += w;
    cumulative[i] = total;
    min_weight_term = std::min(min_weight_term, w);
  }
  const auto size = static_cast<double>(items_.size());
  const double max_weight = std::pow(size * min_weight_term / total, -beta);

  Minibatch out;
  out.indices.reserve(n);
  out.weights.reserve(n);
  out.items.reserve(n);
  std::uniform_real_distribution<double> u(0.0, total);
  for (std::size_t k = 0; k < n; ++k) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
    if (it == cumulative.end()) --it;
    const auto i = static_cast<std::size_t>(it - cumulative.begin());
    const double p = std::pow(items_[i].priority, alpha) / total;
    out.indices.push_back(i);
    out.weights.push_back(std::pow(size * p, -beta) / max_weight);
    out.items.push_back(items_[i]);
  }
  return out;
}

void ReplayBuffer::update_priorities(const std::vector<std::size_t>& indices, const std::vector<double>& td_errors) {
  if (indices.size() != td_errors.size()) throw std::invalid_argument("priority update size mismatch");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const double p = std::max(std::abs(td_errors[k]), kPriorityFloor);
    items_.at(indices[k]).priority = p;
    max_priority_ = std::max(max_priority_, p);
  }
}

}  // namespace dmsconfig
