#pragma once

#include <limits>

namespace dmsconfig {

inline constexpr double kUnconstrained = std::numeric_limits<double>::infinity();

enum class RewardMode {
  /// Magnitude from the latency-penalized throughput formula, sign forced by
  /// the violation / worse-than-baseline semantics.
  corrected,
  /// The formula applied verbatim, including its sign quirks. For comparison only.
  literal,
};

/// All values are in normalized units. latency_limit may be kUnconstrained.
struct RewardContext {
  double baseline_throughput = 0;  // T0
  double previous_throughput = 0;  // T_{t-1}
  double latency_limit = kUnconstrained;
};

/// Latency equal to the limit is within the constraint.
inline bool violates(double latency, double limit) { return latency > limit; }

/// Throws std::domain_error on non-finite throughput/latency inputs or a non-positive limit.
double compute_reward(double throughput, double latency, const RewardContext& ctx,
                      RewardMode mode = RewardMode::corrected);

}  // namespace dmsconfig
