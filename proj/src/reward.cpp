#include "dmsconfig/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace dmsconfig {

double compute_reward(double throughput, double latency, const RewardContext& ctx, RewardMode mode) {
  if (!std::isfinite(throughput) || !std::isfinite(latency) || !std::isfinite(ctx.baseline_throughput) ||
      !std::isfinite(ctx.previous_throughput) || std::isnan(ctx.latency_limit))
    throw std::domain_error("compute_reward: non-finite input");
  if (!(ctx.latency_limit > 0)) throw std::domain_error("compute_reward: latency limit must be > 0");

  const double gain_vs_baseline = throughput - ctx.baseline_throughput;
  const double gain_vs_previous = throughput - ctx.previous_throughput;
  const bool above = gain_vs_baseline > 0;
  const double throughput_term = above ? ((1 + gain_vs_baseline) * (1 + gain_vs_baseline) - 1) *
                                             std::abs(1 + gain_vs_previous)
                                       : ((1 - gain_vs_baseline) * (1 - gain_vs_baseline) - 1) *
                                             std::abs(1 - gain_vs_previous);
  if (throughput_term == 0) return 0.0;

  const bool unconstrained = std::isinf(ctx.latency_limit);
  const double overshoot = unconstrained ? 0.0 : latency - ctx.latency_limit;
  const double exponent = unconstrained ? 0.0 : std::floor(latency / ctx.latency_limit);

  if (mode == RewardMode::literal) {
    const double base = above ? -1 - overshoot : 1 + overshoot;
    return std::pow(base, exponent) * throughput_term;
  }

  if (!violates(latency, ctx.latency_limit)) return above ? throughput_term : -throughput_term;
  const double penalty = std::pow(1 + overshoot, exponent);
  return -penalty * throughput_term;
}

}  // namespace dmsconfig
