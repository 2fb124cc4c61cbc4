#pragma once

#include <cstdint>
#include <vector>

#include "dmsconfig/config_space.hpp"

namespace dmsconfig {

struct SampleBatch {
  std::vector<Configuration> configs;
  /// The same points before decoding, one row per sample, in [0,1)^d.
  std::vector<std::vector<double>> unit_points;
  std::uint64_t seed = 0;
  std::size_t n = 0;
};

/// Plain Latin hypercube design in the unit cube: each of the n equal-width
/// intervals of every dimension holds exactly one point.
std::vector<std::vector<double>> lhs_unit(std::size_t n, std::size_t d, std::uint64_t seed);

SampleBatch lhs_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed);

}  // namespace dmsconfig
