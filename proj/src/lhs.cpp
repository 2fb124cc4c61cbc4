#include "dmsconfig/lhs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dmsconfig/random.hpp"

namespace dmsconfig {

std::vector<std::vector<double>> lhs_unit(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("lhs: sample count must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> points(n, std::vector<double>(d));
  std::vector<std::size_t> perm(n);
  const auto nd = static_cast<double>(n);
  const double width = 1.0 / nd;
  for (std::size_t j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const auto cell = static_cast<double>(perm[i]);
      double x = (cell + uniform01(rng)) * width;
      // nudge across cell edges lost to rounding so floor(x * n) == cell
      while (std::floor(x * nd) < cell) x = std::nextafter(x, 1.0);
      while (std::floor(x * nd) > cell) x = std::nextafter(x, 0.0);
      points[i][j] = x;
    }
  }
  return points;
}

SampleBatch lhs_sample(const ParameterSpace& space, std::size_t n, std::uint64_t seed) {
  SampleBatch batch;
  batch.seed = seed;
  batch.n = n;
  batch.unit_points = lhs_unit(n, space.dim(), seed);
  batch.configs.reserve(n);
  for (const auto& p : batch.unit_points) batch.configs.push_back(denormalize(p, space));
  return batch;
}

}  // namespace dmsconfig
