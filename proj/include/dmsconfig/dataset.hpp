#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmsconfig/oracle.hpp"

namespace dmsconfig {

struct Dataset {
  Scenario scenario;
  std::vector<Observation> rows;
  std::uint64_t seed = 0;
  double noise_sigma = 0;
  std::string profile_version = "v1";
};

/// Oracle observations over an LHS design. Row i depends only on (seed, i),
/// so the result is identical for every parallelism level.
Dataset generate_dataset(const ParameterSpace& space, const Scenario& scenario, std::size_t n,
                         double noise_sigma, std::uint64_t seed, unsigned parallelism = 1,
                         const OracleProfile& profile = {});

/// Canonical column names: knobs in space order, then the 7 metrics, throughput, latency.
std::vector<std::string> dataset_columns(const ParameterSpace& space);

std::string dataset_to_csv(const Dataset& data, const ParameterSpace& space);
std::string dataset_metadata(const Dataset& data);

/// Writes `path` (CSV) and `path + ".meta"`.
void write_dataset(const Dataset& data, const ParameterSpace& space, const std::string& path);
Dataset read_dataset(const std::string& path, const ParameterSpace& space);

}  // namespace dmsconfig
