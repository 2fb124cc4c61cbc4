#pragma once

// Per-scenario performance model: one random forest per output column,
// trained on min-max normalized knob features.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dmsconfig/dataset.hpp"
#include "dmsconfig/forest.hpp"

namespace dmsconfig {

inline constexpr std::size_t kOutputDim = kStateDim + 2;  // 7 metrics, throughput, latency
inline constexpr std::size_t kThroughputIndex = kStateDim;
inline constexpr std::size_t kLatencyIndex = kStateDim + 1;
inline constexpr int kModelFormatVersion = 1;

struct ColumnStats {
  double min = 0;
  double max = 0;

  /// Maps into [0,1] over the training range; a constant column maps to 0.
  double normalize(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
  double denormalize(double u) const { return min + u * (max - min); }
  bool operator==(const ColumnStats&) const = default;
};

std::string output_name(std::size_t i);

struct SurrogateModel {
  ParameterSpace space = default_space();
  Scenario scenario;
  ForestHyperparams hyperparams;
  std::vector<ColumnStats> input_stats;    // one per knob
  std::vector<ColumnStats> output_stats;   // kOutputDim entries
  std::vector<Forest> forests;             // kOutputDim entries, fit on raw targets
};

struct Prediction {
  std::array<double, kStateDim> state_norm{};
  std::array<double, kStateDim> state_raw{};
  double throughput_norm = 0;
  double throughput_raw = 0;
  double latency_norm = 0;
  double latency_raw = 0;
};

struct TargetAccuracy {
  std::string target;
  std::optional<double> r2;  // undefined for a constant column
  double mae = 0;
  /// R^2 clipped at zero, as a percentage.
  std::optional<double> accuracy_percent;
};

struct AccuracyReport {
  std::size_t holdout_rows = 0;
  std::vector<TargetAccuracy> targets;  // empty when nothing was held out
};

struct TrainResult {
  SurrogateModel model;
  AccuracyReport report;
};

/// Splits off round(holdout_fraction * n) rows (seeded permutation), derives
/// normalization from the training rows and fits one forest per output.
TrainResult train(const Dataset& data, const ParameterSpace& space, const ForestHyperparams& hp,
                  double holdout_fraction);

Prediction predict(const SurrogateModel& model, const Configuration& config);

std::vector<double> model_features(const SurrogateModel& model, const Configuration& config);

AccuracyReport evaluate_accuracy(const SurrogateModel& model, const std::vector<Observation>& rows);
std::string format_accuracy(const AccuracyReport& report);

std::string model_to_string(const SurrogateModel& model);
SurrogateModel model_from_string(const std::string& text);
void save_model(const SurrogateModel& model, const std::string& path);
SurrogateModel load_model(const std::string& path);

}  // namespace dmsconfig
