#pragma once

// Regression trees grown by variance reduction and their bagged ensembles.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dmsconfig/random.hpp"

namespace dmsconfig {

struct ForestHyperparams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> max_depth;     // unlimited when empty
  std::size_t min_samples_leaf = 2;
  std::optional<std::size_t> max_features;  // floor(sqrt(d)) when empty
  bool bootstrap = true;
  std::uint64_t seed = 0;

  std::size_t features_per_split(std::size_t d) const;
  void check() const;
  bool operator==(const ForestHyperparams&) const = default;
};

/// Dense row-major feature matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0;       // rows with x[feature] <= threshold go left
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0;           // mean training target of the node
};

class RegressionTree {
 public:
  RegressionTree() = default;
  explicit RegressionTree(std::vector<TreeNode> nodes);

  double predict(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t depth() const;
  std::size_t leaf_count() const;

 private:
  std::vector<TreeNode> nodes_;
};

/// Grows one tree on the given rows (indices may repeat for bootstrap draws).
/// Split candidates are midpoints between consecutive distinct values; ties in
/// child SSE go to the lower threshold, then the lower feature index.
RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const ForestHyperparams& hp, Rng& rng);

class Forest {
 public:
  Forest() = default;
  explicit Forest(std::vector<RegressionTree> trees);

  double predict(std::span<const double> x) const;
  const std::vector<RegressionTree>& trees() const { return trees_; }

 private:
  std::vector<RegressionTree> trees_;
};

/// Tree t uses its own stream derive_seed(hp.seed, {stream, t}).
Forest fit_forest(const FeatureMatrix& x, std::span<const double> y, const ForestHyperparams& hp,
                  std::uint64_t stream = 0);

}  // namespace dmsconfig
