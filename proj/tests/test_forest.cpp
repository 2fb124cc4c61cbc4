#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dmsconfig/error.hpp"
#include "dmsconfig/lhs.hpp"
#include "dmsconfig/surrogate.hpp"

using namespace dmsconfig;

namespace {

ForestHyperparams exact_fit(std::size_t d) {
  ForestHyperparams hp;
  hp.n_trees = 3;
  hp.min_samples_leaf = 1;
  hp.max_features = d;
  hp.bootstrap = false;
  return hp;
}

std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> r(n);
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

// Exhaustive search for the best single split: (sse, threshold, feature).
std::tuple<double, double, int> brute_force_root(const FeatureMatrix& x, const std::vector<double>& y) {
  std::tuple<double, double, int> best{INFINITY, 0, -1};
  for (std::size_t f = 0; f < x.cols(); ++f) {
    std::vector<double> vals;
    for (std::size_t i = 0; i < x.rows(); ++i) vals.push_back(x(i, f));
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = 0.5 * (vals[k] + vals[k + 1]);
      double sl = 0, sr = 0, nl = 0, nr = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) (x(i, f) <= t ? (sl += y[i], nl += 1) : (sr += y[i], nr += 1));
      const double ml = sl / nl, mr = sr / nr;
      double sse = 0;
      for (std::size_t i = 0; i < x.rows(); ++i) sse += std::pow(y[i] - (x(i, f) <= t ? ml : mr), 2);
      const std::tuple<double, double, int> cand{sse, t, int(f)};
      if (std::get<0>(cand) < std::get<0>(best) - 1e-12) best = cand;
    }
  }
  return best;
}

Dataset small_dataset(std::size_t n, double sigma, std::uint64_t seed) {
  return generate_dataset(default_space(), use_case(2), n, sigma, seed);
}

}  // namespace

TEST(Tree, FourPointsExactFit) {
  FeatureMatrix x(4, 1);
  const std::vector<double> xs = {0.1, 0.7, 0.3, 0.9};
  const std::vector<double> y = {5, -2, 8, 1};
  for (std::size_t i = 0; i < 4; ++i) x(i, 0) = xs[i];
  ForestHyperparams hp;
  hp.min_samples_leaf = 1;
  hp.max_features = 1;
  hp.bootstrap = false;
  Rng rng(1);
  const auto rows = all_rows(4);
  const auto tree = fit_tree(x, y, rows, hp, rng);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(tree.predict(x.row(i)), y[i]);
  EXPECT_EQ(tree.leaf_count(), 4u);
  // root: best of the midpoints 0.2, 0.5, 0.8 on sorted targets (5, 8, -2, 1)
  EXPECT_DOUBLE_EQ(tree.nodes()[0].threshold, 0.5);
}

TEST(Tree, ConstantTargetIsOneLeaf) {
  FeatureMatrix x(6, 2);
  for (std::size_t i = 0; i < 6; ++i) x(i, 0) = double(i), x(i, 1) = double(i * i);
  const std::vector<double> y(6, 3.25);
  Rng rng(2);
  const auto rows = all_rows(6);
  const auto tree = fit_tree(x, y, rows, exact_fit(2), rng);
  EXPECT_EQ(tree.nodes().size(), 1u);
  EXPECT_EQ(tree.predict(x.row(3)), 3.25);
}

TEST(Tree, InseparableDuplicatesPredictMean) {
  FeatureMatrix x(3, 1);
  for (std::size_t i = 0; i < 3; ++i) x(i, 0) = 0.4;
  const std::vector<double> y = {1, 2, 6};
  Rng rng(3);
  const auto rows = all_rows(3);
  const auto tree = fit_tree(x, y, rows, exact_fit(1), rng);
  EXPECT_EQ(tree.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(tree.predict(x.row(0)), 3.0);
}

TEST(Tree, RootSplitMatchesExhaustiveSearch) {
  Rng data_rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30, d = 3;
    FeatureMatrix x(n, d);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < d; ++f) x(i, f) = std::round(u(data_rng) * 20) / 20;
      y[i] = std::sin(5 * x(i, 0)) + x(i, 1) * x(i, 2) + 0.1 * u(data_rng);
    }
    auto hp = exact_fit(d);
    hp.max_depth = 1;
    Rng rng(5);
    const auto rows = all_rows(n);
    const auto tree = fit_tree(x, y, rows, hp, rng);
    const auto [sse, t, f] = brute_force_root(x, y);
    ASSERT_EQ(tree.nodes()[0].feature, f);
    ASSERT_DOUBLE_EQ(tree.nodes()[0].threshold, t);
    EXPECT_EQ(tree.depth(), 1u);
  }
}

TEST(Tree, MinSamplesLeafAndDepthLimits) {
  FeatureMatrix x(50, 1);
  std::vector<double> y(50);
  for (std::size_t i = 0; i < 50; ++i) x(i, 0) = double(i), y[i] = double(i % 7);
  auto hp = exact_fit(1);
  hp.min_samples_leaf = 5;
  Rng rng(6);
  const auto rows = all_rows(50);
  const auto tree = fit_tree(x, y, rows, hp, rng);
  std::vector<int> per_leaf(tree.nodes().size(), 0);
  for (std::size_t i = 0; i < 50; ++i) {
    std::size_t k = 0;
    while (tree.nodes()[k].feature >= 0)
      k = std::size_t(x(i, 0) <= tree.nodes()[k].threshold ? tree.nodes()[k].left : tree.nodes()[k].right);
    ++per_leaf[k];
  }
  for (std::size_t k = 0; k < per_leaf.size(); ++k)
    if (tree.nodes()[k].feature < 0) EXPECT_GE(per_leaf[k], 5);
  hp.max_depth = 2;
  Rng rng2(6);
  EXPECT_LE(fit_tree(x, y, rows, hp, rng2).depth(), 2u);
}

TEST(ForestHyperparams, Validation) {
  ForestHyperparams hp;
  EXPECT_EQ(hp.features_per_split(10), 3u);
  EXPECT_EQ(hp.features_per_split(1), 1u);
  hp.max_features = 50;
  EXPECT_EQ(hp.features_per_split(10), 10u);
  hp.n_trees = 0;
  EXPECT_THROW(hp.check(), std::invalid_argument);
  hp = {};
  hp.min_samples_leaf = 0;
  EXPECT_THROW(hp.check(), std::invalid_argument);
}

TEST(Forest, SingleTreeEqualsThatTree) {
  FeatureMatrix x(40, 2);
  std::vector<double> y(40);
  for (std::size_t i = 0; i < 40; ++i) x(i, 0) = double(i % 9), x(i, 1) = double(i % 4), y[i] = double(i);
  ForestHyperparams hp;
  hp.n_trees = 1;
  const auto forest = fit_forest(x, y, hp, 3);
  ASSERT_EQ(forest.trees().size(), 1u);
  for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(forest.predict(x.row(i)), forest.trees()[0].predict(x.row(i)));
}

TEST(Surrogate, ExactFitReproducesTrainingRows) {
  const auto space = default_space();
  const auto data = small_dataset(60, 0.02, 8);
  const auto result = train(data, space, exact_fit(space.dim()), 0.0);
  for (const auto& row : data.rows) {
    const auto p = predict(result.model, row.config);
    EXPECT_DOUBLE_EQ(p.throughput_raw, row.throughput);
    EXPECT_DOUBLE_EQ(p.latency_raw, row.latency);
    for (std::size_t m = 0; m < kStateDim; ++m) EXPECT_DOUBLE_EQ(p.state_raw[m], row.state[m]);
  }
}

TEST(Surrogate, PredictionsBoundedByTrainingRange) {
  const auto space = default_space();
  const auto data = small_dataset(200, 0.02, 9);
  ForestHyperparams hp;
  hp.n_trees = 20;
  const auto result = train(data, space, hp, 0.2);
  const auto queries = lhs_sample(space, 500, 10);
  for (const auto& c : queries.configs) {
    const auto p = predict(result.model, c);
    auto inside = [](double v, const ColumnStats& s) { return v >= s.min && v <= s.max; };
    ASSERT_TRUE(inside(p.throughput_raw, result.model.output_stats[kThroughputIndex]));
    ASSERT_TRUE(inside(p.latency_raw, result.model.output_stats[kLatencyIndex]));
    ASSERT_GE(p.throughput_norm, 0.0);
    ASSERT_LE(p.throughput_norm, 1.0);
    ASSERT_GE(p.latency_norm, 0.0);
    ASSERT_LE(p.latency_norm, 1.0);
    for (std::size_t m = 0; m < kStateDim; ++m) {
      ASSERT_TRUE(inside(p.state_raw[m], result.model.output_stats[m]));
      ASSERT_GE(p.state_norm[m], 0.0);
      ASSERT_LE(p.state_norm[m], 1.0);
    }
  }
}

TEST(Surrogate, PermutationInsensitive) {
  const auto space = default_space();
  auto data = small_dataset(80, 0.02, 11);
  const auto a = train(data, space, exact_fit(space.dim()), 0.0);
  std::reverse(data.rows.begin(), data.rows.end());
  std::rotate(data.rows.begin(), data.rows.begin() + 17, data.rows.end());
  const auto b = train(data, space, exact_fit(space.dim()), 0.0);
  const auto queries = lhs_sample(space, 300, 12);
  for (const auto& c : queries.configs) {
    const auto pa = predict(a.model, c);
    const auto pb = predict(b.model, c);
    ASSERT_EQ(pa.throughput_raw, pb.throughput_raw);
    ASSERT_EQ(pa.latency_raw, pb.latency_raw);
    ASSERT_EQ(pa.state_raw, pb.state_raw);
  }
}

TEST(Surrogate, DeterministicAndSerializable) {
  const auto space = default_space();
  const auto data = small_dataset(120, 0.02, 13);
  ForestHyperparams hp;
  hp.n_trees = 10;
  hp.seed = 4;
  const auto a = train(data, space, hp, 0.25);
  const auto b = train(data, space, hp, 0.25);
  const auto text = model_to_string(a.model);
  EXPECT_EQ(text, model_to_string(b.model));

  const auto dir = std::filesystem::temp_directory_path() / "dmsconfig_model_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "m.json").string();
  save_model(a.model, path);
  const auto back = load_model(path);
  EXPECT_EQ(model_to_string(back), text);
  EXPECT_EQ(back.scenario, a.model.scenario);
  EXPECT_EQ(back.hyperparams, hp);
  const auto queries = lhs_sample(space, 200, 14);
  for (const auto& c : queries.configs) {
    const auto p = predict(a.model, c);
    const auto q = predict(back, c);
    ASSERT_EQ(p.throughput_raw, q.throughput_raw);
    ASSERT_EQ(p.latency_norm, q.latency_norm);
    ASSERT_EQ(p.state_norm, q.state_norm);
  }
  std::filesystem::remove_all(dir);

  EXPECT_THROW(model_from_string("{\"format\":\"dmsconfig-surrogate\",\"version\":99}"), FormatError);
  EXPECT_THROW(model_from_string("not json"), FormatError);
}

TEST(Surrogate, HoldoutAndDegenerateColumns) {
  const auto space = default_space();
  auto data = small_dataset(50, 0.02, 15);
  const auto none = train(data, space, ForestHyperparams{.n_trees = 5}, 0.0);
  EXPECT_EQ(none.report.holdout_rows, 0u);
  EXPECT_TRUE(none.report.targets.empty());

  for (auto& row : data.rows) row.state[6] = 0.0;  // constant column
  const auto result = train(data, space, ForestHyperparams{.n_trees = 5}, 0.2);
  EXPECT_EQ(result.report.holdout_rows, 10u);
  ASSERT_EQ(result.report.targets.size(), kOutputDim);
  EXPECT_EQ(result.report.targets[6].target, "produce_request_temporary_bytes");
  EXPECT_FALSE(result.report.targets[6].r2.has_value());
  EXPECT_FALSE(result.report.targets[6].accuracy_percent.has_value());
  for (const auto& t : result.report.targets)
    if (t.r2) EXPECT_LE(*t.r2, 1.0);
  EXPECT_EQ(predict(result.model, space.defaults()).state_norm[6], 0.0);
  EXPECT_NE(format_accuracy(result.report).find("undefined"), std::string::npos);
}

TEST(Surrogate, RejectsBadInputs) {
  const auto space = default_space();
  const auto data = small_dataset(9, 0.0, 16);
  EXPECT_THROW(train(data, space, {}, 0.2), std::invalid_argument);
  const auto ok = small_dataset(20, 0.0, 16);
  EXPECT_THROW(train(ok, space, {}, 1.0), std::invalid_argument);
  const auto model = train(ok, space, ForestHyperparams{.n_trees = 2}, 0.0).model;
  auto bad = space.defaults();
  bad.values["linger.ms"] = std::int64_t{-1};
  EXPECT_THROW(predict(model, bad), InvalidConfiguration);
}

TEST(Surrogate, OutputNames) {
  EXPECT_EQ(output_name(0), "blkio_io_service_bytes");
  EXPECT_EQ(output_name(kThroughputIndex), "throughput_mbps");
  EXPECT_EQ(output_name(kLatencyIndex), "latency_ms");
}
