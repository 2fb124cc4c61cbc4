#include "dmsconfig/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

namespace dmsconfig {

std::size_t ForestHyperparams::features_per_split(std::size_t d) const {
  if (max_features) return std::clamp<std::size_t>(*max_features, 1, d);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(d)))));
}

void ForestHyperparams::check() const {
  if (n_trees < 1) throw std::invalid_argument("forest: n_trees must be >= 1");
  if (min_samples_leaf < 1) throw std::invalid_argument("forest: min_samples_leaf must be >= 1");
  if (max_features && *max_features < 1) throw std::invalid_argument("forest: max_features must be >= 1");
}

RegressionTree::RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw std::invalid_argument("tree has no nodes");
  const auto n = static_cast<std::int32_t>(nodes_.size());
  for (std::int32_t i = 0; i < n; ++i) {
    const auto& node = nodes_[static_cast<std::size_t>(i)];
    if (node.feature >= 0 && (node.left <= i || node.right <= i || node.left >= n || node.right >= n))
      throw std::invalid_argument("tree node has invalid children");
  }
}

double RegressionTree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& node = nodes_[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                              : node.right);
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (nodes_[i].feature >= 0) {
      d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
    }
  }
  return best;
}

std::size_t RegressionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

namespace {

struct Split {
  double sse = 0;
  double threshold = 0;
  std::size_t feature = 0;
};

class TreeBuilder {
 public:
  TreeBuilder(const FeatureMatrix& x, std::span<const double> y, const ForestHyperparams& hp, Rng& rng)
      : x_(x), y_(y), hp_(hp), rng_(rng), mtry_(hp.features_per_split(x.cols())) {}

  std::vector<TreeNode> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();

    // Sum targets in sorted order so the result does not depend on row order.
    std::vector<double> ys(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) ys[i] = y_[rows[i]];
    std::sort(ys.begin(), ys.end());
    const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
    nodes_[id].value = mean;

    const bool depth_limited = hp_.max_depth && depth >= *hp_.max_depth;
    if (depth_limited || rows.size() < 2 * hp_.min_samples_leaf || ys.front() == ys.back()) return id;

    auto split = best_split(rows, mean);
    if (!split) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].feature = static_cast<std::int32_t>(split->feature);
    nodes_[id].threshold = split->threshold;
    const auto l = grow(std::move(left), depth + 1);
    const auto r = grow(std::move(right), depth + 1);
    nodes_[id].left = static_cast<std::int32_t>(l);
    nodes_[id].right = static_cast<std::int32_t>(r);
    return id;
  }

  std::vector<std::size_t> candidate_features() {
    std::vector<std::size_t> f(x_.cols());
    std::iota(f.begin(), f.end(), std::size_t{0});
    if (mtry_ < f.size()) {
      for (std::size_t i = 0; i < mtry_; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, f.size() - 1);
        std::swap(f[i], f[pick(rng_)]);
      }
      f.resize(mtry_);
      std::sort(f.begin(), f.end());
    }
    return f;
  }

  std::optional<Split> best_split(const std::vector<std::size_t>& rows, double mean) {
    const std::size_t n = rows.size();
    const std::size_t min_leaf = hp_.min_samples_leaf;
    std::optional<Split> best;
    std::vector<std::pair<double, double>> xy(n);
    std::vector<double> prefix(n + 1), prefix_sq(n + 1);

    for (auto f : candidate_features()) {
      for (std::size_t i = 0; i < n; ++i) xy[i] = {x_(rows[i], f), y_[rows[i]] - mean};
      std::sort(xy.begin(), xy.end());
      if (xy.front().first == xy.back().first) continue;
      for (std::size_t i = 0; i < n; ++i) {
        prefix[i + 1] = prefix[i] + xy[i].second;
        prefix_sq[i + 1] = prefix_sq[i] + xy[i].second * xy[i].second;
      }
      for (std::size_t k = min_leaf; k + min_leaf <= n; ++k) {
        // left = first k sorted rows
        const double lo = xy[k - 1].first;
        const double hi = xy[k].first;
        if (!(lo < hi)) continue;
        const auto nl = static_cast<double>(k);
        const auto nr = static_cast<double>(n - k);
        const double sl = prefix[k], sr = prefix[n] - prefix[k];
        const double sse = (prefix_sq[k] - sl * sl / nl) + (prefix_sq[n] - prefix_sq[k] - sr * sr / nr);
        double threshold = lo + (hi - lo) / 2;
        if (!(threshold < hi)) threshold = lo;
        const Split candidate{sse, threshold, f};
        if (!best || std::tie(candidate.sse, candidate.threshold, candidate.feature) <
                         std::tie(best->sse, best->threshold, best->feature))
          best = candidate;
      }
    }
    return best;
  }

  const FeatureMatrix& x_;
  std::span<const double> y_;
  const ForestHyperparams& hp_;
  Rng& rng_;
  std::size_t mtry_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree fit_tree(const FeatureMatrix& x, std::span<const double> y,
                        std::span<const std::size_t> rows, const ForestHyperparams& hp, Rng& rng) {
  hp.check();
  if (rows.empty()) throw std::invalid_argument("fit_tree: no rows");
  if (y.size() != x.rows()) throw std::invalid_argument("fit_tree: target length != row count");
  TreeBuilder builder(x, y, hp, rng);
  return RegressionTree(builder.build({rows.begin(), rows.end()}));
}

Forest::Forest(std::vector<RegressionTree> trees) : trees_(std::move(trees)) {
  if (trees_.empty()) throw std::invalid_argument("forest has no trees");
}

double Forest::predict(std::span<const double> x) const {
  double sum = 0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

Forest fit_forest(const FeatureMatrix& x, std::span<const double> y, const ForestHyperparams& hp,
                  std::uint64_t stream) {
  hp.check();
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("fit_forest: no rows");
  std::vector<RegressionTree> trees;
  trees.reserve(hp.n_trees);
  std::vector<std::size_t> rows(n);
  for (std::size_t t = 0; t < hp.n_trees; ++t) {
    Rng rng(derive_seed(hp.seed, {stream, t}));
    if (hp.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& r : rows) r = draw(rng);
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees.push_back(fit_tree(x, y, rows, hp, rng));
  }
  return Forest(std::move(trees));
}

}  // namespace dmsconfig
