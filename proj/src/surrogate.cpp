#include "dmsconfig/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"

namespace dmsconfig {

using nlohmann::json;

namespace {

double target_of(const Observation& o, std::size_t t) {
  if (t < kStateDim) return o.state[t];
  return t == kThroughputIndex ? o.throughput : o.latency;
}

ColumnStats stats_of(const std::vector<double>& v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return {*lo, *hi};
}

json tree_to_json(const RegressionTree& tree) {
  json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
       value = json::array();
  for (const auto& n : tree.nodes()) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    value.push_back(n.value);
  }
  return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

RegressionTree tree_from_json(const json& j) {
  const auto& feature = j.at("feature");
  std::vector<TreeNode> nodes(feature.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].feature = feature.at(i).get<std::int32_t>();
    nodes[i].threshold = j.at("threshold").at(i).get<double>();
    nodes[i].left = j.at("left").at(i).get<std::int32_t>();
    nodes[i].right = j.at("right").at(i).get<std::int32_t>();
    nodes[i].value = j.at("value").at(i).get<double>();
  }
  return RegressionTree(std::move(nodes));
}

json stats_to_json(const std::vector<ColumnStats>& stats) {
  json out = json::array();
  for (const auto& s : stats) out.push_back({s.min, s.max});
  return out;
}

std::vector<ColumnStats> stats_from_json(const json& j) {
  std::vector<ColumnStats> out;
  for (const auto& s : j) out.push_back({s.at(0).get<double>(), s.at(1).get<double>()});
  return out;
}

}  // namespace

std::string output_name(std::size_t i) {
  if (i < kStateDim) return std::string(kMetricNames[i]);
  if (i == kThroughputIndex) return std::string(kThroughputColumn);
  if (i == kLatencyIndex) return std::string(kLatencyColumn);
  throw std::out_of_range("output index");
}

std::vector<double> model_features(const SurrogateModel& model, const Configuration& config) {
  auto raw = numeric_features(config, model.space);
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = model.input_stats[i].normalize(raw[i]);
  return raw;
}

TrainResult train(const Dataset& data, const ParameterSpace& space, const ForestHyperparams& hp,
                  double holdout_fraction) {
  hp.check();
  if (data.rows.size() < 10) throw std::invalid_argument("train: need at least 10 rows");
  if (!(holdout_fraction >= 0 && holdout_fraction < 1))
    throw std::invalid_argument("train: holdout fraction must be in [0,1)");

  const std::size_t n = data.rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(derive_seed(hp.seed, {0x73706c6974}));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_hold = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(n)));
  if (n - n_hold < 1) throw std::invalid_argument("train: no training rows left");
  std::vector<std::size_t> train_rows(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_hold));
  std::vector<Observation> holdout;
  for (auto it = order.end() - static_cast<std::ptrdiff_t>(n_hold); it != order.end(); ++it)
    holdout.push_back(data.rows[*it]);

  TrainResult result;
  SurrogateModel& model = result.model;
  model.space = space;
  model.scenario = data.scenario;
  model.hyperparams = hp;

  const std::size_t d = space.dim();
  const std::size_t m = train_rows.size();
  std::vector<std::vector<double>> raw_features(m);
  for (std::size_t i = 0; i < m; ++i) raw_features[i] = numeric_features(data.rows[train_rows[i]].config, space);
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col(m);
    for (std::size_t i = 0; i < m; ++i) col[i] = raw_features[i][j];
    model.input_stats.push_back(stats_of(col));
  }
  FeatureMatrix x(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) x(i, j) = model.input_stats[j].normalize(raw_features[i][j]);

  for (std::size_t t = 0; t < kOutputDim; ++t) {
    std::vector<double> y(m);
    for (std::size_t i = 0; i < m; ++i) y[i] = target_of(data.rows[train_rows[i]], t);
    model.output_stats.push_back(stats_of(y));
    model.forests.push_back(fit_forest(x, y, hp, t));
  }

  if (!holdout.empty()) result.report = evaluate_accuracy(model, holdout);
  return result;
}

Prediction predict(const SurrogateModel& model, const Configuration& config) {
  const auto x = model_features(model, config);
  Prediction p;
  for (std::size_t t = 0; t < kOutputDim; ++t) {
    const double raw = model.forests[t].predict(x);
    const double norm = model.output_stats[t].normalize(raw);
    if (t < kStateDim) {
      p.state_raw[t] = raw;
      p.state_norm[t] = norm;
    } else if (t == kThroughputIndex) {
      p.throughput_raw = raw;
      p.throughput_norm = norm;
    } else {
      p.latency_raw = raw;
      p.latency_norm = norm;
    }
  }
  return p;
}

AccuracyReport evaluate_accuracy(const SurrogateModel& model, const std::vector<Observation>& rows) {
  AccuracyReport report;
  report.holdout_rows = rows.size();
  if (rows.empty()) return report;
  std::vector<Prediction> preds;
  preds.reserve(rows.size());
  for (const auto& r : rows) preds.push_back(predict(model, r.config));
  for (std::size_t t = 0; t < kOutputDim; ++t) {
    double mean = 0;
    for (const auto& r : rows) mean += target_of(r, t);
    mean /= static_cast<double>(rows.size());
    double ss_res = 0, ss_tot = 0, abs_err = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double truth = target_of(rows[i], t);
      const auto& p = preds[i];
      const double guess = t < kStateDim ? p.state_raw[t] : (t == kThroughputIndex ? p.throughput_raw : p.latency_raw);
      ss_res += (truth - guess) * (truth - guess);
      ss_tot += (truth - mean) * (truth - mean);
      abs_err += std::abs(truth - guess);
    }
    TargetAccuracy acc;
    acc.target = output_name(t);
    acc.mae = abs_err / static_cast<double>(rows.size());
    const bool degenerate = model.output_stats[t].max == model.output_stats[t].min || ss_tot == 0;
    if (!degenerate) {
      acc.r2 = 1.0 - ss_res / ss_tot;
      acc.accuracy_percent = 100.0 * std::max(0.0, *acc.r2);
    }
    report.targets.push_back(acc);
  }
  return report;
}

std::string format_accuracy(const AccuracyReport& report) {
  std::ostringstream out;
  out << "held-out rows: " << report.holdout_rows << '\n';
  char line[160];
  for (const auto& t : report.targets) {
    if (t.r2)
      std::snprintf(line, sizeof(line), "  %-34s R2 %8.4f  MAE %12.5g  accuracy %6.2f%%\n", t.target.c_str(),
                    *t.r2, t.mae, *t.accuracy_percent);
    else
      std::snprintf(line, sizeof(line), "  %-34s R2 undefined (constant column)  MAE %12.5g\n",
                    t.target.c_str(), t.mae);
    out << line;
  }
  return out.str();
}

std::string model_to_string(const SurrogateModel& model) {
  const auto& hp = model.hyperparams;
  json j;
  j["format"] = "dmsconfig-surrogate";
  j["version"] = kModelFormatVersion;
  j["space"] = serialize_space(model.space);
  j["scenario"] = serialize_scenario(model.scenario);
  j["hyperparams"] = {{"n_trees", hp.n_trees},
                      {"max_depth", hp.max_depth ? json(*hp.max_depth) : json(nullptr)},
                      {"min_samples_leaf", hp.min_samples_leaf},
                      {"max_features", hp.max_features ? json(*hp.max_features) : json("sqrt")},
                      {"bootstrap", hp.bootstrap},
                      {"seed", hp.seed}};
  j["input_stats"] = stats_to_json(model.input_stats);
  j["output_stats"] = stats_to_json(model.output_stats);
  json outputs = json::array();
  for (std::size_t t = 0; t < model.forests.size(); ++t) {
    json trees = json::array();
    for (const auto& tree : model.forests[t].trees()) trees.push_back(tree_to_json(tree));
    outputs.push_back({{"name", output_name(t)}, {"trees", trees}});
  }
  j["forests"] = outputs;
  return j.dump();
}

SurrogateModel model_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "dmsconfig-surrogate") throw FormatError("not a surrogate model file");
    if (j.at("version").get<int>() != kModelFormatVersion)
      throw FormatError("unsupported model version " + j.at("version").dump());
    SurrogateModel model;
    model.space = parse_space(j.at("space").get<std::string>());
    model.scenario = parse_scenario(j.at("scenario").get<std::string>());
    const auto& h = j.at("hyperparams");
    auto& hp = model.hyperparams;
    hp.n_trees = h.at("n_trees").get<std::size_t>();
    if (!h.at("max_depth").is_null()) hp.max_depth = h.at("max_depth").get<std::size_t>();
    hp.min_samples_leaf = h.at("min_samples_leaf").get<std::size_t>();
    if (!h.at("max_features").is_string()) hp.max_features = h.at("max_features").get<std::size_t>();
    hp.bootstrap = h.at("bootstrap").get<bool>();
    hp.seed = h.at("seed").get<std::uint64_t>();
    model.input_stats = stats_from_json(j.at("input_stats"));
    model.output_stats = stats_from_json(j.at("output_stats"));
    for (const auto& f : j.at("forests")) {
      std::vector<RegressionTree> trees;
      for (const auto& t : f.at("trees")) trees.push_back(tree_from_json(t));
      model.forests.emplace_back(std::move(trees));
    }
    if (model.input_stats.size() != model.space.dim() || model.output_stats.size() != kOutputDim ||
        model.forests.size() != kOutputDim)
      throw FormatError("model file has inconsistent column counts");
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const SurrogateModel& model, const std::string& path) {
  write_text_file(path, model_to_string(model));
}

SurrogateModel load_model(const std::string& path) { return model_from_string(read_text_file(path)); }

}  // namespace dmsconfig
