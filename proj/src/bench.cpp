#include "dmsconfig/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <openssl/evp.h>
#include <set>
#include <sstream>
#include <thread>

#include "dmsconfig/dataset.hpp"
#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"

namespace dmsconfig {

namespace fs = std::filesystem;

std::vector<Scenario> all_use_cases() {
  std::vector<Scenario> out;
  for (int k = 1; k <= 9; ++k) out.push_back(use_case(k));
  return out;
}

double lcf_to_limit(double default_latency_ms, double lcf) {
  if (!(default_latency_ms > 0)) throw std::invalid_argument("default latency must be > 0");
  if (std::isnan(lcf) || lcf < 0) throw std::invalid_argument("lcf must be >= 0");
  if (lcf == 0) return kUnconstrained;
  return default_latency_ms / lcf;
}

void ExperimentPlan::check() const {
  if (scenarios.empty()) throw std::invalid_argument("plan: no scenarios");
  for (const auto& s : scenarios) validate_scenario(s);
  for (double l : lcfs)
    if (std::isnan(l) || l < 0) throw std::invalid_argument("plan: lcf values must be >= 0");
  if (lcfs.empty() || seeds.empty()) throw std::invalid_argument("plan: need lcf values and seeds");
  if (dataset_size < 10) throw std::invalid_argument("plan: dataset_size must be >= 10");
  static const std::set<std::string> known = {"ddpg", "random", "anneal"};
  for (const auto& m : methods)
    if (!known.count(m)) throw std::invalid_argument("plan: unknown method '" + m + "'");
  std::set<std::string> names;
  for (const auto& s : scenarios)
    if (!names.insert(s.name).second) throw std::invalid_argument("plan: duplicate scenario name " + s.name);
  forest.check();
  agent.check();
  if (workers < 1) throw std::invalid_argument("plan: workers must be >= 1");
}

namespace {

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_same_v<T, double>)
      out << format_double(v[i]);
    else
      out << v[i];
  }
  return out.str();
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("'" + key + "': expected true|false");
}

std::string file_tag(const CellResult& c) {
  return "lcf-" + format_double(c.lcf) + "_seed-" + std::to_string(c.seed) + "_" + c.method;
}

}  // namespace

std::string serialize_plan(const ExperimentPlan& p) {
  std::ostringstream out;
  out << "# dmsconfig experiment plan\n";
  out << "lcf = " << join(p.lcfs) << '\n'
      << "dataset_size = " << p.dataset_size << '\n'
      << "noise_sigma = " << format_double(p.noise_sigma) << '\n'
      << "data_seed = " << p.data_seed << '\n'
      << "seeds = " << join(p.seeds) << '\n'
      << "methods = " << join(p.methods) << '\n'
      << "n_trees = " << p.forest.n_trees << '\n'
      << "max_depth = " << (p.forest.max_depth ? std::to_string(*p.forest.max_depth) : "unlimited") << '\n'
      << "min_samples_leaf = " << p.forest.min_samples_leaf << '\n'
      << "max_features = " << (p.forest.max_features ? std::to_string(*p.forest.max_features) : "sqrt") << '\n'
      << "bootstrap = " << (p.forest.bootstrap ? "true" : "false") << '\n'
      << "forest_seed = " << p.forest.seed << '\n'
      << "holdout_fraction = " << format_double(p.holdout_fraction) << '\n'
      << "total_steps = " << p.agent.total_steps << '\n'
      << "batch_size = " << p.agent.batch_size << '\n'
      << "buffer_capacity = " << p.agent.buffer_capacity << '\n'
      << "gamma = " << format_double(p.agent.gamma) << '\n'
      << "tau = " << format_double(p.agent.tau) << '\n'
      << "actor_lr = " << format_double(p.agent.actor_lr) << '\n'
      << "critic_lr = " << format_double(p.agent.critic_lr) << '\n'
      << "priority_exponent = " << format_double(p.agent.priority_exponent) << '\n'
      << "importance_exponent = " << format_double(p.agent.importance_exponent) << '\n'
      << "exploration_sigma = " << format_double(p.agent.noise_sigma_start) << '\n'
      << "exploration_decay = " << format_double(p.agent.noise_decay) << '\n'
      << "episode_length = " << p.agent.episode_length << '\n'
      << "hidden_units = " << p.agent.hidden_units << '\n'
      << "reward_clip = " << format_double(p.agent.reward_clip) << '\n'
      << "reward_mode = " << (p.agent.reward_mode == RewardMode::literal ? "literal" : "corrected") << '\n'
      << "anneal_step_scale = " << format_double(p.anneal.step_scale) << '\n'
      << "anneal_cooling = " << format_double(p.anneal.cooling) << '\n'
      << "anneal_temperature = " << format_double(p.anneal.initial_temperature) << '\n'
      << "workers = " << p.workers << '\n'
      << "save_checkpoints = " << (p.save_checkpoints ? "true" : "false") << '\n';
  for (const auto& s : p.scenarios) out << "\n[scenario]\n" << serialize_scenario(s);
  return out.str();
}

ExperimentPlan parse_plan(const std::string& text) {
  const auto sections = parse_kv(text);
  ExperimentPlan p;
  bool explicit_scenarios = false;
  std::vector<Scenario> scenarios;
  for (const auto& [key, v] : kv_map(sections.front())) {
    auto as_size = [&] { return static_cast<std::size_t>(parse_int(key, v)); };
    if (key == "scenarios") {
      explicit_scenarios = true;
      for (const auto& item : split_list(v)) {
        const auto id = item.starts_with("test-") ? item.substr(5) : item;
        scenarios.push_back(use_case(static_cast<int>(parse_int(key, id))));
      }
    } else if (key == "lcf") {
      p.lcfs.clear();
      for (const auto& item : split_list(v)) p.lcfs.push_back(parse_double(key, item));
    } else if (key == "dataset_size") p.dataset_size = as_size();
    else if (key == "noise_sigma") p.noise_sigma = parse_double(key, v);
    else if (key == "data_seed") p.data_seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "seeds") {
      p.seeds.clear();
      for (const auto& item : split_list(v)) p.seeds.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
    } else if (key == "methods") p.methods = split_list(v);
    else if (key == "n_trees") p.forest.n_trees = as_size();
    else if (key == "max_depth") {
      if (v == "unlimited") p.forest.max_depth.reset(); else p.forest.max_depth = as_size();
    } else if (key == "min_samples_leaf") p.forest.min_samples_leaf = as_size();
    else if (key == "max_features") {
      if (v == "sqrt") p.forest.max_features.reset(); else p.forest.max_features = as_size();
    } else if (key == "bootstrap") p.forest.bootstrap = parse_bool(key, v);
    else if (key == "forest_seed") p.forest.seed = static_cast<std::uint64_t>(parse_int(key, v));
    else if (key == "holdout_fraction") p.holdout_fraction = parse_double(key, v);
    else if (key == "total_steps") p.agent.total_steps = as_size();
    else if (key == "batch_size") p.agent.batch_size = as_size();
    else if (key == "buffer_capacity") p.agent.buffer_capacity = as_size();
    else if (key == "gamma") p.agent.gamma = parse_double(key, v);
    else if (key == "tau") p.agent.tau = parse_double(key, v);
    else if (key == "actor_lr") p.agent.actor_lr = parse_double(key, v);
    else if (key == "critic_lr") p.agent.critic_lr = parse_double(key, v);
    else if (key == "priority_exponent") p.agent.priority_exponent = parse_double(key, v);
    else if (key == "importance_exponent") p.agent.importance_exponent = parse_double(key, v);
    else if (key == "exploration_sigma") p.agent.noise_sigma_start = parse_double(key, v);
    else if (key == "exploration_decay") p.agent.noise_decay = parse_double(key, v);
    else if (key == "episode_length") p.agent.episode_length = as_size();
    else if (key == "hidden_units") p.agent.hidden_units = as_size();
    else if (key == "reward_clip") p.agent.reward_clip = parse_double(key, v);
    else if (key == "reward_mode") {
      if (v != "corrected" && v != "literal") throw FormatError("reward_mode must be corrected|literal");
      p.agent.reward_mode = v == "literal" ? RewardMode::literal : RewardMode::corrected;
    } else if (key == "anneal_step_scale") p.anneal.step_scale = parse_double(key, v);
    else if (key == "anneal_cooling") p.anneal.cooling = parse_double(key, v);
    else if (key == "anneal_temperature") p.anneal.initial_temperature = parse_double(key, v);
    else if (key == "workers") p.workers = static_cast<unsigned>(parse_int(key, v));
    else if (key == "save_checkpoints") p.save_checkpoints = parse_bool(key, v);
    else throw FormatError("plan: unknown key '" + key + "'");
  }
  for (std::size_t i = 1; i < sections.size(); ++i) {
    if (sections[i].name != "scenario") throw FormatError("plan: unexpected section [" + sections[i].name + "]");
    std::string body;
    for (const auto& [k, v] : sections[i].entries) body += k + " = " + v + "\n";
    scenarios.push_back(parse_scenario(body));
    explicit_scenarios = true;
  }
  if (explicit_scenarios) p.scenarios = std::move(scenarios);
  p.check();
  return p;
}

ExperimentPlan load_plan(const std::string& path) { return parse_plan(read_text_file(path)); }

double Report::violation_percent(const std::string& method) const {
  std::size_t total = 0, violated = 0;
  for (const auto& c : cells) {
    if (c.method != method || !c.completed) continue;
    ++total;
    violated += c.violation ? 1 : 0;
  }
  return total ? 100.0 * static_cast<double>(violated) / static_cast<double>(total) : 0.0;
}

bool Report::all_completed() const {
  return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.completed; });
}

CellResult assess(const Configuration& recommended, const ScenarioSummary& summary, double latency_limit,
                  const OracleProfile& profile) {
  CellResult c;
  c.scenario = summary.scenario.name;
  c.latency_limit = latency_limit;
  c.recommended = recommended;
  const auto obs = evaluate(recommended, summary.scenario, 0.0, 0, profile);
  c.oracle_throughput = obs.throughput;
  c.oracle_latency = obs.latency;
  c.improvement_percent = 100.0 * (obs.throughput - summary.default_throughput) / summary.default_throughput;
  c.violation = violates(obs.latency, latency_limit);
  c.completed = true;
  return c;
}

std::string sha256_file(const std::string& path) {
  const auto bytes = read_text_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 failed for " + path);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

Report run_plan(const ExperimentPlan& plan, const std::string& run_dir, const OracleProfile& profile,
                const ParameterSpace& space) {
  plan.check();
  fs::create_directories(run_dir);
  write_text_file(run_dir + "/plan.txt", serialize_plan(plan));
  write_text_file(run_dir + "/profile.txt", serialize_profile(profile));
  write_text_file(run_dir + "/space.txt", serialize_space(space));

  Report report;
  report.lcfs = plan.lcfs;
  report.seeds = plan.seeds;
  report.methods = plan.methods;
  std::vector<SurrogateModel> models;
  std::ostringstream timings;
  using Clock = std::chrono::steady_clock;
  auto seconds_since = [](Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
  };

  for (const auto& scenario : plan.scenarios) {
    const auto t0 = Clock::now();
    const std::string dir = run_dir + "/" + scenario.name;
    fs::create_directories(dir + "/cells");
    const auto data = generate_dataset(space, scenario, plan.dataset_size, plan.noise_sigma, plan.data_seed,
                                       plan.workers, profile);
    write_dataset(data, space, dir + "/dataset.csv");
    auto trained = train(data, space, plan.forest, plan.holdout_fraction);
    save_model(trained.model, dir + "/model.json");
    write_text_file(dir + "/accuracy.txt", format_accuracy(trained.report));

    ScenarioSummary summary;
    summary.scenario = scenario;
    const auto base = evaluate(space.defaults(), scenario, 0.0, 0, profile);
    summary.default_throughput = base.throughput;
    summary.default_latency = base.latency;
    summary.accuracy = trained.report;
    report.scenarios.push_back(summary);
    models.push_back(std::move(trained.model));
    timings << scenario.name << " data+surrogate " << seconds_since(t0) << " s\n";
  }

  struct Job {
    std::size_t scenario;
    double lcf;
    std::uint64_t seed;
    std::string method;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < plan.scenarios.size(); ++s)
    for (double lcf : plan.lcfs)
      for (auto seed : plan.seeds)
        for (const auto& m : plan.methods) jobs.push_back({s, lcf, seed, m});

  std::vector<CellResult> cells(jobs.size());
  std::vector<double> cell_seconds(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const auto& job = jobs[i];
      const auto& summary = report.scenarios[job.scenario];
      const auto& model = models[job.scenario];
      const auto t0 = Clock::now();
      CellResult cell;
      cell.scenario = summary.scenario.name;
      cell.lcf = job.lcf;
      cell.seed = job.seed;
      cell.method = job.method;
      try {
        const double limit = lcf_to_limit(summary.default_latency, job.lcf);
        const std::string stem = run_dir + "/" + summary.scenario.name + "/cells/" + file_tag(cell);
        Candidate rec;
        bool feasible = false;
        nlohmann::json detail;
        if (job.method == "ddpg") {
          auto hp = plan.agent;
          hp.seed = job.seed;
          auto run = tune(model, limit, hp);
          rec = run.result.recommended();
          feasible = run.result.best_feasible.has_value();
          detail = to_json(run.result, model.space);
          if (plan.save_checkpoints) write_text_file(stem + ".agent.json", run.agent.checkpoint().dump());
        } else {
          auto r = job.method == "random"
                       ? random_search(model, limit, plan.agent.total_steps, job.seed)
                       : anneal_search(model, limit, plan.agent.total_steps, job.seed, plan.anneal);
          rec = r.recommended();
          feasible = r.best_feasible.has_value();
          detail = to_json(r, model.space);
        }
        write_text_file(stem + ".json", detail.dump(1));
        auto assessed = assess(rec.config, summary, limit, profile);
        assessed.lcf = cell.lcf;
        assessed.seed = cell.seed;
        assessed.method = cell.method;
        assessed.feasible_found = feasible;
        assessed.predicted_throughput = rec.predicted_throughput;
        assessed.predicted_latency = rec.predicted_latency;
        cell = std::move(assessed);
      } catch (const std::exception& e) {
        cell.completed = false;
        cell.error = e.what();
      }
      cells[i] = std::move(cell);
      cell_seconds[i] = seconds_since(t0);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 1; w < plan.workers; ++w) pool.emplace_back(worker);
    worker();
  }
  report.cells = std::move(cells);
  for (std::size_t i = 0; i < jobs.size(); ++i)
    timings << report.cells[i].scenario << ' ' << file_tag(report.cells[i]) << ' ' << cell_seconds[i] << " s\n";

  write_text_file(run_dir + "/report.json", report_to_json(report).dump(1) + "\n");
  write_text_file(run_dir + "/report.txt", render_report(report));
  write_text_file(run_dir + "/timings.txt", timings.str());

  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir))
    if (entry.is_regular_file() && entry.path().filename() != "manifest.txt")
      files.push_back(fs::relative(entry.path(), run_dir).generic_string());
  std::sort(files.begin(), files.end());
  std::ostringstream manifest;
  manifest << "format = dmsconfig-run/1\n"
           << "profile_version = " << profile.version << '\n'
           << "model_format_version = " << kModelFormatVersion << '\n'
           << "data_seed = " << plan.data_seed << '\n'
           << "seeds = " << join(plan.seeds) << '\n'
           << "cells = " << report.cells.size() << '\n'
           << "completed = " << (report.all_completed() ? "true" : "false") << '\n'
           << "\n[files]\n";
  for (const auto& f : files) manifest << f << " = " << sha256_file(run_dir + "/" + f) << '\n';
  write_text_file(run_dir + "/manifest.txt", manifest.str());
  return report;
}

}  // namespace dmsconfig
