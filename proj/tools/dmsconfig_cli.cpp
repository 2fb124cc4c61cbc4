// dmsconfig command-line front end.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <optional>

#include "dmsconfig/bench.hpp"
#include "dmsconfig/dataset.hpp"
#include "dmsconfig/kv_file.hpp"

namespace fs = std::filesystem;
using namespace dmsconfig;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  std::string profile_path;
  double noise_sigma = 0.02;
  std::string space_path;

  OracleProfile profile() const { return profile_path.empty() ? OracleProfile{} : load_profile(profile_path); }
  ParameterSpace space() const { return space_path.empty() ? default_space() : load_space(space_path); }
  std::string out(const std::string& name) const {
    fs::create_directories(out_dir);
    return (fs::path(out_dir) / name).string();
  }
};

Scenario pick_scenario(int use_case_id, const std::string& file) {
  return file.empty() ? use_case(use_case_id) : parse_scenario(read_text_file(file));
}

double resolve_limit(const SurrogateModel& model, const OracleProfile& profile, std::optional<double> lcf,
                     std::optional<double> limit_ms) {
  if (limit_ms) return *limit_ms;
  const auto base = evaluate(model.space.defaults(), model.scenario, 0.0, 0, profile);
  return lcf_to_limit(base.latency, lcf.value_or(0));
}

void print_candidate(const char* label, const Candidate& c, const ParameterSpace& space) {
  std::cout << label << ": predicted " << c.predicted_throughput << " MiB/s, " << c.predicted_latency << " ms\n";
  for (const auto& spec : space.specs())
    std::cout << "  " << spec.name << " = " << format_knob(spec, c.config.values.at(spec.name)) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Surrogate-based DDPG configuration tuning for a message-broker model"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for output files")->capture_default_str();
  app.add_option("--profile", g.profile_path, "Oracle profile file (default: built-in v1)");
  app.add_option("--noise-sigma", g.noise_sigma, "Relative measurement noise of the oracle")->capture_default_str();
  app.add_option("--space", g.space_path, "Parameter space file (default: built-in 10 knobs)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Sample configurations by LHS and measure them on the oracle");
  int gen_case = 2;
  std::string gen_scenario_file;
  std::size_t gen_rows = 1000;
  unsigned gen_workers = 1;
  std::string gen_out = "dataset.csv";
  gen->add_option("--use-case", gen_case, "Reference scenario 1..9")->capture_default_str();
  gen->add_option("--scenario", gen_scenario_file, "Scenario file (overrides --use-case)");
  gen->add_option("--rows", gen_rows, "Number of samples")->capture_default_str();
  gen->add_option("--workers", gen_workers, "Worker threads")->capture_default_str();
  gen->add_option("--out", gen_out, "Output CSV, relative to --out-dir")->capture_default_str();

  // train-surrogate
  auto* trn = app.add_subcommand("train-surrogate", "Fit the random-forest surrogate to a dataset");
  std::string trn_data;
  std::string trn_out = "model.json";
  ForestHyperparams forest;
  double holdout = 0.2;
  trn->add_option("--data", trn_data, "Dataset CSV written by gen-data")->required();
  trn->add_option("--out", trn_out, "Model file, relative to --out-dir")->capture_default_str();
  trn->add_option("--trees", forest.n_trees, "Trees per forest")->capture_default_str();
  trn->add_option("--min-leaf", forest.min_samples_leaf, "Minimum samples per leaf")->capture_default_str();
  trn->add_option("--holdout", holdout, "Held-out fraction for accuracy")->capture_default_str();

  // tune
  auto* tun = app.add_subcommand("tune", "Run the DDPG tuner against a surrogate");
  std::string tun_model;
  std::optional<double> tun_lcf, tun_limit;
  AgentHyperparams agent;
  std::string tun_out = "tuning.json";
  bool literal = false;
  tun->add_option("--model", tun_model, "Surrogate model file")->required();
  tun->add_option("--lcf", tun_lcf, "Latency constraint factor (0 = unconstrained)");
  tun->add_option("--latency-limit", tun_limit, "Latency limit in ms (overrides --lcf)");
  tun->add_option("--steps", agent.total_steps, "Environment steps")->capture_default_str();
  tun->add_option("--episode-length", agent.episode_length, "Steps per episode")->capture_default_str();
  tun->add_option("--batch-size", agent.batch_size, "Minibatch size")->capture_default_str();
  tun->add_flag("--literal-reward", literal, "Use the reward signs exactly as published");
  tun->add_option("--out", tun_out, "Result file, relative to --out-dir")->capture_default_str();

  // baseline
  auto* bas = app.add_subcommand("baseline", "Run random search or simulated annealing against a surrogate");
  std::string bas_model, bas_method = "random", bas_out = "baseline.json";
  std::optional<double> bas_lcf, bas_limit;
  std::size_t budget = 5000;
  bas->add_option("--model", bas_model, "Surrogate model file")->required();
  bas->add_option("--method", bas_method, "random | anneal")
      ->check(CLI::IsMember({"random", "anneal"}))
      ->capture_default_str();
  bas->add_option("--lcf", bas_lcf, "Latency constraint factor (0 = unconstrained)");
  bas->add_option("--latency-limit", bas_limit, "Latency limit in ms (overrides --lcf)");
  bas->add_option("--budget", budget, "Surrogate evaluations")->capture_default_str();
  bas->add_option("--out", bas_out, "Result file, relative to --out-dir")->capture_default_str();

  // sweep
  auto* swp = app.add_subcommand("sweep", "Execute an experiment plan into --out-dir");
  std::string plan_path;
  swp->add_option("--plan", plan_path, "Plan file (key = value)");

  // report
  auto* rep = app.add_subcommand("report", "Render the tables of a finished sweep");
  std::string rep_run;
  rep->add_option("--run", rep_run, "Run directory containing report.json")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto space = g.space();
      const auto data = generate_dataset(space, pick_scenario(gen_case, gen_scenario_file), gen_rows, g.noise_sigma,
                                         g.seed, gen_workers, g.profile());
      const auto path = g.out(gen_out);
      write_dataset(data, space, path);
      std::cout << "wrote " << data.rows.size() << " rows to " << path << '\n';
    } else if (trn->parsed()) {
      const auto space = g.space();
      forest.seed = g.seed;
      auto result = train(read_dataset(trn_data, space), space, forest, holdout);
      const auto path = g.out(trn_out);
      save_model(result.model, path);
      std::cout << format_accuracy(result.report) << "wrote " << path << '\n';
    } else if (tun->parsed()) {
      const auto model = load_model(tun_model);
      agent.seed = g.seed;
      agent.reward_mode = literal ? RewardMode::literal : RewardMode::corrected;
      const double limit = resolve_limit(model, g.profile(), tun_lcf, tun_limit);
      auto run = tune(model, limit, agent);
      const auto path = g.out(tun_out);
      write_text_file(path, to_json(run.result, model.space).dump(1) + "\n");
      write_text_file(path + ".agent.json", run.agent.checkpoint().dump());
      print_candidate(run.result.best_feasible ? "best feasible" : "best (no feasible found)",
                      run.result.recommended(), model.space);
      std::cout << "wrote " << path << '\n';
    } else if (bas->parsed()) {
      const auto model = load_model(bas_model);
      const double limit = resolve_limit(model, g.profile(), bas_lcf, bas_limit);
      const auto r = bas_method == "random" ? random_search(model, limit, budget, g.seed)
                                            : anneal_search(model, limit, budget, g.seed);
      const auto path = g.out(bas_out);
      write_text_file(path, to_json(r, model.space).dump(1) + "\n");
      print_candidate(r.best_feasible ? "best feasible" : "best (no feasible found)", r.recommended(), model.space);
      std::cout << "wrote " << path << '\n';
    } else if (swp->parsed()) {
      ExperimentPlan plan = plan_path.empty() ? ExperimentPlan{} : load_plan(plan_path);
      const auto report = run_plan(plan, g.out_dir, g.profile(), g.space());
      std::cout << render_report(report);
      if (!report.all_completed()) {
        std::cerr << "some plan cells failed; see report.json\n";
        return 1;
      }
    } else if (rep->parsed()) {
      const auto report =
          report_from_json(nlohmann::json::parse(read_text_file((fs::path(rep_run) / "report.json").string())));
      std::cout << render_report(report);
      return report.all_completed() ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
