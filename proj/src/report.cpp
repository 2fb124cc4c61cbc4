#include <cmath>
#include <cstdio>
#include <sstream>

#include "dmsconfig/bench.hpp"
#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"

namespace dmsconfig {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
double number_or_inf(const json& j) { return j.is_null() ? kUnconstrained : j.get<double>(); }

json config_to_json(const Configuration& c) {
  json out = json::object();
  for (const auto& [k, v] : c.values)
    std::visit([&](const auto& x) { out[k] = x; }, v);
  return out;
}

Configuration config_from_json(const json& j) {
  Configuration c;
  for (const auto& [k, v] : j.items()) {
    if (v.is_string())
      c.values[k] = v.get<std::string>();
    else
      c.values[k] = v.get<std::int64_t>();
  }
  return c;
}

json accuracy_to_json(const AccuracyReport& a) {
  json targets = json::array();
  for (const auto& t : a.targets)
    targets.push_back({{"target", t.target},
                       {"r2", t.r2 ? json(*t.r2) : json(nullptr)},
                       {"mae", t.mae},
                       {"accuracy_percent", t.accuracy_percent ? json(*t.accuracy_percent) : json(nullptr)}});
  return {{"holdout_rows", a.holdout_rows}, {"targets", targets}};
}

AccuracyReport accuracy_from_json(const json& j) {
  AccuracyReport a;
  a.holdout_rows = j.at("holdout_rows").get<std::size_t>();
  for (const auto& t : j.at("targets")) {
    TargetAccuracy ta;
    ta.target = t.at("target").get<std::string>();
    if (!t.at("r2").is_null()) ta.r2 = t.at("r2").get<double>();
    ta.mae = t.at("mae").get<double>();
    if (!t.at("accuracy_percent").is_null()) ta.accuracy_percent = t.at("accuracy_percent").get<double>();
    a.targets.push_back(ta);
  }
  return a;
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

std::string accuracy_of(const AccuracyReport& a, std::string_view target) {
  for (const auto& t : a.targets)
    if (t.target == target) return t.accuracy_percent ? fmt("%.1f%%", *t.accuracy_percent) : "n/a";
  return "n/a";
}

}  // namespace

json report_to_json(const Report& r) {
  json scenarios = json::array();
  for (const auto& s : r.scenarios)
    scenarios.push_back({{"name", s.scenario.name},
                         {"scenario", serialize_scenario(s.scenario)},
                         {"default_throughput", s.default_throughput},
                         {"default_latency", s.default_latency},
                         {"accuracy", accuracy_to_json(s.accuracy)}});
  json cells = json::array();
  for (const auto& c : r.cells) {
    json cell = {{"scenario", c.scenario}, {"lcf", c.lcf},         {"seed", c.seed},
                 {"method", c.method},     {"completed", c.completed}};
    if (!c.completed) {
      cell["error"] = c.error;
    } else {
      cell["latency_limit"] = number_or_null(c.latency_limit);
      cell["recommended"] = config_to_json(c.recommended);
      cell["feasible_found"] = c.feasible_found;
      cell["predicted_throughput"] = c.predicted_throughput;
      cell["predicted_latency"] = c.predicted_latency;
      cell["oracle_throughput"] = c.oracle_throughput;
      cell["oracle_latency"] = c.oracle_latency;
      cell["improvement_percent"] = c.improvement_percent;
      cell["violation"] = c.violation;
    }
    cells.push_back(cell);
  }
  json aggregate = json::object();
  for (const auto& m : r.methods) aggregate[m] = {{"violation_percent", r.violation_percent(m)}};
  return {{"format", "dmsconfig-report"}, {"version", 1},       {"lcf", r.lcfs},
          {"seeds", r.seeds},             {"methods", r.methods}, {"scenarios", scenarios},
          {"cells", cells},               {"aggregate", aggregate}};
}

Report report_from_json(const json& j) {
  try {
    if (j.at("format") != "dmsconfig-report" || j.at("version") != 1)
      throw FormatError("not a dmsconfig report (version 1)");
    Report r;
    r.lcfs = j.at("lcf").get<std::vector<double>>();
    r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    r.methods = j.at("methods").get<std::vector<std::string>>();
    for (const auto& s : j.at("scenarios")) {
      ScenarioSummary summary;
      summary.scenario = parse_scenario(s.at("scenario").get<std::string>());
      summary.default_throughput = s.at("default_throughput").get<double>();
      summary.default_latency = s.at("default_latency").get<double>();
      summary.accuracy = accuracy_from_json(s.at("accuracy"));
      r.scenarios.push_back(summary);
    }
    for (const auto& c : j.at("cells")) {
      CellResult cell;
      cell.scenario = c.at("scenario").get<std::string>();
      cell.lcf = c.at("lcf").get<double>();
      cell.seed = c.at("seed").get<std::uint64_t>();
      cell.method = c.at("method").get<std::string>();
      cell.completed = c.at("completed").get<bool>();
      if (!cell.completed) {
        cell.error = c.at("error").get<std::string>();
      } else {
        cell.latency_limit = number_or_inf(c.at("latency_limit"));
        cell.recommended = config_from_json(c.at("recommended"));
        cell.feasible_found = c.at("feasible_found").get<bool>();
        cell.predicted_throughput = c.at("predicted_throughput").get<double>();
        cell.predicted_latency = c.at("predicted_latency").get<double>();
        cell.oracle_throughput = c.at("oracle_throughput").get<double>();
        cell.oracle_latency = c.at("oracle_latency").get<double>();
        cell.improvement_percent = c.at("improvement_percent").get<double>();
        cell.violation = c.at("violation").get<bool>();
      }
      r.cells.push_back(cell);
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("report: ") + e.what());
  }
}

std::string render_report(const Report& r) {
  std::ostringstream out;
  out << "Throughput improvement over the default configuration (oracle, noise-free).\n"
      << "'*' marks a recommendation whose latency exceeds the limit.\n\n";

  out << pad("scenario", 12) << pad("default MiB/s", 15) << pad("default ms", 12) << pad("acc tp", 9)
      << "acc latency\n";
  for (const auto& s : r.scenarios)
    out << pad(s.scenario.name, 12) << pad(fmt("%.3f", s.default_throughput), 15)
        << pad(fmt("%.3f", s.default_latency), 12) << pad(accuracy_of(s.accuracy, kThroughputColumn), 9)
        << accuracy_of(s.accuracy, kLatencyColumn) << '\n';

  for (const auto& method : r.methods) {
    for (auto seed : r.seeds) {
      out << "\n== " << method << ", seed " << seed << " ==\n" << pad("lcf", 8);
      for (const auto& s : r.scenarios) out << pad(s.scenario.name, 12);
      out << '\n';
      for (double lcf : r.lcfs) {
        out << pad(format_double(lcf), 8);
        for (const auto& s : r.scenarios) {
          std::string text = "-";
          for (const auto& c : r.cells) {
            if (c.method != method || c.seed != seed || c.lcf != lcf || c.scenario != s.scenario.name) continue;
            if (!c.completed)
              text = "FAILED";
            else
              text = fmt("%.1f%%", c.improvement_percent == 0 ? 0.0 : c.improvement_percent) +
                     (c.violation ? "*" : "");
          }
          out << pad(text, 12);
        }
        out << '\n';
      }
    }
  }

  if (!r.methods.empty()) {
    out << "\nLatency violations (completed cells):\n";
    for (const auto& m : r.methods) out << pad(m, 10) << fmt("%.1f%%", r.violation_percent(m)) << '\n';
  }
  std::string text = out.str();
  // strip trailing spaces left by column padding
  std::ostringstream clean;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    line.erase(line.find_last_not_of(' ') + 1);
    clean << line << '\n';
  }
  return clean.str();
}

}  // namespace dmsconfig
