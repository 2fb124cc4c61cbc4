#include "dmsconfig/dataset.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"
#include "dmsconfig/lhs.hpp"
#include "dmsconfig/random.hpp"

namespace dmsconfig {

Dataset generate_dataset(const ParameterSpace& space, const Scenario& scenario, std::size_t n,
                         double noise_sigma, std::uint64_t seed, unsigned parallelism,
                         const OracleProfile& profile) {
  validate_scenario(scenario);
  const auto batch = lhs_sample(space, n, seed);
  Dataset data;
  data.scenario = scenario;
  data.seed = seed;
  data.noise_sigma = noise_sigma;
  data.profile_version = profile.version;
  data.rows.resize(n);

  const unsigned workers = std::max(1u, std::min<unsigned>(parallelism, static_cast<unsigned>(n)));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < n; i += workers)
      data.rows[i] = evaluate(batch.configs[i], scenario, noise_sigma, derive_seed(seed, {0x6f72, i}), profile);
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        try {
          work(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    pool.clear();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  return data;
}

std::vector<std::string> dataset_columns(const ParameterSpace& space) {
  std::vector<std::string> cols;
  for (const auto& s : space.specs()) cols.push_back(s.name);
  for (auto m : kMetricNames) cols.emplace_back(m);
  cols.emplace_back(kThroughputColumn);
  cols.emplace_back(kLatencyColumn);
  return cols;
}

std::string dataset_to_csv(const Dataset& data, const ParameterSpace& space) {
  std::ostringstream out;
  const auto cols = dataset_columns(space);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& row : data.rows) {
    for (std::size_t i = 0; i < space.dim(); ++i) {
      const auto& spec = space.spec(i);
      out << (i ? "," : "") << format_knob(spec, row.config.values.at(spec.name));
    }
    for (double m : row.state) out << ',' << format_double(m);
    out << ',' << format_double(row.throughput) << ',' << format_double(row.latency) << '\n';
  }
  return out.str();
}

std::string dataset_metadata(const Dataset& data) {
  std::ostringstream out;
  out << "rows = " << data.rows.size() << '\n'
      << "seed = " << data.seed << '\n'
      << "noise_sigma = " << format_double(data.noise_sigma) << '\n'
      << "profile_version = " << data.profile_version << '\n'
      << "\n[scenario]\n"
      << serialize_scenario(data.scenario);
  return out.str();
}

void write_dataset(const Dataset& data, const ParameterSpace& space, const std::string& path) {
  write_text_file(path, dataset_to_csv(data, space));
  write_text_file(path + ".meta", dataset_metadata(data));
}

Dataset read_dataset(const std::string& path, const ParameterSpace& space) {
  Dataset data;
  const auto sections = read_kv_file(path + ".meta");
  const auto meta = kv_map(sections.front());
  data.seed = static_cast<std::uint64_t>(parse_int("seed", meta.at("seed")));
  data.noise_sigma = parse_double("noise_sigma", meta.at("noise_sigma"));
  data.profile_version = meta.at("profile_version");
  bool have_scenario = false;
  for (const auto& s : sections) {
    if (s.name != "scenario") continue;
    std::string text;
    for (const auto& [k, v] : s.entries) text += k + " = " + v + "\n";
    data.scenario = parse_scenario(text);
    have_scenario = true;
  }
  if (!have_scenario) throw FormatError(path + ".meta: missing [scenario]");

  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path + ": empty dataset");
  const auto expected = dataset_columns(space);
  if (split_list(line) != expected) throw FormatError(path + ": header does not match the parameter space");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != expected.size())
      throw FormatError(path + ":" + std::to_string(lineno) + ": wrong column count");
    Observation o;
    for (std::size_t i = 0; i < space.dim(); ++i)
      o.config.values.emplace(space.spec(i).name, parse_knob(space.spec(i), cells[i]));
    require_valid(o.config, space);
    for (std::size_t m = 0; m < kStateDim; ++m) o.state[m] = parse_double(expected[space.dim() + m], cells[space.dim() + m]);
    o.throughput = parse_double("throughput", cells[space.dim() + kStateDim]);
    o.latency = parse_double("latency", cells[space.dim() + kStateDim + 1]);
    data.rows.push_back(std::move(o));
  }
  const auto declared = parse_int("rows", meta.at("rows"));
  if (declared != static_cast<long long>(data.rows.size()))
    throw FormatError(path + ": row count does not match metadata");
  return data;
}

}  // namespace dmsconfig
