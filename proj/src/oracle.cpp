#include "dmsconfig/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dmsconfig/error.hpp"
#include "dmsconfig/kv_file.hpp"
#include "dmsconfig/random.hpp"

namespace dmsconfig {

namespace {

constexpr double kBytesPerMiB = 1024.0 * 1024.0;

struct Knobs {
  double network_threads, io_threads, queued_requests;
  double socket_receive, socket_send, request_max;
  double buffer_memory, batch_size, linger_ms;
  std::string compression;
};

Knobs read_knobs(const Configuration& c) {
  Knobs k{};
  k.network_threads = static_cast<double>(c.integer("num.network.threads"));
  k.io_threads = static_cast<double>(c.integer("num.io.threads"));
  k.queued_requests = static_cast<double>(c.integer("queued.max.requests"));
  k.socket_receive = static_cast<double>(c.integer("socket.receive.buffer.bytes"));
  k.socket_send = static_cast<double>(c.integer("socket.send.buffer.bytes"));
  k.request_max = static_cast<double>(c.integer("socket.request.max.bytes"));
  k.buffer_memory = static_cast<double>(c.integer("buffer.memory"));
  k.batch_size = static_cast<double>(c.integer("batch.size"));
  k.linger_ms = static_cast<double>(c.integer("linger.ms"));
  k.compression = c.label("compression.type");
  if (k.network_threads < 1 || k.io_threads < 1 || k.queued_requests < 1 || k.socket_receive <= 0 ||
      k.socket_send <= 0 || k.request_max <= 0 || k.buffer_memory <= 0 || k.batch_size <= 0 ||
      k.linger_ms < 0)
    throw InvalidConfiguration("oracle: knob values must be positive");
  return k;
}

double table_value(const std::map<std::string, double>& table, const std::string& label,
                   const char* what) {
  auto it = table.find(label);
  if (it == table.end())
    throw InvalidConfiguration(std::string("oracle profile has no ") + what + " for '" + label + "'");
  return it->second;
}

double latency_ms(const OracleProfile& p, const Knobs& k, const Scenario& s, double throughput,
                  double utilization) {
  const double per_producer_bytes = throughput / s.producers * kBytesPerMiB;
  return p.latency_base_ms + p.latency_linger_factor * k.linger_ms +
         1000.0 * k.batch_size / per_producer_bytes +
         std::min(p.congestion_cap_ms, p.congestion_ms * (utilization - 1.0));
}

const char* mode_name(SendMode m) { return m == SendMode::sync ? "sync" : "async"; }
const char* reliability_name(Reliability r) {
  return r == Reliability::reliable ? "reliable" : "best-effort";
}

}  // namespace

Scenario use_case(int k) {
  struct Row { int producers; double cpus; double gbps; double kb; };
  static constexpr Row rows[] = {
      {1, 2, 1.0, 0.1}, {1, 2, 1.0, 1.0}, {1, 2, 1.0, 4.0}, {1, 1, 1.0, 1.0}, {1, 4, 1.0, 1.0},
      {1, 2, 0.1, 1.0}, {1, 2, 0.5, 1.0}, {3, 2, 1.0, 1.0}, {10, 2, 1.0, 1.0}};
  if (k < 1 || k > 9) throw InvalidScenario("use case must be in 1..9, got " + std::to_string(k));
  const auto& r = rows[k - 1];
  Scenario s;
  s.name = "test-" + std::to_string(k);
  s.producers = r.producers;
  s.producer_cpus = r.cpus;
  s.bandwidth_mbps = r.gbps == 1.0 ? 119.0 : (r.gbps == 0.5 ? 59.5 : 11.9);
  s.message_size_bytes = r.kb * 1024.0;
  return s;
}

void validate_scenario(const Scenario& s) {
  if (s.brokers != 1) throw InvalidScenario("only single-broker deployments are modeled");
  if (s.consumers != 1) throw InvalidScenario("only one consumer is modeled");
  if (!(s.bandwidth_mbps > 0)) throw InvalidScenario("bandwidth must be > 0");
  if (!(s.message_size_bytes > 0)) throw InvalidScenario("message size must be > 0");
  if (s.producers < 1) throw InvalidScenario("need at least one producer");
  if (!(s.producer_cpus > 0) || !(s.broker_cpus > 0)) throw InvalidScenario("cpu counts must be > 0");
  if (s.rate < 0) throw InvalidScenario("rate must be >= 0");
}

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream out;
  out << "name = " << s.name << '\n'
      << "message_size_bytes = " << format_double(s.message_size_bytes) << '\n'
      << "send_mode = " << mode_name(s.send_mode) << '\n'
      << "reliability = " << reliability_name(s.reliability) << '\n'
      << "rate = " << format_double(s.rate) << '\n'
      << "producers = " << s.producers << '\n'
      << "brokers = " << s.brokers << '\n'
      << "consumers = " << s.consumers << '\n'
      << "producer_cpus = " << format_double(s.producer_cpus) << '\n'
      << "broker_cpus = " << format_double(s.broker_cpus) << '\n'
      << "consumer_cpus = " << format_double(s.consumer_cpus) << '\n'
      << "bandwidth_mbps = " << format_double(s.bandwidth_mbps) << '\n'
      << "producer_memory_gb = " << format_double(s.producer_memory_gb) << '\n'
      << "broker_memory_gb = " << format_double(s.broker_memory_gb) << '\n'
      << "consumer_memory_gb = " << format_double(s.consumer_memory_gb) << '\n'
      << "disk = " << s.disk << '\n';
  return out.str();
}

Scenario parse_scenario(const std::string& text) {
  const auto sections = parse_kv(text);
  const auto kv = kv_map(sections.front());
  Scenario s;
  for (const auto& [key, value] : kv) {
    if (key == "name") s.name = value;
    else if (key == "message_size_bytes") s.message_size_bytes = parse_double(key, value);
    else if (key == "send_mode") {
      if (value != "sync" && value != "async") throw FormatError("send_mode must be sync|async");
      s.send_mode = value == "sync" ? SendMode::sync : SendMode::async;
    } else if (key == "reliability") {
      if (value != "reliable" && value != "best-effort")
        throw FormatError("reliability must be reliable|best-effort");
      s.reliability = value == "reliable" ? Reliability::reliable : Reliability::best_effort;
    } else if (key == "rate") s.rate = parse_double(key, value);
    else if (key == "producers") s.producers = static_cast<int>(parse_int(key, value));
    else if (key == "brokers") s.brokers = static_cast<int>(parse_int(key, value));
    else if (key == "consumers") s.consumers = static_cast<int>(parse_int(key, value));
    else if (key == "producer_cpus") s.producer_cpus = parse_double(key, value);
    else if (key == "broker_cpus") s.broker_cpus = parse_double(key, value);
    else if (key == "consumer_cpus") s.consumer_cpus = parse_double(key, value);
    else if (key == "bandwidth_mbps") s.bandwidth_mbps = parse_double(key, value);
    else if (key == "producer_memory_gb") s.producer_memory_gb = parse_double(key, value);
    else if (key == "broker_memory_gb") s.broker_memory_gb = parse_double(key, value);
    else if (key == "consumer_memory_gb") s.consumer_memory_gb = parse_double(key, value);
    else if (key == "disk") s.disk = value;
    else throw FormatError("scenario: unknown key '" + key + "'");
  }
  validate_scenario(s);
  return s;
}

std::string serialize_profile(const OracleProfile& p) {
  std::ostringstream out;
  out << "version = " << p.version << '\n';
  for (const auto& [label, v] : p.wire_ratio) out << "wire_ratio." << label << " = " << format_double(v) << '\n';
  for (const auto& [label, v] : p.cpu_overhead) out << "cpu_overhead." << label << " = " << format_double(v) << '\n';
  const std::pair<const char*, double> scalars[] = {
      {"batch_half_saturation", p.batch_half_saturation},
      {"memory_batches", p.memory_batches},
      {"request_batches", p.request_batches},
      {"producer_mbps_per_cpu", p.producer_mbps_per_cpu},
      {"producer_base", p.producer_base},
      {"broker_thread_mbps", p.broker_thread_mbps},
      {"broker_mbps_per_cpu", p.broker_mbps_per_cpu},
      {"broker_request_base", p.broker_request_base},
      {"socket_mbps", p.socket_mbps},
      {"socket_max_ratio", p.socket_max_ratio},
      {"socket_reference_bytes", p.socket_reference_bytes},
      {"queue_mbps_per_request", p.queue_mbps_per_request},
      {"queue_batch_base", p.queue_batch_base},
      {"wire_efficiency", p.wire_efficiency},
      {"latency_base_ms", p.latency_base_ms},
      {"latency_linger_factor", p.latency_linger_factor},
      {"congestion_ms", p.congestion_ms},
      {"congestion_cap_ms", p.congestion_cap_ms},
      {"cpu_user_factor", p.cpu_user_factor},
      {"cpu_kernel_factor", p.cpu_kernel_factor},
      {"memory_reference_bytes", p.memory_reference_bytes},
      {"request_time_factor", p.request_time_factor},
  };
  for (const auto& [k, v] : scalars) out << k << " = " << format_double(v) << '\n';
  return out.str();
}

OracleProfile parse_profile(const std::string& text) {
  const auto kv = kv_map(parse_kv(text).front());
  OracleProfile p;
  std::map<std::string, double*> scalars = {
      {"batch_half_saturation", &p.batch_half_saturation},
      {"memory_batches", &p.memory_batches},
      {"request_batches", &p.request_batches},
      {"producer_mbps_per_cpu", &p.producer_mbps_per_cpu},
      {"producer_base", &p.producer_base},
      {"broker_thread_mbps", &p.broker_thread_mbps},
      {"broker_mbps_per_cpu", &p.broker_mbps_per_cpu},
      {"broker_request_base", &p.broker_request_base},
      {"socket_mbps", &p.socket_mbps},
      {"socket_max_ratio", &p.socket_max_ratio},
      {"socket_reference_bytes", &p.socket_reference_bytes},
      {"queue_mbps_per_request", &p.queue_mbps_per_request},
      {"queue_batch_base", &p.queue_batch_base},
      {"wire_efficiency", &p.wire_efficiency},
      {"latency_base_ms", &p.latency_base_ms},
      {"latency_linger_factor", &p.latency_linger_factor},
      {"congestion_ms", &p.congestion_ms},
      {"congestion_cap_ms", &p.congestion_cap_ms},
      {"cpu_user_factor", &p.cpu_user_factor},
      {"cpu_kernel_factor", &p.cpu_kernel_factor},
      {"memory_reference_bytes", &p.memory_reference_bytes},
      {"request_time_factor", &p.request_time_factor},
  };
  for (const auto& [key, value] : kv) {
    if (key == "version") {
      p.version = value;
    } else if (key.starts_with("wire_ratio.")) {
      p.wire_ratio[key.substr(11)] = parse_double(key, value);
    } else if (key.starts_with("cpu_overhead.")) {
      p.cpu_overhead[key.substr(13)] = parse_double(key, value);
    } else if (auto it = scalars.find(key); it != scalars.end()) {
      *it->second = parse_double(key, value);
    } else {
      throw FormatError("profile: unknown key '" + key + "'");
    }
  }
  for (const auto& [label, ratio] : p.wire_ratio)
    if (!(ratio > 0 && ratio <= 1)) throw FormatError("profile: wire_ratio." + label + " must be in (0,1]");
  return p;
}

OracleProfile load_profile(const std::string& path) { return parse_profile(read_text_file(path)); }

OracleBreakdown evaluate_breakdown(const Configuration& config, const Scenario& scenario,
                                   const OracleProfile& p) {
  validate_scenario(scenario);
  const Knobs k = read_knobs(config);
  const double rho = table_value(p.wire_ratio, k.compression, "wire ratio");
  const double kappa = table_value(p.cpu_overhead, k.compression, "cpu overhead");

  OracleBreakdown b;
  b.wire_ratio = rho;
  b.batch_messages = std::max(1.0, k.batch_size / scenario.message_size_bytes);
  b.batch_efficiency = b.batch_messages / (b.batch_messages + p.batch_half_saturation);
  b.memory_efficiency = std::min(1.0, k.buffer_memory / (p.memory_batches * k.batch_size));
  b.request_efficiency = std::min(1.0, k.request_max / (p.request_batches * k.batch_size));

  b.producer_cap = p.producer_mbps_per_cpu * scenario.producer_cpus *
                   (p.producer_base + (1.0 - p.producer_base) * b.batch_efficiency) / (1.0 + kappa);
  b.broker_cap = std::min(p.broker_thread_mbps * std::sqrt(k.io_threads * k.network_threads),
                          p.broker_mbps_per_cpu * scenario.broker_cpus) *
                 (p.broker_request_base + (1.0 - p.broker_request_base) * b.request_efficiency);
  b.socket_cap = p.socket_mbps * std::min(p.socket_max_ratio, std::min(k.socket_receive, k.socket_send) /
                                                                  p.socket_reference_bytes);
  b.queue_cap = p.queue_mbps_per_request * k.queued_requests *
                (p.queue_batch_base + (1.0 - p.queue_batch_base) * b.batch_efficiency);
  b.wire_cap = p.wire_efficiency * scenario.bandwidth_mbps / rho;
  b.demand = scenario.producers * b.producer_cap * b.memory_efficiency;

  const std::pair<double, Bottleneck> caps[] = {{b.demand, Bottleneck::demand},
                                                {b.broker_cap, Bottleneck::broker},
                                                {b.socket_cap, Bottleneck::socket},
                                                {b.queue_cap, Bottleneck::queue},
                                                {b.wire_cap, Bottleneck::wire}};
  b.throughput = b.demand;
  for (const auto& [cap, which] : caps) {
    if (cap < b.throughput) {
      b.throughput = cap;
      b.bottleneck = which;
    }
  }
  b.utilization = b.demand / b.throughput;
  b.latency = latency_ms(p, k, scenario, b.throughput, b.utilization);
  return b;
}

Observation evaluate(const Configuration& config, const Scenario& scenario, double noise_sigma,
                     std::uint64_t seed, const OracleProfile& p) {
  if (noise_sigma < 0 || !std::isfinite(noise_sigma))
    throw std::invalid_argument("noise sigma must be finite and >= 0");
  const auto b = evaluate_breakdown(config, scenario, p);
  const Knobs k = read_knobs(config);

  double tp = b.throughput;
  double lat = b.latency;
  if (noise_sigma > 0) {
    Rng rng(seed);
    std::normal_distribution<double> normal;
    constexpr double kMinFactor = 1e-3;
    tp *= std::max(kMinFactor, 1.0 + noise_sigma * normal(rng));
    lat *= std::max(kMinFactor, 1.0 + noise_sigma * normal(rng));
  }

  Observation o;
  o.config = config;
  o.throughput = tp;
  o.latency = lat;
  const double rho = b.wire_ratio;
  o.state[0] = tp * rho;
  o.state[1] = std::min(1.0, p.cpu_user_factor * tp / b.broker_cap);
  o.state[2] = std::min(1.0, p.cpu_kernel_factor * tp * rho / b.wire_cap);
  o.state[3] = std::min(1.0, k.queued_requests * k.batch_size / p.memory_reference_bytes);
  o.state[4] = tp * kBytesPerMiB / k.batch_size;
  o.state[5] = p.request_time_factor * lat;
  o.state[6] = tp * (1.0 - rho);
  return o;
}

}  // namespace dmsconfig
