#pragma once

// Closed-form performance model of a single-broker deployment. It plays the
// role of the measurement testbed: every dataset row and every final
// re-evaluation of a recommended configuration comes from here.

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>

#include "dmsconfig/config_space.hpp"

namespace dmsconfig {

inline constexpr std::size_t kStateDim = 7;

inline constexpr std::array<std::string_view, kStateDim> kMetricNames = {
    "blkio_io_service_bytes", "cpu_usage_usermode",         "cpu_usage_kernelmode",
    "memory_usage_total",     "produce_request_per_sec",    "produce_request_total_time",
    "produce_request_temporary_bytes"};

inline constexpr std::string_view kThroughputColumn = "throughput_mbps";
inline constexpr std::string_view kLatencyColumn = "latency_ms";

enum class SendMode { sync, async };
enum class Reliability { best_effort, reliable };

/// Workload, topology and resource profile of one deployment.
/// send_mode, reliability and rate are carried for bookkeeping but do not
/// enter the v1 model.
struct Scenario {
  std::string name = "custom";
  double message_size_bytes = 1024;
  SendMode send_mode = SendMode::async;
  Reliability reliability = Reliability::reliable;
  double rate = 0;  // messages/s, 0 = unlimited
  int producers = 1;
  int brokers = 1;
  int consumers = 1;
  double producer_cpus = 2;
  double broker_cpus = 4;
  double consumer_cpus = 1;
  double bandwidth_mbps = 119;  // MiB/s
  double producer_memory_gb = 4;
  double broker_memory_gb = 8;
  double consumer_memory_gb = 4;
  std::string disk = "local";

  bool operator==(const Scenario&) const = default;
};

/// Use case k (1..9) of the standard experiment matrix; test 2 is the reference.
Scenario use_case(int k);

void validate_scenario(const Scenario& s);
std::string serialize_scenario(const Scenario& s);
Scenario parse_scenario(const std::string& text);

/// Versioned constants of the oracle. Defaults are profile v1.
struct OracleProfile {
  std::string version = "v1";
  std::map<std::string, double> wire_ratio = {
      {"none", 1.00}, {"snappy", 0.60}, {"gzip", 0.45}, {"lz4", 0.55}};
  std::map<std::string, double> cpu_overhead = {
      {"none", 0.00}, {"snappy", 0.15}, {"gzip", 0.45}, {"lz4", 0.25}};
  double batch_half_saturation = 8;
  double memory_batches = 64;
  double request_batches = 256;
  double producer_mbps_per_cpu = 40;
  double producer_base = 0.3;
  double broker_thread_mbps = 18;
  double broker_mbps_per_cpu = 22;
  double broker_request_base = 0.5;
  double socket_mbps = 55;
  double socket_max_ratio = 2.0;
  double socket_reference_bytes = 100 * 1024;
  double queue_mbps_per_request = 0.15;
  double queue_batch_base = 0.5;
  double wire_efficiency = 0.9;
  double latency_base_ms = 2.0;
  double latency_linger_factor = 0.5;
  double congestion_ms = 25;
  double congestion_cap_ms = 500;
  double cpu_user_factor = 0.6;
  double cpu_kernel_factor = 0.3;
  double memory_reference_bytes = 256.0 * 1024 * 1024;
  double request_time_factor = 0.8;
};

std::string serialize_profile(const OracleProfile& p);
OracleProfile parse_profile(const std::string& text);
OracleProfile load_profile(const std::string& path);

enum class Bottleneck { demand, broker, socket, queue, wire };

/// Every intermediate of one noise-free evaluation.
struct OracleBreakdown {
  double batch_messages = 0;
  double batch_efficiency = 0;
  double memory_efficiency = 0;
  double request_efficiency = 0;
  double producer_cap = 0;
  double demand = 0;
  double broker_cap = 0;
  double socket_cap = 0;
  double queue_cap = 0;
  double wire_cap = 0;
  double throughput = 0;
  double utilization = 0;
  double latency = 0;
  double wire_ratio = 1;
  Bottleneck bottleneck = Bottleneck::demand;
};

struct Observation {
  Configuration config;
  std::array<double, kStateDim> state{};
  double throughput = 0;  // MiB/s
  double latency = 0;     // ms
};

OracleBreakdown evaluate_breakdown(const Configuration& config, const Scenario& scenario,
                                   const OracleProfile& profile = {});

/// Noise (when sigma > 0) multiplies throughput and latency by 1 + sigma*xi
/// with xi standard normal drawn from seed; dependent metrics follow.
Observation evaluate(const Configuration& config, const Scenario& scenario, double noise_sigma,
                     std::uint64_t seed, const OracleProfile& profile = {});

}  // namespace dmsconfig
