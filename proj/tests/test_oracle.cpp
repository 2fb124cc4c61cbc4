#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "dmsconfig/dataset.hpp"
#include "dmsconfig/error.hpp"
#include "dmsconfig/lhs.hpp"
#include "dmsconfig/random.hpp"

using namespace dmsconfig;

namespace {

// Straight transcription of the v1 formulas, written without the library's helpers.
struct Ref {
  double tp, lat, cp, cb, cs, cq, cw, demand;
};

Ref reference(const Configuration& c, const Scenario& s) {
  const double KB = 1024, MB = 1024 * 1024;
  const std::string codec = c.label("compression.type");
  const double rho = codec == "none" ? 1.0 : codec == "snappy" ? 0.6 : codec == "gzip" ? 0.45 : 0.55;
  const double kappa = codec == "none" ? 0.0 : codec == "snappy" ? 0.15 : codec == "gzip" ? 0.45 : 0.25;
  const double batch = double(c.integer("batch.size"));
  const double nb = std::max(1.0, batch / s.message_size_bytes);
  const double eb = nb / (nb + 8);
  const double em = std::min(1.0, double(c.integer("buffer.memory")) / (64 * batch));
  const double er = std::min(1.0, double(c.integer("socket.request.max.bytes")) / (256 * batch));
  Ref r{};
  r.cp = 40 * s.producer_cpus * (0.3 + 0.7 * eb) / (1 + kappa);
  r.cb = std::min(18 * std::sqrt(double(c.integer("num.io.threads") * c.integer("num.network.threads"))),
                  22 * s.broker_cpus) *
         (0.5 + 0.5 * er);
  r.cs = 55 * std::min(2.0, double(std::min(c.integer("socket.receive.buffer.bytes"),
                                            c.integer("socket.send.buffer.bytes"))) /
                                (100 * KB));
  r.cq = 0.15 * double(c.integer("queued.max.requests")) * (0.5 + 0.5 * eb);
  r.cw = 0.9 * s.bandwidth_mbps / rho;
  r.demand = s.producers * r.cp * em;
  r.tp = std::min({r.demand, r.cb, r.cs, r.cq, r.cw});
  const double phi = r.demand / r.tp;
  r.lat = 2.0 + 0.5 * double(c.integer("linger.ms")) + 1000 * batch / (r.tp / s.producers * MB) +
          std::min(500.0, 25 * (phi - 1));
  return r;
}

}  // namespace

TEST(Oracle, ReferenceScenarioDefaults) {
  const auto space = default_space();
  const auto s = use_case(2);
  EXPECT_EQ(s.producers, 1);
  EXPECT_EQ(s.producer_cpus, 2);
  EXPECT_EQ(s.broker_cpus, 4);
  EXPECT_EQ(s.bandwidth_mbps, 119);
  EXPECT_EQ(s.message_size_bytes, 1024);
  const auto b = evaluate_breakdown(space.defaults(), s);
  EXPECT_NEAR(b.producer_cap, 61.333333333333, 1e-9);
  EXPECT_DOUBLE_EQ(b.broker_cap, 88.0);
  EXPECT_DOUBLE_EQ(b.socket_cap, 55.0);
  EXPECT_DOUBLE_EQ(b.queue_cap, 62.5);
  EXPECT_NEAR(b.wire_cap, 107.1, 1e-12);
  EXPECT_EQ(b.throughput, 55.0);
  EXPECT_EQ(b.bottleneck, Bottleneck::socket);
  EXPECT_NEAR(b.latency, 5.163, 1e-3);
  // 2 + 16384 B / 55 MiB/s + 25 (61.333/55 - 1), frozen from the hand evaluation
  EXPECT_NEAR(b.latency, 5.162878787878788, 1e-12);

  const auto o = evaluate(space.defaults(), s, 0.0, 0);
  EXPECT_EQ(o.throughput, 55.0);
  EXPECT_EQ(o.latency, b.latency);
}

TEST(Oracle, DefaultMetrics) {
  const auto space = default_space();
  const auto o = evaluate(space.defaults(), use_case(2), 0.0, 0);
  EXPECT_DOUBLE_EQ(o.state[0], 55.0);                       // blkio, no compression
  EXPECT_DOUBLE_EQ(o.state[1], 0.6 * 55.0 / 88.0);          // cpu user
  EXPECT_DOUBLE_EQ(o.state[2], 0.3 * 55.0 / 107.1);         // cpu kernel
  EXPECT_DOUBLE_EQ(o.state[3], 500.0 * 16384 / (256.0 * 1048576));
  EXPECT_DOUBLE_EQ(o.state[4], 55.0 * 1048576 / 16384);     // 3520 req/s
  EXPECT_DOUBLE_EQ(o.state[5], 0.8 * o.latency);
  EXPECT_DOUBLE_EQ(o.state[6], 0.0);
}

TEST(Oracle, BandwidthLimitedGzipRelief) {
  const auto space = default_space();
  const auto s = use_case(6);
  EXPECT_DOUBLE_EQ(s.bandwidth_mbps, 11.9);
  auto c = space.defaults();
  const auto plain = evaluate_breakdown(c, s);
  EXPECT_NEAR(plain.wire_cap, 10.71, 1e-12);
  c.values["compression.type"] = std::string("gzip");
  const auto gz = evaluate_breakdown(c, s);
  EXPECT_NEAR(gz.wire_cap, 23.8, 1e-12);
  EXPECT_GT(gz.throughput, plain.throughput);
  EXPECT_GE(gz.throughput, 2.0 * plain.throughput);
}

// Ten producers push demand far past every cap; at 1 Gbps the socket and
// broker caps sit below the wire cap, so the wire never binds here.
TEST(Oracle, ManyProducersHitSocketBeforeWire) {
  const auto s = use_case(9);
  EXPECT_EQ(s.producers, 10);
  const auto b = evaluate_breakdown(default_space().defaults(), s);
  EXPECT_GT(b.demand, 600.0);
  EXPECT_NEAR(b.wire_cap, 107.1, 1e-9);
  EXPECT_EQ(b.throughput, 55.0);
  EXPECT_EQ(b.bottleneck, Bottleneck::socket);
  auto wide = default_space().defaults();
  wide.values["socket.receive.buffer.bytes"] = std::int64_t{200 * kKiB};
  wide.values["socket.send.buffer.bytes"] = std::int64_t{200 * kKiB};
  wide.values["num.io.threads"] = std::int64_t{24};
  wide.values["num.network.threads"] = std::int64_t{20};
  const auto w = evaluate_breakdown(wide, s);
  EXPECT_LE(w.broker_cap, 88.0);
  EXPECT_LT(w.throughput, w.wire_cap);
  auto narrow = s;
  narrow.bandwidth_mbps = 40;
  const auto n = evaluate_breakdown(default_space().defaults(), narrow);
  EXPECT_EQ(n.throughput, n.wire_cap);
  EXPECT_EQ(n.bottleneck, Bottleneck::wire);
}

TEST(Oracle, UseCaseMatrix) {
  const double bw[] = {11.9, 59.5, 119};
  const int producers[] = {1, 3, 10};
  for (int k = 1; k <= 9; ++k) {
    const auto s = use_case(k);
    EXPECT_EQ(s.name, "test-" + std::to_string(k));
    EXPECT_EQ(s.brokers, 1);
    EXPECT_EQ(s.consumers, 1);
    EXPECT_TRUE(std::find(std::begin(bw), std::end(bw), s.bandwidth_mbps) != std::end(bw));
    EXPECT_TRUE(std::find(std::begin(producers), std::end(producers), s.producers) != std::end(producers));
  }
  EXPECT_THROW(use_case(0), InvalidScenario);
  EXPECT_THROW(use_case(10), InvalidScenario);
}

TEST(Oracle, MatchesIndependentTranscription) {
  const auto space = default_space();
  const auto batch = lhs_sample(space, 1000, 17);
  for (int k = 1; k <= 9; ++k) {
    const auto s = use_case(k);
    for (const auto& c : batch.configs) {
      const auto b = evaluate_breakdown(c, s);
      const auto r = reference(c, s);
      ASSERT_NEAR(b.throughput, r.tp, 1e-12 * r.tp);
      ASSERT_NEAR(b.latency, r.lat, 1e-12 * r.lat);
    }
  }
}

TEST(Oracle, CapDominanceAndPositivity) {
  const auto space = default_space();
  const auto batch = lhs_sample(space, 1000, 23);
  for (const auto& c : batch.configs) {
    const auto b = evaluate_breakdown(c, use_case(2));
    for (double cap : {b.demand, b.broker_cap, b.socket_cap, b.queue_cap, b.wire_cap}) ASSERT_LE(b.throughput, cap);
    ASSERT_GT(b.throughput, 0);
    ASSERT_GE(b.utilization, 1.0);
    const bool congested = b.latency - (2.0 + 0.5 * double(c.integer("linger.ms")) +
                                        1000.0 * double(c.integer("batch.size")) / (b.throughput * 1048576)) >
                           0;
    ASSERT_EQ(congested, b.bottleneck != Bottleneck::demand);
    const auto o = evaluate(c, use_case(2), 0.0, 0);
    ASSERT_GT(o.latency, 0);
    for (int m : {1, 2, 3}) {
      ASSERT_GE(o.state[m], 0.0);
      ASSERT_LE(o.state[m], 1.0);
    }
    ASSERT_EQ(o.state[6] == 0.0, c.label("compression.type") == "none");
  }
}

TEST(Oracle, Monotonicity) {
  const auto space = default_space();
  const auto batch = lhs_sample(space, 300, 29);
  const auto s = use_case(2);
  auto bump = [&](Configuration c, const std::string& knob, std::int64_t step) {
    const auto& spec = space.spec(knob);
    c.values[knob] = std::min(spec.upper, c.integer(knob) + step);
    return c;
  };
  for (const auto& c : batch.configs) {
    const auto base = evaluate_breakdown(c, s);
    for (const char* knob : {"socket.receive.buffer.bytes", "socket.send.buffer.bytes"})
      ASSERT_GE(evaluate_breakdown(bump(c, knob, 20 * 1024), s).throughput, base.throughput);
    ASSERT_GE(evaluate_breakdown(bump(c, "queued.max.requests", 300), s).throughput, base.throughput);
    ASSERT_GE(evaluate_breakdown(bump(c, "linger.ms", 7), s).latency, base.latency);
    auto wider = s;
    wider.bandwidth_mbps *= 1.7;
    ASSERT_GE(evaluate_breakdown(c, wider).throughput, base.throughput);
  }
}

TEST(Oracle, NoiseIsSeededAndMultiplicative) {
  const auto space = default_space();
  const auto s = use_case(2);
  const auto a = evaluate(space.defaults(), s, 0.02, 7);
  const auto b = evaluate(space.defaults(), s, 0.02, 7);
  EXPECT_EQ(a.throughput, b.throughput);
  EXPECT_EQ(a.latency, b.latency);
  EXPECT_NE(a.throughput, 55.0);
  EXPECT_NEAR(a.throughput, 55.0, 55.0 * 0.02 * 6);
  EXPECT_DOUBLE_EQ(a.state[0], a.throughput);
  EXPECT_DOUBLE_EQ(a.state[5], 0.8 * a.latency);
  const auto wild = evaluate(space.defaults(), s, 50.0, 3);
  EXPECT_GT(wild.throughput, 0);
  EXPECT_GT(wild.latency, 0);
}

TEST(Oracle, InertScenarioFields) {
  const auto space = default_space();
  auto s = use_case(2);
  const auto base = evaluate_breakdown(space.defaults(), s);
  s.send_mode = SendMode::sync;
  s.reliability = Reliability::best_effort;
  s.rate = 1000;
  const auto other = evaluate_breakdown(space.defaults(), s);
  EXPECT_EQ(base.throughput, other.throughput);
  EXPECT_EQ(base.latency, other.latency);
}

TEST(Oracle, InvalidInputs) {
  const auto space = default_space();
  auto s = use_case(2);
  s.bandwidth_mbps = 0;
  EXPECT_THROW(evaluate(space.defaults(), s, 0, 0), InvalidScenario);
  s = use_case(2);
  s.brokers = 2;
  EXPECT_THROW(evaluate(space.defaults(), s, 0, 0), InvalidScenario);
  s = use_case(2);
  s.message_size_bytes = -1;
  EXPECT_THROW(evaluate(space.defaults(), s, 0, 0), InvalidScenario);
  auto c = space.defaults();
  c.values["num.io.threads"] = std::int64_t{0};
  EXPECT_THROW(evaluate(c, use_case(2), 0, 0), InvalidConfiguration);
}

TEST(Oracle, ScenarioAndProfileFiles) {
  for (int k = 1; k <= 9; ++k) {
    const auto s = use_case(k);
    EXPECT_EQ(parse_scenario(serialize_scenario(s)), s);
  }
  OracleProfile p;
  p.congestion_ms = 30;
  p.wire_ratio["gzip"] = 0.4;
  const auto text = serialize_profile(p);
  const auto q = parse_profile(text);
  EXPECT_EQ(serialize_profile(q), text);
  EXPECT_EQ(q.congestion_ms, 30);
  EXPECT_EQ(q.wire_ratio.at("gzip"), 0.4);
  EXPECT_THROW(parse_profile("version = v1\nno_such_constant = 3\n"), Error);
}

TEST(Dataset, DeterministicAcrossParallelism) {
  const auto space = default_space();
  const auto a = generate_dataset(space, use_case(2), 97, 0.02, 5, 1);
  const auto b = generate_dataset(space, use_case(2), 97, 0.02, 5, 8);
  EXPECT_EQ(dataset_to_csv(a, space), dataset_to_csv(b, space));
  EXPECT_EQ(dataset_metadata(a), dataset_metadata(b));
}

TEST(Dataset, NoiselessRowsMatchStandaloneEvaluation) {
  const auto space = default_space();
  const auto data = generate_dataset(space, use_case(4), 2, 0.0, 9);
  const auto batch = lhs_sample(space, 2, 9);
  ASSERT_EQ(data.rows.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const auto o = evaluate(batch.configs[i], use_case(4), 0.0, 0);
    EXPECT_EQ(data.rows[i].config, batch.configs[i]);
    EXPECT_EQ(data.rows[i].throughput, o.throughput);
    EXPECT_EQ(data.rows[i].latency, o.latency);
    EXPECT_EQ(data.rows[i].state, o.state);
  }
}

TEST(Dataset, ColumnsAndFileRoundTrip) {
  const auto space = default_space();
  const auto cols = dataset_columns(space);
  ASSERT_EQ(cols.size(), 19u);
  EXPECT_EQ(cols[0], "num.network.threads");
  EXPECT_EQ(cols[9], "compression.type");
  EXPECT_EQ(cols[10], "blkio_io_service_bytes");
  EXPECT_EQ(cols[17], "throughput_mbps");
  EXPECT_EQ(cols[18], "latency_ms");

  const auto data = generate_dataset(space, use_case(3), 40, 0.02, 12);
  const auto dir = std::filesystem::temp_directory_path() / "dmsconfig_dataset_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "d.csv").string();
  write_dataset(data, space, path);
  EXPECT_TRUE(std::filesystem::exists(path + ".meta"));
  const auto back = read_dataset(path, space);
  EXPECT_EQ(dataset_to_csv(back, space), dataset_to_csv(data, space));
  EXPECT_EQ(back.scenario, data.scenario);
  EXPECT_EQ(back.seed, 12u);
  EXPECT_EQ(back.noise_sigma, 0.02);
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    EXPECT_EQ(back.rows[i].throughput, data.rows[i].throughput);
    EXPECT_EQ(back.rows[i].state, data.rows[i].state);
  }
  EXPECT_THROW(read_dataset((dir / "missing.csv").string(), space), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Dataset, RejectsEmpty) {
  EXPECT_THROW(generate_dataset(default_space(), use_case(2), 0, 0, 1), std::invalid_argument);
}
