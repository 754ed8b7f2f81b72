#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "cbm/bench.hpp"
#include "cbm/instance_io.hpp"
#include "cbm/manifest.hpp"
#include "support/oracles.hpp"

using namespace cbm;

namespace {

void expect_same(const ProblemInstance& a, const ProblemInstance& b) {
  auto close = [](std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k)
      if (std::abs(x[k] - y[k]) > 1e-12 * std::max(1.0, std::abs(x[k]))) return false;
    return true;
  };
  ASSERT_EQ(a.num_tasks(), b.num_tasks());
  ASSERT_EQ(a.num_robots(), b.num_robots());
  EXPECT_TRUE(close(a.setup_time.data(), b.setup_time.data()));
  EXPECT_TRUE(close(a.setup_cost.data(), b.setup_cost.data()));
  EXPECT_TRUE(close(a.duration.data(), b.duration.data()));
  EXPECT_TRUE(close(a.demand.data(), b.demand.data()));
  EXPECT_EQ(a.precedence, b.precedence);
  EXPECT_EQ(a.closed_routes, b.closed_routes);
  EXPECT_EQ(a.objective_mode, b.objective_mode);
  EXPECT_EQ(a.big_m, b.big_m);
  EXPECT_EQ(a.start_nodes, b.start_nodes);
  EXPECT_EQ(a.route_duration_limit, b.route_duration_limit);
  for (std::size_t r = 0; r < a.num_robots(); ++r) {
    EXPECT_EQ(a.robots[r].capacity, b.robots[r].capacity);
    EXPECT_EQ(a.robots[r].start_node, b.robots[r].start_node);
    EXPECT_EQ(a.robots[r].speed, b.robots[r].speed);
  }
  for (std::size_t t = 0; t < a.num_tasks(); ++t) {
    EXPECT_EQ(a.tasks[t].position, b.tasks[t].position);
    EXPECT_EQ(a.tasks[t].label, b.tasks[t].label);
  }
}

}  // namespace

TEST(InstanceIo, GeneratedInstanceRoundTripsGeometrically) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto inst = generate_xd_instance(5 + seed, 1 + seed % 5, 0.2, rng);
    const auto text = write_instance_string(inst);
    EXPECT_NE(text.find("\"geometric\""), std::string::npos);
    const auto back = read_instance_string(text);
    expect_same(inst, back);
    EXPECT_TRUE(back.geometry.has_value());
    // exact, not only within tolerance
    EXPECT_TRUE(std::ranges::equal(inst.setup_cost.data(), back.setup_cost.data()));
  }
}

TEST(InstanceIo, ExplicitTensorsRoundTripDensely) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    oracle::RandomSpec spec;
    spec.precedence = 3;
    spec.closed = seed % 2;
    spec.mode = seed % 3 ? ObjectiveMode::pareto_bi : ObjectiveMode::single_cost;
    auto inst = oracle::random_instance(spec, seed);
    inst = mask_unavailable(inst, 0, {1});
    const auto text = write_instance_string(inst);
    EXPECT_NE(text.find("\"dense\""), std::string::npos);
    expect_same(inst, read_instance_string(text));
  }
}

TEST(InstanceIo, CordeauInstanceRoundTrips) {
  const auto inst = cordeau_to_instance(read_cordeau_file(std::string(CBM_DATA_DIR) + "/cordeau/p01"));
  expect_same(inst, read_instance_string(write_instance_string(inst)));
}

TEST(InstanceIo, ExampleFileValidates) {
  const auto inst = read_instance_file(std::string(CBM_DATA_DIR) + "/examples/greenhouse.json");
  EXPECT_TRUE(validate_instance(inst).empty());
  EXPECT_GE(inst.precedence.size(), 1u);
}

TEST(InstanceIo, FileRoundTrip) {
  Rng rng(4);
  const auto inst = generate_xd_instance(12, 3, 0.2, rng);
  const std::string path = testing::TempDir() + "/rt.json";
  write_instance_file(path, inst);
  expect_same(inst, read_instance_file(path));
}

TEST(InstanceIo, RejectsMalformedDocuments) {
  EXPECT_THROW(read_instance_string("{not json"), ParseError);
  EXPECT_THROW(read_instance_string("{\"format\": \"other\"}"), ParseError);
  Rng rng(1);
  auto j = instance_to_json(generate_xd_instance(4, 2, 0.2, rng));
  auto bad = j;
  bad["duration"].erase(0);
  EXPECT_THROW(instance_from_json(bad), ParseError);
  bad = j;
  bad["setup"]["kind"] = "sparse";
  EXPECT_THROW(instance_from_json(bad), ParseError);
  bad = j;
  bad["version"] = 2;
  EXPECT_THROW(instance_from_json(bad), ParseError);
  bad = j;
  bad.erase("robots");
  EXPECT_THROW(instance_from_json(bad), ParseError);
  EXPECT_THROW(read_instance_file("/nonexistent/x.json"), ParseError);
}

TEST(Manifest, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
  EXPECT_EQ(hex64(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
}

TEST(Manifest, RoundTripsEveryConfigField) {
  RunManifest m;
  m.command = "solve";
  m.instance_path = "x.json";
  m.instance_format = "native";
  m.instance_hash = hex64(fnv1a64("x"));
  m.transport = "tcp";
  m.listen = "127.0.0.1:5000";
  m.peers = {"127.0.0.1:5001"};
  m.coalition.n_agents = 3;
  m.coalition.scheduler = Scheduler::threaded;
  m.coalition.fuzz = {true, 99, 0.125};
  m.coalition.shuffle_order = true;
  m.coalition.max_iterations = 77;
  auto& a = m.coalition.agent;
  a.pop_size = 11;
  a.eta = {0.1, 0.2, -0.3};
  a.weight_floor = 0.01;
  a.rho = 0.9;
  a.n_cycles = 3;
  a.epsilon = 1e-4;
  a.patience = 123;
  a.time_limit = 4.5;
  a.seed = 1ull << 40;
  a.max_intensify = 17;
  a.operators = {0.6, 999, 5};
  m.build_id = "abc";
  m.started_at = iso8601_utc(std::chrono::system_clock::time_point{});
  m.extra = {{"makespan", 1.5}};
  const auto back = RunManifest::from_json(nlohmann::json::parse(m.to_json().dump()));
  EXPECT_EQ(back.to_json(), m.to_json());
  EXPECT_EQ(back.coalition.agent.seed, 1ull << 40);
  EXPECT_EQ(back.coalition.agent.eta, a.eta);
  EXPECT_EQ(m.started_at, "1970-01-01T00:00:00Z");
  EXPECT_THROW(RunManifest::from_json(nlohmann::json::object()), ParseError);
}
