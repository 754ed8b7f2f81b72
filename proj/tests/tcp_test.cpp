#include <gtest/gtest.h>

#include <thread>

#include "cbm/coalition.hpp"
#include "cbm/tcp_transport.hpp"
#include "support/oracles.hpp"

using namespace cbm;
using namespace std::chrono_literals;

namespace {

// n listening transports on ephemeral localhost ports, fully connected.
std::vector<std::unique_ptr<TcpTransport>> mesh(std::size_t n) {
  std::vector<std::unique_ptr<TcpTransport>> ts;
  std::vector<Endpoint> eps;
  for (AgentId k = 0; k < n; ++k) {
    ts.push_back(std::make_unique<TcpTransport>(k, n, Endpoint{"127.0.0.1", 0}));
    eps.push_back({"127.0.0.1", ts.back()->port()});
  }
  for (auto& t : ts) t->connect_peers(eps, 5s);
  return ts;
}

std::optional<CoalitionMessage> wait_receive(TcpTransport& t, AgentId self) {
  const auto deadline = std::chrono::steady_clock::now() + 5s;
  while (std::chrono::steady_clock::now() < deadline) {
    if (auto m = t.try_receive(self)) return m;
    std::this_thread::sleep_for(1ms);
  }
  return std::nullopt;
}

}  // namespace

TEST(Endpoint, Parsing) {
  EXPECT_EQ(parse_endpoint("10.0.0.2:4000").host, "10.0.0.2");
  EXPECT_EQ(parse_endpoint("10.0.0.2:4000").port, 4000);
  EXPECT_EQ(parse_endpoint(":81").host, "127.0.0.1");
  EXPECT_EQ(parse_endpoint("81").port, 81);
  EXPECT_THROW(parse_endpoint("host:99999"), ParameterError);
  EXPECT_THROW(parse_endpoint("host:abc"), ParameterError);
}

TEST(Tcp, EveryKindRoundTrips) {
  auto ts = mesh(2);
  Matrix w(8, 8, 0.5);
  w(3, 4) = 0.125;
  ParamsPayload params;
  params.blocks.push_back({1, 7.5, {1, 2}, {3, 4}, {0, 1, 1, 0}, {0, 2, 2, 0}});
  const std::vector<CoalitionMessage> msgs = {
      {MessageKind::BEST_SOLUTION, 0, 1, SolutionPayload{Genotype({{2, 0}, {1}}), 3.5, 12.25}},
      {MessageKind::WEIGHT_MATRIX, 0, 2, w},
      {MessageKind::PARAMS_EXCHANGE, 0, 0, params},
      {MessageKind::STOP, 0, 3, std::monostate{}},
  };
  for (const auto& m : msgs) ts[0]->send(1, m);
  for (const auto& m : msgs) {
    auto got = wait_receive(*ts[1], 1);
    ASSERT_TRUE(got.has_value());
    EXPECT_EQ(encode(*got), encode(m));
  }
  EXPECT_FALSE(ts[1]->try_receive(1).has_value());
  EXPECT_EQ(ts[1]->malformed_frames(), 0u);
}

TEST(Tcp, BroadcastSkipsSenderAndSelfSendIsLocal) {
  auto ts = mesh(3);
  ts[1]->broadcast({MessageKind::STOP, 1, 9, std::monostate{}});
  EXPECT_TRUE(wait_receive(*ts[0], 0).has_value());
  EXPECT_TRUE(wait_receive(*ts[2], 2).has_value());
  std::this_thread::sleep_for(20ms);
  EXPECT_FALSE(ts[1]->try_receive(1).has_value());
  ts[1]->send(1, {MessageKind::STOP, 1, 10, std::monostate{}});
  EXPECT_TRUE(ts[1]->try_receive(1).has_value());
  EXPECT_THROW(ts[1]->try_receive(0), TransportError);
}

TEST(Tcp, MalformedFrameIsDroppedAndStreamContinues) {
  TcpTransport t(0, 2, {"127.0.0.1", 0});
  // Hand-rolled peer 1: hello, a frame with an unknown kind, then a STOP.
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(t.port());
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
  std::vector<std::uint8_t> bytes = {0, 1, 0, 0, 0, 11, 9, 0, 1, 0, 0, 0, 0, 0, 0, 0, 1};
  for (std::uint8_t b : encode_frame({MessageKind::STOP, 1, 2, std::monostate{}})) bytes.push_back(b);
  ASSERT_TRUE(detail::write_all(fd, bytes.data(), bytes.size()));
  auto got = wait_receive(t, 0);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->kind, MessageKind::STOP);
  EXPECT_EQ(got->seq, 2u);
  EXPECT_EQ(t.malformed_frames(), 1u);
  ::close(fd);
}

TEST(Tcp, UnreachablePeerTimesOut) {
  TcpTransport a(0, 2, {"127.0.0.1", 0});
  std::uint16_t dead_port;
  {
    TcpTransport b(1, 2, {"127.0.0.1", 0});
    dead_port = b.port();
  }
  EXPECT_THROW(a.connect_peers({{"127.0.0.1", a.port()}, {"127.0.0.1", dead_port}}, 200ms), TransportError);
}

TEST(Tcp, AgentsAgreeAtTermination) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    oracle::RandomSpec spec;
    spec.tasks = 7;
    spec.robots = 3;
    spec.precedence = 2;
    const auto inst = oracle::random_instance(spec, seed);
    const std::size_t n = 3;
    auto ts = mesh(n);
    CoalitionConfig cfg;
    cfg.n_agents = n;
    cfg.agent.pop_size = 6;
    cfg.agent.patience = 40;
    cfg.agent.seed = seed;
    std::vector<DistributedResult> results(n);
    std::vector<std::thread> threads;
    for (AgentId k = 0; k < n; ++k)
      threads.emplace_back([&, k] { results[k] = run_distributed_agent(inst, cfg, *ts[k], k); });
    for (auto& t : threads) t.join();
    for (const auto& r : results) {
      EXPECT_EQ(r.report.best_coalition, results[0].report.best_coalition) << seed;
      EXPECT_EQ(r.best.genotype, results[0].best.genotype) << seed;
      EXPECT_EQ(r.report.stats.malformed, 0u);
    }
    const Problem p(inst);
    EXPECT_TRUE(check_feasible(results[0].best.genotype, p).empty());
    for (auto& t : ts) t->close();
  }
}
