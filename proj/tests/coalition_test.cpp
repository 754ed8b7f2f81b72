#include <gtest/gtest.h>

#include <thread>

#include "cbm/coalition.hpp"
#include "support/oracles.hpp"

using namespace cbm;

namespace {

Problem oracle_problem(std::uint64_t seed, std::size_t tasks = 6) {
  oracle::RandomSpec spec;
  spec.tasks = tasks;
  spec.robots = 2;
  spec.precedence = (tasks + 4) / 5;
  return Problem(oracle::random_instance(spec, seed));
}

CoalitionConfig small_config(std::size_t agents, std::uint64_t seed) {
  CoalitionConfig c;
  c.n_agents = agents;
  c.agent.pop_size = 6;
  c.agent.patience = 60;
  c.agent.seed = seed;
  return c;
}

}  // namespace

TEST(Coalition, SingleAgentEqualsStandaloneRun) {
  const Problem p = oracle_problem(2, 8);
  auto cfg = small_config(1, 7);
  auto r = run_coalition(p, cfg);
  Agent a(p, cfg.agent, 0);
  while (!a.patience_exhausted()) a.step();
  EXPECT_EQ(r.best, a.best_coalition().genotype);
  EXPECT_EQ(r.objectives, a.best_coalition().objectives);
  EXPECT_EQ(r.agents[0].stats.iterations, a.stats().iterations);
}

TEST(Coalition, AgentsAgreeAtTerminationUnderFuzzedLockstep) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Problem p = oracle_problem(seed, 9);
    auto cfg = small_config(4, seed);
    cfg.fuzz = {true, seed, 0.4};
    cfg.shuffle_order = true;
    auto r = run_coalition(p, cfg);
    EXPECT_TRUE(r.agents_agree()) << seed;
    for (const auto& a : r.agents) {
      EXPECT_FALSE(coalition_better(a.best_agent, r.objectives));
      EXPECT_EQ(a.stats.duplicates, 0u);
    }
    for (std::size_t k = 1; k < r.trace.size(); ++k)
      EXPECT_FALSE(coalition_better(r.trace[k - 1], r.trace[k])) << "trace increased at " << k;
    EXPECT_EQ(r.trace.back(), r.objectives);
  }
}

TEST(Coalition, AgentsAgreeAtTerminationThreaded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Problem p = oracle_problem(seed, 9);
    auto cfg = small_config(4, seed);
    cfg.scheduler = Scheduler::threaded;
    cfg.agent.patience = 40;
    auto r = run_coalition(p, cfg);
    EXPECT_TRUE(r.agents_agree()) << seed;
  }
}

TEST(Coalition, LockstepIsBitReproducible) {
  const Problem p = oracle_problem(4, 10);
  auto cfg = small_config(8, 11);
  auto a = run_coalition(p, cfg);
  auto b = run_coalition(p, cfg);
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.objectives, b.objectives);
  EXPECT_EQ(a.trace, b.trace);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Coalition, EightAgentsReachTheExhaustiveFront) {
  int on_front = 0;
  const int runs = 5;
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    const Problem p = oracle_problem(100 + seed, 5);
    auto front = oracle::brute_force_front(p);
    auto r = run_coalition(p, small_config(8, seed));
    bool dominated = false;
    for (const auto& f : front) dominated |= dominates(f.objectives, r.objectives);
    on_front += !dominated;
    EXPECT_LT(oracle::scalarized_distance(r.objectives, front), 0.05);
  }
  EXPECT_GE(on_front, runs - 1);
}

TEST(Coalition, RejectsBadConfig) {
  const Problem p = oracle_problem(1);
  auto cfg = small_config(0, 1);
  EXPECT_THROW(run_coalition(p, cfg), ParameterError);
  cfg = small_config(2, 1);
  InProcessBus wrong(3);
  EXPECT_THROW(run_coalition(p, cfg, &wrong), ParameterError);
}

TEST(Distributed, ParameterExchangeAndAgreementOverSharedBus) {
  oracle::RandomSpec spec;
  spec.tasks = 8;
  spec.robots = 3;
  spec.precedence = 2;
  const auto truth = oracle::random_instance(spec, 21);
  const std::size_t n = 3;
  InProcessBus bus(n);
  auto cfg = small_config(n, 5);
  std::vector<DistributedResult> results(n);
  std::vector<std::thread> threads;
  for (AgentId k = 0; k < n; ++k) {
    // Each agent only knows its own robots' parameters accurately.
    auto local = truth;
    for (Robot r = 0; r < spec.robots; ++r)
      if (r % n != k) {
        auto block = robot_block(local, r);
        for (auto& x : block.demand) x += 100.0;
        block.capacity = 1.0;
        merge_robot_block(local, block);
      }
    threads.emplace_back([&, k, local] { results[k] = run_distributed_agent(local, cfg, bus, k); });
  }
  for (auto& t : threads) t.join();
  for (const auto& r : results) {
    for (Robot rb = 0; rb < spec.robots; ++rb) EXPECT_EQ(robot_block(r.merged, rb), robot_block(truth, rb));
    EXPECT_EQ(r.report.best_coalition, results[0].report.best_coalition);
  }
}
