#include <gtest/gtest.h>

#include <map>

#include "cbm/agent.hpp"
#include "support/oracles.hpp"

using namespace cbm;

namespace {

Problem small_problem(std::uint64_t seed = 1, std::size_t tasks = 6) {
  oracle::RandomSpec spec;
  spec.tasks = tasks;
  spec.robots = 2;
  spec.precedence = 1;
  return Problem(oracle::random_instance(spec, seed));
}

AgentConfig tiny_config(std::uint64_t seed = 1) {
  AgentConfig c;
  c.pop_size = 4;
  c.seed = seed;
  c.patience = 50;
  return c;
}

CoalitionMessage best_message(AgentId from, std::uint64_t seq, const Genotype& g, const Problem& p) {
  auto o = *evaluate(g, p);
  return {MessageKind::BEST_SOLUTION, from, seq, SolutionPayload{g, o.makespan, o.cost}};
}

}  // namespace

TEST(StateSpace, EightDistinctStates) {
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < StateId::kCount; ++i) {
    EXPECT_EQ(StateId::from_index(i).index(), i);
    seen.insert(i);
  }
  EXPECT_EQ(seen.size(), 8u);
}

TEST(Perceive, Cases) {
  ExperienceMemory h;
  CycleCounters c;
  EXPECT_EQ(perceive_state(h, c), (StateId{Phase::diversify, false, false}));
  h.push({{}, OperatorId::ONE_MOVE, 0.2});
  EXPECT_TRUE(perceive_state(h, c).improved);
  h.push({{}, OperatorId::ONE_MOVE, -0.1});
  EXPECT_FALSE(perceive_state(h, c).improved);
  c.stagnation = c.n_cycles;
  EXPECT_TRUE(perceive_state(h, c).stale);
  c.stagnation = c.n_cycles - 1;
  EXPECT_FALSE(perceive_state(h, c).stale);
}

TEST(Select, SingletonAndDominantFitness) {
  Rng rng(1);
  std::vector<double> one = {0.3};
  EXPECT_EQ(select_index(one, rng), 0u);
  std::vector<double> skew = {1.0, 1e-9, 1e-9, 1e-9};
  int first = 0;
  for (int k = 0; k < 10000; ++k) first += select_index(skew, rng) == 0;
  EXPECT_GE(first, 9990);
}

TEST(Select, UniformFitnessPassesChiSquare) {
  Rng rng(42);
  const std::size_t k = 5, draws = 10000;
  std::vector<double> f(k, 0.4);
  std::vector<int> counts(k, 0);
  for (std::size_t i = 0; i < draws; ++i) ++counts[select_index(f, rng)];
  double chi2 = 0.0;
  const double expected = static_cast<double>(draws) / k;
  for (int c : counts) {
    chi2 += (c - expected) * (c - expected) / expected;
    EXPECT_NEAR(c, expected, 3.0 * std::sqrt(expected * (1.0 - 1.0 / k)));
  }
  EXPECT_LT(chi2, 18.47);  // χ²(4) at p = 0.001
}

TEST(Choose, RestrictedToPhaseAndRoulette) {
  Rng rng(3);
  WeightMatrix w;
  const StateId intens{Phase::intensify, false, false};
  for (int k = 0; k < 1000; ++k) {
    const auto op = choose_operator(w, intens, rng);
    EXPECT_TRUE(op == OperatorId::TWO_SWAP || op == OperatorId::ONE_MOVE);
  }
  const StateId div{};
  std::map<OperatorId, int> counts;
  for (int k = 0; k < 12000; ++k) ++counts[choose_operator(w, div, rng)];
  EXPECT_EQ(counts.size(), 6u);
  double chi2 = 0.0;
  for (auto [op, c] : counts) {
    EXPECT_EQ(operator_class(op), OperatorClass::diversifier);
    chi2 += (c - 2000.0) * (c - 2000.0) / 2000.0;
  }
  EXPECT_LT(chi2, 20.52);  // χ²(5) at p = 0.001

  for (OperatorId op : kSearchOperators) w(div, op) = 1e-9;
  w(div, OperatorId::INTRA_SWAP) = 1.0;
  int hits = 0;
  for (int k = 0; k < 10000; ++k) hits += choose_operator(w, div, rng) == OperatorId::INTRA_SWAP;
  EXPECT_GE(hits, 9990);
}

TEST(Learning, IndividualCases) {
  WeightMatrix w;
  const std::array<double, 3> eta = {1.0, 0.5, -2.0};
  EXPECT_EQ(individual_learning(w, {}, eta, true, 0.05), w);
  const StateId s{};
  std::vector<Experience> one = {{s, OperatorId::INTRA_SWAP, 0.1}};
  auto w1 = individual_learning(w, one, eta, true, 0.05);
  EXPECT_DOUBLE_EQ(w1(s, OperatorId::INTRA_SWAP), 2.0);
  auto w2 = individual_learning(w, one, eta, false, 0.05);
  EXPECT_DOUBLE_EQ(w2(s, OperatorId::INTRA_SWAP), 1.5);
  std::vector<Experience> bad = {{s, OperatorId::INTER_SWAP, 0.0}};
  auto w3 = individual_learning(w, bad, eta, true, 0.05);
  EXPECT_DOUBLE_EQ(w3(s, OperatorId::INTER_SWAP), 0.05);
  EXPECT_GE(w3.min(), 0.05);
}

TEST(Learning, Mimetism) {
  WeightMatrix w, r;
  for (std::size_t i = 0; i < 8; ++i)
    for (OperatorId op : kSearchOperators) r(StateId::from_index(i), op) = 2.0;
  EXPECT_EQ(mimetism_learning(w, r, 0.0), w);
  EXPECT_EQ(mimetism_learning(w, r, 1.0), r);
  EXPECT_DOUBLE_EQ(mimetism_learning(w, r, 0.3)(StateId{}, OperatorId::ONE_MOVE), 1.3);
}

TEST(Learning, WeightsStayFlooredAndFiniteUnderRandomInterleavings) {
  Rng rng(5);
  WeightMatrix w;
  std::uniform_real_distribution<double> u(-1, 1);
  for (int k = 0; k < 2000; ++k) {
    if (k % 3 == 0) {
      WeightMatrix r;
      for (std::size_t i = 0; i < 8; ++i)
        for (OperatorId op : kSearchOperators) r(StateId::from_index(i), op) = 0.05 + std::abs(u(rng)) * 5;
      w = mimetism_learning(w, r, std::abs(u(rng)));
    } else {
      std::vector<Experience> cyc;
      for (int j = 0; j < 5; ++j)
        cyc.push_back({StateId::from_index(k % 8), kSearchOperators[j % 8], u(rng)});
      w = individual_learning(w, cyc, {u(rng), u(rng), u(rng)}, k % 2 == 0, 0.05);
    }
    ASSERT_GE(w.min(), 0.05 - 1e-15);
    for (double x : w.matrix().data()) ASSERT_TRUE(std::isfinite(x));
  }
}

TEST(Learning, ShapeMismatchThrows) {
  EXPECT_THROW(WeightMatrix(Matrix(3, 8)), ParameterError);
}

TEST(Config, Validation) {
  AgentConfig c;
  c.pop_size = 1;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.rho = 1.5;
  EXPECT_THROW(c.validate(), ParameterError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ParameterError);
}

TEST(Agent, InitTwoMembersAndDeterminism) {
  const Problem p = small_problem();
  AgentConfig c = tiny_config();
  c.pop_size = 2;
  Agent a(p, c), b(p, c);
  ASSERT_EQ(a.population().size(), 2u);
  for (const auto& m : a.population()) {
    EXPECT_EQ(m.genotype.assigned_count(), p.num_tasks());
    EXPECT_GT(m.eval.fitness, 0.0);
  }
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(a.population()[i].genotype, b.population()[i].genotype);
  EXPECT_EQ(a.current().genotype, b.current().genotype);
  EXPECT_TRUE(a.experience().empty());
  EXPECT_EQ(a.weights(), WeightMatrix());
}

TEST(Agent, PopulationObjectivesFiniteOnFeasibleInstances) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Problem p = small_problem(seed, 7);
    Agent a(p, tiny_config(seed));
    for (const auto& m : a.population()) {
      EXPECT_TRUE(std::isfinite(m.eval.objectives.makespan));
      EXPECT_LT(m.eval.objectives.cost, p.big_m());
    }
  }
}

TEST(Agent, DominatingBestReplacesCoalitionBestAndWorseDoesNot) {
  const Problem p = small_problem(3);
  Agent a(p, tiny_config());
  const auto incumbent = a.best_coalition().objectives;
  // Find an enumerated solution strictly dominating or strictly worse.
  auto front = oracle::brute_force_front(p);
  const auto& best = front.front();
  if (coalition_better(best.objectives, incumbent)) {
    a.on_receive(best_message(5, 1, best.genotype, p));
    EXPECT_EQ(a.best_coalition().objectives, best.objectives);
  }
  const auto before = a.best_coalition().objectives;
  Genotype worst(p.num_robots());
  for (Task t = 0; t < p.num_tasks(); ++t) worst.routes[0].push_back(t);
  if (check_feasible(worst, p).empty() && !coalition_better(*evaluate(worst, p), before)) {
    a.on_receive(best_message(6, 1, worst, p));
    EXPECT_EQ(a.best_coalition().objectives, before);
  }
}

TEST(Agent, DuplicateAndMalformedMessagesDropped) {
  const Problem p = small_problem();
  Agent a(p, tiny_config());
  const auto w = a.weights();
  CoalitionMessage m{MessageKind::WEIGHT_MATRIX, 1, 1, Matrix(8, 8, 3.0)};
  a.on_receive(m);
  const auto after = a.weights();
  EXPECT_NE(after, w);
  a.on_receive(m);
  EXPECT_EQ(a.weights(), after);
  EXPECT_EQ(a.stats().duplicates, 1u);
  a.on_receive({MessageKind::WEIGHT_MATRIX, 1, 2, Matrix(2, 2, 1.0)});
  a.on_receive({MessageKind::BEST_SOLUTION, 1, 3, Matrix(8, 8, 1.0)});
  a.on_receive({MessageKind::BEST_SOLUTION, 1, 4, SolutionPayload{Genotype({{0, 0}, {}}), 0, 0}});
  EXPECT_EQ(a.stats().malformed, 3u);
  EXPECT_EQ(a.weights(), after);
}

TEST(Agent, RhoZeroWeightMessageIsNoOp) {
  const Problem p = small_problem();
  AgentConfig c = tiny_config();
  c.rho = 0.0;
  Agent a(p, c);
  a.on_receive({MessageKind::WEIGHT_MATRIX, 1, 1, Matrix(8, 8, 9.0)});
  EXPECT_EQ(a.weights(), WeightMatrix());
}

TEST(Agent, StopEndsStepping) {
  const Problem p = small_problem();
  Agent a(p, tiny_config());
  a.step();
  const auto iters = a.stats().iterations;
  a.on_receive({MessageKind::STOP, 1, 1, std::monostate{}});
  EXPECT_TRUE(a.terminal());
  EXPECT_TRUE(a.step().empty());
  EXPECT_EQ(a.stats().iterations, iters);
}

TEST(Agent, BestsMonotoneAndBitReproducible) {
  oracle::RandomSpec spec;
  spec.tasks = 14;
  spec.robots = 4;
  spec.precedence = 3;
  const Problem p(oracle::random_instance(spec, 8));
  AgentConfig c = tiny_config(9);
  c.pop_size = 6;
  Agent a(p, c), b(p, c);
  auto key = [](const Scored& s) { return coalition_key(s.objectives); };
  auto last_agent = key(a.best_agent()), last_coal = key(a.best_coalition());
  std::size_t sent = 0;
  for (int k = 0; k < 300; ++k) {
    auto out = a.step();
    auto out_b = b.step();
    ASSERT_EQ(out, out_b);
    sent += out.size();
    EXPECT_LE(key(a.best_agent()), last_agent);
    EXPECT_LE(key(a.best_coalition()), last_coal);
    EXPECT_FALSE(coalition_better(a.best_agent().objectives, a.best_coalition().objectives));
    last_agent = key(a.best_agent());
    last_coal = key(a.best_coalition());
    ASSERT_EQ(a.current().genotype, b.current().genotype);
    for (const auto& m : out) EXPECT_TRUE(m.well_formed());
  }
  EXPECT_GT(a.stats().cycles, 0u);
  EXPECT_GE(a.weights().min(), c.weight_floor);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_GT(sent, 0u);
}

TEST(Agent, UnchangedOperatorOutputGivesZeroGainAndNoBroadcast) {
  // One task, one robot: every operator returns its input.
  const Problem p(oracle::flat_instance({1.0}, 1));
  Agent a(p, tiny_config());
  // The first step only announces the initial best.
  auto first = a.step();
  ASSERT_EQ(first.size(), 1u);
  EXPECT_EQ(first[0].kind, MessageKind::BEST_SOLUTION);
  for (int k = 0; k < 20; ++k) {
    EXPECT_TRUE(a.step().empty());
    EXPECT_EQ(a.experience().back().gain, 0.0);
  }
}
