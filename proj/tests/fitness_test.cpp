#include <gtest/gtest.h>

#include <vector>

#include "cbm/fitness.hpp"

using namespace cbm;

namespace {

Objectives bi(double d, double g) { return {ObjectiveMode::pareto_bi, d, g}; }

std::vector<Evaluation> population(const std::vector<Objectives>& objs) {
  std::vector<Evaluation> pop;
  for (const auto& o : objs) pop.push_back({o});
  return pop;
}

std::vector<Objectives> random_objectives(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<int> u(0, 20);  // integer grid forces ties
  std::vector<Objectives> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(bi(u(rng), u(rng)));
  return out;
}

}  // namespace

TEST(Dominance, Cases) {
  EXPECT_FALSE(dominates(bi(5, 10), bi(5, 10)));
  EXPECT_TRUE(dominates(bi(4, 10), bi(5, 10)));
  EXPECT_FALSE(dominates(bi(4, 12), bi(5, 10)));
  EXPECT_FALSE(dominates(bi(5, 10), bi(4, 12)));
  const Objectives s1{ObjectiveMode::single_cost, 100, 3}, s2{ObjectiveMode::single_cost, 1, 4};
  EXPECT_TRUE(dominates(s1, s2));
  EXPECT_FALSE(dominates(s2, s1));
  EXPECT_THROW(dominates(s1, bi(1, 1)), ParameterError);
}

TEST(Rank, IncomparableMembers) {
  auto pop = population({bi(1, 5), bi(2, 4), bi(3, 3)});
  rank_population(pop);
  for (const auto& e : pop) {
    EXPECT_EQ(e.dummy_rank, 0);
    EXPECT_EQ(e.rank, 0);
  }
}

TEST(Rank, HandEvaluatedChain) {
  // j nondominated; i dominated by j only; k dominated by i and j.
  auto pop = population({bi(2, 2), bi(1, 1), bi(3, 3)});
  rank_population(pop);
  EXPECT_EQ(pop[0].dummy_rank, 1);
  EXPECT_EQ(pop[1].dummy_rank, 0);
  EXPECT_EQ(pop[2].dummy_rank, 2);
  EXPECT_EQ(pop[0].rank, 1);
  EXPECT_EQ(pop[1].rank, 0);
  EXPECT_EQ(pop[2].rank, 3);
}

TEST(Density, Cases) {
  auto dup = population({bi(1, 1), bi(1, 1)});
  EXPECT_DOUBLE_EQ(density(dup, 0), 0.5);
  auto one = population({bi(1, 1)});
  EXPECT_EQ(density(one, 0), 0.0);
  // Unit box corners (0,0) and (1,0) after normalization: distance 1.
  auto box = population({bi(0, 0), bi(10, 0), bi(10, 50), bi(0, 50)});
  EXPECT_DOUBLE_EQ(density(box, 0), 1.0 / 3.0);
}

TEST(Fitness, Values) {
  EXPECT_DOUBLE_EQ(fitness_of(0, 0.0), 1.0);
  EXPECT_NEAR(fitness_of(0, 0.5), 1.0 / 1.5, 1e-15);
  // 1/(3+0.5+1) = 2/9.
  EXPECT_NEAR(fitness_of(3, 0.5), 2.0 / 9.0, 1e-15);
  EXPECT_LT(fitness_of(4, 0.3), fitness_of(3, 0.3));
}

TEST(FitnessProperty, NondominatedIffRankZeroAndBounds) {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    auto objs = random_objectives(50, rng);
    auto pop = population(objs);
    evaluate_fitness(pop);
    for (std::size_t i = 0; i < objs.size(); ++i) {
      bool dominated = false;
      for (std::size_t j = 0; j < objs.size(); ++j)
        if (objs[j].makespan <= objs[i].makespan && objs[j].cost <= objs[i].cost &&
            (objs[j].makespan < objs[i].makespan || objs[j].cost < objs[i].cost))
          dominated = true;
      EXPECT_EQ(pop[i].rank == 0, !dominated);
      EXPECT_GE(pop[i].rank, pop[i].dummy_rank);
      EXPECT_GT(pop[i].fitness, 0.0);
      EXPECT_LE(pop[i].fitness, 1.0);
      EXPECT_GE(pop[i].density, 0.0);
      EXPECT_LE(pop[i].density, 0.5);
      EXPECT_DOUBLE_EQ(pop[i].fitness, 1.0 / (pop[i].rank + pop[i].density + 1.0));
      for (std::size_t j = 0; j < objs.size(); ++j)
        if (dominates(objs[i], objs[j])) {
          EXPECT_LT(pop[i].rank, pop[j].rank);
        }
    }
  }
}

TEST(FitnessProperty, RankScaleInvariance) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto objs = random_objectives(30, rng);
    auto scaled = objs;
    for (auto& o : scaled) o.cost *= 37.5;
    auto a = population(objs), b = population(scaled);
    rank_population(a);
    rank_population(b);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].dummy_rank, b[i].dummy_rank);
      EXPECT_EQ(a[i].rank, b[i].rank);
    }
  }
}

TEST(Scalarized, ReferenceAndImprovement) {
  EXPECT_DOUBLE_EQ(scalarized(bi(4, 10), bi(4, 10)), 1.0);
  EXPECT_DOUBLE_EQ(scalarized(bi(2, 10), bi(4, 10)), 0.75);
  EXPECT_TRUE(improves_scalarized(bi(3, 11), bi(4, 10)));
  EXPECT_FALSE(improves_scalarized(bi(4, 10), bi(4, 10)));
}

TEST(CoalitionComparator, ConsistentWithDominanceAndTransitive) {
  Rng rng(8);
  auto objs = random_objectives(60, rng);
  for (const auto& a : objs)
    for (const auto& b : objs) {
      if (dominates(a, b)) {
        EXPECT_TRUE(coalition_better(a, b));
      }
      EXPECT_FALSE(coalition_better(a, b) && coalition_better(b, a));
      for (const auto& c : objs)
        if (coalition_better(a, b) && coalition_better(b, c)) {
          EXPECT_TRUE(coalition_better(a, c));
        }
    }
}
