#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

struct Objectives {
  ObjectiveMode mode = ObjectiveMode::pareto_bi;
  double makespan = 0.0;  // δ
  double cost = 0.0;      // γ

  bool operator==(const Objectives&) const = default;
};

// Minimization. single_cost compares γ alone.
inline bool dominates(const Objectives& a, const Objectives& b) {
  if (a.mode != b.mode) throw ParameterError("dominance between different objective modes");
  if (a.mode == ObjectiveMode::single_cost) return a.cost < b.cost;
  return a.makespan <= b.makespan && a.cost <= b.cost &&
         (a.makespan < b.makespan || a.cost < b.cost);
}

namespace detail {
inline double ratio(double value, double ref) {
  if (ref > 0.0) return value / ref;
  return value > 0.0 ? 1.0 + value : 1.0;
}
}  // namespace detail

// 0.5·δ/δ_ref + 0.5·γ/γ_ref; γ/γ_ref in single_cost mode. Equals 1 at the
// reference itself.
inline double scalarized(const Objectives& candidate, const Objectives& ref) {
  if (candidate.mode == ObjectiveMode::single_cost) return detail::ratio(candidate.cost, ref.cost);
  return 0.5 * detail::ratio(candidate.makespan, ref.makespan) +
         0.5 * detail::ratio(candidate.cost, ref.cost);
}

inline constexpr double kImprovementTolerance = 1e-9;

inline bool improves_scalarized(const Objectives& candidate, const Objectives& ref) {
  return scalarized(candidate, ref) < 1.0 - kImprovementTolerance;
}

// Total preorder used for the agent and coalition bests. Pareto mode orders by
// (δ·γ, δ, γ): consistent with dominance and independent of the order in
// which an agent merges candidates.
inline auto coalition_key(const Objectives& o) {
  if (o.mode == ObjectiveMode::single_cost) return std::make_tuple(o.cost, 0.0, 0.0);
  return std::make_tuple(o.makespan * o.cost, o.makespan, o.cost);
}

inline bool coalition_better(const Objectives& candidate, const Objectives& incumbent) {
  return coalition_key(candidate) < coalition_key(incumbent);
}

// Objectives of a genotype; std::nullopt if it does not decode. Incomplete
// solutions are pushed behind every complete one via (big_m, big_m).
inline std::optional<Objectives> evaluate(const Genotype& g, const Problem& p, Decoder& dec) {
  if (!dec.run(g, p)) return std::nullopt;
  Objectives o{p.mode(), dec.makespan(), total_cost(g, p)};
  if (dec.assigned_count() != p.num_tasks()) {
    const double big = std::max(p.big_m(), 1.0);
    o.makespan = big;
    o.cost = big;
  }
  return o;
}

inline std::optional<Objectives> evaluate(const Genotype& g, const Problem& p) {
  Decoder dec;
  return evaluate(g, p, dec);
}

struct Evaluation {
  Objectives objectives;
  int dummy_rank = 0;  // R′
  int rank = 0;        // R
  double density = 0.0;
  double fitness = 0.0;
};

// R′(i) = number of members dominating i; R(i) = R′(i) + Σ R′ of those
// dominators.
inline void rank_population(std::span<Evaluation> pop) {
  const std::size_t n = pop.size();
  for (auto& e : pop) e.dummy_rank = 0;
  std::vector<char> dom(n * n, 0);  // dom[j*n+i]: j dominates i
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && dominates(pop[j].objectives, pop[i].objectives)) {
        dom[j * n + i] = 1;
        ++pop[i].dummy_rank;
      }
  for (std::size_t i = 0; i < n; ++i) {
    int r = pop[i].dummy_rank;
    for (std::size_t j = 0; j < n; ++j)
      if (dom[j * n + i]) r += pop[j].dummy_rank;
    pop[i].rank = r;
  }
}

namespace detail {
struct Normalizer {
  double lo[2], span[2];

  explicit Normalizer(std::span<const Evaluation> pop) {
    lo[0] = lo[1] = std::numeric_limits<double>::infinity();
    double hi[2] = {-lo[0], -lo[0]};
    for (const auto& e : pop) {
      const double v[2] = {e.objectives.makespan, e.objectives.cost};
      for (int k = 0; k < 2; ++k) {
        lo[k] = std::min(lo[k], v[k]);
        hi[k] = std::max(hi[k], v[k]);
      }
    }
    for (int k = 0; k < 2; ++k) span[k] = hi[k] - lo[k];
  }

  double coord(const Objectives& o, int k) const {
    const double v = k == 0 ? o.makespan : o.cost;
    return span[k] > 0.0 ? (v - lo[k]) / span[k] : 0.0;
  }
};
}  // namespace detail

// 1 / (distance to nearest other member + 2), in min-max normalized
// objective space; 0 for a singleton.
inline double density(std::span<const Evaluation> pop, std::size_t i) {
  if (pop.size() <= 1) return 0.0;
  const detail::Normalizer norm(pop);
  const bool single = pop[i].objectives.mode == ObjectiveMode::single_cost;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pop.size(); ++j) {
    if (j == i) continue;
    double d2 = 0.0;
    for (int k = single ? 1 : 0; k < 2; ++k) {
      const double d = norm.coord(pop[i].objectives, k) - norm.coord(pop[j].objectives, k);
      d2 += d * d;
    }
    best = std::min(best, std::sqrt(d2));
  }
  return 1.0 / (best + 2.0);
}

inline double fitness_of(int rank, double dens) { return 1.0 / (rank + dens + 1.0); }

inline void evaluate_fitness(std::span<Evaluation> pop) {
  rank_population(pop);
  std::vector<double> dens(pop.size());
  for (std::size_t i = 0; i < pop.size(); ++i) dens[i] = density(pop, i);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    pop[i].density = dens[i];
    pop[i].fitness = fitness_of(pop[i].rank, dens[i]);
  }
}

}  // namespace cbm
