#pragma once

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "cbm/fitness.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm::oracle {

struct RandomSpec {
  std::size_t tasks = 6;
  std::size_t robots = 2;
  std::size_t locations = 2;
  std::size_t precedence = 0;
  double capacity_slack = 10.0;  // capacity = slack * mean demand
  bool closed = false;
  ObjectiveMode mode = ObjectiveMode::pareto_bi;
};

// Small 2D instance with explicit tensors; robot r starts at location r % locations.
inline ProblemInstance random_instance(const RandomSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> coord(0.0, 10.0), dur(0.5, 3.0), dem(1.0, 3.0),
      speed(0.5, 2.0);
  ProblemInstance inst;
  for (std::size_t l = 0; l < spec.locations; ++l) inst.start_nodes.push_back({coord(rng), coord(rng)});
  for (std::size_t t = 0; t < spec.tasks; ++t)
    inst.tasks.push_back({t, {coord(rng), coord(rng)}, "t" + std::to_string(t)});
  std::vector<double> speeds, cpm;
  for (std::size_t r = 0; r < spec.robots; ++r) {
    inst.robots.push_back({r, r % spec.locations, spec.capacity_slack * 2.0, 1.0});
    speeds.push_back(speed(rng));
    cpm.push_back(1.0 + 0.5 * static_cast<double>(r % 3));
  }
  auto geo = derive_geometric_setup(inst.tasks, inst.start_nodes, inst.robots, speeds, cpm);
  inst.setup_time = std::move(geo.setup_time);
  inst.setup_cost = std::move(geo.setup_cost);
  inst.duration = Matrix(spec.tasks, spec.robots);
  inst.demand = Matrix(spec.tasks, spec.robots);
  for (std::size_t t = 0; t < spec.tasks; ++t)
    for (std::size_t r = 0; r < spec.robots; ++r) {
      inst.duration(t, r) = dur(rng);
      inst.demand(t, r) = dem(rng);
    }
  std::vector<Task> perm(spec.tasks);
  std::iota(perm.begin(), perm.end(), Task{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  for (std::size_t k = 0; k < spec.precedence && spec.tasks >= 2; ++k) {
    std::uniform_int_distribution<std::size_t> pick(0, spec.tasks - 1);
    std::size_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    std::pair<Task, Task> e{perm[a], perm[b]};
    if (std::find(inst.precedence.begin(), inst.precedence.end(), e) == inst.precedence.end())
      inst.precedence.push_back(e);
  }
  inst.closed_routes = spec.closed;
  inst.objective_mode = spec.mode;
  inst.big_m = default_big_m(inst.setup_cost);
  return inst;
}

// Start times by repeated relaxation over route-order and precedence edges
// until a fixpoint; independent of the decoder's topological processing.
// Returns false if relaxation does not converge (cycle).
inline bool longest_path_starts(const Genotype& g, const Problem& p, std::vector<double>& start,
                                std::vector<double>& finish) {
  const std::size_t n = p.num_tasks();
  std::vector<int> robot(n, -1);
  std::vector<std::size_t> idx(n, 0);
  for (Robot r = 0; r < g.routes.size(); ++r)
    for (std::size_t k = 0; k < g.routes[r].size(); ++k) {
      robot[g.routes[r][k]] = static_cast<int>(r);
      idx[g.routes[r][k]] = k;
    }
  start.assign(n, 0.0);
  finish.assign(n, 0.0);
  for (std::size_t round = 0; round <= n + 1; ++round) {
    bool changed = false;
    for (Task t = 0; t < n; ++t) {
      if (robot[t] < 0) continue;
      const Robot r = static_cast<Robot>(robot[t]);
      double s = 0.0;
      if (idx[t] == 0) s = p.setup_time(kStartNode, node_of(t), r);
      else {
        const Task prev = g.routes[r][idx[t] - 1];
        s = finish[prev] + p.setup_time(node_of(prev), node_of(t), r);
      }
      for (auto [a, b] : p.instance().precedence)
        if (b == t && robot[a] >= 0) s = std::max(s, finish[a]);
      const double f = s + p.duration(t, r);
      if (s != start[t] || f != finish[t]) {
        start[t] = s;
        finish[t] = f;
        changed = true;
      }
    }
    if (!changed) return true;
  }
  return false;
}

// Calls f(genotype) for every complete assignment of all tasks to ordered
// routes (permutation × composition).
template <class F>
void enumerate_genotypes(std::size_t n, std::size_t m, F&& f) {
  std::vector<Task> perm(n);
  std::iota(perm.begin(), perm.end(), Task{0});
  std::vector<std::size_t> cuts(m, 0);  // route sizes
  do {
    // Enumerate compositions of n into m non-negative parts.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t r, std::size_t left) {
      if (r + 1 == m) {
        cuts[r] = left;
        Genotype g(m);
        std::size_t k = 0;
        for (std::size_t q = 0; q < m; ++q)
          for (std::size_t c = 0; c < cuts[q]; ++c) g.routes[q].push_back(perm[k++]);
        f(g);
        return;
      }
      for (std::size_t take = 0; take <= left; ++take) {
        cuts[r] = take;
        rec(r + 1, left - take);
      }
    };
    rec(0, n);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

struct FrontPoint {
  Objectives objectives;
  Genotype genotype;
};

// Exhaustive Pareto front (or single-cost optimum set) over feasible
// complete genotypes.
inline std::vector<FrontPoint> brute_force_front(const Problem& p) {
  std::vector<FrontPoint> all;
  Decoder dec;
  enumerate_genotypes(p.num_tasks(), p.num_robots(), [&](const Genotype& g) {
    if (!check_feasible(g, p).empty()) return;
    auto o = evaluate(g, p, dec);
    if (o) all.push_back({*o, g});
  });
  std::vector<FrontPoint> front;
  for (const auto& a : all) {
    bool dominated = false;
    for (const auto& b : all)
      if (dominates(b.objectives, a.objectives)) {
        dominated = true;
        break;
      }
    if (!dominated) front.push_back(a);
  }
  return front;
}

// min over front points of 0.5·max(0,(δ−δf)/δf) + 0.5·max(0,(γ−γf)/γf).
inline double scalarized_distance(const Objectives& o, const std::vector<FrontPoint>& front) {
  double best = std::numeric_limits<double>::infinity();
  auto rel = [](double v, double ref) { return ref > 0 ? std::max(0.0, (v - ref) / ref) : std::max(0.0, v); };
  for (const auto& f : front) {
    const double d = o.mode == ObjectiveMode::single_cost
                         ? rel(o.cost, f.objectives.cost)
                         : 0.5 * rel(o.makespan, f.objectives.makespan) +
                               0.5 * rel(o.cost, f.objectives.cost);
    best = std::min(best, d);
  }
  return best;
}

inline std::vector<Task> sorted_tasks(const Genotype& g) {
  std::vector<Task> out;
  for (const auto& r : g.routes) out.insert(out.end(), r.begin(), r.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace cbm::oracle

namespace cbm::oracle {

// Zero setup times and costs, unit demands, generous capacity; durations
// given per task (identical for every robot). One start location.
inline ProblemInstance flat_instance(std::vector<double> durations, std::size_t robots,
                                     std::vector<std::pair<Task, Task>> prec = {}) {
  ProblemInstance inst;
  const std::size_t n = durations.size();
  inst.start_nodes = {{0.0, 0.0}};
  for (std::size_t t = 0; t < n; ++t) inst.tasks.push_back({t, {0.0, 0.0}, ""});
  for (std::size_t r = 0; r < robots; ++r) inst.robots.push_back({r, 0, 100.0, 1.0});
  inst.setup_time = SetupTensor(robots, n + 1);
  inst.setup_cost = SetupTensor(robots, n + 1);
  inst.duration = Matrix(n, robots);
  inst.demand = Matrix(n, robots, 1.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t r = 0; r < robots; ++r) inst.duration(t, r) = durations[t];
  inst.precedence = std::move(prec);
  inst.big_m = default_big_m(inst.setup_cost);
  return inst;
}

// Random genotype over a subset of tasks, possibly violating precedence.
inline Genotype random_genotype(const Problem& p, Rng& rng, bool all = true) {
  std::vector<Task> tasks(p.num_tasks());
  std::iota(tasks.begin(), tasks.end(), Task{0});
  std::shuffle(tasks.begin(), tasks.end(), rng);
  if (!all) tasks.resize(std::uniform_int_distribution<std::size_t>(0, tasks.size())(rng));
  Genotype g(p.num_robots());
  std::uniform_int_distribution<Robot> pick(0, static_cast<Robot>(p.num_robots() - 1));
  for (Task t : tasks) g.routes[pick(rng)].push_back(t);
  return g;
}

}  // namespace cbm::oracle
