#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/fitness.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

enum class OperatorId : std::uint8_t {
  GREEDY_GENERATION,
  BCRC_BEST_COALITION,
  BCRC_POPULATION,
  INTRA_REVERSAL,
  INTRA_SWAP,
  INTER_SWAP,
  SINGLE_REROUTE,
  TWO_SWAP,
  ONE_MOVE,
};

enum class OperatorClass { generation, diversifier, intensifier };

inline constexpr OperatorClass operator_class(OperatorId op) {
  switch (op) {
    case OperatorId::GREEDY_GENERATION: return OperatorClass::generation;
    case OperatorId::TWO_SWAP:
    case OperatorId::ONE_MOVE: return OperatorClass::intensifier;
    default: return OperatorClass::diversifier;
  }
}

inline constexpr std::string_view to_string(OperatorId op) {
  constexpr std::array<std::string_view, 9> names = {
      "GREEDY_GENERATION", "BCRC_BEST_COALITION", "BCRC_POPULATION",
      "INTRA_REVERSAL",    "INTRA_SWAP",          "INTER_SWAP",
      "SINGLE_REROUTE",    "TWO_SWAP",            "ONE_MOVE"};
  return names[static_cast<std::size_t>(op)];
}

// Operators selectable by an agent, in weight-matrix column order.
inline constexpr std::array<OperatorId, 8> kSearchOperators = {
    OperatorId::BCRC_BEST_COALITION, OperatorId::BCRC_POPULATION, OperatorId::INTRA_REVERSAL,
    OperatorId::INTRA_SWAP,          OperatorId::INTER_SWAP,      OperatorId::SINGLE_REROUTE,
    OperatorId::TWO_SWAP,            OperatorId::ONE_MOVE};

inline constexpr std::size_t operator_column(OperatorId op) {
  return static_cast<std::size_t>(op) - 1;
}

struct OperatorConfig {
  double proximity_threshold = 0.75;
  // Objective evaluations an intensifier may spend before giving up.
  std::size_t max_evaluations = 4000;
  // Pareto-mode one_move evaluates this many cheapest slots per task plus
  // the cheapest slot of every robot.
  std::size_t slots_per_task = 12;
};

struct InsertionQuote {
  Robot route = 0;
  std::size_t position = 0;
  double delta_cost = 0.0;
  bool feasible = false;
};

// Mutable working copy of a genotype with per-route load, duration and cost
// bookkeeping so insertion and removal deltas are O(1).
class RoutePlan {
 public:
  static constexpr Robot kUnassigned = std::numeric_limits<Robot>::max();

  RoutePlan(const Problem& p, Genotype g) : p_(&p), g_(std::move(g)) {
    g_.routes.resize(p.num_robots());
    robot_of_.assign(p.num_tasks(), kUnassigned);
    index_of_.assign(p.num_tasks(), 0);
    load_.assign(p.num_robots(), 0.0);
    duration_.assign(p.num_robots(), 0.0);
    for (Robot r = 0; r < g_.routes.size(); ++r) {
      reindex(r, 0);
      for (Task t : g_.routes[r]) load_[r] += p.demand(t, r);
      duration_[r] = route_duration(g_.routes[r], r, p);
    }
  }

  const Problem& problem() const { return *p_; }
  const Genotype& genotype() const { return g_; }
  Genotype release() && { return std::move(g_); }

  const std::vector<Task>& route(Robot r) const { return g_.routes[r]; }
  bool assigned(Task t) const { return robot_of_[t] != kUnassigned; }
  Robot robot_of(Task t) const { return robot_of_[t]; }
  std::size_t index_of(Task t) const { return index_of_[t]; }
  double load(Robot r) const { return load_[r]; }

  std::vector<Task> assigned_tasks() const {
    std::vector<Task> out;
    for (const auto& r : g_.routes) out.insert(out.end(), r.begin(), r.end());
    return out;
  }
  std::vector<Task> unassigned_tasks() const {
    std::vector<Task> out;
    for (Task t = 0; t < robot_of_.size(); ++t)
      if (!assigned(t)) out.push_back(t);
    return out;
  }

  void insert(Task t, Robot r, std::size_t pos) {
    duration_[r] += insertion_delta_duration(t, r, pos);
    auto& route = g_.routes[r];
    route.insert(route.begin() + static_cast<std::ptrdiff_t>(pos), t);
    load_[r] += p_->demand(t, r);
    reindex(r, pos);
  }

  void remove(Task t) {
    const Robot r = robot_of_[t];
    const std::size_t pos = index_of_[t];
    auto& route = g_.routes[r];
    duration_[r] -= removal_duration(r, pos);
    route.erase(route.begin() + static_cast<std::ptrdiff_t>(pos));
    load_[r] -= p_->demand(t, r);
    robot_of_[t] = kUnassigned;
    reindex(r, pos);
  }

  // Change in γ from inserting t before position `pos` of route r.
  double insertion_delta_cost(Task t, Robot r, std::size_t pos) const {
    const Node prev = pos == 0 ? kStartNode : node_of(g_.routes[r][pos - 1]);
    const Node tn = node_of(t);
    double d = p_->setup_cost(prev, tn, r) + p_->demand(t, r);
    if (auto next = next_node(r, pos)) d += p_->setup_cost(tn, *next, r) - p_->setup_cost(prev, *next, r);
    return d;
  }

  // Change in γ from removing t from its route (usually negative).
  double removal_delta_cost(Task t) const {
    const Robot r = robot_of_[t];
    const std::size_t pos = index_of_[t];
    const Node prev = pos == 0 ? kStartNode : node_of(g_.routes[r][pos - 1]);
    const Node tn = node_of(t);
    double d = -(p_->setup_cost(prev, tn, r) + p_->demand(t, r));
    if (auto next = next_node(r, pos + 1)) d += p_->setup_cost(prev, *next, r) - p_->setup_cost(tn, *next, r);
    return d;
  }

  // Availability, capacity and duration-limit checks for t joining route r.
  bool can_host(Task t, Robot r) const {
    return p_->available(t, r) && load_[r] + p_->demand(t, r) <= p_->capacity(r) + 1e-9;
  }

  bool duration_ok(Task t, Robot r, std::size_t pos) const {
    const double limit = p_->route_duration_limit(r);
    return limit <= 0.0 || duration_[r] + insertion_delta_duration(t, r, pos) <= limit + 1e-9;
  }

  // Insertion positions [lo, hi] in route r that keep t ordered after its
  // in-route predecessors and before its in-route successors.
  std::pair<std::size_t, std::size_t> precedence_window(Task t, Robot r) const {
    std::size_t lo = 0, hi = g_.routes[r].size();
    for (Task a : p_->predecessors(t))
      if (robot_of_[a] == r) lo = std::max(lo, index_of_[a] + 1);
    for (Task b : p_->successors(t))
      if (robot_of_[b] == r) hi = std::min(hi, index_of_[b]);
    return {lo, hi};
  }

  double cost() const { return total_cost(g_, *p_); }

 private:
  std::optional<Node> next_node(Robot r, std::size_t pos) const {
    const auto& route = g_.routes[r];
    if (pos < route.size()) return node_of(route[pos]);
    if (p_->closed_routes()) return kStartNode;
    return std::nullopt;
  }

  double insertion_delta_duration(Task t, Robot r, std::size_t pos) const {
    const Node prev = pos == 0 ? kStartNode : node_of(g_.routes[r][pos - 1]);
    const Node tn = node_of(t);
    double d = p_->setup_time(prev, tn, r) + p_->duration(t, r);
    if (auto next = next_node(r, pos)) d += p_->setup_time(tn, *next, r) - p_->setup_time(prev, *next, r);
    return d;
  }

  double removal_duration(Robot r, std::size_t pos) const {
    const auto& route = g_.routes[r];
    const Task t = route[pos];
    const Node prev = pos == 0 ? kStartNode : node_of(route[pos - 1]);
    const Node tn = node_of(t);
    double d = p_->setup_time(prev, tn, r) + p_->duration(t, r);
    if (auto next = next_node(r, pos + 1)) d += p_->setup_time(tn, *next, r) - p_->setup_time(prev, *next, r);
    return d;
  }

  void reindex(Robot r, std::size_t from) {
    const auto& route = g_.routes[r];
    for (std::size_t k = from; k < route.size(); ++k) {
      robot_of_[route[k]] = r;
      index_of_[route[k]] = k;
    }
  }

  const Problem* p_;
  Genotype g_;
  std::vector<Robot> robot_of_;
  std::vector<std::size_t> index_of_;
  std::vector<double> load_;
  std::vector<double> duration_;
};

namespace detail {

struct Slot {
  Robot robot;
  std::size_t pos;
  double delta;
};

inline bool same_cost(double a, double b) {
  return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
}

// Slots in route r passing the cheap checks (availability, capacity,
// precedence window, duration limit).
template <class F>
void for_each_slot(const RoutePlan& plan, Task t, Robot r, F&& f) {
  if (!plan.can_host(t, r)) return;
  auto [lo, hi] = plan.precedence_window(t, r);
  for (std::size_t pos = lo; pos <= hi; ++pos)
    if (plan.duration_ok(t, r, pos)) f(Slot{r, pos, plan.insertion_delta_cost(t, r, pos)});
}

// True if inserting t at (r, pos) keeps the route/precedence graph acyclic.
// Tasks without precedence relations cannot close a cycle.
inline bool insertion_acyclic(RoutePlan& plan, Task t, Robot r, std::size_t pos, Decoder& dec) {
  if (!plan.problem().has_precedence(t)) return true;
  plan.insert(t, r, pos);
  const bool ok = dec.run(plan.genotype(), plan.problem());
  plan.remove(t);
  return ok;
}

inline double makespan_with(RoutePlan& plan, Task t, Robot r, std::size_t pos, Decoder& dec) {
  plan.insert(t, r, pos);
  dec.run(plan.genotype(), plan.problem());
  const double d = dec.makespan();
  plan.remove(t);
  return d;
}

}  // namespace detail

// Best feasible insertion of an unassigned task: minimal Δγ, ties broken by
// smaller resulting makespan, then lowest (route, position).
inline InsertionQuote best_insertion(RoutePlan& plan, Task t, std::span<const Robot> robots,
                                     Decoder& dec) {
  std::vector<detail::Slot> slots;
  for (Robot r : robots) detail::for_each_slot(plan, t, r, [&](detail::Slot s) { slots.push_back(s); });
  if (slots.empty()) return {};
  auto by_cost = [](const detail::Slot& a, const detail::Slot& b) {
    if (a.delta != b.delta) return a.delta < b.delta;
    return a.robot != b.robot ? a.robot < b.robot : a.pos < b.pos;
  };
  // Cheapest tie group first; full sort only if it is blocked by deadlocks.
  const double best_delta =
      std::min_element(slots.begin(), slots.end(), by_cost)->delta;
  std::vector<detail::Slot> group;
  for (const auto& s : slots)
    if (detail::same_cost(s.delta, best_delta)) group.push_back(s);
  std::sort(group.begin(), group.end(), by_cost);
  std::erase_if(group, [&](const detail::Slot& s) {
    return !detail::insertion_acyclic(plan, t, s.robot, s.pos, dec);
  });
  if (group.empty()) {
    std::sort(slots.begin(), slots.end(), by_cost);
    for (const auto& s : slots) {
      if (detail::same_cost(s.delta, best_delta)) continue;
      if (!group.empty() && !detail::same_cost(s.delta, group.front().delta)) break;
      if (detail::insertion_acyclic(plan, t, s.robot, s.pos, dec)) group.push_back(s);
    }
    if (group.empty()) return {};
  }
  detail::Slot chosen = group.front();
  if (group.size() > 1) {
    double best_makespan = std::numeric_limits<double>::infinity();
    for (const auto& s : group) {
      const double d = detail::makespan_with(plan, t, s.robot, s.pos, dec);
      if (d < best_makespan - 1e-12) {
        best_makespan = d;
        chosen = s;
      }
    }
  }
  return {chosen.robot, chosen.pos, chosen.delta, true};
}

inline InsertionQuote best_insertion(RoutePlan& plan, Task t, Decoder& dec) {
  std::vector<Robot> all(plan.problem().num_robots());
  std::iota(all.begin(), all.end(), Robot{0});
  return best_insertion(plan, t, all, dec);
}

namespace detail {

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

inline std::vector<Robot> all_robots(const Problem& p) {
  std::vector<Robot> all(p.num_robots());
  std::iota(all.begin(), all.end(), Robot{0});
  return all;
}

// Capacity, availability, duration limit and in-route precedence order of a
// whole route.
inline bool route_feasible(const std::vector<Task>& route, Robot r, const Problem& p) {
  double load = 0.0;
  for (std::size_t k = 0; k < route.size(); ++k) {
    const Task t = route[k];
    if (!p.available(t, r)) return false;
    load += p.demand(t, r);
    for (std::size_t j = k + 1; j < route.size(); ++j)
      if (p.precedes(route[j], t)) return false;
  }
  if (load > p.capacity(r) + 1e-9) return false;
  const double limit = p.route_duration_limit(r);
  return limit <= 0.0 || route_duration(route, r, p) <= limit + 1e-9;
}

// Moves a (in route ra) into route rb and b (in rb) into ra, each at its
// best feasible position. Returns false and leaves the plan untouched if
// either insertion is impossible.
inline bool exchange(RoutePlan& plan, Task a, Task b, Decoder& dec) {
  const Robot ra = plan.robot_of(a), rb = plan.robot_of(b);
  const std::size_t ia = plan.index_of(a), ib = plan.index_of(b);
  plan.remove(a);
  plan.remove(b);
  const Robot only_b[] = {rb};
  const Robot only_a[] = {ra};
  auto qa = best_insertion(plan, a, only_b, dec);
  if (qa.feasible) {
    plan.insert(a, qa.route, qa.position);
    auto qb = best_insertion(plan, b, only_a, dec);
    if (qb.feasible) {
      plan.insert(b, qb.route, qb.position);
      return true;
    }
    plan.remove(a);
  }
  // Restore in original index order.
  if (ra == rb && ia > ib) {
    plan.insert(b, rb, ib);
    plan.insert(a, ra, ia);
  } else {
    plan.insert(a, ra, ia);
    plan.insert(b, rb, ib);
  }
  return false;
}

inline std::vector<Task> border_tasks(const RoutePlan& plan, double threshold) {
  std::vector<Task> out;
  const Problem& p = plan.problem();
  for (Task t = 0; t < p.num_tasks(); ++t)
    if (plan.assigned(t) && p.border_ratio(t) >= threshold) out.push_back(t);
  return out;
}

}  // namespace detail

// Greedy insertion: tasks drawn at random among those whose predecessors
// have been handled, each placed at its cheapest feasible slot. Drawing in
// topological order keeps the route end a deadlock-free slot, so only
// capacity (or availability) leaves a task unassigned.
inline Genotype generate_greedy(const Problem& p, Rng& rng) {
  RoutePlan plan(p, Genotype(p.num_robots()));
  const std::size_t n = p.num_tasks();
  std::vector<std::size_t> waiting(n);
  std::vector<Task> ready;
  for (Task t = 0; t < n; ++t) {
    waiting[t] = p.predecessors(t).size();
    if (waiting[t] == 0) ready.push_back(t);
  }
  Decoder dec;
  const auto robots = detail::all_robots(p);
  while (!ready.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, ready.size() - 1);
    const std::size_t k = pick(rng);
    const Task t = ready[k];
    ready[k] = ready.back();
    ready.pop_back();
    auto q = best_insertion(plan, t, robots, dec);
    if (q.feasible) plan.insert(t, q.route, q.position);
    for (Task s : p.successors(t))
      if (--waiting[s] == 0) ready.push_back(s);
  }
  return std::move(plan).release();
}

// Best-cost route crossover: one route of parent2, drawn uniformly, is pulled
// out of parent1 and its tasks reinserted one by one at their best slots.
inline Genotype bcrc(const Genotype& parent1, const Genotype& parent2, const Problem& p, Rng& rng) {
  if (parent2.routes.empty()) return parent1;
  std::uniform_int_distribution<std::size_t> pick_route(0, parent2.routes.size() - 1);
  std::vector<Task> removed = parent2.routes[pick_route(rng)];
  if (removed.empty()) return parent1;
  RoutePlan plan(p, parent1);
  for (Task t : removed)
    if (t < p.num_tasks() && plan.assigned(t)) plan.remove(t);
  std::shuffle(removed.begin(), removed.end(), rng);
  Decoder dec;
  const auto robots = detail::all_robots(p);
  for (Task t : removed) {
    if (t >= p.num_tasks() || plan.assigned(t)) continue;
    auto q = best_insertion(plan, t, robots, dec);
    if (q.feasible) plan.insert(t, q.route, q.position);
  }
  return std::move(plan).release();
}

// Reverses positions [from, to] of the concatenated routes of the robots at
// start location `loc`; route lengths stay fixed, so tasks may change robot.
// Rejected (input returned) if any resulting route is infeasible.
inline Genotype intra_depot_reversal_at(const Genotype& g, const Problem& p, std::size_t loc,
                                        std::size_t from, std::size_t to) {
  if (loc >= p.num_locations()) return g;
  const auto robots = p.robots_at(loc);
  std::vector<Task> chain;
  for (Robot r : robots) chain.insert(chain.end(), g.routes[r].begin(), g.routes[r].end());
  if (from >= to || to >= chain.size()) return g;
  std::reverse(chain.begin() + static_cast<std::ptrdiff_t>(from),
               chain.begin() + static_cast<std::ptrdiff_t>(to) + 1);
  Genotype out = g;
  std::size_t k = 0;
  for (Robot r : robots) {
    for (auto& t : out.routes[r]) t = chain[k++];
    if (!detail::route_feasible(out.routes[r], r, p)) return g;
  }
  Decoder dec;
  if (p.has_any_precedence() && !dec.run(out, p)) return g;
  return out;
}

inline Genotype intra_depot_reversal(const Genotype& g, const Problem& p, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> locs;  // (loc, chain length)
  for (std::size_t loc = 0; loc < p.num_locations(); ++loc) {
    std::size_t len = 0;
    for (Robot r : p.robots_at(loc)) len += g.routes[r].size();
    if (len >= 2) locs.emplace_back(loc, len);
  }
  if (locs.empty()) return g;
  const auto [loc, len] = detail::pick(locs, rng);
  std::uniform_int_distribution<std::size_t> cut(0, len - 1);
  std::size_t a = cut(rng), b = cut(rng);
  if (a > b) std::swap(a, b);
  return intra_depot_reversal_at(g, p, loc, a, b);
}

// Moves one random task between two routes sharing a start location, to a
// random feasible position.
inline Genotype intra_depot_swap(const Genotype& g, const Problem& p, Rng& rng) {
  std::vector<std::size_t> locs;
  for (std::size_t loc = 0; loc < p.num_locations(); ++loc) {
    const auto robots = p.robots_at(loc);
    if (robots.size() < 2) continue;
    if (std::any_of(robots.begin(), robots.end(), [&](Robot r) { return !g.routes[r].empty(); }))
      locs.push_back(loc);
  }
  if (locs.empty()) return g;
  const auto robots = p.robots_at(detail::pick(locs, rng));
  std::vector<Robot> sources;
  for (Robot r : robots)
    if (!g.routes[r].empty()) sources.push_back(r);
  const Robot from = detail::pick(sources, rng);
  std::vector<Robot> targets;
  for (Robot r : robots)
    if (r != from) targets.push_back(r);
  const Robot to = detail::pick(targets, rng);

  RoutePlan plan(p, g);
  const Task t = detail::pick(g.routes[from], rng);
  plan.remove(t);
  std::vector<detail::Slot> slots;
  detail::for_each_slot(plan, t, to, [&](detail::Slot s) { slots.push_back(s); });
  std::shuffle(slots.begin(), slots.end(), rng);
  Decoder dec;
  for (const auto& s : slots) {
    if (detail::insertion_acyclic(plan, t, s.robot, s.pos, dec)) {
      plan.insert(t, s.robot, s.pos);
      return std::move(plan).release();
    }
  }
  return g;
}

// Exchanges two border tasks (similar proximity to more than one start
// location) currently served from different locations.
inline Genotype inter_depot_swap(const Genotype& g, const Problem& p, Rng& rng,
                                 const OperatorConfig& cfg = {}) {
  if (p.num_locations() < 2) return g;
  RoutePlan plan(p, g);
  const auto border = detail::border_tasks(plan, cfg.proximity_threshold);
  if (border.size() < 2) return g;
  const Task a = detail::pick(border, rng);
  const std::size_t la = p.location_of(plan.robot_of(a));
  std::vector<Task> partners;
  for (Task b : border)
    if (p.location_of(plan.robot_of(b)) != la) partners.push_back(b);
  if (partners.empty()) return g;
  const Task b = detail::pick(partners, rng);
  Decoder dec;
  if (!detail::exchange(plan, a, b, dec)) return g;
  return std::move(plan).release();
}

// Pulls one random task out and reinserts it at the globally best feasible
// slot; unassigned tasks are drawn as well and simply inserted.
inline Genotype single_action_rerouting(const Genotype& g, const Problem& p, Rng& rng) {
  if (p.num_tasks() == 0) return g;
  RoutePlan plan(p, g);
  std::uniform_int_distribution<Task> pick_task(0, static_cast<Task>(p.num_tasks() - 1));
  const Task t = pick_task(rng);
  std::optional<std::pair<Robot, std::size_t>> origin;
  if (plan.assigned(t)) {
    origin.emplace(plan.robot_of(t), plan.index_of(t));
    plan.remove(t);
  }
  Decoder dec;
  auto q = best_insertion(plan, t, dec);
  if (q.feasible) plan.insert(t, q.route, q.position);
  else if (origin) return g;
  return std::move(plan).release();
}

// First-improvement scan over pairs of border tasks at different locations;
// applies the first exchange that strictly lowers the scalarized objective.
inline Genotype two_swap(const Genotype& g, const Problem& p, Rng& rng,
                         const OperatorConfig& cfg = {}) {
  if (p.num_locations() < 2) return g;
  Decoder dec;
  const auto base = evaluate(g, p, dec);
  if (!base) return g;
  RoutePlan plan(p, g);
  auto border = detail::border_tasks(plan, cfg.proximity_threshold);
  std::shuffle(border.begin(), border.end(), rng);
  std::size_t evals = 0;
  for (std::size_t i = 0; i < border.size(); ++i)
    for (std::size_t j = i + 1; j < border.size(); ++j) {
      const Task a = border[i], b = border[j];
      if (p.location_of(plan.robot_of(a)) == p.location_of(plan.robot_of(b))) continue;
      if (++evals > cfg.max_evaluations) return g;
      RoutePlan trial = plan;
      if (!detail::exchange(trial, a, b, dec)) continue;
      auto obj = evaluate(trial.genotype(), p, dec);
      if (obj && improves_scalarized(*obj, *base)) return std::move(trial).release();
    }
  return g;
}

// First-improvement relocation of a single task anywhere in the chromosome.
inline Genotype one_move(const Genotype& g, const Problem& p, Rng& rng,
                         const OperatorConfig& cfg = {}) {
  Decoder dec;
  const auto base = evaluate(g, p, dec);
  if (!base) return g;
  RoutePlan plan(p, g);
  auto tasks = plan.assigned_tasks();
  std::shuffle(tasks.begin(), tasks.end(), rng);
  const auto robots = detail::all_robots(p);
  const bool single = p.mode() == ObjectiveMode::single_cost;
  const bool complete = plan.unassigned_tasks().empty();
  const double base_cost = plan.cost();
  std::size_t evals = 0;
  std::vector<detail::Slot> slots;
  std::vector<detail::Slot> picked;

  for (Task t : tasks) {
    const Robot r0 = plan.robot_of(t);
    const std::size_t i0 = plan.index_of(t);
    const double removal = plan.removal_delta_cost(t);
    plan.remove(t);
    slots.clear();
    for (Robot r : robots)
      detail::for_each_slot(plan, t, r, [&](detail::Slot s) {
        if (!(s.robot == r0 && s.pos == i0)) slots.push_back(s);
      });

    if (single) {
      // γ alone decides; deltas are exact so no decode is needed except
      // for the deadlock guard.
      std::sort(slots.begin(), slots.end(),
                [](const auto& a, const auto& b) { return a.delta < b.delta; });
      for (const auto& s : slots) {
        const double new_cost = base_cost + removal + s.delta;
        if (!(new_cost < base_cost - kImprovementTolerance * std::max(1.0, std::abs(base_cost))))
          break;
        if (++evals > cfg.max_evaluations * 64) break;
        if (!detail::insertion_acyclic(plan, t, s.robot, s.pos, dec)) continue;
        plan.insert(t, s.robot, s.pos);
        return std::move(plan).release();
      }
    } else {
      picked.clear();
      std::sort(slots.begin(), slots.end(),
                [](const auto& a, const auto& b) { return a.delta < b.delta; });
      if (slots.size() <= cfg.slots_per_task + robots.size()) {
        picked = slots;
      } else {
        std::vector<char> robot_seen(robots.size(), 0);
        for (std::size_t k = 0; k < slots.size(); ++k) {
          if (k < cfg.slots_per_task || !robot_seen[slots[k].robot]) picked.push_back(slots[k]);
          robot_seen[slots[k].robot] = 1;
        }
      }
      for (const auto& s : picked) {
        if (++evals > cfg.max_evaluations) {
          plan.insert(t, r0, i0);
          return g;
        }
        plan.insert(t, s.robot, s.pos);
        if (dec.run(plan.genotype(), p)) {
          Objectives o{p.mode(), dec.makespan(), base_cost + removal + s.delta};
          if (!complete) o = *evaluate(plan.genotype(), p, dec);
          if (improves_scalarized(o, *base)) return std::move(plan).release();
        }
        plan.remove(t);
      }
    }
    plan.insert(t, r0, i0);
  }
  return g;
}

// Applies any non-generation operator. `second_parent` feeds the BCRC
// variants.
inline Genotype apply_operator(OperatorId op, const Genotype& current, const Genotype& second_parent,
                               const Problem& p, Rng& rng, const OperatorConfig& cfg = {}) {
  switch (op) {
    case OperatorId::GREEDY_GENERATION: return generate_greedy(p, rng);
    case OperatorId::BCRC_BEST_COALITION:
    case OperatorId::BCRC_POPULATION: return bcrc(current, second_parent, p, rng);
    case OperatorId::INTRA_REVERSAL: return intra_depot_reversal(current, p, rng);
    case OperatorId::INTRA_SWAP: return intra_depot_swap(current, p, rng);
    case OperatorId::INTER_SWAP: return inter_depot_swap(current, p, rng, cfg);
    case OperatorId::SINGLE_REROUTE: return single_action_rerouting(current, p, rng);
    case OperatorId::TWO_SWAP: return two_swap(current, p, rng, cfg);
    case OperatorId::ONE_MOVE: return one_move(current, p, rng, cfg);
  }
  return current;
}

}  // namespace cbm
