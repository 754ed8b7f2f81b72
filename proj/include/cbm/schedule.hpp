#pragma once

#include <algorithm>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/problem.hpp"

namespace cbm {

// Chromosome genetic material: one ordered task sequence per robot. Tasks
// absent from every route are unassigned.
struct Genotype {
  std::vector<std::vector<Task>> routes;

  Genotype() = default;
  explicit Genotype(std::size_t robots) : routes(robots) {}
  explicit Genotype(std::vector<std::vector<Task>> r) : routes(std::move(r)) {}
  Genotype(std::initializer_list<std::vector<Task>> r) : routes(r) {}

  std::size_t assigned_count() const {
    std::size_t k = 0;
    for (const auto& r : routes) k += r.size();
    return k;
  }

  bool operator==(const Genotype&) const = default;
};

struct ScheduleEntry {
  Task task = 0;
  double start = 0.0;
  double finish = 0.0;

  bool operator==(const ScheduleEntry&) const = default;
};

struct Schedule {
  std::vector<std::vector<ScheduleEntry>> entries;  // per robot, route order
  double makespan = 0.0;
  double total_cost = 0.0;
  bool complete = false;

  bool operator==(const Schedule&) const = default;
};

enum class DecodeErrorKind { cross_schedule_deadlock, unknown_task, duplicate_task };

inline const char* to_string(DecodeErrorKind k) {
  switch (k) {
    case DecodeErrorKind::cross_schedule_deadlock: return "cross_schedule_deadlock";
    case DecodeErrorKind::unknown_task: return "unknown_task";
    case DecodeErrorKind::duplicate_task: return "duplicate_task";
  }
  return "?";
}

struct DecodeError {
  DecodeErrorKind kind = DecodeErrorKind::cross_schedule_deadlock;
  std::vector<Task> witness;  // sorted
};

class DecodeResult {
 public:
  DecodeResult(Schedule s) : v_(std::move(s)) {}  // NOLINT(google-explicit-constructor)
  DecodeResult(DecodeError e) : v_(std::move(e)) {}  // NOLINT(google-explicit-constructor)

  bool ok() const noexcept { return std::holds_alternative<Schedule>(v_); }
  explicit operator bool() const noexcept { return ok(); }
  const Schedule& schedule() const { return std::get<Schedule>(v_); }
  Schedule& schedule() { return std::get<Schedule>(v_); }
  const DecodeError& error() const { return std::get<DecodeError>(v_); }

 private:
  std::variant<Schedule, DecodeError> v_;
};

inline double makespan(const Schedule& s) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& route : s.entries)
    for (const auto& e : route) {
      lo = std::min(lo, e.start);
      hi = std::max(hi, e.finish);
    }
  return hi < lo ? 0.0 : hi - lo;
}

inline double total_cost(const Genotype& g, const Problem& p) {
  double sum = 0.0;
  for (Robot r = 0; r < g.routes.size(); ++r) {
    Node prev = kStartNode;
    for (Task t : g.routes[r]) {
      sum += p.setup_cost(prev, node_of(t), r) + p.demand(t, r);
      prev = node_of(t);
    }
    if (p.closed_routes() && prev != kStartNode) sum += p.setup_cost(prev, kStartNode, r);
  }
  return sum;
}

// List-scheduling decoder with reusable scratch space. For fixed sequences
// it yields the unique semi-active schedule: every start is the longest path
// over route-order and precedence edges.
class Decoder {
 public:
  // Computes start/finish for every assigned task. Returns false and fills
  // `error` on an invalid genotype or a wait cycle.
  bool run(const Genotype& g, const Problem& p, DecodeError* error = nullptr) {
    const std::size_t n = p.num_tasks();
    robot_of_.assign(n, kNone);
    index_of_.assign(n, 0);
    assigned_ = 0;
    for (Robot r = 0; r < g.routes.size(); ++r) {
      const auto& route = g.routes[r];
      for (std::size_t k = 0; k < route.size(); ++k) {
        const Task t = route[k];
        if (t >= n) {
          if (error) *error = {DecodeErrorKind::unknown_task, {t}};
          return false;
        }
        if (robot_of_[t] != kNone) {
          if (error) *error = {DecodeErrorKind::duplicate_task, {t}};
          return false;
        }
        robot_of_[t] = r;
        index_of_[t] = static_cast<std::uint32_t>(k);
        ++assigned_;
      }
    }

    indeg_.assign(n, 0);
    for (Task t = 0; t < n; ++t) {
      if (robot_of_[t] == kNone) continue;
      if (index_of_[t] > 0) ++indeg_[t];
      for (Task a : p.predecessors(t))
        if (robot_of_[a] != kNone) ++indeg_[t];
    }
    start_.assign(n, 0.0);
    finish_.assign(n, 0.0);
    earliest_.assign(n, 0.0);
    ready_.clear();
    for (Task t = 0; t < n; ++t)
      if (robot_of_[t] != kNone && indeg_[t] == 0) ready_.push_back(t);

    std::size_t processed = 0;
    while (!ready_.empty()) {
      const Task t = ready_.back();
      ready_.pop_back();
      ++processed;
      const Robot r = robot_of_[t];
      const auto& route = g.routes[r];
      const std::uint32_t k = index_of_[t];
      double route_ready;
      if (k == 0) {
        route_ready = p.setup_time(kStartNode, node_of(t), r);
      } else {
        const Task prev = route[k - 1];
        route_ready = finish_[prev] + p.setup_time(node_of(prev), node_of(t), r);
      }
      start_[t] = std::max(route_ready, earliest_[t]);
      finish_[t] = start_[t] + p.duration(t, r);
      if (k + 1 < route.size()) {
        const Task next = route[k + 1];
        if (--indeg_[next] == 0) ready_.push_back(next);
      }
      for (Task s : p.successors(t)) {
        if (robot_of_[s] == kNone) continue;
        earliest_[s] = std::max(earliest_[s], finish_[t]);
        if (--indeg_[s] == 0) ready_.push_back(s);
      }
    }
    if (processed == assigned_) return true;
    if (error) *error = {DecodeErrorKind::cross_schedule_deadlock, wait_cycle(g, p)};
    return false;
  }

  double makespan() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Task t = 0; t < robot_of_.size(); ++t) {
      if (robot_of_[t] == kNone) continue;
      lo = std::min(lo, start_[t]);
      hi = std::max(hi, finish_[t]);
    }
    return hi < lo ? 0.0 : hi - lo;
  }

  bool assigned(Task t) const { return robot_of_[t] != kNone; }
  double start(Task t) const { return start_[t]; }
  double finish(Task t) const { return finish_[t]; }
  std::size_t assigned_count() const { return assigned_; }

 private:
  static constexpr Robot kNone = std::numeric_limits<Robot>::max();

  // Walks unprocessed predecessors backwards until a task repeats.
  std::vector<Task> wait_cycle(const Genotype& g, const Problem& p) const {
    const std::size_t n = robot_of_.size();
    Task v = 0;
    while (v < n && (robot_of_[v] == kNone || indeg_[v] == 0)) ++v;
    std::vector<std::size_t> seen_at(n, SIZE_MAX);
    std::vector<Task> walk;
    while (seen_at[v] == SIZE_MAX) {
      seen_at[v] = walk.size();
      walk.push_back(v);
      const std::uint32_t k = index_of_[v];
      Task next = v;
      if (k > 0) {
        const Task prev = g.routes[robot_of_[v]][k - 1];
        if (indeg_[prev] > 0) next = prev;
      }
      if (next == v) {
        for (Task a : p.predecessors(v))
          if (robot_of_[a] != kNone && indeg_[a] > 0) {
            next = a;
            break;
          }
      }
      v = next;
    }
    std::vector<Task> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[v]), walk.end());
    std::sort(cycle.begin(), cycle.end());
    return cycle;
  }

  std::vector<Robot> robot_of_;
  std::vector<std::uint32_t> index_of_;
  std::vector<std::uint32_t> indeg_;
  std::vector<double> start_, finish_, earliest_;
  std::vector<Task> ready_;
  std::size_t assigned_ = 0;
};

inline DecodeResult decode_semi_active(const Genotype& g, const Problem& p) {
  Decoder dec;
  DecodeError err;
  if (!dec.run(g, p, &err)) return err;
  Schedule s;
  s.entries.resize(g.routes.size());
  for (Robot r = 0; r < g.routes.size(); ++r)
    for (Task t : g.routes[r]) s.entries[r].push_back({t, dec.start(t), dec.finish(t)});
  s.makespan = dec.makespan();
  s.total_cost = total_cost(g, p);
  s.complete = dec.assigned_count() == p.num_tasks();
  return s;
}

// Travel plus service time of a route, the quantity Cordeau's D bounds.
inline double route_duration(const std::vector<Task>& route, Robot r, const Problem& p) {
  double d = 0.0;
  Node prev = kStartNode;
  for (Task t : route) {
    d += p.setup_time(prev, node_of(t), r) + p.duration(t, r);
    prev = node_of(t);
  }
  if (p.closed_routes() && prev != kStartNode) d += p.setup_time(prev, kStartNode, r);
  return d;
}

enum class FeasibilityKind {
  capacity,
  duplicate_task,
  unknown_task,
  precedence_order,
  deadlock,
  unavailable_task,
  route_duration,
};

inline const char* to_string(FeasibilityKind k) {
  switch (k) {
    case FeasibilityKind::capacity: return "capacity";
    case FeasibilityKind::duplicate_task: return "duplicate_task";
    case FeasibilityKind::unknown_task: return "unknown_task";
    case FeasibilityKind::precedence_order: return "precedence_order";
    case FeasibilityKind::deadlock: return "deadlock";
    case FeasibilityKind::unavailable_task: return "unavailable_task";
    case FeasibilityKind::route_duration: return "route_duration";
  }
  return "?";
}

struct FeasibilityViolation {
  FeasibilityKind kind;
  std::vector<std::size_t> indices;  // robot and/or tasks involved
  double magnitude = 0.0;
};

inline std::vector<FeasibilityViolation> check_feasible(const Genotype& g, const Problem& p) {
  std::vector<FeasibilityViolation> out;
  const std::size_t n = p.num_tasks();
  std::vector<int> seen(n, -1);
  std::vector<std::size_t> pos(n, 0);
  bool structural_ok = true;
  for (Robot r = 0; r < g.routes.size(); ++r) {
    double load = 0.0;
    for (std::size_t k = 0; k < g.routes[r].size(); ++k) {
      const Task t = g.routes[r][k];
      if (t >= n) {
        out.push_back({FeasibilityKind::unknown_task, {r, t}, 1.0});
        structural_ok = false;
        continue;
      }
      if (seen[t] >= 0) {
        out.push_back({FeasibilityKind::duplicate_task, {t}, 1.0});
        structural_ok = false;
      } else {
        seen[t] = static_cast<int>(r);
        pos[t] = k;
      }
      if (!p.available(t, r)) out.push_back({FeasibilityKind::unavailable_task, {r, t}, 1.0});
      load += p.demand(t, r);
    }
    if (load > p.capacity(r) + 1e-9)
      out.push_back({FeasibilityKind::capacity, {r}, load - p.capacity(r)});
    const double limit = p.route_duration_limit(r);
    if (limit > 0.0) {
      const double d = route_duration(g.routes[r], r, p);
      if (d > limit + 1e-9) out.push_back({FeasibilityKind::route_duration, {r}, d - limit});
    }
  }
  for (auto [a, b] : p.instance().precedence) {
    if (seen[a] >= 0 && seen[a] == seen[b] && pos[a] > pos[b])
      out.push_back({FeasibilityKind::precedence_order,
                     {static_cast<std::size_t>(seen[a]), a, b},
                     static_cast<double>(pos[a] - pos[b])});
  }
  if (structural_ok) {
    Decoder dec;
    DecodeError err;
    if (!dec.run(g, p, &err)) {
      std::vector<std::size_t> idx(err.witness.begin(), err.witness.end());
      out.push_back({FeasibilityKind::deadlock, std::move(idx), 1.0});
    }
  }
  return out;
}

// One line per entry: robot<TAB>task<TAB>start<TAB>finish, sorted by
// (robot, start), six decimals.
inline std::string gantt_text(const Schedule& s) {
  std::string out;
  char buf[128];
  for (std::size_t r = 0; r < s.entries.size(); ++r) {
    auto route = s.entries[r];
    std::stable_sort(route.begin(), route.end(),
                     [](const auto& a, const auto& b) { return a.start < b.start; });
    for (const auto& e : route) {
      std::snprintf(buf, sizeof buf, "%zu\t%u\t%.6f\t%.6f\n", r, e.task, e.start, e.finish);
      out += buf;
    }
  }
  return out;
}

}  // namespace cbm
