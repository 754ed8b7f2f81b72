#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cbm/core.hpp"

namespace cbm {

using Position = std::vector<double>;

enum class ObjectiveMode { single_cost, pareto_bi };

struct RobotSpec {
  std::size_t id = 0;
  std::size_t start_node = 0;  // index into ProblemInstance::start_nodes
  double capacity = 0.0;
  double speed = 1.0;  // m/s, only read by the instance generator
};

struct TaskSpec {
  std::size_t id = 0;
  Position position;
  std::string label;
};

// Parameters from which setup tensors were derived; lets the instance file
// store a 1024-task instance without two dense tensors of text.
struct GeometricSetup {
  std::vector<double> speeds;
  std::vector<double> cost_per_meter;
};

struct ProblemInstance {
  std::vector<RobotSpec> robots;
  std::vector<TaskSpec> tasks;
  std::vector<Position> start_nodes;
  Matrix duration;          // [task][robot], seconds
  SetupTensor setup_time;   // [robot][node][node], seconds
  SetupTensor setup_cost;   // [robot][node][node], cost units
  Matrix demand;            // [task][robot], energy units
  std::vector<std::pair<Task, Task>> precedence;
  bool closed_routes = false;
  ObjectiveMode objective_mode = ObjectiveMode::pareto_bi;
  double big_m = 0.0;
  // Cordeau route-duration limit per robot (travel + service); 0 = none.
  std::vector<double> route_duration_limit;
  std::optional<GeometricSetup> geometry;

  std::size_t num_tasks() const noexcept { return tasks.size(); }
  std::size_t num_robots() const noexcept { return robots.size(); }
  std::size_t num_nodes() const noexcept { return tasks.size() + 1; }
};

inline const char* to_string(ObjectiveMode m) {
  return m == ObjectiveMode::single_cost ? "single_cost" : "pareto_bi";
}

inline ObjectiveMode objective_mode_from_string(const std::string& s) {
  if (s == "single_cost") return ObjectiveMode::single_cost;
  if (s == "pareto_bi") return ObjectiveMode::pareto_bi;
  throw ParameterError("unknown objective mode '" + s + "'");
}

struct InstanceViolation {
  std::string field;
  std::vector<std::size_t> indices;
  std::string rule;

  std::string describe() const {
    std::ostringstream os;
    os << field;
    if (!indices.empty()) {
      os << '[';
      for (std::size_t k = 0; k < indices.size(); ++k) os << (k ? "," : "") << indices[k];
      os << ']';
    }
    os << ": " << rule;
    return os.str();
  }
};

namespace detail {

// Returns one directed cycle of the precedence graph, or empty if acyclic.
inline std::vector<Task> find_precedence_cycle(std::size_t n,
                                               const std::vector<std::pair<Task, Task>>& prec) {
  std::vector<std::vector<Task>> preds(n);
  std::vector<std::size_t> outdeg(n, 0);
  std::vector<std::vector<Task>> succs(n);
  for (auto [a, b] : prec) {
    if (a >= n || b >= n) continue;
    succs[a].push_back(b);
    preds[b].push_back(a);
  }
  std::vector<std::size_t> indeg(n, 0);
  for (std::size_t v = 0; v < n; ++v) indeg[v] = preds[v].size();
  std::vector<Task> stack;
  for (Task v = 0; v < n; ++v)
    if (indeg[v] == 0) stack.push_back(v);
  std::vector<bool> done(n, false);
  while (!stack.empty()) {
    Task v = stack.back();
    stack.pop_back();
    done[v] = true;
    for (Task w : succs[v])
      if (--indeg[w] == 0) stack.push_back(w);
  }
  // Every remaining node has a remaining predecessor; walking backwards must
  // revisit a node.
  for (Task start = 0; start < n; ++start) {
    if (done[start]) continue;
    std::vector<std::size_t> seen_at(n, std::numeric_limits<std::size_t>::max());
    std::vector<Task> walk;
    Task v = start;
    while (seen_at[v] == std::numeric_limits<std::size_t>::max()) {
      seen_at[v] = walk.size();
      walk.push_back(v);
      for (Task p : preds[v]) {
        if (!done[p]) {
          v = p;
          break;
        }
      }
    }
    std::vector<Task> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[v]), walk.end());
    std::sort(cycle.begin(), cycle.end());
    return cycle;
  }
  return {};
}

inline double max_finite_cost(const SetupTensor& cost, double big_m) {
  double best = 0.0;
  for (double v : cost.data())
    if (v != big_m && std::isfinite(v)) best = std::max(best, v);
  return best;
}

}  // namespace detail

inline double default_big_m(const SetupTensor& cost) {
  double mx = 0.0;
  for (double v : cost.data())
    if (std::isfinite(v)) mx = std::max(mx, v);
  return 1e6 * (mx + 1.0);
}

inline std::vector<InstanceViolation> validate_instance(const ProblemInstance& inst) {
  std::vector<InstanceViolation> out;
  const std::size_t n = inst.num_tasks();
  const std::size_t m = inst.num_robots();
  const std::size_t nodes = n + 1;
  auto add = [&](std::string field, std::vector<std::size_t> idx, std::string rule) {
    out.push_back({std::move(field), std::move(idx), std::move(rule)});
  };

  for (std::size_t i = 0; i < n; ++i)
    if (inst.tasks[i].id != i) add("tasks", {i}, "task ids must be dense and equal to their index");

  std::optional<std::size_t> dim;
  for (std::size_t i = 0; i < n; ++i) {
    const auto d = inst.tasks[i].position.size();
    if (!dim) dim = d;
    else if (*dim != d) add("tasks", {i}, "position dimensionality differs");
  }

  for (std::size_t r = 0; r < m; ++r) {
    const auto& rb = inst.robots[r];
    if (rb.id != r) add("robots", {r}, "robot ids must be dense and equal to their index");
    if (rb.start_node >= inst.start_nodes.size())
      add("robots.start_node", {r}, "start node index out of range");
    if (!(rb.capacity > 0.0)) add("capacity", {r}, "capacity must be positive");
  }

  if (inst.duration.rows() != n || inst.duration.cols() != m)
    add("duration", {}, "shape must be tasks x robots");
  if (inst.demand.rows() != n || inst.demand.cols() != m)
    add("demand", {}, "shape must be tasks x robots");
  if (inst.setup_time.robots() != m || inst.setup_time.nodes() != nodes)
    add("setup_time", {}, "shape must be robots x (tasks+1) x (tasks+1)");
  if (inst.setup_cost.robots() != m || inst.setup_cost.nodes() != nodes)
    add("setup_cost", {}, "shape must be robots x (tasks+1) x (tasks+1)");
  if (!inst.route_duration_limit.empty() && inst.route_duration_limit.size() != m)
    add("route_duration_limit", {}, "must be empty or one entry per robot");
  for (std::size_t r = 0; r < inst.route_duration_limit.size(); ++r)
    if (!(inst.route_duration_limit[r] >= 0.0))
      add("route_duration_limit", {r}, "limit must be non-negative");

  const bool shapes_ok = out.empty() || std::none_of(out.begin(), out.end(), [](const auto& v) {
                           return v.rule.rfind("shape", 0) == 0;
                         });
  if (shapes_ok) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t r = 0; r < m; ++r) {
        if (!(inst.duration(i, r) >= 0.0) || !std::isfinite(inst.duration(i, r)))
          add("duration", {i, r}, "duration must be finite and non-negative");
        if (!(inst.demand(i, r) >= 0.0) || !std::isfinite(inst.demand(i, r)))
          add("demand", {i, r}, "demand must be finite and non-negative");
      }
    for (Robot r = 0; r < m; ++r)
      for (Node i = 0; i < nodes; ++i)
        for (Node j = 0; j < nodes; ++j) {
          const double t = inst.setup_time(i, j, r);
          const double c = inst.setup_cost(i, j, r);
          if (i == j) {
            if (t != 0.0) add("setup_time", {i, j, r}, "diagonal entries must be 0");
            if (c != 0.0) add("setup_cost", {i, j, r}, "diagonal entries must be 0");
            continue;
          }
          if (!(t >= 0.0) || !std::isfinite(t))
            add("setup_time", {i, j, r}, "setup time must be finite and non-negative");
          if (c != inst.big_m && (!(c >= 0.0) || !std::isfinite(c)))
            add("setup_cost", {i, j, r}, "setup cost must be finite and non-negative or big_m");
        }
    const double max_cost = detail::max_finite_cost(inst.setup_cost, inst.big_m);
    if (!(inst.big_m > 1000.0 * max_cost))
      add("big_m", {}, "big_m must exceed 1000 x the largest finite setup cost");
  }

  bool prec_indices_ok = true;
  for (std::size_t k = 0; k < inst.precedence.size(); ++k) {
    auto [a, b] = inst.precedence[k];
    if (a >= n || b >= n) {
      add("precedence", {k}, "task index out of range");
      prec_indices_ok = false;
    } else if (a == b) {
      add("precedence", {k}, "self precedence");
      prec_indices_ok = false;
    }
  }
  if (prec_indices_ok) {
    auto cycle = detail::find_precedence_cycle(n, inst.precedence);
    if (!cycle.empty()) {
      std::ostringstream os;
      os << "precedence cycle {";
      for (std::size_t k = 0; k < cycle.size(); ++k) os << (k ? "," : "") << cycle[k];
      os << '}';
      add("precedence", std::vector<std::size_t>(cycle.begin(), cycle.end()), os.str());
    }
  }
  return out;
}

// Sets c[i][j][r] = big_m on every edge entering a task in `unavailable`.
inline ProblemInstance mask_unavailable(ProblemInstance inst, Robot r,
                                        const std::set<Task>& unavailable) {
  if (r >= inst.num_robots()) throw IndexError("robot index " + std::to_string(r) + " out of range");
  for (Task j : unavailable)
    if (j >= inst.num_tasks()) throw IndexError("task index " + std::to_string(j) + " out of range");
  if (unavailable.empty()) return inst;
  for (Task j : unavailable)
    for (Node i = 0; i < inst.num_nodes(); ++i)
      if (i != node_of(j)) inst.setup_cost(i, node_of(j), r) = inst.big_m;
  inst.geometry.reset();
  return inst;
}

struct GeometricTensors {
  SetupTensor setup_time;
  SetupTensor setup_cost;
};

inline double euclidean(const Position& a, const Position& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

// t[i][j][r] = |p_i - p_j| / speed_r, c[i][j][r] = |p_i - p_j| * cost_per_meter_r,
// node 0 of robot r sitting at that robot's start position.
inline GeometricTensors derive_geometric_setup(std::span<const TaskSpec> tasks,
                                               std::span<const Position> start_nodes,
                                               std::span<const RobotSpec> robots,
                                               std::span<const double> speeds,
                                               std::span<const double> cost_per_meter) {
  const std::size_t m = robots.size();
  if (speeds.size() != m || cost_per_meter.size() != m)
    throw ParameterError("speeds and cost_per_meter need one entry per robot");
  for (std::size_t r = 0; r < m; ++r) {
    if (!(speeds[r] > 0.0)) throw ParameterError("robot speed must be positive");
    if (robots[r].start_node >= start_nodes.size())
      throw ParameterError("robot start node out of range");
  }
  std::optional<std::size_t> dim;
  auto check_dim = [&](const Position& p) {
    if (!dim) dim = p.size();
    else if (*dim != p.size()) throw ParameterError("positions must share dimensionality");
  };
  for (const auto& t : tasks) check_dim(t.position);
  for (const auto& s : start_nodes) check_dim(s);

  const std::size_t nodes = tasks.size() + 1;
  GeometricTensors out{SetupTensor(m, nodes), SetupTensor(m, nodes)};
  std::vector<double> dist(nodes * nodes);
  for (Robot r = 0; r < m; ++r) {
    auto pos = [&](Node i) -> const Position& {
      return i == kStartNode ? start_nodes[robots[r].start_node] : tasks[i - 1].position;
    };
    for (Node i = 0; i < nodes; ++i)
      for (Node j = i + 1; j < nodes; ++j) {
        const double d = euclidean(pos(i), pos(j));
        out.setup_time(i, j, r) = out.setup_time(j, i, r) = d / speeds[r];
        out.setup_cost(i, j, r) = out.setup_cost(j, i, r) = d * cost_per_meter[r];
      }
  }
  return out;
}

inline GeometricTensors derive_geometric_setup(std::span<const TaskSpec> tasks,
                                               std::span<const Position> start_nodes,
                                               std::span<const RobotSpec> robots,
                                               std::span<const double> speeds,
                                               double cost_per_meter) {
  std::vector<double> cpm(robots.size(), cost_per_meter);
  return derive_geometric_setup(tasks, start_nodes, robots, speeds, cpm);
}

// Immutable compiled view of an instance with the derived indexes the search
// needs. Safe to share across agents.
class Problem {
 public:
  explicit Problem(ProblemInstance inst) : inst_(std::move(inst)) { build(); }

  const ProblemInstance& instance() const noexcept { return inst_; }

  std::size_t num_tasks() const noexcept { return inst_.num_tasks(); }
  std::size_t num_robots() const noexcept { return inst_.num_robots(); }
  ObjectiveMode mode() const noexcept { return inst_.objective_mode; }
  bool closed_routes() const noexcept { return inst_.closed_routes; }
  double big_m() const noexcept { return inst_.big_m; }

  double setup_time(Node i, Node j, Robot r) const { return inst_.setup_time(i, j, r); }
  double setup_cost(Node i, Node j, Robot r) const { return inst_.setup_cost(i, j, r); }
  double duration(Task t, Robot r) const { return inst_.duration(t, r); }
  double demand(Task t, Robot r) const { return inst_.demand(t, r); }
  double capacity(Robot r) const { return inst_.robots[r].capacity; }
  double route_duration_limit(Robot r) const {
    return inst_.route_duration_limit.empty() ? 0.0 : inst_.route_duration_limit[r];
  }

  // A task is unavailable to a robot when the edge from the robot's start to
  // it carries the big-M mask.
  bool available(Task t, Robot r) const { return available_[t * num_robots() + r] != 0; }

  std::span<const Task> predecessors(Task t) const { return preds_[t]; }
  std::span<const Task> successors(Task t) const { return succs_[t]; }
  bool has_precedence(Task t) const { return !preds_[t].empty() || !succs_[t].empty(); }
  bool precedes(Task a, Task b) const {
    return std::find(succs_[a].begin(), succs_[a].end(), b) != succs_[a].end();
  }
  bool has_any_precedence() const noexcept { return !inst_.precedence.empty(); }

  std::size_t num_locations() const noexcept { return location_robots_.size(); }
  std::span<const Robot> robots_at(std::size_t loc) const { return location_robots_[loc]; }
  std::size_t location_of(Robot r) const { return robot_location_[r]; }

  // nearest / second-nearest start-location setup cost; 0 when only one
  // location reaches the task.
  double border_ratio(Task t) const { return border_ratio_[t]; }

 private:
  void build() {
    const std::size_t n = num_tasks();
    const std::size_t m = num_robots();
    preds_.assign(n, {});
    succs_.assign(n, {});
    for (auto [a, b] : inst_.precedence) {
      if (a >= n || b >= n) throw IndexError("precedence task index out of range");
      succs_[a].push_back(b);
      preds_[b].push_back(a);
    }
    available_.assign(n * m, 1);
    for (Task t = 0; t < n; ++t)
      for (Robot r = 0; r < m; ++r)
        if (inst_.setup_cost(kStartNode, node_of(t), r) >= inst_.big_m && inst_.big_m > 0.0)
          available_[t * m + r] = 0;

    // Locations are the start nodes that host at least one robot, in
    // start-node order.
    std::vector<std::size_t> used;
    for (const auto& rb : inst_.robots) used.push_back(rb.start_node);
    std::sort(used.begin(), used.end());
    used.erase(std::unique(used.begin(), used.end()), used.end());
    location_robots_.assign(used.size(), {});
    robot_location_.assign(m, 0);
    for (Robot r = 0; r < m; ++r) {
      const auto loc = static_cast<std::size_t>(
          std::lower_bound(used.begin(), used.end(), inst_.robots[r].start_node) - used.begin());
      robot_location_[r] = loc;
      location_robots_[loc].push_back(r);
    }

    border_ratio_.assign(n, 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    for (Task t = 0; t < n; ++t) {
      double d1 = inf, d2 = inf;
      for (std::size_t loc = 0; loc < location_robots_.size(); ++loc) {
        double d = inf;
        for (Robot r : location_robots_[loc])
          if (available(t, r)) d = std::min(d, inst_.setup_cost(kStartNode, node_of(t), r));
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      if (!std::isfinite(d2)) border_ratio_[t] = 0.0;
      else if (d2 == 0.0) border_ratio_[t] = 1.0;
      else border_ratio_[t] = d1 / d2;
    }
  }

  ProblemInstance inst_;
  std::vector<std::vector<Task>> preds_, succs_;
  std::vector<unsigned char> available_;
  std::vector<std::vector<Robot>> location_robots_;
  std::vector<std::size_t> robot_location_;
  std::vector<double> border_ratio_;
};

}  // namespace cbm
