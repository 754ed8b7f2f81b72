#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

enum class ConstraintClass {
  degree,
  depot,
  schedule,
  precedence,
  capacity,
  subtour,
  coverage,
};

inline const char* to_string(ConstraintClass c) {
  switch (c) {
    case ConstraintClass::degree: return "degree";
    case ConstraintClass::depot: return "depot";
    case ConstraintClass::schedule: return "schedule";
    case ConstraintClass::precedence: return "precedence";
    case ConstraintClass::capacity: return "capacity";
    case ConstraintClass::subtour: return "subtour";
    case ConstraintClass::coverage: return "coverage";
  }
  return "?";
}

struct ConstraintViolation {
  ConstraintClass constraint_class;
  // (i, j, r) node/robot triple for edge rows, the task subset for
  // subtours, {robot} for per-robot rows, {task} for degree and coverage.
  std::vector<std::size_t> indices;
  double magnitude = 0.0;
};

// Edge indicators x_{ijr} implied by a genotype, node 0 being the robot's
// own start. Closed routes add the return edge (last, 0).
struct Edge {
  Node i, j;
  Robot r;
  auto operator<=>(const Edge&) const = default;
};

inline std::vector<Edge> implied_edges(const Genotype& g, const Problem& p) {
  std::vector<Edge> out;
  for (Robot r = 0; r < g.routes.size(); ++r) {
    Node prev = kStartNode;
    for (Task t : g.routes[r]) {
      out.push_back({prev, node_of(t), r});
      prev = node_of(t);
    }
    if (p.closed_routes() && prev != kStartNode) out.push_back({prev, kStartNode, r});
  }
  return out;
}

namespace detail {

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  }
};

inline constexpr double kCheckTolerance = 1e-9;

}  // namespace detail

// Evaluates every constraint family of the unified model on the indicators
// implied by (g, s). Task-to-task edges (all robots pooled) violate the
// subtour family iff they contain an undirected cycle, which is the case
// exactly when some task subset S carries more than |S|-1 edges.
inline std::vector<ConstraintViolation> check_constraints(const Problem& p, const Genotype& g,
                                                          const Schedule& s) {
  std::vector<ConstraintViolation> out;
  const std::size_t n = p.num_tasks(), m = p.num_robots();
  const auto edges = implied_edges(g, p);
  const double tol = detail::kCheckTolerance;

  std::vector<std::size_t> indegree(n, 0);
  for (const auto& e : edges)
    if (e.j != kStartNode && e.j <= n) ++indegree[e.j - 1];
  for (Task t = 0; t < n; ++t) {
    if (indegree[t] > 1)
      out.push_back({ConstraintClass::degree, {t}, static_cast<double>(indegree[t] - 1)});
    if (indegree[t] == 0) out.push_back({ConstraintClass::coverage, {t}, 1.0});
  }

  if (g.routes.size() > m)
    out.push_back({ConstraintClass::depot, {m}, static_cast<double>(g.routes.size() - m)});

  // Times per (task, robot) from the schedule.
  std::map<std::pair<Task, Robot>, ScheduleEntry> timing;
  for (Robot r = 0; r < s.entries.size(); ++r)
    for (const auto& e : s.entries[r]) timing.emplace(std::make_pair(e.task, r), e);
  for (const auto& [key, e] : timing) {
    const auto [t, r] = key;
    if (t < n && r < m && std::abs(e.finish - (e.start + p.duration(t, r))) > tol * std::max(1.0, e.finish))
      out.push_back({ConstraintClass::schedule, {node_of(t), node_of(t), r},
                     std::abs(e.finish - e.start - p.duration(t, r))});
  }
  for (const auto& e : edges) {
    if (e.j == kStartNode || e.r >= m || e.j > n) continue;
    const Task tj = e.j - 1;
    const auto jt = timing.find({tj, e.r});
    if (jt == timing.end()) continue;
    double ready;
    if (e.i == kStartNode) {
      ready = p.setup_time(kStartNode, e.j, e.r);
    } else {
      if (e.i > n) continue;
      const auto it = timing.find({static_cast<Task>(e.i - 1), e.r});
      if (it == timing.end()) continue;
      ready = it->second.finish + p.setup_time(e.i, e.j, e.r);
    }
    const double gap = ready - jt->second.start;
    if (gap > tol * std::max(1.0, ready)) out.push_back({ConstraintClass::schedule, {e.i, e.j, e.r}, gap});
  }

  std::vector<std::optional<ScheduleEntry>> first(n);
  for (const auto& [key, e] : timing)
    if (key.first < n && !first[key.first]) first[key.first] = e;
  for (auto [a, b] : p.instance().precedence) {
    if (!first[a] || !first[b]) continue;
    const double gap = first[a]->finish - first[b]->start;
    if (gap > tol * std::max(1.0, first[a]->finish))
      out.push_back({ConstraintClass::precedence, {a, b}, gap});
  }

  for (Robot r = 0; r < std::min(g.routes.size(), m); ++r) {
    double load = 0.0;
    for (Task t : g.routes[r])
      if (t < n) load += p.demand(t, r);
    if (load > p.capacity(r) + tol) out.push_back({ConstraintClass::capacity, {r}, load - p.capacity(r)});
  }

  detail::DisjointSets ds(n);
  std::vector<char> reported(n, 0);
  for (const auto& e : edges) {
    if (e.i == kStartNode || e.j == kStartNode || e.i > n || e.j > n) continue;
    const std::size_t a = ds.find(e.i - 1), b = ds.find(e.j - 1);
    if (a != b) {
      ds.parent[a] = b;
      continue;
    }
    if (reported[a]) continue;
    reported[a] = 1;
    std::vector<std::size_t> subset;
    for (Task t = 0; t < n; ++t)
      if (ds.find(t) == a) subset.push_back(t);
    out.push_back({ConstraintClass::subtour, std::move(subset), 1.0});
  }
  return out;
}

struct LpOptions {
  // Degree rows as `= 1` (every task covered) or the literal `<= 1`.
  bool at_most_once = false;
  // Normalizers of the pareto scalarization 0.5·T/delta_scale + 0.5·γ/gamma_scale.
  double delta_scale = 1.0;
  double gamma_scale = 1.0;
  std::size_t max_tasks = 12;
};

inline std::string x_name(Node i, Node j, Robot r) {
  return "x_" + std::to_string(i) + "_" + std::to_string(j) + "_" + std::to_string(r);
}
inline std::string w_name(Node i, Robot r) { return "w_" + std::to_string(i) + "_" + std::to_string(r); }

// M_time: every finish of a semi-active schedule is bounded by the sum over
// tasks of the largest service time plus the largest finite incoming setup;
// one more largest setup keeps inactive schedule rows slack.
inline double big_m_time(const Problem& p) {
  double M = 0.0, widest = 0.0;
  for (Task t = 0; t < p.num_tasks(); ++t) {
    double sigma = 0.0, setup = 0.0;
    for (Robot r = 0; r < p.num_robots(); ++r) {
      if (!p.available(t, r)) continue;
      sigma = std::max(sigma, p.duration(t, r));
      for (Node i = 0; i <= p.num_tasks(); ++i)
        if (i != node_of(t) && (i == kStartNode || p.available(i - 1, r)))
          setup = std::max(setup, p.setup_time(i, node_of(t), r));
    }
    M += sigma + setup;
    widest = std::max(widest, setup);
  }
  return std::max(M + widest, 1.0);
}

namespace detail {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Appends ` + c name` / ` - c name` terms, wrapping long rows.
class RowWriter {
 public:
  explicit RowWriter(std::string& out) : out_(out) {}
  void term(double c, const std::string& var) {
    if (c == 0.0) return;
    if (width_ > 200) {
      out_ += "\n   ";
      width_ = 0;
    }
    std::string t = (c < 0 ? " - " : (terms_ == 0 ? " " : " + "));
    const double a = std::abs(c);
    if (a != 1.0) t += num(a) + " ";
    t += var;
    out_ += t;
    width_ += t.size();
    ++terms_;
  }
  std::size_t terms() const { return terms_; }

 private:
  std::string& out_;
  std::size_t width_ = 0, terms_ = 0;
};

}  // namespace detail

// Unified model in LP text format. Variables: binary x_i_j_r per edge of
// robot r's graph (node 0 = r's start, task nodes 1..n, return edges j = 0
// for closed routes), start times w_i_r in [0, M_time], makespan T.
// Tasks unavailable to r get no variables.
inline std::string export_lp(const Problem& p, const LpOptions& opt = {}) {
  const std::size_t n = p.num_tasks(), m = p.num_robots();
  if (n > opt.max_tasks)
    throw SizeError("LP export enumerates the subtour family explicitly (2^n - n - 1 rows); n = " +
                    std::to_string(n) + " exceeds the cap of " + std::to_string(opt.max_tasks));
  const bool pareto = p.mode() == ObjectiveMode::pareto_bi;
  const double M = big_m_time(p);
  auto usable = [&](Node v, Robot r) { return v == kStartNode || p.available(v - 1, r); };
  std::vector<Edge> edges;
  for (Robot r = 0; r < m; ++r)
    for (Node i = 0; i <= n; ++i)
      for (Node j = 0; j <= n; ++j) {
        if (i == j || !usable(i, r) || !usable(j, r)) continue;
        if (j == kStartNode && (i == kStartNode || !p.closed_routes())) continue;
        edges.push_back({i, j, r});
      }
  auto inflow = [&](Node j, Robot r) {
    std::vector<Node> from;
    for (const auto& e : edges)
      if (e.j == j && e.r == r) from.push_back(e.i);
    return from;
  };
  auto edge_cost = [&](const Edge& e) {
    return p.setup_cost(e.i, e.j, e.r) + (e.j == kStartNode ? 0.0 : p.demand(e.j - 1, e.r));
  };

  std::string s;
  s += "\\ unified multi-robot task planning model\n";
  s += "\\ tasks " + std::to_string(n) + " robots " + std::to_string(m) + " mode " + to_string(p.mode()) +
       (p.closed_routes() ? " closed_routes" : " open_routes") + "\n";
  s += "\\ M_time " + detail::num(M) + "\n";
  if (pareto)
    s += "\\ objective 0.5 T / " + detail::num(opt.delta_scale) + " + 0.5 gamma / " + detail::num(opt.gamma_scale) +
         "\n";
  s += "\\ degree rows " + std::string(opt.at_most_once ? "<= 1" : "= 1") + "\n";
  s += "Minimize\n obj:";
  {
    detail::RowWriter w(s);
    const double cw = pareto ? 0.5 / opt.gamma_scale : 1.0;
    if (pareto) w.term(0.5 / opt.delta_scale, "T");
    for (const auto& e : edges) w.term(cw * edge_cost(e), x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
  }
  s += "\nSubject To\n";

  for (Node j = 1; j <= n; ++j) {
    s += " deg_" + std::to_string(j) + ":";
    detail::RowWriter w(s);
    for (const auto& e : edges)
      if (e.j == j) w.term(1.0, x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
    s += opt.at_most_once ? " <= 1\n" : " = 1\n";
  }
  for (Robot r = 0; r < m; ++r) {
    s += " dep_" + std::to_string(r) + ":";
    detail::RowWriter w(s);
    for (const auto& e : edges)
      if (e.i == kStartNode && e.r == r) w.term(1.0, x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
    s += " <= 1\n";
  }
  // w_j >= w_i + σ_i + t_ij when x_ij = 1; w_0 is fixed to 0.
  for (const auto& e : edges) {
    if (e.j == kStartNode) continue;
    const double sigma = e.i == kStartNode ? 0.0 : p.duration(e.i - 1, e.r);
    s += " sch_" + std::to_string(e.i) + "_" + std::to_string(e.j) + "_" + std::to_string(e.r) + ":";
    detail::RowWriter w(s);
    if (e.i != kStartNode) w.term(1.0, w_name(e.i, e.r));
    w.term(-1.0, w_name(e.j, e.r));
    w.term(M, x_name(e.i, e.j, e.r));
    s += " <= " + detail::num(M - sigma - p.setup_time(e.i, e.j, e.r)) + "\n";
  }
  // finish(a) <= start(b) whenever a runs on r and b on r2.
  for (auto [a, b] : p.instance().precedence) {
    const Node na = node_of(a), nb = node_of(b);
    for (Robot r = 0; r < m; ++r) {
      if (!usable(na, r)) continue;
      for (Robot r2 = 0; r2 < m; ++r2) {
        if (!usable(nb, r2)) continue;
        s += " prec_" + std::to_string(na) + "_" + std::to_string(nb) + "_" + std::to_string(r) + "_" +
             std::to_string(r2) + ":";
        detail::RowWriter w(s);
        w.term(1.0, w_name(na, r));
        w.term(-1.0, w_name(nb, r2));
        for (Node i : inflow(na, r)) w.term(M, x_name(i, na, r));
        for (Node i : inflow(nb, r2)) w.term(M, x_name(i, nb, r2));
        s += " <= " + detail::num(2.0 * M - p.duration(a, r)) + "\n";
      }
    }
  }
  for (Robot r = 0; r < m; ++r) {
    s += " cap_" + std::to_string(r) + ":";
    detail::RowWriter w(s);
    for (const auto& e : edges)
      if (e.r == r && e.j != kStartNode) w.term(p.demand(e.j - 1, r), x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
    s += " <= " + detail::num(p.capacity(r)) + "\n";
  }
  for (Robot r = 0; r < m; ++r) {
    const double limit = p.route_duration_limit(r);
    if (limit <= 0.0) continue;
    s += " dur_" + std::to_string(r) + ":";
    detail::RowWriter w(s);
    for (const auto& e : edges)
      if (e.r == r)
        w.term(p.setup_time(e.i, e.j, r) + (e.j == kStartNode ? 0.0 : p.duration(e.j - 1, r)),
               x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
    s += " <= " + detail::num(limit) + "\n";
  }
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (std::popcount(mask) < 2) continue;
    s += " sub_" + std::to_string(mask) + ":";
    detail::RowWriter w(s);
    for (const auto& e : edges)
      if (e.i != kStartNode && e.j != kStartNode && (mask >> (e.i - 1) & 1) && (mask >> (e.j - 1) & 1))
        w.term(1.0, x_name(e.i, e.j, e.r));
    if (w.terms() == 0) s += " 0 T";
    s += " <= " + std::to_string(std::popcount(mask) - 1) + "\n";
  }
  if (pareto)
    for (Robot r = 0; r < m; ++r)
      for (Node i = 1; i <= n; ++i) {
        if (!usable(i, r)) continue;
        // T >= w_i + σ_i - M (1 - Σ inflow)
        s += " mk_" + std::to_string(i) + "_" + std::to_string(r) + ":";
        detail::RowWriter w(s);
        w.term(1.0, "T");
        w.term(-1.0, w_name(i, r));
        for (Node k : inflow(i, r)) w.term(-M, x_name(k, i, r));
        s += " >= " + detail::num(p.duration(i - 1, r) - M) + "\n";
      }

  s += "Bounds\n";
  for (Robot r = 0; r < m; ++r)
    for (Node i = 1; i <= n; ++i)
      if (usable(i, r)) s += " 0 <= " + w_name(i, r) + " <= " + detail::num(M) + "\n";
  s += " T >= 0\n";
  s += "Binaries\n";
  for (const auto& e : edges) s += " " + x_name(e.i, e.j, e.r) + "\n";
  s += "End\n";
  return s;
}

inline void write_lp(const Problem& p, const std::string& path, const LpOptions& opt = {}) {
  const auto text = export_lp(p, opt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// Variable assignment of a decoded solution in the exported naming: x = 1 on
// implied edges, w = start times, T = latest finish (the model fixes the
// earliest start to 0). Unset variables are 0.
inline std::map<std::string, double> solution_assignment(const Problem& p, const Genotype& g, const Schedule& s) {
  std::map<std::string, double> v;
  for (const auto& e : implied_edges(g, p)) v[x_name(e.i, e.j, e.r)] = 1.0;
  for (Robot r = 0; r < s.entries.size(); ++r)
    for (const auto& e : s.entries[r]) {
      v[w_name(node_of(e.task), r)] = e.start;
      v["T"] = std::max(v["T"], e.finish);
    }
  return v;
}

}  // namespace cbm
