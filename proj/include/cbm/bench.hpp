#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/log.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

struct CordeauCustomer {
  int id = 0;
  double x = 0.0, y = 0.0;
  double service = 0.0;
  double demand = 0.0;
  std::vector<std::string> extra;  // frequency / visit-combination fields, kept verbatim

  bool operator==(const CordeauCustomer&) const = default;
};

struct CordeauDepot {
  int id = 0;
  double x = 0.0, y = 0.0;
  std::vector<std::string> extra;

  bool operator==(const CordeauDepot&) const = default;
};

struct CordeauLimits {
  double max_duration = 0.0;  // D, 0 = unbounded
  double capacity = 0.0;      // Q

  bool operator==(const CordeauLimits&) const = default;
};

struct CordeauInstance {
  int type = 2;
  int vehicles_per_depot = 0;
  int n_customers = 0;
  int n_depots = 0;
  std::vector<CordeauLimits> limits;  // per depot
  std::vector<CordeauCustomer> customers;
  std::vector<CordeauDepot> depots;

  int total_vehicles() const { return vehicles_per_depot * n_depots; }
  bool operator==(const CordeauInstance&) const = default;
};

namespace detail {

struct NumberedLine {
  std::size_t number;
  std::vector<std::string> tokens;
};

inline std::vector<NumberedLine> token_lines(const std::string& text) {
  std::vector<NumberedLine> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    std::istringstream ls(line);
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (!toks.empty()) out.push_back({no, std::move(toks)});
  }
  return out;
}

inline double number(const NumberedLine& l, std::size_t k) {
  try {
    std::size_t used = 0;
    const double v = std::stod(l.tokens[k], &used);
    if (used != l.tokens[k].size() || !std::isfinite(v)) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(l.number) + ": token '" + l.tokens[k] +
                     "' is not a finite number");
  }
}

inline int integer(const NumberedLine& l, std::size_t k) {
  const double v = number(l, k);
  if (v != std::floor(v)) throw ParseError("line " + std::to_string(l.number) + ": expected an integer");
  return static_cast<int>(v);
}

inline void need(const NumberedLine& l, std::size_t k, const char* what) {
  if (l.tokens.size() < k)
    throw ParseError("line " + std::to_string(l.number) + ": " + what + " needs " + std::to_string(k) +
                     " tokens, found " + std::to_string(l.tokens.size()));
}

}  // namespace detail

// Header `type m n t`, t lines `D Q`, n customer lines `i x y d q ...`, t
// depot lines `i x y ...`. Tokens beyond the fifth customer field are kept
// but not interpreted.
inline CordeauInstance parse_cordeau(const std::string& text) {
  const auto lines = detail::token_lines(text);
  if (lines.empty()) throw ParseError("empty Cordeau file: expected header 'type m n t'");
  CordeauInstance ci;
  const auto& h = lines[0];
  detail::need(h, 4, "header");
  ci.type = detail::integer(h, 0);
  ci.vehicles_per_depot = detail::integer(h, 1);
  ci.n_customers = detail::integer(h, 2);
  ci.n_depots = detail::integer(h, 3);
  if (ci.vehicles_per_depot <= 0 || ci.n_customers <= 0 || ci.n_depots <= 0)
    throw ParseError("line " + std::to_string(h.number) + ": header counts must be positive");
  const std::size_t t = static_cast<std::size_t>(ci.n_depots), n = static_cast<std::size_t>(ci.n_customers);
  const std::size_t expected = 1 + t + n + t;
  if (lines.size() < expected)
    throw ParseError("truncated Cordeau file: expected " + std::to_string(expected) + " data lines (" +
                     std::to_string(t) + " limits, " + std::to_string(n) + " customers, " +
                     std::to_string(t) + " depots), found " + std::to_string(lines.size()));
  if (lines.size() > expected)
    log::warn("Cordeau file has ", lines.size() - expected, " trailing lines; ignored");
  std::size_t k = 1;
  for (std::size_t d = 0; d < t; ++d, ++k) {
    detail::need(lines[k], 2, "depot limit line");
    ci.limits.push_back({detail::number(lines[k], 0), detail::number(lines[k], 1)});
  }
  bool skipped = false;
  for (std::size_t c = 0; c < n; ++c, ++k) {
    const auto& l = lines[k];
    detail::need(l, 5, "customer line");
    CordeauCustomer cu{detail::integer(l, 0), detail::number(l, 1), detail::number(l, 2),
                       detail::number(l, 3), detail::number(l, 4), {}};
    cu.extra.assign(l.tokens.begin() + 5, l.tokens.end());
    skipped |= !cu.extra.empty();
    ci.customers.push_back(std::move(cu));
  }
  for (std::size_t d = 0; d < t; ++d, ++k) {
    const auto& l = lines[k];
    detail::need(l, 3, "depot line");
    CordeauDepot de{detail::integer(l, 0), detail::number(l, 1), detail::number(l, 2), {}};
    de.extra.assign(l.tokens.begin() + 3, l.tokens.end());
    ci.depots.push_back(std::move(de));
  }
  if (skipped) log::debug("Cordeau customer frequency/visit fields skipped");
  return ci;
}

inline CordeauInstance read_cordeau_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cordeau(ss.str());
}

inline std::string serialize_cordeau(const CordeauInstance& ci) {
  std::ostringstream os;
  os.precision(17);
  os << ci.type << ' ' << ci.vehicles_per_depot << ' ' << ci.n_customers << ' ' << ci.n_depots << '\n';
  for (const auto& l : ci.limits) os << l.max_duration << ' ' << l.capacity << '\n';
  for (const auto& c : ci.customers) {
    os << c.id << ' ' << c.x << ' ' << c.y << ' ' << c.service << ' ' << c.demand;
    for (const auto& e : c.extra) os << ' ' << e;
    os << '\n';
  }
  for (const auto& d : ci.depots) {
    os << d.id << ' ' << d.x << ' ' << d.y;
    for (const auto& e : d.extra) os << ' ' << e;
    os << '\n';
  }
  return os.str();
}

// Closed routes, single cost objective, Euclidean setup time = cost for
// every vehicle, D enforced as a route-duration limit when positive.
inline ProblemInstance cordeau_to_instance(const CordeauInstance& ci) {
  ProblemInstance inst;
  for (const auto& d : ci.depots) inst.start_nodes.push_back({d.x, d.y});
  for (std::size_t i = 0; i < ci.customers.size(); ++i) {
    const auto& c = ci.customers[i];
    inst.tasks.push_back({i, {c.x, c.y}, "c" + std::to_string(c.id)});
  }
  for (int d = 0; d < ci.n_depots; ++d)
    for (int v = 0; v < ci.vehicles_per_depot; ++v) {
      const std::size_t id = inst.robots.size();
      inst.robots.push_back({id, static_cast<std::size_t>(d), ci.limits[d].capacity, 1.0});
      inst.route_duration_limit.push_back(ci.limits[d].max_duration);
    }
  const std::size_t n = inst.num_tasks(), m = inst.num_robots();
  std::vector<double> ones(m, 1.0);
  auto geo = derive_geometric_setup(inst.tasks, inst.start_nodes, inst.robots, ones, ones);
  inst.setup_time = std::move(geo.setup_time);
  inst.setup_cost = std::move(geo.setup_cost);
  inst.geometry = GeometricSetup{ones, ones};
  inst.duration = Matrix(n, m);
  inst.demand = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t r = 0; r < m; ++r) {
      inst.duration(i, r) = ci.customers[i].service;
      inst.demand(i, r) = ci.customers[i].demand;
    }
  inst.closed_routes = true;
  inst.objective_mode = ObjectiveMode::single_cost;
  inst.big_m = default_big_m(inst.setup_cost);
  return inst;
}

// Setup cost alone, the objective Cordeau tables report; γ additionally
// adds each visited customer's demand.
inline double route_distance(const Genotype& g, const Problem& p) {
  double sum = 0.0;
  for (Robot r = 0; r < g.routes.size(); ++r) {
    Node prev = kStartNode;
    for (Task t : g.routes[r]) {
      sum += p.setup_cost(prev, node_of(t), r);
      prev = node_of(t);
    }
    if (p.closed_routes() && prev != kStartNode) sum += p.setup_cost(prev, kStartNode, r);
  }
  return sum;
}

struct GeneratorConfig {
  double box = 100.0;  // metres, cube side
  double speed_min = 0.5, speed_max = 2.0;
  double demand_min = 1.0, demand_max = 10.0;
  double energy_rate_min = 0.8, energy_rate_max = 1.25;  // robot multiplier on demand
  double duration_min = 5.0, duration_max = 30.0;        // seconds of work
  double cost_per_meter_min = 0.5, cost_per_meter_max = 2.0;
  double load_factor = 0.8;  // expected fleet load / capacity
  std::size_t robots_per_start = 2;
};

namespace detail {

// First-fit decreasing packing of tasks (each robot's own demand) into
// robot capacities.
inline bool packs(const Matrix& demand, const std::vector<double>& capacity) {
  const std::size_t n = demand.rows(), m = demand.cols();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return demand(a, 0) > demand(b, 0);
  });
  std::vector<double> load(m, 0.0);
  for (std::size_t t : order) {
    bool placed = false;
    for (std::size_t r = 0; r < m && !placed; ++r)
      if (load[r] + demand(t, r) <= capacity[r]) {
        load[r] += demand(t, r);
        placed = true;
      }
    if (!placed) return false;
  }
  return true;
}

}  // namespace detail

// Random XD[ST-SR-TA] instance: tasks uniform in a 3D cube, robots paired on
// random start locations, ⌈prec_fraction·n⌉ tasks with one incoming
// precedence edge drawn along a random permutation (hence acyclic).
inline ProblemInstance generate_xd_instance(std::size_t n_tasks, std::size_t n_robots, double prec_fraction,
                                            Rng& rng, const GeneratorConfig& cfg = {}) {
  if (n_tasks == 0) throw ParameterError("n_tasks must be at least 1");
  if (n_robots == 0) throw ParameterError("n_robots must be at least 1");
  if (!(prec_fraction >= 0.0 && prec_fraction < 1.0)) throw ParameterError("prec_fraction must lie in [0, 1)");
  if (cfg.robots_per_start == 0) throw ParameterError("robots_per_start must be positive");
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  ProblemInstance inst;
  const std::size_t starts = (n_robots + cfg.robots_per_start - 1) / cfg.robots_per_start;
  for (std::size_t s = 0; s < starts; ++s) inst.start_nodes.push_back({uni(0, cfg.box), uni(0, cfg.box), uni(0, cfg.box)});
  for (std::size_t t = 0; t < n_tasks; ++t)
    inst.tasks.push_back({t, {uni(0, cfg.box), uni(0, cfg.box), uni(0, cfg.box)}, "task" + std::to_string(t)});
  std::vector<double> speeds, cpm, rate, efficiency;
  for (std::size_t r = 0; r < n_robots; ++r) {
    inst.robots.push_back({r, r / cfg.robots_per_start, 0.0, 0.0});
    speeds.push_back(uni(cfg.speed_min, cfg.speed_max));
    inst.robots.back().speed = speeds.back();
    cpm.push_back(uni(cfg.cost_per_meter_min, cfg.cost_per_meter_max));
    rate.push_back(uni(cfg.energy_rate_min, cfg.energy_rate_max));
    efficiency.push_back(uni(cfg.energy_rate_min, cfg.energy_rate_max));
  }
  inst.duration = Matrix(n_tasks, n_robots);
  inst.demand = Matrix(n_tasks, n_robots);
  double mean_load = 0.0;
  for (std::size_t t = 0; t < n_tasks; ++t) {
    const double base_demand = uni(cfg.demand_min, cfg.demand_max);
    const double base_work = uni(cfg.duration_min, cfg.duration_max);
    for (std::size_t r = 0; r < n_robots; ++r) {
      inst.demand(t, r) = base_demand * rate[r];
      inst.duration(t, r) = base_work / efficiency[r];
      mean_load += inst.demand(t, r) / static_cast<double>(n_robots);
    }
  }
  double cap = mean_load / (cfg.load_factor * static_cast<double>(n_robots));
  for (std::size_t t = 0; t < n_tasks; ++t)
    for (std::size_t r = 0; r < n_robots; ++r) cap = std::max(cap, inst.demand(t, r));
  std::vector<double> caps(n_robots, cap);
  while (!detail::packs(inst.demand, caps))
    for (auto& c : caps) c *= 1.1;
  for (std::size_t r = 0; r < n_robots; ++r) inst.robots[r].capacity = caps[r];

  auto geo = derive_geometric_setup(inst.tasks, inst.start_nodes, inst.robots, speeds, cpm);
  inst.setup_time = std::move(geo.setup_time);
  inst.setup_cost = std::move(geo.setup_cost);
  inst.geometry = GeometricSetup{speeds, cpm};

  const std::size_t k = std::min<std::size_t>(
      static_cast<std::size_t>(std::ceil(prec_fraction * static_cast<double>(n_tasks) - 1e-9)), n_tasks - 1);
  std::vector<Task> perm(n_tasks);
  std::iota(perm.begin(), perm.end(), Task{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> targets(n_tasks - 1);
  std::iota(targets.begin(), targets.end(), std::size_t{1});
  std::shuffle(targets.begin(), targets.end(), rng);
  targets.resize(k);
  std::sort(targets.begin(), targets.end());
  for (std::size_t j : targets) {
    const std::size_t i = std::uniform_int_distribution<std::size_t>(0, j - 1)(rng);
    inst.precedence.emplace_back(perm[i], perm[j]);
  }
  inst.closed_routes = false;
  inst.objective_mode = ObjectiveMode::pareto_bi;
  inst.big_m = default_big_m(inst.setup_cost);
  return inst;
}

inline double gap_percent(double found, double bks) {
  if (!(bks > 0.0)) throw ParameterError("BKS must be positive");
  return 100.0 * (found - bks) / bks;
}

struct BenchmarkResult {
  std::string instance;
  std::uint64_t seed = 0;
  double best = 0.0;
  std::optional<double> bks;
  double runtime_s = 0.0;
  std::uint64_t iterations = 0;

  std::optional<double> gap() const {
    if (!bks) return std::nullopt;
    return gap_percent(best, *bks);
  }
};

inline constexpr const char* kResultCsvHeader = "instance,seed,best,bks,gap_pct,runtime_s,iterations";

inline std::string csv_row(const BenchmarkResult& r) {
  char buf[256];
  std::string bks = r.bks ? std::to_string(*r.bks) : "", gap;
  if (r.bks) {
    std::snprintf(buf, sizeof buf, "%.6f", *r.bks);
    bks = buf;
    std::snprintf(buf, sizeof buf, "%.4f", *r.gap());
    gap = buf;
  }
  std::snprintf(buf, sizeof buf, "%.6f", r.best);
  std::string best = buf;
  std::snprintf(buf, sizeof buf, "%.3f", r.runtime_s);
  return r.instance + "," + std::to_string(r.seed) + "," + best + "," + bks + "," + gap + "," + buf + "," +
         std::to_string(r.iterations);
}

// `instance,bks` lines; a header line and blank lines are skipped.
inline std::map<std::string, double> parse_bks_table(const std::string& text) {
  std::map<std::string, double> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#') continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ParseError("BKS line " + std::to_string(no) + ": expected 'name,value'");
    const std::string name = line.substr(0, comma);
    try {
      out[name] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      if (no == 1) continue;  // header
      throw ParseError("BKS line " + std::to_string(no) + ": bad value");
    }
  }
  return out;
}

}  // namespace cbm
