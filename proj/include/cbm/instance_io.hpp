#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cbm/core.hpp"
#include "cbm/problem.hpp"

namespace cbm {

inline constexpr const char* kInstanceFormat = "cbm-instance";
inline constexpr int kInstanceVersion = 1;

namespace detail {

using nlohmann::json;

inline json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) rows.push_back(json(std::vector<double>(m.row(i).begin(), m.row(i).end())));
  return rows;
}

inline Matrix matrix_from(const json& j, std::size_t rows, std::size_t cols, const char* field) {
  if (!j.is_array() || j.size() != rows)
    throw ParseError(std::string(field) + ": expected " + std::to_string(rows) + " rows");
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols)
      throw ParseError(std::string(field) + "[" + std::to_string(i) + "]: expected " + std::to_string(cols) +
                       " columns");
    for (std::size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

// [robot][i][j]
inline json tensor_json(const SetupTensor& t) {
  json out = json::array();
  for (Robot r = 0; r < t.robots(); ++r) {
    json rows = json::array();
    for (Node i = 0; i < t.nodes(); ++i) {
      std::vector<double> row(t.nodes());
      for (Node j = 0; j < t.nodes(); ++j) row[j] = t(i, j, r);
      rows.push_back(std::move(row));
    }
    out.push_back(std::move(rows));
  }
  return out;
}

inline SetupTensor tensor_from(const json& j, std::size_t robots, std::size_t nodes, const char* field) {
  if (!j.is_array() || j.size() != robots)
    throw ParseError(std::string(field) + ": expected one block per robot (" + std::to_string(robots) + ")");
  SetupTensor t(robots, nodes);
  for (Robot r = 0; r < robots; ++r) {
    if (!j[r].is_array() || j[r].size() != nodes)
      throw ParseError(std::string(field) + "[" + std::to_string(r) + "]: expected " + std::to_string(nodes) + " rows");
    for (Node i = 0; i < nodes; ++i) {
      const auto& row = j[r][i];
      if (!row.is_array() || row.size() != nodes)
        throw ParseError(std::string(field) + "[" + std::to_string(r) + "][" + std::to_string(i) + "]: expected " +
                         std::to_string(nodes) + " entries");
      for (Node k = 0; k < nodes; ++k) t(i, k, r) = row[k].get<double>();
    }
  }
  return t;
}

inline bool geometry_reproduces(const ProblemInstance& inst) {
  if (!inst.geometry) return false;
  try {
    auto geo = derive_geometric_setup(inst.tasks, inst.start_nodes, inst.robots, inst.geometry->speeds,
                                      inst.geometry->cost_per_meter);
    return std::ranges::equal(geo.setup_time.data(), inst.setup_time.data()) &&
           std::ranges::equal(geo.setup_cost.data(), inst.setup_cost.data());
  } catch (const ParameterError&) {
    return false;
  }
}

}  // namespace detail

// JSON document; setup tensors are stored as their geometric parameters
// when those regenerate the tensors bit for bit, densely otherwise.
inline nlohmann::json instance_to_json(const ProblemInstance& inst) {
  using nlohmann::json;
  json j;
  j["format"] = kInstanceFormat;
  j["version"] = kInstanceVersion;
  j["objective_mode"] = to_string(inst.objective_mode);
  j["closed_routes"] = inst.closed_routes;
  j["big_m"] = inst.big_m;
  j["start_nodes"] = inst.start_nodes;
  json robots = json::array();
  for (const auto& r : inst.robots)
    robots.push_back({{"id", r.id}, {"start_node", r.start_node}, {"capacity", r.capacity}, {"speed", r.speed}});
  j["robots"] = std::move(robots);
  json tasks = json::array();
  for (const auto& t : inst.tasks) tasks.push_back({{"id", t.id}, {"position", t.position}, {"label", t.label}});
  j["tasks"] = std::move(tasks);
  j["duration"] = detail::matrix_json(inst.duration);
  j["demand"] = detail::matrix_json(inst.demand);
  json prec = json::array();
  for (auto [a, b] : inst.precedence) prec.push_back({a, b});
  j["precedence"] = std::move(prec);
  if (!inst.route_duration_limit.empty()) j["route_duration_limit"] = inst.route_duration_limit;
  if (detail::geometry_reproduces(inst)) {
    j["setup"] = {{"kind", "geometric"},
                  {"speeds", inst.geometry->speeds},
                  {"cost_per_meter", inst.geometry->cost_per_meter}};
  } else {
    j["setup"] = {{"kind", "dense"},
                  {"setup_time", detail::tensor_json(inst.setup_time)},
                  {"setup_cost", detail::tensor_json(inst.setup_cost)}};
  }
  return j;
}

inline ProblemInstance instance_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != kInstanceFormat)
      throw ParseError(std::string("not a ") + kInstanceFormat + " document");
    if (j.at("version").get<int>() != kInstanceVersion)
      throw ParseError("unsupported instance version " + j.at("version").dump());
    ProblemInstance inst;
    inst.objective_mode = objective_mode_from_string(j.at("objective_mode").get<std::string>());
    inst.closed_routes = j.at("closed_routes").get<bool>();
    inst.big_m = j.at("big_m").get<double>();
    inst.start_nodes = j.at("start_nodes").get<std::vector<Position>>();
    for (const auto& r : j.at("robots"))
      inst.robots.push_back({r.at("id").get<std::size_t>(), r.at("start_node").get<std::size_t>(),
                             r.at("capacity").get<double>(), r.value("speed", 1.0)});
    for (const auto& t : j.at("tasks"))
      inst.tasks.push_back({t.at("id").get<std::size_t>(), t.at("position").get<Position>(),
                            t.value("label", std::string())});
    const std::size_t n = inst.num_tasks(), m = inst.num_robots();
    inst.duration = detail::matrix_from(j.at("duration"), n, m, "duration");
    inst.demand = detail::matrix_from(j.at("demand"), n, m, "demand");
    for (const auto& e : j.at("precedence")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("precedence entries are [a, b] pairs");
      inst.precedence.emplace_back(e[0].get<Task>(), e[1].get<Task>());
    }
    if (j.contains("route_duration_limit"))
      inst.route_duration_limit = j.at("route_duration_limit").get<std::vector<double>>();
    const auto& setup = j.at("setup");
    const auto kind = setup.at("kind").get<std::string>();
    if (kind == "geometric") {
      GeometricSetup g{setup.at("speeds").get<std::vector<double>>(),
                       setup.at("cost_per_meter").get<std::vector<double>>()};
      auto t = derive_geometric_setup(inst.tasks, inst.start_nodes, inst.robots, g.speeds, g.cost_per_meter);
      inst.setup_time = std::move(t.setup_time);
      inst.setup_cost = std::move(t.setup_cost);
      inst.geometry = std::move(g);
    } else if (kind == "dense") {
      inst.setup_time = detail::tensor_from(setup.at("setup_time"), m, n + 1, "setup_time");
      inst.setup_cost = detail::tensor_from(setup.at("setup_cost"), m, n + 1, "setup_cost");
    } else {
      throw ParseError("setup.kind must be 'geometric' or 'dense'");
    }
    return inst;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("instance document: ") + e.what());
  }
}

inline std::string write_instance_string(const ProblemInstance& inst) {
  return instance_to_json(inst).dump(1) + "\n";
}

inline ProblemInstance read_instance_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("instance document is not valid JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline ProblemInstance read_instance_file(const std::string& path) {
  return read_instance_string(read_text_file(path));
}

inline void write_instance_file(const std::string& path, const ProblemInstance& inst) {
  write_text_file(path, write_instance_string(inst));
}

}  // namespace cbm
