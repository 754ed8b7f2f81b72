#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <string>
#include <string_view>

#include <json.hpp>

#include "cbm/coalition.hpp"

namespace cbm {

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string iso8601_utc(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline nlohmann::json to_json(const AgentConfig& c) {
  return {{"pop_size", c.pop_size},
          {"eta", c.eta},
          {"weight_floor", c.weight_floor},
          {"rho", c.rho},
          {"n_cycles", c.n_cycles},
          {"epsilon", c.epsilon},
          {"patience", c.patience},
          {"time_limit", c.time_limit},
          {"seed", c.seed},
          {"max_intensify", c.max_intensify},
          {"operators",
           {{"proximity_threshold", c.operators.proximity_threshold},
            {"max_evaluations", c.operators.max_evaluations},
            {"slots_per_task", c.operators.slots_per_task}}}};
}

inline AgentConfig agent_config_from_json(const nlohmann::json& j) {
  AgentConfig c;
  c.pop_size = j.value("pop_size", c.pop_size);
  c.eta = j.value("eta", c.eta);
  c.weight_floor = j.value("weight_floor", c.weight_floor);
  c.rho = j.value("rho", c.rho);
  c.n_cycles = j.value("n_cycles", c.n_cycles);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.patience = j.value("patience", c.patience);
  c.time_limit = j.value("time_limit", c.time_limit);
  c.seed = j.value("seed", c.seed);
  c.max_intensify = j.value("max_intensify", c.max_intensify);
  if (j.contains("operators")) {
    const auto& o = j.at("operators");
    c.operators.proximity_threshold = o.value("proximity_threshold", c.operators.proximity_threshold);
    c.operators.max_evaluations = o.value("max_evaluations", c.operators.max_evaluations);
    c.operators.slots_per_task = o.value("slots_per_task", c.operators.slots_per_task);
  }
  return c;
}

inline nlohmann::json to_json(const CoalitionConfig& c) {
  return {{"n_agents", c.n_agents},
          {"agent", to_json(c.agent)},
          {"scheduler", c.scheduler == Scheduler::lockstep ? "lockstep" : "threaded"},
          {"fuzz", {{"enabled", c.fuzz.enabled}, {"seed", c.fuzz.seed}, {"hold_probability", c.fuzz.hold_probability}}},
          {"shuffle_order", c.shuffle_order},
          {"max_iterations", c.max_iterations}};
}

inline CoalitionConfig coalition_config_from_json(const nlohmann::json& j) {
  CoalitionConfig c;
  c.n_agents = j.value("n_agents", c.n_agents);
  if (j.contains("agent")) c.agent = agent_config_from_json(j.at("agent"));
  const auto sched = j.value("scheduler", std::string("lockstep"));
  if (sched != "lockstep" && sched != "threaded") throw ParseError("unknown scheduler " + sched);
  c.scheduler = sched == "lockstep" ? Scheduler::lockstep : Scheduler::threaded;
  if (j.contains("fuzz")) {
    const auto& f = j.at("fuzz");
    c.fuzz.enabled = f.value("enabled", false);
    c.fuzz.seed = f.value("seed", std::uint64_t{0});
    c.fuzz.hold_probability = f.value("hold_probability", c.fuzz.hold_probability);
  }
  c.shuffle_order = j.value("shuffle_order", false);
  c.max_iterations = j.value("max_iterations", std::uint64_t{0});
  return c;
}

// Reproducibility record written next to every artifact.
struct RunManifest {
  std::string command;
  std::string instance_path;
  std::string instance_format;
  std::string instance_hash;  // FNV-1a 64 of the file bytes, hex
  std::string transport = "inproc";
  std::string listen;
  std::vector<std::string> peers;
  CoalitionConfig coalition;
  std::string build_id;
  std::string started_at, finished_at;
  nlohmann::json extra = nlohmann::json::object();  // command-specific inputs and results

  nlohmann::json to_json() const {
    nlohmann::json j = {{"format", "cbm-manifest"},
                        {"version", 1},
                        {"command", command},
                        {"instance", {{"path", instance_path}, {"format", instance_format}, {"fnv1a64", instance_hash}}},
                        {"transport", {{"kind", transport}, {"listen", listen}, {"peers", peers}}},
                        {"coalition", cbm::to_json(coalition)},
                        {"build_id", build_id},
                        {"started_at", started_at},
                        {"finished_at", finished_at},
                        {"extra", extra}};
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    try {
      if (j.value("format", std::string()) != "cbm-manifest") throw ParseError("not a cbm-manifest document");
      RunManifest m;
      m.command = j.at("command").get<std::string>();
      const auto& inst = j.at("instance");
      m.instance_path = inst.value("path", std::string());
      m.instance_format = inst.value("format", std::string());
      m.instance_hash = inst.value("fnv1a64", std::string());
      const auto& t = j.at("transport");
      m.transport = t.value("kind", std::string("inproc"));
      m.listen = t.value("listen", std::string());
      m.peers = t.value("peers", std::vector<std::string>{});
      m.coalition = coalition_config_from_json(j.at("coalition"));
      m.build_id = j.value("build_id", std::string());
      m.started_at = j.value("started_at", std::string());
      m.finished_at = j.value("finished_at", std::string());
      m.extra = j.value("extra", nlohmann::json::object());
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("manifest: ") + e.what());
    }
  }
};

}  // namespace cbm
