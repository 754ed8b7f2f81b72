#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <thread>
#include <vector>

#include "cbm/agent.hpp"
#include "cbm/log.hpp"
#include "cbm/message.hpp"
#include "cbm/transport.hpp"

namespace cbm {

enum class Scheduler {
  lockstep,  // single thread, agents stepped round-robin; deterministic
  threaded,  // one thread per agent
};

struct CoalitionConfig {
  std::size_t n_agents = 1;
  AgentConfig agent;
  Scheduler scheduler = Scheduler::lockstep;
  FuzzSchedule fuzz;            // lockstep bus interleaving
  bool shuffle_order = false;   // lockstep: permute agent order each round (seeded by fuzz.seed)
  std::uint64_t max_iterations = 0;  // per agent, 0 = unlimited

  void validate() const {
    if (n_agents == 0) throw ParameterError("n_agents must be at least 1");
    if (n_agents >= 0xFFFF) throw ParameterError("too many agents");
    agent.validate();
  }
};

struct AgentReport {
  AgentId id = 0;
  Objectives best_agent;
  Objectives best_coalition;
  AgentStats stats;
};

struct CoalitionResult {
  Genotype best;
  Objectives objectives;
  Schedule schedule;
  std::vector<AgentReport> agents;
  // Coalition best seen by the runner after every lockstep round.
  std::vector<Objectives> trace;
  double runtime_s = 0.0;
  std::uint64_t iterations = 0;
  bool timed_out = false;

  bool agents_agree() const {
    for (const auto& a : agents)
      if (!(a.best_coalition == agents.front().best_coalition)) return false;
    return true;
  }
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline CoalitionMessage stop_message(AgentId sender, std::uint64_t seq) {
  return {MessageKind::STOP, sender, seq, std::monostate{}};
}

inline bool heard_stop_from_all(const Agent& a, std::size_t n) {
  for (AgentId j = 0; j < n; ++j)
    if (j != a.id() && !a.received_stop_from(j)) return false;
  return true;
}

inline bool exhausted(const Agent& a, std::uint64_t max_iterations) {
  return a.patience_exhausted() || (max_iterations > 0 && a.stats().iterations >= max_iterations);
}

inline CoalitionResult collect(const Problem& p, const std::vector<std::unique_ptr<Agent>>& agents) {
  CoalitionResult r;
  const Agent* best = agents.front().get();
  for (const auto& a : agents) {
    r.agents.push_back({a->id(), a->best_agent().objectives, a->best_coalition().objectives, a->stats()});
    r.iterations += a->stats().iterations;
    if (coalition_better(a->best_coalition().objectives, best->best_coalition().objectives))
      best = a.get();
  }
  r.best = best->best_coalition().genotype;
  r.objectives = best->best_coalition().objectives;
  auto decoded = decode_semi_active(r.best, p);
  if (decoded.ok()) r.schedule = decoded.schedule();
  return r;
}

}  // namespace detail

// Seeds each agent with cfg.agent.seed + k.
inline std::vector<std::unique_ptr<Agent>> make_agents(const Problem& p, const CoalitionConfig& cfg) {
  std::vector<std::unique_ptr<Agent>> agents;
  for (std::size_t k = 0; k < cfg.n_agents; ++k) {
    AgentConfig ac = cfg.agent;
    ac.seed = cfg.agent.seed + k;
    agents.push_back(std::make_unique<Agent>(p, ac, static_cast<AgentId>(k)));
  }
  return agents;
}

namespace detail {

inline CoalitionResult run_lockstep(const Problem& p, const CoalitionConfig& cfg, Transport& bus) {
  const auto t0 = Clock::now();
  auto agents = make_agents(p, cfg);
  const std::size_t n = agents.size();
  const AgentId runner = static_cast<AgentId>(n);
  std::uint64_t runner_seq = 0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng order_rng(cfg.fuzz.seed);
  std::vector<char> stop_sent(n, 0);
  bool stopping = false, timed_out = false;
  std::vector<Objectives> trace;

  auto coalition_best = [&] {
    Objectives best = agents.front()->best_coalition().objectives;
    for (const auto& a : agents)
      if (coalition_better(a->best_coalition().objectives, best)) best = a->best_coalition().objectives;
    return best;
  };

  for (std::uint64_t round = 0;; ++round) {
    if (cfg.shuffle_order) std::shuffle(order.begin(), order.end(), order_rng);
    for (std::size_t k : order) {
      Agent& a = *agents[k];
      while (auto m = bus.try_receive(static_cast<AgentId>(k))) a.on_receive(*m);
      if (a.terminal()) {
        if (!stop_sent[k]) {
          bus.broadcast(a.stop_message());
          stop_sent[k] = 1;
        }
        continue;
      }
      if (cfg.max_iterations > 0 && a.stats().iterations >= cfg.max_iterations) continue;
      for (const auto& m : a.step()) bus.broadcast(m);
    }
    trace.push_back(coalition_best());
    if (!stopping) {
      const bool all_done = std::all_of(agents.begin(), agents.end(), [&](const auto& a) {
        return exhausted(*a, cfg.max_iterations);
      });
      timed_out = cfg.agent.time_limit > 0.0 && seconds_since(t0) >= cfg.agent.time_limit;
      if (all_done || timed_out) {
        stopping = true;
        ++runner_seq;
        for (AgentId k = 0; k < n; ++k) bus.send(k, stop_message(runner, runner_seq));
        log::info("coalition stopping after ", round + 1, " rounds", timed_out ? " (time limit)" : "");
      }
    } else {
      const bool drained = std::all_of(agents.begin(), agents.end(), [&](const auto& a) {
        return stop_sent[a->id()] && heard_stop_from_all(*a, n);
      });
      if (drained) break;
    }
  }
  auto r = collect(p, agents);
  r.trace = std::move(trace);
  r.timed_out = timed_out;
  r.runtime_s = seconds_since(t0);
  return r;
}

inline CoalitionResult run_threaded(const Problem& p, const CoalitionConfig& cfg, Transport& bus) {
  const auto t0 = Clock::now();
  auto agents = make_agents(p, cfg);
  const std::size_t n = agents.size();
  std::vector<std::atomic<bool>> done(n);
  std::vector<std::thread> threads;
  for (std::size_t k = 0; k < n; ++k) {
    threads.emplace_back([&, k] {
      Agent& a = *agents[k];
      const auto self = static_cast<AgentId>(k);
      while (true) {
        while (auto m = bus.try_receive(self)) a.on_receive(*m);
        if (a.terminal()) break;
        if (cfg.max_iterations > 0 && a.stats().iterations >= cfg.max_iterations) {
          std::this_thread::sleep_for(std::chrono::microseconds(200));
        } else {
          for (const auto& m : a.step()) bus.broadcast(m);
        }
        done[k].store(exhausted(a, cfg.max_iterations));
      }
      bus.broadcast(a.stop_message());
      while (!heard_stop_from_all(a, n)) {
        if (auto m = bus.try_receive(self)) a.on_receive(*m);
        else std::this_thread::sleep_for(std::chrono::microseconds(100));
      }
    });
  }
  bool timed_out = false;
  while (true) {
    const bool all_done = std::all_of(done.begin(), done.end(), [](const auto& d) { return d.load(); });
    timed_out = cfg.agent.time_limit > 0.0 && seconds_since(t0) >= cfg.agent.time_limit;
    if (all_done || timed_out) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  for (AgentId k = 0; k < n; ++k) bus.send(k, stop_message(static_cast<AgentId>(n), 1));
  for (auto& t : threads) t.join();
  auto r = collect(p, agents);
  r.timed_out = timed_out;
  r.runtime_s = seconds_since(t0);
  return r;
}

}  // namespace detail

// Runs n_agents cooperating agents on one shared instance until every agent
// has exhausted its patience (or max_iterations), or the time limit passes;
// then STOP is broadcast and every agent drains its inbox. Parameter
// exchange is a no-op here since all agents read the same instance.
inline CoalitionResult run_coalition(const Problem& p, const CoalitionConfig& cfg,
                                     Transport* transport = nullptr) {
  cfg.validate();
  std::unique_ptr<Transport> owned;
  if (!transport) {
    owned = std::make_unique<InProcessBus>(cfg.n_agents, cfg.fuzz);
    transport = owned.get();
  }
  if (transport->agents() != cfg.n_agents) throw ParameterError("transport size differs from n_agents");
  auto r = cfg.scheduler == Scheduler::lockstep ? detail::run_lockstep(p, cfg, *transport)
                                                : detail::run_threaded(p, cfg, *transport);
  transport->close();
  return r;
}

struct DistributedResult {
  AgentReport report;
  Scored best;
  ProblemInstance merged;  // instance after parameter exchange
  bool timed_out = false;
  double runtime_s = 0.0;
};

// One agent of a coalition whose members live in separate processes (or
// threads) and only share `transport`. Agent k owns robots r with
// r mod n = k and broadcasts their parameters first; the others' blocks
// are merged by index. The agent stops on its own patience, time limit or
// iteration cap, or on a peer's STOP, then drains until every peer stopped.
inline DistributedResult run_distributed_agent(ProblemInstance inst, const CoalitionConfig& cfg,
                                               Transport& t, AgentId self) {
  cfg.validate();
  const auto t0 = detail::Clock::now();
  const std::size_t n = t.agents();
  std::vector<CoalitionMessage> early;
  if (n > 1) {
    ParamsPayload mine;
    for (Robot r = 0; r < inst.num_robots(); ++r)
      if (r % n == self) mine.blocks.push_back(robot_block(inst, r));
    t.broadcast({MessageKind::PARAMS_EXCHANGE, self, 0, mine});
    std::vector<char> got(n, 0);
    got[self] = 1;
    std::size_t pending = n - 1;
    while (pending > 0) {
      auto m = t.try_receive(self);
      if (!m) {
        std::this_thread::sleep_for(std::chrono::microseconds(200));
        continue;
      }
      if (m->kind == MessageKind::PARAMS_EXCHANGE && m->well_formed() && m->sender < n && !got[m->sender]) {
        for (const auto& b : std::get<ParamsPayload>(m->payload).blocks) merge_robot_block(inst, b);
        got[m->sender] = 1;
        --pending;
      } else {
        early.push_back(std::move(*m));
      }
    }
  }
  const Problem p(inst);
  AgentConfig ac = cfg.agent;
  ac.seed = cfg.agent.seed + self;
  Agent a(p, ac, self);
  for (const auto& m : early) a.on_receive(m);
  bool timed_out = false;
  while (true) {
    while (auto m = t.try_receive(self)) a.on_receive(*m);
    if (a.terminal()) break;
    for (const auto& m : a.step()) t.broadcast(m);
    timed_out = cfg.agent.time_limit > 0.0 && detail::seconds_since(t0) >= cfg.agent.time_limit;
    if (detail::exhausted(a, cfg.max_iterations) || timed_out) {
      a.mark_terminal();
      break;
    }
  }
  t.broadcast(a.stop_message());
  while (!detail::heard_stop_from_all(a, n)) {
    if (auto m = t.try_receive(self)) a.on_receive(*m);
    else std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  DistributedResult r;
  r.report = {self, a.best_agent().objectives, a.best_coalition().objectives, a.stats()};
  r.best = a.best_coalition();
  r.merged = std::move(inst);
  r.timed_out = timed_out;
  r.runtime_s = detail::seconds_since(t0);
  return r;
}

}  // namespace cbm
