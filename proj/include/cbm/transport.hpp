#pragma once

#include <deque>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "cbm/message.hpp"

namespace cbm {

struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reliable, per-sender ordered delivery between agents 0..agents()-1.
// Senders with ids ≥ agents() (the runner) are allowed.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::size_t agents() const = 0;
  virtual void send(AgentId to, const CoalitionMessage& m) = 0;
  virtual std::optional<CoalitionMessage> try_receive(AgentId self) = 0;
  virtual void close() = 0;

  // Every agent except the sender receives m exactly once.
  virtual void broadcast(const CoalitionMessage& m) {
    for (AgentId k = 0; k < agents(); ++k)
      if (k != m.sender) send(k, m);
  }
};

// Interleaving knobs for the in-process bus. With `enabled`, try_receive
// picks a random non-empty sender queue and may hold messages back; order
// within one sender is never changed.
struct FuzzSchedule {
  bool enabled = false;
  std::uint64_t seed = 0;
  double hold_probability = 0.25;
};

class InProcessBus final : public Transport {
 public:
  explicit InProcessBus(std::size_t agents, FuzzSchedule fuzz = {})
      : n_(agents), fuzz_(fuzz), rng_(fuzz.seed), queues_(agents, std::vector<std::deque<CoalitionMessage>>(agents + 1)),
        cursor_(agents, 0) {}

  std::size_t agents() const override { return n_; }

  void send(AgentId to, const CoalitionMessage& m) override {
    std::lock_guard lock(mu_);
    if (closed_) throw TransportError("send on closed transport");
    if (to >= n_) throw TransportError("no agent " + std::to_string(to));
    queues_[to][slot(m.sender)].push_back(m);
    ++sent_;
  }

  std::optional<CoalitionMessage> try_receive(AgentId self) override {
    std::lock_guard lock(mu_);
    auto& qs = queues_[self];
    std::vector<std::size_t> ready;
    for (std::size_t s = 0; s < qs.size(); ++s)
      if (!qs[s].empty()) ready.push_back(s);
    if (ready.empty()) return std::nullopt;
    std::size_t pick;
    if (fuzz_.enabled) {
      if (std::bernoulli_distribution(fuzz_.hold_probability)(rng_)) return std::nullopt;
      pick = ready[std::uniform_int_distribution<std::size_t>(0, ready.size() - 1)(rng_)];
    } else {
      // Round-robin over senders, starting after the last one served.
      pick = ready.front();
      for (std::size_t s : ready)
        if (s >= cursor_[self]) {
          pick = s;
          break;
        }
      cursor_[self] = pick + 1;
    }
    CoalitionMessage m = std::move(qs[pick].front());
    qs[pick].pop_front();
    return m;
  }

  void close() override {
    std::lock_guard lock(mu_);
    closed_ = true;
  }

  std::size_t sent() const {
    std::lock_guard lock(mu_);
    return sent_;
  }

 private:
  std::size_t slot(AgentId sender) const { return sender < n_ ? sender : n_; }

  std::size_t n_;
  FuzzSchedule fuzz_;
  Rng rng_;
  mutable std::mutex mu_;
  std::vector<std::vector<std::deque<CoalitionMessage>>> queues_;  // [receiver][sender]
  std::vector<std::size_t> cursor_;
  bool closed_ = false;
  std::size_t sent_ = 0;
};

}  // namespace cbm
