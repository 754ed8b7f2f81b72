#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <optional>
#include <random>
#include <span>
#include <unordered_map>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/fitness.hpp"
#include "cbm/message.hpp"
#include "cbm/operators.hpp"
#include "cbm/problem.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

enum class Phase : std::uint8_t { diversify = 0, intensify = 1 };

// (phase, last gain sign, stagnation bucket) packed as phase*4 + improved*2 + stale.
struct StateId {
  Phase phase = Phase::diversify;
  bool improved = false;
  bool stale = false;

  static constexpr std::size_t kCount = 8;
  std::size_t index() const {
    return static_cast<std::size_t>(phase) * 4 + (improved ? 2 : 0) + (stale ? 1 : 0);
  }
  static StateId from_index(std::size_t i) {
    return {i >= 4 ? Phase::intensify : Phase::diversify, (i & 2) != 0, (i & 1) != 0};
  }
  bool operator==(const StateId&) const = default;
};

inline constexpr std::size_t kOperatorColumns = kSearchOperators.size();

class WeightMatrix {
 public:
  WeightMatrix() : w_(StateId::kCount, kOperatorColumns, 1.0) {}
  explicit WeightMatrix(Matrix w) : w_(std::move(w)) {
    if (w_.rows() != StateId::kCount || w_.cols() != kOperatorColumns)
      throw ParameterError("weight matrix must be 8 x 8");
  }

  double operator()(StateId s, OperatorId op) const { return w_(s.index(), operator_column(op)); }
  double& operator()(StateId s, OperatorId op) { return w_(s.index(), operator_column(op)); }
  const Matrix& matrix() const { return w_; }
  double min() const { return *std::min_element(w_.data().begin(), w_.data().end()); }

  bool operator==(const WeightMatrix&) const = default;

 private:
  Matrix w_;
};

struct Experience {
  StateId state;
  OperatorId op = OperatorId::GREEDY_GENERATION;
  double gain = 0.0;
};

// Bounded ring buffer of (state, operator, gain) records.
class ExperienceMemory {
 public:
  explicit ExperienceMemory(std::size_t capacity = 4096) : capacity_(capacity) {}

  void push(const Experience& e) {
    if (records_.size() == capacity_) {
      records_.pop_front();
      if (cycle_begin_ > 0) --cycle_begin_;
    }
    records_.push_back(e);
  }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }
  const Experience& back() const { return records_.back(); }
  const Experience& operator[](std::size_t i) const { return records_[i]; }

  // Records pushed since the last mark_cycle_start().
  std::vector<Experience> cycle_records() const {
    return {records_.begin() + static_cast<std::ptrdiff_t>(cycle_begin_), records_.end()};
  }
  void mark_cycle_start() { cycle_begin_ = records_.size(); }

 private:
  std::size_t capacity_;
  std::deque<Experience> records_;
  std::size_t cycle_begin_ = 0;
};

struct AgentConfig {
  std::size_t pop_size = 20;
  std::array<double, 3> eta = {0.5, 0.25, -0.05};
  double weight_floor = 0.05;
  double rho = 0.3;
  std::size_t n_cycles = 5;
  double epsilon = 1e-6;
  std::size_t patience = 500;
  double time_limit = 0.0;  // seconds, 0 = none; enforced by the runner
  std::uint64_t seed = 0;
  std::size_t max_intensify = 30;
  OperatorConfig operators;

  void validate() const {
    if (pop_size < 2) throw ParameterError("pop_size must be at least 2");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterError("rho must lie in [0, 1]");
    if (patience == 0) throw ParameterError("patience must be positive");
    if (n_cycles == 0) throw ParameterError("n_cycles must be positive");
    if (!(weight_floor > 0.0)) throw ParameterError("weight_floor must be positive");
    if (max_intensify == 0) throw ParameterError("max_intensify must be positive");
    if (time_limit < 0.0) throw ParameterError("time_limit must be non-negative");
  }
};

struct Scored {
  Genotype genotype;
  Objectives objectives;
};

struct Member {
  Genotype genotype;
  Evaluation eval;
};

// Roulette draw proportional to fitness; uniform when every fitness is 0.
inline std::size_t select_index(std::span<const double> fitness, Rng& rng) {
  if (fitness.empty()) throw ParameterError("cannot select from an empty population");
  double total = 0.0;
  for (double f : fitness) total += f;
  if (!(total > 0.0)) return std::uniform_int_distribution<std::size_t>(0, fitness.size() - 1)(rng);
  double x = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (std::size_t i = 0; i < fitness.size(); ++i) {
    if (x < fitness[i]) return i;
    x -= fitness[i];
  }
  for (std::size_t i = fitness.size(); i-- > 0;)
    if (fitness[i] > 0.0) return i;
  return fitness.size() - 1;
}

inline const Genotype& select_solution(std::span<const Member> pop, Rng& rng) {
  std::vector<double> f;
  for (const auto& m : pop) f.push_back(m.eval.fitness);
  return pop[select_index(f, rng)].genotype;
}

struct CycleCounters {
  Phase phase = Phase::diversify;
  std::size_t stagnation = 0;  // D-I cycles without best improvement > ε
  std::size_t n_cycles = 5;
};

inline StateId perceive_state(const ExperienceMemory& h, const CycleCounters& c) {
  return {c.phase, !h.empty() && h.back().gain > 0.0, c.stagnation >= c.n_cycles};
}

// Roulette over W[s] restricted to the operator class of the state's phase.
inline OperatorId choose_operator(const WeightMatrix& w, StateId s, Rng& rng) {
  const auto wanted = s.phase == Phase::intensify ? OperatorClass::intensifier : OperatorClass::diversifier;
  std::vector<OperatorId> ops;
  std::vector<double> weights;
  for (OperatorId op : kSearchOperators)
    if (operator_class(op) == wanted) {
      ops.push_back(op);
      weights.push_back(w(s, op));
    }
  return ops[select_index(weights, rng)];
}

// Reinforces the entries used during a D-I cycle: η₁ per positive-gain
// record when the coalition best improved, η₂ when only the agent best did;
// η₃ per record with gain ≤ 0. Entries are floored at `floor`.
inline WeightMatrix individual_learning(WeightMatrix w, std::span<const Experience> cycle,
                                        const std::array<double, 3>& eta, bool coalition_improved,
                                        double floor) {
  for (const auto& e : cycle) {
    double& x = w(e.state, e.op);
    x += e.gain > 0.0 ? (coalition_improved ? eta[0] : eta[1]) : eta[2];
    x = std::max(x, floor);
  }
  return w;
}

inline WeightMatrix mimetism_learning(const WeightMatrix& w, const WeightMatrix& received, double rho) {
  Matrix out = w.matrix();
  const auto& in = received.matrix();
  if (in.rows() != out.rows() || in.cols() != out.cols())
    throw ParameterError("weight matrix shapes differ");
  auto o = out.data();
  auto r = in.data();
  for (std::size_t k = 0; k < o.size(); ++k) o[k] = (1.0 - rho) * o[k] + rho * r[k];
  return WeightMatrix(std::move(out));
}

struct AgentStats {
  std::uint64_t iterations = 0;
  std::uint64_t cycles = 0;
  std::uint64_t discarded_outputs = 0;  // operator results that failed to decode
  std::uint64_t messages_received = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t malformed = 0;
  std::uint64_t solutions_sent = 0;
  std::uint64_t weights_sent = 0;
  std::uint64_t mimetism_applied = 0;
  std::array<std::uint64_t, kOperatorColumns> operator_calls{};
};

// One coalition agent (population, weights, experience, bests). step() is the
// only search mutator; peers talk to it through CoalitionMessage values.
class Agent {
 public:
  Agent(const Problem& p, AgentConfig cfg, AgentId id = 0)
      : p_(&p), cfg_(std::move(cfg)), id_(id), rng_(cfg_.seed), counters_{Phase::diversify, 0, cfg_.n_cycles} {
    cfg_.validate();
    for (std::size_t i = 0; i < cfg_.pop_size; ++i) {
      auto g = generate_greedy(p, rng_);
      auto o = evaluate(g, p, dec_);
      if (!o) o = Objectives{p.mode(), p.big_m(), p.big_m()};
      pop_.push_back({std::move(g), Evaluation{*o}});
    }
    refresh_fitness();
    current_ = Scored{select_solution(pop_, rng_), {}};
    current_.objectives = *evaluate(current_.genotype, p, dec_);
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop_.size(); ++i)
      if (coalition_better(pop_[i].eval.objectives, pop_[best].eval.objectives)) best = i;
    best_agent_ = Scored{pop_[best].genotype, pop_[best].eval.objectives};
    best_coalition_ = best_agent_;
    cycle_start_best_ = best_coalition_.objectives;
  }

  AgentId id() const { return id_; }
  const AgentConfig& config() const { return cfg_; }
  const Problem& problem() const { return *p_; }
  const Scored& current() const { return current_; }
  const Scored& best_agent() const { return best_agent_; }
  const Scored& best_coalition() const { return best_coalition_; }
  const std::vector<Member>& population() const { return pop_; }
  const WeightMatrix& weights() const { return w_; }
  const ExperienceMemory& experience() const { return h_; }
  const CycleCounters& counters() const { return counters_; }
  const AgentStats& stats() const { return stats_; }
  bool terminal() const { return terminal_; }
  // Iterations since the coalition best last improved (own or received).
  std::size_t idle_iterations() const { return idle_; }
  bool patience_exhausted() const { return idle_ >= cfg_.patience; }

  // Applies one peer message. Duplicates (seq not above the last seen from
  // that sender) and malformed payloads are dropped and counted.
  void on_receive(const CoalitionMessage& m) {
    ++stats_.messages_received;
    auto [it, fresh] = last_seq_.try_emplace(m.sender, m.seq);
    if (!fresh) {
      if (m.seq <= it->second) {
        ++stats_.duplicates;
        return;
      }
      it->second = m.seq;
    }
    if (!m.well_formed()) {
      ++stats_.malformed;
      return;
    }
    switch (m.kind) {
      case MessageKind::BEST_SOLUTION: {
        const auto& s = std::get<SolutionPayload>(m.payload);
        if (!check_feasible(s.genotype, *p_).empty() || s.genotype.routes.size() != p_->num_robots()) {
          ++stats_.malformed;
          return;
        }
        auto o = evaluate(s.genotype, *p_, dec_);
        if (!o) {
          ++stats_.malformed;
          return;
        }
        if (coalition_better(*o, best_coalition_.objectives)) {
          best_coalition_ = Scored{s.genotype, *o};
          idle_ = 0;
        }
        break;
      }
      case MessageKind::WEIGHT_MATRIX: {
        const auto& mat = std::get<Matrix>(m.payload);
        if (mat.rows() != StateId::kCount || mat.cols() != kOperatorColumns) {
          ++stats_.malformed;
          return;
        }
        w_ = mimetism_learning(w_, WeightMatrix(mat), cfg_.rho);
        ++stats_.mimetism_applied;
        break;
      }
      case MessageKind::PARAMS_EXCHANGE: break;  // consumed by the runner before search starts
      case MessageKind::STOP:
        terminal_ = true;
        stopped_by_.push_back(m.sender);
        break;
    }
  }

  bool received_stop_from(AgentId peer) const {
    return std::find(stopped_by_.begin(), stopped_by_.end(), peer) != stopped_by_.end();
  }

  void mark_terminal() { terminal_ = true; }

  // STOP carrying this agent's next sequence number.
  CoalitionMessage stop_message() { return message(MessageKind::STOP, std::monostate{}); }

  // One main-loop iteration. Returns messages to broadcast.
  std::vector<CoalitionMessage> step(std::span<const CoalitionMessage> inbox = {}) {
    for (const auto& m : inbox) on_receive(m);
    std::vector<CoalitionMessage> out;
    if (terminal_) return out;
    if (!announced_) {
      // Peers must learn the initial best even if this agent never improves on it.
      announced_ = true;
      out.push_back(best_message());
    }
    ++stats_.iterations;
    ++idle_;

    const StateId s = perceive_state(h_, counters_);
    if (s.stale && counters_.phase == Phase::diversify) {
      refresh_fitness();
      current_.genotype = select_solution(pop_, rng_);
      current_.objectives = *evaluate(current_.genotype, *p_, dec_);
      counters_.stagnation = 0;
    }
    const OperatorId op = choose_operator(w_, s, rng_);
    ++stats_.operator_calls[operator_column(op)];

    const Genotype* second = &current_.genotype;
    if (op == OperatorId::BCRC_BEST_COALITION) second = &best_coalition_.genotype;
    else if (op == OperatorId::BCRC_POPULATION) second = &select_solution(pop_, rng_);
    Genotype child = apply_operator(op, current_.genotype, *second, *p_, rng_, cfg_.operators);

    const bool unchanged = child == current_.genotype;
    double gain = 0.0;
    if (!unchanged) {
      auto obj = evaluate(child, *p_, dec_);
      if (!obj) {
        ++stats_.discarded_outputs;
      } else {
        gain = 1.0 - scalarized(*obj, current_.objectives);
        current_ = Scored{std::move(child), *obj};
        if (coalition_better(current_.objectives, best_agent_.objectives)) {
          best_agent_ = current_;
          agent_improved_ = true;
        }
        if (coalition_better(current_.objectives, best_coalition_.objectives)) {
          best_coalition_ = current_;
          coalition_improved_ = true;
          idle_ = 0;
          out.push_back(best_message());
        }
      }
    }
    h_.push({s, op, gain});

    if (counters_.phase == Phase::diversify) {
      counters_.phase = Phase::intensify;
      intensify_calls_ = 0;
    } else if (unchanged || ++intensify_calls_ >= cfg_.max_intensify) {
      end_cycle(out);
    }
    return out;
  }

 private:
  CoalitionMessage message(MessageKind kind, decltype(CoalitionMessage::payload) payload) {
    return CoalitionMessage{kind, id_, ++seq_, std::move(payload)};
  }

  CoalitionMessage best_message() {
    ++stats_.solutions_sent;
    return message(MessageKind::BEST_SOLUTION,
                   SolutionPayload{best_coalition_.genotype, best_coalition_.objectives.makespan,
                                   best_coalition_.objectives.cost});
  }

  void refresh_fitness() {
    std::vector<Evaluation> evals;
    for (const auto& m : pop_) evals.push_back(m.eval);
    evaluate_fitness(evals);
    for (std::size_t i = 0; i < pop_.size(); ++i) pop_[i].eval = evals[i];
  }

  void end_cycle(std::vector<CoalitionMessage>& out) {
    ++stats_.cycles;
    const auto records = h_.cycle_records();
    if (coalition_improved_) {
      w_ = individual_learning(w_, records, cfg_.eta, true, cfg_.weight_floor);
    } else if (agent_improved_) {
      w_ = individual_learning(w_, records, cfg_.eta, false, cfg_.weight_floor);
      out.push_back(message(MessageKind::WEIGHT_MATRIX, w_.matrix()));
      ++stats_.weights_sent;
    }
    insert_into_population();
    const bool progressed =
        improves_within(best_coalition_.objectives, cycle_start_best_, cfg_.epsilon);
    counters_.stagnation = progressed ? 0 : counters_.stagnation + 1;
    cycle_start_best_ = best_coalition_.objectives;
    coalition_improved_ = agent_improved_ = false;
    counters_.phase = Phase::diversify;
    h_.mark_cycle_start();
  }

  static bool improves_within(const Objectives& now, const Objectives& before, double eps) {
    return scalarized(now, before) < 1.0 - eps;
  }

  // The cycle's result replaces the weakest member if it is fitter.
  void insert_into_population() {
    for (const auto& m : pop_)
      if (m.genotype == current_.genotype) return;
    std::vector<Evaluation> evals;
    for (const auto& m : pop_) evals.push_back(m.eval);
    evals.push_back(Evaluation{current_.objectives});
    evaluate_fitness(evals);
    std::size_t worst = 0;
    for (std::size_t i = 1; i < pop_.size(); ++i)
      if (evals[i].fitness < evals[worst].fitness) worst = i;
    if (evals.back().fitness > evals[worst].fitness) {
      pop_[worst] = Member{current_.genotype, evals.back()};
      refresh_fitness();
    }
  }

  const Problem* p_;
  AgentConfig cfg_;
  AgentId id_;
  Rng rng_;
  Decoder dec_;
  std::vector<Member> pop_;
  Scored current_, best_agent_, best_coalition_;
  Objectives cycle_start_best_;
  WeightMatrix w_;
  ExperienceMemory h_;
  CycleCounters counters_;
  std::size_t intensify_calls_ = 0;
  bool agent_improved_ = false;
  bool coalition_improved_ = false;
  std::size_t idle_ = 0;
  bool terminal_ = false;
  bool announced_ = false;
  std::uint64_t seq_ = 0;
  std::unordered_map<AgentId, std::uint64_t> last_seq_;
  std::vector<AgentId> stopped_by_;
  AgentStats stats_;
};

}  // namespace cbm
