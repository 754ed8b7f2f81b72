#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <variant>
#include <vector>

#include "cbm/core.hpp"
#include "cbm/fitness.hpp"
#include "cbm/schedule.hpp"

namespace cbm {

enum class MessageKind : std::uint8_t {
  BEST_SOLUTION = 1,
  WEIGHT_MATRIX = 2,
  PARAMS_EXCHANGE = 3,
  STOP = 4,
};

inline const char* to_string(MessageKind k) {
  switch (k) {
    case MessageKind::BEST_SOLUTION: return "BEST_SOLUTION";
    case MessageKind::WEIGHT_MATRIX: return "WEIGHT_MATRIX";
    case MessageKind::PARAMS_EXCHANGE: return "PARAMS_EXCHANGE";
    case MessageKind::STOP: return "STOP";
  }
  return "?";
}

using AgentId = std::uint16_t;

struct SolutionPayload {
  Genotype genotype;
  double makespan = 0.0;
  double cost = 0.0;

  bool operator==(const SolutionPayload&) const = default;
};

// Robot-specific slice of an instance: what one agent contributes when the
// fleet's parameters are distributed.
struct RobotBlock {
  std::uint16_t robot = 0;
  double capacity = 0.0;
  std::vector<double> duration;    // per task
  std::vector<double> demand;      // per task
  std::vector<double> setup_time;  // nodes × nodes, row-major
  std::vector<double> setup_cost;

  bool operator==(const RobotBlock&) const = default;
};

struct ParamsPayload {
  std::vector<RobotBlock> blocks;

  bool operator==(const ParamsPayload&) const = default;
};

struct CoalitionMessage {
  MessageKind kind = MessageKind::STOP;
  AgentId sender = 0;
  std::uint64_t seq = 0;
  std::variant<std::monostate, SolutionPayload, Matrix, ParamsPayload> payload;

  bool operator==(const CoalitionMessage&) const = default;

  // Payload alternative matches the kind.
  bool well_formed() const {
    switch (kind) {
      case MessageKind::BEST_SOLUTION: return std::holds_alternative<SolutionPayload>(payload);
      case MessageKind::WEIGHT_MATRIX: return std::holds_alternative<Matrix>(payload);
      case MessageKind::PARAMS_EXCHANGE: return std::holds_alternative<ParamsPayload>(payload);
      case MessageKind::STOP: return std::holds_alternative<std::monostate>(payload);
    }
    return false;
  }
};

inline RobotBlock robot_block(const ProblemInstance& inst, Robot r) {
  RobotBlock b;
  b.robot = static_cast<std::uint16_t>(r);
  b.capacity = inst.robots[r].capacity;
  for (Task t = 0; t < inst.num_tasks(); ++t) {
    b.duration.push_back(inst.duration(t, r));
    b.demand.push_back(inst.demand(t, r));
  }
  auto st = inst.setup_time.robot_slice(r);
  auto sc = inst.setup_cost.robot_slice(r);
  b.setup_time.assign(st.begin(), st.end());
  b.setup_cost.assign(sc.begin(), sc.end());
  return b;
}

// Overwrites robot b.robot's parameters; throws ParameterError on shape
// mismatch.
inline void merge_robot_block(ProblemInstance& inst, const RobotBlock& b) {
  const std::size_t n = inst.num_tasks(), nodes = inst.num_nodes();
  if (b.robot >= inst.num_robots() || b.duration.size() != n || b.demand.size() != n ||
      b.setup_time.size() != nodes * nodes || b.setup_cost.size() != nodes * nodes)
    throw ParameterError("robot block does not match the instance shape");
  inst.robots[b.robot].capacity = b.capacity;
  for (Task t = 0; t < n; ++t) {
    inst.duration(t, b.robot) = b.duration[t];
    inst.demand(t, b.robot) = b.demand[t];
  }
  auto st = inst.setup_time.robot_slice(b.robot);
  auto sc = inst.setup_cost.robot_slice(b.robot);
  std::copy(b.setup_time.begin(), b.setup_time.end(), st.begin());
  std::copy(b.setup_cost.begin(), b.setup_cost.end(), sc.begin());
  inst.geometry.reset();
}

namespace wire {

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v) { be(v, 2); }
  void u32(std::uint32_t v) { be(v, 4); }
  void u64(std::uint64_t v) { be(v, 8); }
  void f64(double v) { be(std::bit_cast<std::uint64_t>(v), 8); }
  std::vector<std::uint8_t>& bytes() { return buf_; }

 private:
  void be(std::uint64_t v, int n) {
    for (int k = n - 1; k >= 0; --k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  std::vector<std::uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : b_(b) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
  std::uint64_t u64() { return be(8); }
  double f64() { return std::bit_cast<double>(be(8)); }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  std::uint64_t be(std::size_t n) {
    if (pos_ + n > b_.size())
      throw ParseError("message truncated at byte " + std::to_string(pos_));
    std::uint64_t v = 0;
    for (std::size_t k = 0; k < n; ++k) v = (v << 8) | b_[pos_++];
    return v;
  }
  std::span<const std::uint8_t> b_;
  std::size_t pos_ = 0;
};

inline void put_doubles(Writer& w, const std::vector<double>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  for (double x : v) w.f64(x);
}

inline std::vector<double> get_doubles(Reader& r) {
  const std::uint32_t n = r.u32();
  if (n > r.remaining() / 8) throw ParseError("array length exceeds message size");
  std::vector<double> v(n);
  for (auto& x : v) x = r.f64();
  return v;
}

}  // namespace wire

// Message body without the length prefix.
inline std::vector<std::uint8_t> encode(const CoalitionMessage& m) {
  if (!m.well_formed()) throw ParameterError("payload does not match message kind");
  wire::Writer w;
  w.u8(static_cast<std::uint8_t>(m.kind));
  w.u16(m.sender);
  w.u64(m.seq);
  switch (m.kind) {
    case MessageKind::BEST_SOLUTION: {
      const auto& s = std::get<SolutionPayload>(m.payload);
      w.u16(static_cast<std::uint16_t>(s.genotype.routes.size()));
      for (const auto& route : s.genotype.routes) {
        w.u32(static_cast<std::uint32_t>(route.size()));
        for (Task t : route) w.u32(t);
      }
      w.f64(s.makespan);
      w.f64(s.cost);
      break;
    }
    case MessageKind::WEIGHT_MATRIX: {
      const auto& mat = std::get<Matrix>(m.payload);
      w.u16(static_cast<std::uint16_t>(mat.rows()));
      w.u16(static_cast<std::uint16_t>(mat.cols()));
      for (double x : mat.data()) w.f64(x);
      break;
    }
    case MessageKind::PARAMS_EXCHANGE: {
      const auto& p = std::get<ParamsPayload>(m.payload);
      w.u16(static_cast<std::uint16_t>(p.blocks.size()));
      for (const auto& b : p.blocks) {
        w.u16(b.robot);
        w.f64(b.capacity);
        wire::put_doubles(w, b.duration);
        wire::put_doubles(w, b.demand);
        wire::put_doubles(w, b.setup_time);
        wire::put_doubles(w, b.setup_cost);
      }
      break;
    }
    case MessageKind::STOP: break;
  }
  return std::move(w.bytes());
}

inline CoalitionMessage decode(std::span<const std::uint8_t> body) {
  wire::Reader r(body);
  CoalitionMessage m;
  const std::uint8_t kind = r.u8();
  if (kind < 1 || kind > 4) throw ParseError("unknown message kind " + std::to_string(kind));
  m.kind = static_cast<MessageKind>(kind);
  m.sender = r.u16();
  m.seq = r.u64();
  switch (m.kind) {
    case MessageKind::BEST_SOLUTION: {
      SolutionPayload s;
      s.genotype.routes.resize(r.u16());
      for (auto& route : s.genotype.routes) {
        const std::uint32_t len = r.u32();
        if (len > r.remaining() / 4) throw ParseError("route length exceeds message size");
        route.resize(len);
        for (auto& t : route) t = r.u32();
      }
      s.makespan = r.f64();
      s.cost = r.f64();
      m.payload = std::move(s);
      break;
    }
    case MessageKind::WEIGHT_MATRIX: {
      const std::uint16_t rows = r.u16(), cols = r.u16();
      if (std::size_t{rows} * cols > r.remaining() / 8)
        throw ParseError("weight matrix exceeds message size");
      Matrix mat(rows, cols);
      for (auto& x : mat.data()) x = r.f64();
      m.payload = std::move(mat);
      break;
    }
    case MessageKind::PARAMS_EXCHANGE: {
      ParamsPayload p;
      p.blocks.resize(r.u16());
      for (auto& b : p.blocks) {
        b.robot = r.u16();
        b.capacity = r.f64();
        b.duration = wire::get_doubles(r);
        b.demand = wire::get_doubles(r);
        b.setup_time = wire::get_doubles(r);
        b.setup_cost = wire::get_doubles(r);
      }
      m.payload = std::move(p);
      break;
    }
    case MessageKind::STOP: break;
  }
  if (!r.done()) throw ParseError("trailing bytes after message payload");
  return m;
}

// 4-byte big-endian length prefix followed by the body.
inline std::vector<std::uint8_t> encode_frame(const CoalitionMessage& m) {
  const auto body = encode(m);
  const auto n = static_cast<std::uint32_t>(body.size());
  std::vector<std::uint8_t> out(4 + body.size());
  for (int k = 0; k < 4; ++k) out[k] = static_cast<std::uint8_t>(n >> (8 * (3 - k)));
  std::copy(body.begin(), body.end(), out.begin() + 4);
  return out;
}

}  // namespace cbm
