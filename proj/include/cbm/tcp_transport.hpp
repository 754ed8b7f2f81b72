#pragma once

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cbm/log.hpp"
#include "cbm/transport.hpp"

namespace cbm {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
};

// "host:port" or ":port" / "port" for localhost.
inline Endpoint parse_endpoint(const std::string& s) {
  Endpoint e;
  const auto colon = s.rfind(':');
  std::string port = s;
  if (colon != std::string::npos) {
    if (colon > 0) e.host = s.substr(0, colon);
    port = s.substr(colon + 1);
  }
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(port, &used);
    if (used != port.size() || v > 65535) throw std::invalid_argument("");
    e.port = static_cast<std::uint16_t>(v);
  } catch (const std::exception&) {
    throw ParameterError("bad endpoint '" + s + "', expected host:port");
  }
  return e;
}

namespace detail {

inline bool write_all(int fd, const std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::send(fd, p, n, MSG_NOSIGNAL);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

inline bool read_all(int fd, std::uint8_t* p, std::size_t n) {
  while (n > 0) {
    const ssize_t k = ::recv(fd, p, n, 0);
    if (k < 0 && errno == EINTR) continue;
    if (k <= 0) return false;
    p += k;
    n -= static_cast<std::size_t>(k);
  }
  return true;
}

}  // namespace detail

// Full mesh of TCP connections between n agents, one per process (or
// thread). Each agent listens, then dials every peer and introduces itself
// with its 2-byte id; frames travel on the dialer's connection only.
class TcpTransport final : public Transport {
 public:
  static constexpr std::uint32_t kMaxFrame = 1u << 30;

  TcpTransport(AgentId self, std::size_t agents, const Endpoint& listen = {})
      : self_(self), n_(agents), out_(agents) {
    if (self >= agents) throw ParameterError("agent id out of range");
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw TransportError(std::string("socket: ") + std::strerror(errno));
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(listen.port);
    if (::inet_pton(AF_INET, listen.host.c_str(), &addr.sin_addr) != 1)
      addr.sin_addr.s_addr = htonl(INADDR_ANY);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 64) < 0) {
      const std::string err = std::strerror(errno);
      ::close(listen_fd_);
      throw TransportError("cannot listen on " + listen.host + ":" + std::to_string(listen.port) + ": " + err);
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;
  ~TcpTransport() override { close(); }

  std::uint16_t port() const { return port_; }
  std::size_t agents() const override { return n_; }
  std::size_t malformed_frames() const { return malformed_.load(); }

  // peers[k] is agent k's listening endpoint; peers[self] is ignored.
  // Retries until every peer accepts or `timeout` passes.
  void connect_peers(const std::vector<Endpoint>& peers,
                     std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
    if (peers.size() != n_) throw ParameterError("need one endpoint per agent");
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (AgentId k = 0; k < n_; ++k) {
      if (k == self_) continue;
      int fd = -1;
      while (fd < 0) {
        fd = dial(peers[k]);
        if (fd >= 0) break;
        if (std::chrono::steady_clock::now() > deadline)
          throw TransportError("cannot reach agent " + std::to_string(k) + " at " + peers[k].host + ":" +
                               std::to_string(peers[k].port));
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      const std::uint8_t hello[2] = {static_cast<std::uint8_t>(self_ >> 8), static_cast<std::uint8_t>(self_ & 0xFF)};
      if (!detail::write_all(fd, hello, 2)) throw TransportError("handshake with agent " + std::to_string(k) + " failed");
      out_[k] = std::make_unique<Outbound>();
      out_[k]->fd = fd;
    }
  }

  void send(AgentId to, const CoalitionMessage& m) override {
    if (closed_) throw TransportError("send on closed transport");
    if (to >= n_) throw TransportError("no agent " + std::to_string(to));
    if (to == self_) {
      push(m);
      return;
    }
    auto& o = out_[to];
    if (!o) throw TransportError("agent " + std::to_string(to) + " not connected");
    const auto frame = encode_frame(m);
    std::lock_guard lock(o->mu);
    if (!detail::write_all(o->fd, frame.data(), frame.size()))
      throw TransportError("connection to agent " + std::to_string(to) + " lost");
  }

  std::optional<CoalitionMessage> try_receive(AgentId self) override {
    if (self != self_) throw TransportError("TCP endpoint belongs to agent " + std::to_string(self_));
    std::lock_guard lock(mu_);
    if (inbox_.empty()) return std::nullopt;
    auto m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }

  void close() override {
    if (closed_.exchange(true)) return;
    for (auto& o : out_)
      if (o) {
        ::shutdown(o->fd, SHUT_RDWR);
        ::close(o->fd);
      }
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
    if (acceptor_.joinable()) acceptor_.join();
    std::vector<int> fds;
    {
      std::lock_guard lock(mu_);
      fds = inbound_fds_;
    }
    for (int fd : fds) ::shutdown(fd, SHUT_RDWR);
    for (auto& t : readers_)
      if (t.joinable()) t.join();
    for (int fd : fds) ::close(fd);
  }

 private:
  struct Outbound {
    int fd = -1;
    std::mutex mu;
  };

  static int dial(const Endpoint& e) {
    addrinfo hints{}, *res = nullptr;
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    if (::getaddrinfo(e.host.c_str(), std::to_string(e.port).c_str(), &hints, &res) != 0) return -1;
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd >= 0 && ::connect(fd, res->ai_addr, res->ai_addrlen) < 0) {
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd >= 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    }
    return fd;
  }

  void push(CoalitionMessage m) {
    std::lock_guard lock(mu_);
    inbox_.push_back(std::move(m));
  }

  void accept_loop() {
    while (!closed_) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) {
        if (errno == EINTR) continue;
        return;
      }
      std::lock_guard lock(mu_);
      if (closed_) {
        ::close(fd);
        return;
      }
      inbound_fds_.push_back(fd);
      readers_.emplace_back([this, fd] { read_loop(fd); });
    }
  }

  void read_loop(int fd) {
    std::uint8_t hello[2];
    if (!detail::read_all(fd, hello, 2)) return;
    const AgentId peer = static_cast<AgentId>(hello[0] << 8 | hello[1]);
    std::vector<std::uint8_t> body;
    while (true) {
      std::uint8_t len_be[4];
      if (!detail::read_all(fd, len_be, 4)) return;
      const std::uint32_t len = std::uint32_t{len_be[0]} << 24 | std::uint32_t{len_be[1]} << 16 |
                                std::uint32_t{len_be[2]} << 8 | len_be[3];
      if (len > kMaxFrame) {
        log::error("agent ", self_, ": oversized frame (", len, " bytes) from agent ", peer, "; closing link");
        ++malformed_;
        return;
      }
      body.resize(len);
      if (!detail::read_all(fd, body.data(), len)) return;
      try {
        push(decode(body));
      } catch (const ParseError& e) {
        ++malformed_;
        log::warn("agent ", self_, ": dropped malformed frame from agent ", peer, ": ", e.what());
      }
    }
  }

  AgentId self_;
  std::size_t n_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> closed_{false};
  std::atomic<std::size_t> malformed_{0};
  std::vector<std::unique_ptr<Outbound>> out_;
  std::thread acceptor_;
  std::mutex mu_;
  std::deque<CoalitionMessage> inbox_;
  std::vector<int> inbound_fds_;
  std::vector<std::thread> readers_;
};

}  // namespace cbm
