#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>

namespace cbm::log {

enum class Level { off = 0, error, warn, info, debug };

// Threshold read once from CBM_LOG (off|error|warn|info|debug); default warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("CBM_LOG");
    const std::string v = env ? env : "";
    if (v == "off") return Level::off;
    if (v == "error") return Level::error;
    if (v == "info") return Level::info;
    if (v == "debug") return Level::debug;
    return Level::warn;
  }();
  return level;
}

inline bool enabled(Level l) { return l <= threshold() && l != Level::off; }

template <class... Args>
void write(Level l, const Args&... args) {
  if (!enabled(l)) return;
  static std::mutex mu;
  std::ostringstream os;
  constexpr const char* names[] = {"", "error", "warn", "info", "debug"};
  os << "[cbm " << names[static_cast<int>(l)] << "] ";
  (os << ... << args);
  os << '\n';
  std::lock_guard lock(mu);
  std::cerr << os.str();
}

template <class... Args> void error(const Args&... a) { write(Level::error, a...); }
template <class... Args> void warn(const Args&... a) { write(Level::warn, a...); }
template <class... Args> void info(const Args&... a) { write(Level::info, a...); }
template <class... Args> void debug(const Args&... a) { write(Level::debug, a...); }

}  // namespace cbm::log
