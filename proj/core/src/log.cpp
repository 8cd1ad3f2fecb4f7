#include "trapscape/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace trapscape::log {

namespace {

Level from_env() {
  const char* env = std::getenv("TRAPSCAPE_LOG");
  if (env == nullptr) return Level::warn;
  const std::string v(env);
  if (v == "debug") return Level::debug;
  if (v == "info") return Level::info;
  if (v == "error") return Level::error;
  if (v == "off") return Level::off;
  return Level::warn;
}

std::atomic<Level>& current() {
  static std::atomic<Level> lvl{from_env()};
  return lvl;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

constexpr const char* tag(Level l) {
  switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    case Level::off: return "off";
  }
  return "";
}

}  // namespace

Level level() { return current().load(); }
void set_level(Level l) { current().store(l); }

void write(Level l, std::string_view message) {
  if (l < level()) return;
  std::lock_guard lock(sink_mutex());
  std::cerr << "[trapscape:" << tag(l) << "] " << message << '\n';
}

}  // namespace trapscape::log
