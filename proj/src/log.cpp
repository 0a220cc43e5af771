#include "scenediff/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace scenediff {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level = static_cast<int>(level); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warn(std::string_view message) {
  if (g_level < static_cast<int>(LogLevel::warn)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[warn] " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level < static_cast<int>(LogLevel::info)) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "[info] " << message << '\n';
}

}  // namespace scenediff
