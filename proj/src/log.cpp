#include "priorslam/log.hpp"

#include <atomic>
#include <iostream>

namespace priorslam {
namespace {
std::atomic<LogLevel> g_level{LogLevel::kWarn};
}

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(std::string_view message) {
  if (g_level >= LogLevel::kWarn) std::cerr << "[warn] " << message << '\n';
}

void log_info(std::string_view message) {
  if (g_level >= LogLevel::kInfo) std::cerr << "[info] " << message << '\n';
}

}  // namespace priorslam
