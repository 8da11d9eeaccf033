#pragma once

#include <sstream>
#include <string>

namespace lvl::log {

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Initial level comes from LVL_LOG (error|warn|info|debug), default warn.
Level level();
void set_level(Level level);
void write(Level level, const std::string& message);

// Number of warnings emitted since start (or the last reset); tests use it to
// observe warning diagnostics.
long warning_count();
void reset_warning_count();

template <typename... Args>
std::string concat(const Args&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

template <typename... Args>
void warn(const Args&... args) {
  write(Level::kWarn, concat(args...));
}
template <typename... Args>
void info(const Args&... args) {
  write(Level::kInfo, concat(args...));
}
template <typename... Args>
void debug(const Args&... args) {
  if (level() >= Level::kDebug) write(Level::kDebug, concat(args...));
}
template <typename... Args>
void error(const Args&... args) {
  write(Level::kError, concat(args...));
}

}  // namespace lvl::log
