#include "lvl/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace lvl::log {
namespace {

Level level_from_env() {
  const char* env = std::getenv("LVL_LOG");
  if (env == nullptr) return Level::kWarn;
  std::string_view v(env);
  if (v == "error") return Level::kError;
  if (v == "info") return Level::kInfo;
  if (v == "debug") return Level::kDebug;
  return Level::kWarn;
}

std::atomic<int>& current() {
  static std::atomic<int> lvl{static_cast<int>(level_from_env())};
  return lvl;
}

std::atomic<long> g_warnings{0};
std::mutex g_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::kError: return "error";
    case Level::kWarn: return "warning";
    case Level::kInfo: return "info";
    case Level::kDebug: return "debug";
  }
  return "";
}

}  // namespace

Level level() { return static_cast<Level>(current().load()); }

void set_level(Level l) { current().store(static_cast<int>(l)); }

void write(Level l, const std::string& message) {
  if (l == Level::kWarn) ++g_warnings;
  if (static_cast<int>(l) > current().load()) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[lvl " << tag(l) << "] " << message << '\n';
}

long warning_count() { return g_warnings.load(); }
void reset_warning_count() { g_warnings.store(0); }

}  // namespace lvl::log
