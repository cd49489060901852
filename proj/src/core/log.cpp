#include "gpfr/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace gpfr::log {
namespace {

std::atomic<Level> g_level{Level::kInfo};
std::mutex g_mutex;

const char* tag(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    case Level::kOff: break;
  }
  return "";
}

}  // namespace

void set_level(Level level) noexcept { g_level.store(level); }
Level level() noexcept { return g_level.load(); }
bool enabled(Level lvl) noexcept { return lvl != Level::kOff && lvl >= g_level.load(); }

void write(Level lvl, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[gpfr %s] %.*s\n", tag(lvl), static_cast<int>(message.size()), message.data());
}

}  // namespace gpfr::log
