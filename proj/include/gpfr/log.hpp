#pragma once

#include <sstream>
#include <string>
#include <string_view>

namespace gpfr::log {

enum class Level { kDebug, kInfo, kWarn, kError, kOff };

void set_level(Level level) noexcept;
Level level() noexcept;
bool enabled(Level level) noexcept;
void write(Level level, std::string_view message);

// Joins the streamed arguments into one line on stderr.
template <class... Args>
void emit(Level lvl, const Args&... args) {
  if (!enabled(lvl)) return;
  std::ostringstream out;
  (out << ... << args);
  write(lvl, out.str());
}

template <class... Args>
void info(const Args&... args) {
  emit(Level::kInfo, args...);
}
template <class... Args>
void warn(const Args&... args) {
  emit(Level::kWarn, args...);
}
template <class... Args>
void debug(const Args&... args) {
  emit(Level::kDebug, args...);
}

// Restores the previous level on scope exit.
class ScopedLevel {
 public:
  explicit ScopedLevel(Level lvl) noexcept : saved_(level()) { set_level(lvl); }
  ~ScopedLevel() { set_level(saved_); }
  ScopedLevel(const ScopedLevel&) = delete;
  ScopedLevel& operator=(const ScopedLevel&) = delete;

 private:
  Level saved_;
};

}  // namespace gpfr::log
