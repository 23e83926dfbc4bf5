#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace policysimp::log {

enum class Level { Debug = 0, Info = 1, Warn = 2, Error = 3, Off = 4 };

void set_level(Level level) noexcept;
Level level() noexcept;

// Thread-safe, one line per call, written to stderr.
void write(Level level, std::string_view message);

inline void debug(std::string_view m) { write(Level::Debug, m); }
inline void info(std::string_view m) { write(Level::Info, m); }
inline void warn(std::string_view m) { write(Level::Warn, m); }
inline void error(std::string_view m) { write(Level::Error, m); }

/// Logs "<label> took N ms" at Info when destroyed.
class StageTimer {
 public:
  explicit StageTimer(std::string label)
      : label_(std::move(label)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer();

  double elapsed_ms() const;

  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  std::string label_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace policysimp::log
