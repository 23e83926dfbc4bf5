#include "util/log.hpp"

#include <atomic>
#include <cstdio>
#include <mutex>

namespace policysimp::log {

namespace {
std::atomic<Level> g_level{Level::Info};
std::mutex g_mutex;

const char* tag(Level l) {
  switch (l) {
    case Level::Debug: return "debug";
    case Level::Info: return "info";
    case Level::Warn: return "warn";
    case Level::Error: return "error";
    case Level::Off: break;
  }
  return "";
}
}  // namespace

void set_level(Level level) noexcept { g_level.store(level); }
Level level() noexcept { return g_level.load(); }

void write(Level l, std::string_view message) {
  if (l < g_level.load()) return;
  std::lock_guard lock(g_mutex);
  std::fprintf(stderr, "[psimp %s] %.*s\n", tag(l), static_cast<int>(message.size()),
               message.data());
}

double StageTimer::elapsed_ms() const {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
      .count();
}

StageTimer::~StageTimer() {
  info(label_ + " took " + std::to_string(static_cast<long long>(elapsed_ms())) + " ms");
}

}  // namespace policysimp::log
