#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace egae {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Level comes from EGAE_LOG={error,info,debug}; default info.
inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("EGAE_LOG");
    if (env == nullptr) return LogLevel::kInfo;
    if (std::strcmp(env, "error") == 0) return LogLevel::kError;
    if (std::strcmp(env, "debug") == 0) return LogLevel::kDebug;
    return LogLevel::kInfo;
  }();
  return level;
}

template <typename... Args>
void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
  if (lvl > log_level()) return;
  std::fprintf(stderr, "[%s] ", tag);
  if constexpr (sizeof...(args) == 0)
    std::fputs(fmt, stderr);
  else
    std::fprintf(stderr, fmt, args...);
  std::fputc('\n', stderr);
}

#define EGAE_LOG_ERROR(...) ::egae::log_at(::egae::LogLevel::kError, "error", __VA_ARGS__)
#define EGAE_LOG_INFO(...) ::egae::log_at(::egae::LogLevel::kInfo, "info", __VA_ARGS__)
#define EGAE_LOG_DEBUG(...) ::egae::log_at(::egae::LogLevel::kDebug, "debug", __VA_ARGS__)

}  // namespace egae
