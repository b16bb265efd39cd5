#include "misr/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace misr {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("MISR_LOG");
    if (env == nullptr || *env == '\0') return LogLevel::Warn;
    if (std::strcmp(env, "off") == 0 || std::strcmp(env, "0") == 0) return LogLevel::Off;
    if (std::strcmp(env, "warn") == 0 || std::strcmp(env, "1") == 0) return LogLevel::Warn;
    if (std::strcmp(env, "info") == 0 || std::strcmp(env, "2") == 0) return LogLevel::Info;
    if (std::strcmp(env, "debug") == 0 || std::strcmp(env, "3") == 0) return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

namespace {

void emit(const char* tag, const std::string& msg) {
  std::fprintf(stderr, "[misr %s] %s\n", tag, msg.c_str());
}

}  // namespace

void log_warn(const std::string& msg) {
  if (log_level() >= LogLevel::Warn) emit("warn", msg);
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::Info) emit("info", msg);
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::Debug) emit("debug", msg);
}

}  // namespace misr
