#include "rof/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

namespace rof {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("ROF_LOG");
    if (!env) return LogLevel::off;
    const std::string v(env);
    if (v == "debug" || v == "2") return LogLevel::debug;
    if (v == "info" || v == "1") return LogLevel::info;
    return LogLevel::off;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::info) std::fprintf(stderr, "[rof] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::debug) std::fprintf(stderr, "[rof:debug] %s\n", msg.c_str());
}

}  // namespace rof
