#pragma once

#include <string>

namespace rof {

enum class LogLevel { off = 0, info = 1, debug = 2 };

/// Level from the ROF_LOG environment variable ("info"/"1", "debug"/"2");
/// anything else is off. Read once.
LogLevel log_level();

void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace rof
