#pragma once

#include <string>

namespace misr {

enum class LogLevel { Off = 0, Warn = 1, Info = 2, Debug = 3 };

/// Level comes from MISR_LOG (off|warn|info|debug, or 0-3); default warn.
LogLevel log_level();

void log_warn(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace misr
