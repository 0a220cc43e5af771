#pragma once

#include <string_view>

namespace scenediff {

enum class LogLevel { quiet = 0, warn = 1, info = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();
void log_warn(std::string_view message);
void log_info(std::string_view message);

}  // namespace scenediff
