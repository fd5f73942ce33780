#pragma once

#include <string>

namespace mstp::log {

// Reads MSTP_LOG (trace|debug|info|warn|error|off) once; defaults to warn.
void init_from_env();

void debug(const std::string& message);
void info(const std::string& message);
void warn(const std::string& message);
void error(const std::string& message);

}  // namespace mstp::log
