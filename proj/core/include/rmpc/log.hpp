#pragma once

#include <string>

namespace rmpc {

/// Verbosity from the RMPC_LOG environment variable: 0 silent, 1 normal
/// (default), 2 chatty.
int log_level();

void log_info(const std::string& msg);   // level >= 1
void log_debug(const std::string& msg);  // level >= 2

}  // namespace rmpc
