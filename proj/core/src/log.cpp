#include "rmpc/log.hpp"

#include <cstdlib>
#include <iostream>

namespace rmpc {

int log_level() {
  static const int level = [] {
    const char* env = std::getenv("RMPC_LOG");
    if (!env) return 1;
    return std::atoi(env);
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[rmpc] " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[rmpc] " << msg << "\n";
}

}  // namespace rmpc
