#pragma once

#include <cstdio>
#include <string>

namespace aacp {

inline void log_warning(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }

inline void log_info(const std::string& msg) { std::fprintf(stderr, "info: %s\n", msg.c_str()); }

}  // namespace aacp
