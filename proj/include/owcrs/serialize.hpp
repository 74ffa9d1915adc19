#pragma once
#include <cstdio>
#include <string>

namespace owcrs {

// %.17g round-trips IEEE doubles exactly
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace owcrs
