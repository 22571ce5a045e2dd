#pragma once

#include <cstdio>
#include <string>

namespace cellsched {

// Round-trip-exact double formatting for every CSV we emit.
inline std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace cellsched
