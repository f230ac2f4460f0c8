#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>

namespace mapek {

/// CSV/summary number format: integers where exact, otherwise 6 significant
/// digits with '.' as separator.
inline std::string format_number(double x) {
    if (std::isfinite(x) && x == std::floor(x) && std::fabs(x) < 1e15) {
        const auto i = static_cast<long long>(x);
        return std::to_string(i == 0 ? 0LL : i);
    }
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.6g", x);
    return buf.data();
}

/// Rounds x to what format_number prints, so stored values and their CSV
/// rendering are the same number.
inline double quantize(double x) { return std::strtod(format_number(x).c_str(), nullptr); }

/// Shortest decimal that parses back to exactly x.
inline std::string format_exact(double x) {
    std::array<char, 64> buf{};
    auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

}  // namespace mapek
