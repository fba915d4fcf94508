#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace mlat {

/// "$#,###" with `decimals` fractional digits, e.g. usd(18000, 2) == "$18,000.00".
inline std::string usd(double value, int decimals = 0) {
    const bool negative = value < 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(value));
    std::string digits(buf);
    const auto dot = digits.find('.');
    std::string whole = digits.substr(0, dot);
    const std::string frac = dot == std::string::npos ? "" : digits.substr(dot);
    std::string grouped;
    for (std::size_t i = 0; i < whole.size(); ++i) {
        if (i > 0 && (whole.size() - i) % 3 == 0) grouped += ',';
        grouped += whole[i];
    }
    if (negative && (grouped != "0" || frac.find_first_not_of(".0") != std::string::npos))
        return "-$" + grouped + frac;
    return "$" + grouped + frac;
}

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
    return buf;
}

} // namespace mlat
