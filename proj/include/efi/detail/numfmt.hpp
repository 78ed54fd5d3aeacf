#pragma once

#include "efi/error.hpp"

#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>

namespace efi::detail {

// Shortest decimal text that parses back to the identical double.
inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc())
        throw FormatError("cannot format number");
    return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline bool try_parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    if (s.empty())
        return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    if (!try_parse_double(s, v))
        throw FormatError(context + ": not a number: '" + std::string(s) + "'");
    return v;
}

inline long long parse_int(std::string_view s, const std::string& context) {
    s = trim(s);
    if (!s.empty() && s.front() == '+')
        s.remove_prefix(1);
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        // FIA exports sometimes write integral codes as "2.0"
        double d = 0.0;
        if (try_parse_double(s, d) && d == static_cast<double>(static_cast<long long>(d)))
            return static_cast<long long>(d);
        throw FormatError(context + ": not an integer: '" + std::string(s) + "'");
    }
    return v;
}

} // namespace efi::detail
