#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace cvl {

/// 16 lowercase hex digits of the IEEE-754 bit pattern; round trips exactly.
inline std::string to_hex(double v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(std::bit_cast<std::uint64_t>(v)));
    return buf;
}

inline std::optional<double> from_hex(const std::string& tok) {
    if (tok.size() != 16) return std::nullopt;
    std::uint64_t bits = 0;
    for (char c : tok) {
        bits <<= 4;
        if (c >= '0' && c <= '9') bits |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') bits |= static_cast<std::uint64_t>(c - 'a' + 10);
        else return std::nullopt;
    }
    return std::bit_cast<double>(bits);
}

}  // namespace cvl
