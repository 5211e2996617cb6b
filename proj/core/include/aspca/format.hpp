#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace aspca {

// Shortest decimal representation that round-trips, independent of locale.
// NaN and infinities print as "nan", "inf", "-inf".
std::string format_double(double x);

// 64-bit FNV-1a, rendered as 16 lowercase hex digits by fnv1a_hex.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a_hex(std::string_view bytes);

}  // namespace aspca
