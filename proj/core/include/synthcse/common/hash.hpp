#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace synthcse {

// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL) noexcept;

std::string to_hex(std::uint64_t value);

}  // namespace synthcse
