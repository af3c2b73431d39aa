#pragma once

#include <cstdint>
#include <string_view>

namespace derain::core {

// FNV-1a, used for stable per-name seed salts and config fingerprints.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace derain::core
