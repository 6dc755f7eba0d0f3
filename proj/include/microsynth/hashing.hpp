#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace microsynth {

// FNV-1a, 64-bit. Stable across platforms; used for manifest content hashes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string to_hex(std::uint64_t value);
// Hash of a file's raw bytes, rendered as 16 hex digits.
std::string hash_file(const std::string& path);

}  // namespace microsynth
