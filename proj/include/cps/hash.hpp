#pragma once

#include <cstdint>
#include <string_view>

namespace cps {

// 64-bit FNV-1a over raw bytes; platform-stable, used for content
// fingerprints in result files and run manifests.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cps
