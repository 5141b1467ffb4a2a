#pragma once

#include <cstdint>
#include <string_view>

namespace siamq {

// Named sub-stream derivation: every consumer of randomness hashes the root
// seed with a stream label (and optional index) so streams stay independent
// of each other and of call order.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
    // FNV-1a over the label, then splitmix64 finalization.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t z = root + 0x9e3779b97f4a7c15ull * (h ^ (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace siamq
