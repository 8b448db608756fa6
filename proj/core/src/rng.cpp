#include "tilln/rng.hpp"

namespace tilln {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t unit) {
    return mix64(mix64(seed) ^ mix64(unit + 0x632be59bd9b4e019ULL));
}

}  // namespace tilln
