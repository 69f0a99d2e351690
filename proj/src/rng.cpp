#include "drlsvi/rng.hpp"

namespace drlsvi {

std::uint64_t CounterRng::mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t CounterRng::derive_key(std::initializer_list<std::uint64_t> components) {
    std::uint64_t key = 0;
    for (std::uint64_t c : components) key = mix(key ^ c) + kGolden;
    return key;
}

}  // namespace drlsvi
