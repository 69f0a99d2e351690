#pragma once

#include <cstdint>
#include <initializer_list>

namespace drlsvi {

/**
 * Counter-based generator.
 *
 * A stream is identified by a 64-bit key; draw n of the stream is
 * splitmix64_mix(key + (n + 1) * 0x9E3779B97F4A7C15), where splitmix64_mix is
 * the SplitMix64 output finalizer
 *
 *     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
 *     z = (z ^ (z >> 27)) * 0x94D049BB133111EB
 *     z =  z ^ (z >> 31)
 *
 * Keys are derived by folding the components left to right:
 * key = 0; for c in components: key = splitmix64_mix(key ^ c) + 0x9E3779B97F4A7C15.
 * Uniform doubles take the top 53 bits: (x >> 11) * 2^-53.
 */
class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t key) : key_(key) {}

    static std::uint64_t mix(std::uint64_t z);
    static std::uint64_t derive_key(std::initializer_list<std::uint64_t> components);

    /// Stream for (master seed, run kind, seed index, episode, step).
    static CounterRng stream(std::uint64_t master_seed, std::uint64_t run_kind, std::uint64_t seed,
                             std::uint64_t episode, std::uint64_t step) {
        return CounterRng(derive_key({master_seed, run_kind, seed, episode, step}));
    }

    std::uint64_t key() const { return key_; }
    std::uint64_t counter() const { return counter_; }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Stream kinds used by the runner.
enum class RunKind : std::uint64_t { train = 1, evaluate = 2, environment = 3 };

}  // namespace drlsvi
