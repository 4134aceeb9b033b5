#pragma once

#include <cstdint>
#include <cmath>

namespace spdelab {

// Deterministic stream identity for one Monte Carlo replica. Every random
// number in the artifact is a pure function of (master, replica, counter),
// so results are reproducible under any scheduling or thread count.
struct SeedSpec {
    std::uint64_t master = 0;
    std::uint64_t replica = 0;
};

namespace rng_detail {

// SplitMix64 finalizer (Stafford mix13).
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27; x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

} // namespace rng_detail

// Counter-based generator: out(c) = mix64(key + c*golden), the SplitMix64
// sequence for a stream key derived from (master, replica). Draws are
// addressable by counter, so cells can be generated in any order.
class CounterRng {
public:
    explicit CounterRng(SeedSpec seed)
        : key_(rng_detail::mix64(rng_detail::mix64(seed.master + rng_detail::kGolden) ^
                                 (seed.replica * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL))) {}

    std::uint64_t bits(std::uint64_t counter) const {
        return rng_detail::mix64(key_ + counter * rng_detail::kGolden);
    }

    // Uniform on (0,1]; never returns 0 so log() below is safe.
    double uniform(std::uint64_t counter) const {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, consuming counters 2c and 2c+1.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

} // namespace spdelab
