#pragma once

#include <cstdint>
#include <random>

namespace servsim {

/// Seeded generator with a platform-independent draw sequence.
///
/// std::mt19937_64 has a fully specified output sequence, but the standard
/// distributions do not, so the mapping to doubles is done here.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi].
    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    /// Derives an independent stream seed from a parent seed (splitmix64).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace servsim
