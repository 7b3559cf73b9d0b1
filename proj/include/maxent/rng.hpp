#pragma once

#include <cstdint>

namespace maxent {

/// Splittable counter-based generator (SplitMix64 core).
///
/// Independent streams are derived by mixing a (seed, stream) pair, so work
/// can be split per sample or per worker and every stream is reproducible
/// across platforms: the generator only uses 64-bit integer arithmetic.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    /// Stream `stream` of the generator family keyed by `seed`.
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream) {
        SplitMix64 g(seed);
        // fold the stream id through one mixing round so streams decorrelate
        g.state_ = mix(g.state_ + 0x9e3779b97f4a7c15ULL * (stream + 1));
        return g;
    }

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        // modulo bias is < n / 2^64, irrelevant for the small n used here
        return next_u64() % n;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace maxent
