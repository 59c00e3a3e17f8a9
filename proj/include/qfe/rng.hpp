#pragma once

#include <cstdint>
#include <random>

namespace qfe {

// Per-trial random stream. Each stream is keyed by (seed, stream id) through a
// splitmix64 hash, so trial k of a run always sees the same variates whether
// trials execute serially or across threads.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : engine_(derive(seed, stream)) {}

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform double in the open interval (0, 1); rejects exact zeros.
    double uniform_open01() {
        double u = uniform01();
        while (u == 0.0) u = uniform01();
        return u;
    }

    std::uint64_t raw() { return engine_(); }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
        return mix(seed ^ mix(stream + 1));
    }

    std::mt19937_64 engine_;
};

} // namespace qfe
