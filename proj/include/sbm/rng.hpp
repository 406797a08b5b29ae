#pragma once

#include <cstdint>

namespace sbm {

// Counter-based generator: every value is a stateless hash of
// (seed, stream, counter), so concurrent sweeps can partition streams
// without sharing any state.
class counter_rng {
  public:
    counter_rng(std::uint64_t seed, std::uint64_t stream = 0)
        : base_(mix(mix(seed + 0x9e3779b97f4a7c15ULL) ^ mix(stream + 0xbf58476d1ce4e5b9ULL))) {}

    // k-th uniform in [0,1) of this stream.
    double uniform(std::uint64_t k) const {
        const std::uint64_t u = mix(base_ + k * 0x94d049bb133111ebULL + 1);
        return (u >> 11) * 0x1.0p-53;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t base_;
};

} // namespace sbm
