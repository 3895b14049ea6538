#pragma once

#include <cstdint>

namespace adk {

// Counter-based generator: output i is the SplitMix64 finalizer applied to
// seed + (i+1)*GOLDEN_GAMMA. Stateless apart from the counter, so the stream
// is identical on every platform and random access by counter is O(1).
// The first 8 outputs for seed 42 are frozen in the test suite.
class CounterRng {
  public:
    static constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

    explicit CounterRng(std::uint64_t seed = 0) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t at(std::uint64_t counter) const {
        return mix(seed_ + (counter + 1) * kGoldenGamma);
    }

    std::uint64_t next_u64() { return at(counter_++); }

    // uniform in [0,1), 53 mantissa bits
    double next_uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [lo,hi)
    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_uniform(); }

    // uniform integer in [0,n), n >= 1; multiply-shift, bias < 2^-64
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // independent stream for sample `index` of the same base seed
    CounterRng derive(std::uint64_t index) const {
        return CounterRng(mix(seed_ ^ ((index + 1) * 0xD1B54A32D192ED03ULL)));
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t seed_{0};
    std::uint64_t counter_{0};
};

}  // namespace adk
