#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace mobprof {

/// Name recorded in configs and ground truth; the engine is std::mt19937_64, whose
/// output sequence is fixed by the C++ standard. Distributions are implemented here
/// on top of raw 64-bit draws so results do not depend on the standard library.
inline constexpr const char* kPrngName = "mt19937_64+splitmix64-substreams";

std::uint64_t splitmix64(std::uint64_t x);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Independent stream for (seed, stream tag, index), e.g. one per user.
    static Rng substream(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform();
    /// Uniform integer in [0, n); n > 0.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }
    /// Knuth multiplication method; intended for small means.
    int poisson(double mean);
    /// Box-Muller, one variate per call.
    double normal(double mean, double sd);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace mobprof
