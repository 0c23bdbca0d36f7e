#pragma once

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>

namespace gelab {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent seeds from (seed, index)
/// pairs so that adding a job or replica never perturbs existing streams.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
    return derive_seed(derive_seed(seed, a), b);
}

inline Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(derive_seed(seed, index));
}

/// Standard normal draws from an engine. Kept as a thin wrapper so every
/// module draws normals the same way (matters for bitwise reproducibility).
/// Boost's ziggurat sampler is used: it is exact, about twice as fast as the
/// polar method of std::normal_distribution, and its output does not depend
/// on the standard library in use.
class NormalSource {
public:
    explicit NormalSource(Rng& rng) : rng_(rng) {}
    double operator()() { return dist_(rng_); }

private:
    Rng& rng_;
    boost::random::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace gelab
