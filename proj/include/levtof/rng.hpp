#pragma once

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>

#include <cstdint>

namespace levtof {

using Rng = boost::random::mt19937_64;

/// Independent stream families derived from one user seed.
enum class Stream : std::uint64_t {
    Campaign = 0x43414d50,   // trial initial conditions
    Bootstrap = 0x424f4f54,  // resampling
    Subsample = 0x53554253,  // convergence-study subsets
    Noise = 0x4e4f4953,      // detector noise in synthesized traces
};

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for element `index` of `stream`; depends on nothing else, so work can
/// be split across threads in any order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
    return mix64(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream))) + index);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index) {
    return Rng(derive_seed(seed, stream, index));
}

/// One standard-normal draw times sigma; sigma = 0 yields exactly 0.
inline double normal_draw(Rng& rng, double sigma) {
    boost::random::normal_distribution<double> unit(0.0, 1.0);
    return sigma * unit(rng);
}

}  // namespace levtof
