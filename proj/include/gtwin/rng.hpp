#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace gtwin {

// Deterministic random source. Every random draw in the simulator flows
// through this class so a (config, seed) pair fixes each output byte. The
// uniform/gaussian conversions are hand-rolled because std::*_distribution
// output is implementation-defined and would break cross-build determinism.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    std::uint64_t u64() { return eng_(); }

    // [0, 1) with 53-bit resolution
    double uniform() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; both underlying draws are consumed every
    // call (no cached second value), keeping the draw sequence easy to reason about
    double gaussian() {
        double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // uniform integer in [0, bound), bound >= 1
    std::uint32_t below(std::uint32_t bound) {
        return static_cast<std::uint32_t>(
            (static_cast<unsigned __int128>(u64()) * bound) >> 64);
    }

    // independent child stream; derivation depends only on the parent's seed,
    // not on how many draws the parent has made
    Rng fork(std::uint64_t stream) const {
        std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace gtwin
