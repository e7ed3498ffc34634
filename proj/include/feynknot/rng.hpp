#ifndef FEYNKNOT_RNG_HPP
#define FEYNKNOT_RNG_HPP

#include <cstdint>
#include <random>

#include "feynknot/core.hpp"

namespace feynknot {

// All sampling goes through this wrapper. Distribution transforms are written
// out by hand so a (seed, stream) pair yields the same draws on every
// platform; std::mt19937_64 itself is specified bit-for-bit by the standard.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : eng_(mix(seed, stream)) {}

    std::uint64_t bits() { return eng_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    /// Uniform in [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    /// Uniform point on the unit sphere.
    Vec3 sphere() {
        double z = 1.0 - 2.0 * uniform();
        double phi = kTwoPi * uniform();
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        return {r * std::cos(phi), r * std::sin(phi), z};
    }

    /// Half-Cauchy radius with scale sigma: density 2 sigma / (pi (sigma^2 + r^2)).
    double half_cauchy(double sigma) {
        double u = uniform();
        return sigma * std::tan(0.5 * kPi * u);
    }

    /// Standard normal via Box-Muller (one value per call, deterministic draw order).
    double normal() {
        double u1 = uniform(), u2 = uniform();
        u1 = std::max(u1, 0x1.0p-60);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

private:
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
        // splitmix64 over the (seed, stream) pair
        std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 eng_;
};

}  // namespace feynknot

#endif
