#pragma once

// Seeding and sampling utilities. Substreams are derived from a root seed
// and integer stream ids through SplitMix64 mixing, so replicate r of a
// Monte Carlo run draws the same numbers no matter how work is scheduled.

#include <cmath>
#include <cstdint>
#include <random>

namespace eivcp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed from a root seed and one or more stream ids.
inline std::uint64_t substream_seed(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Ids>
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t id, Ids... rest) {
    return substream_seed(splitmix64(seed ^ splitmix64(id + 0x632be59bd9b4e019ULL)), rest...);
}

/// Mersenne Twister engine with hand-rolled Box-Muller normals.
/// std::normal_distribution is implementation-defined, which would make
/// seeded runs non-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on (0, 1]: never returns 0, safe to pass through log().
    double uniform01() {
        const std::uint64_t bits = engine_() >> 11; // top 53 bits
        return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Student t with 3 degrees of freedom (variance 3).
    double student_t3() {
        const double z = normal();
        const double g1 = normal(), g2 = normal(), g3 = normal();
        const double chi2 = g1 * g1 + g2 * g2 + g3 * g3;
        return z / std::sqrt(chi2 / 3.0);
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

} // namespace eivcp
