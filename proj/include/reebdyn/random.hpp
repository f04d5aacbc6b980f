#ifndef REEBDYN_RANDOM_HPP
#define REEBDYN_RANDOM_HPP

#include <cmath>
#include <cstdint>

#include "reebdyn/types.hpp"

namespace reebdyn {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the i-th member of an ensemble; independent of evaluation order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

/// Small deterministic generator. Unlike the <random> distributions its output
/// is identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform point of the open unit ball in R^4, by rejection in [-1,1]^4.
    Vec4 in_ball() {
        for (;;) {
            Vec4 x;
            for (int i = 0; i < 4; ++i) x[i] = uniform(-1, 1);  // argument order is unspecified
            if (x.squaredNorm() < 1.0) return x;
        }
    }

    /// Uniform direction on S^3: rejection sampling in the box, then radial projection.
    Vec4 on_sphere() {
        for (;;) {
            const Vec4 x = in_ball();
            if (x.squaredNorm() > 0.01) return x.normalized();
        }
    }

private:
    std::uint64_t state_;
};

}  // namespace reebdyn

#endif
