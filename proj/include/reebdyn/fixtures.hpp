#ifndef REEBDYN_FIXTURES_HPP
#define REEBDYN_FIXTURES_HPP

#include <string>
#include <utility>
#include <vector>

#include "reebdyn/body.hpp"
#include "reebdyn/geodesic.hpp"

namespace reebdyn::fixtures {

inline constexpr double kBumpyAmplitude = 0.3;
inline constexpr double kSandwichWidth = 0.02;
inline constexpr double kSandwichScale = 0.0702;

/// {x_i <= 1, i = 1..4} and {-(x1 + y1 + x2 + y2) <= 1}.
inline std::vector<Halfspace> simplex_facets() {
    std::vector<Halfspace> hs;
    for (int i = 0; i < 4; ++i) hs.emplace_back(Vec4::Unit(i), 1.0);
    hs.emplace_back(-0.5 * Vec4::Ones(), 0.5);
    return hs;
}

inline Body simplex_pnorm(double sharpness) {
    return Body::smoothed_polytope(simplex_facets(), sharpness, SmoothingScheme::pnorm);
}

inline Body ellipsoid_1122() { return Body::quadric_diagonal(1, 1, 2, 2); }

/// Perturbation of the chaotic demo body.
inline TrigPolynomial chaotic_perturbation() {
    return TrigPolynomial({
        TrigTerm{0.15, {-2, -2, 0, 0}, 1.1},
        TrigTerm{0.15, {1, -1, -2, 2}, 2.9},
    });
}

/// Convex radial graph over the ellipsoid E(1,1,2,2) whose Reeb flow shows a
/// positive Lyapunov exponent.
inline Body chaotic_demo() { return Body::radial_graph(ellipsoid_1122(), chaotic_perturbation()); }

/// Damping schedule of the chaotic demo's smoothing sequence (mode k scaled by exp(-|k|^2/s^2)).
inline std::vector<double> chaotic_schedule() { return {2, 4, 8, 16}; }

/// Every body the project ships as an example specification.
inline std::vector<std::pair<std::string, Body>> shipped_bodies() {
    return {
        {"cube_p2", Body::pnorm_cube(2)},
        {"cube_p4", Body::pnorm_cube(4)},
        {"cube_p8", Body::pnorm_cube(8)},
        {"cube_p16", Body::pnorm_cube(16)},
        {"cube_facets_p8", Body::smoothed_polytope(cube_facets(), 8, SmoothingScheme::pnorm)},
        {"simplex_p8", simplex_pnorm(8)},
        {"simplex_lse20", Body::smoothed_polytope(simplex_facets(), 20, SmoothingScheme::log_sum_exp)},
        {"ellipsoid_1122", ellipsoid_1122()},
        {"chaotic_demo", chaotic_demo()},
    };
}

/// f = A (cos 2 pi q1 cos 2 pi q2 + 0.7 cos 4 pi q2), written as Fourier modes.
inline geodesic::ConformalMetric bumpy_torus(double amplitude = kBumpyAmplitude) {
    return geodesic::ConformalMetric::fourier({
        {0.5 * amplitude, 1, 1, 0.0},
        {0.5 * amplitude, 1, -1, 0.0},
        {0.7 * amplitude, 0, 2, 0.0},
    });
}

/// Truncated Weierstrass factor with sup |f| < 0.08.
inline geodesic::ConformalMetric weierstrass_torus() { return geodesic::ConformalMetric::weierstrass(0.02, 0.5, 3, 6); }

inline std::vector<double> weierstrass_scales() { return {0.2, 0.1, 0.05, 0.02, 0.01}; }

}  // namespace reebdyn::fixtures

#endif
