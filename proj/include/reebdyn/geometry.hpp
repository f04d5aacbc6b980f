#ifndef REEBDYN_GEOMETRY_HPP
#define REEBDYN_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

#include "reebdyn/body.hpp"
#include "reebdyn/parallel.hpp"
#include "reebdyn/random.hpp"

namespace reebdyn {

inline constexpr double kRadialLo = 1e-6;
inline constexpr double kRadialHi = 1e6;

/// rho(u): the unique t > 0 with G(t u) = 1.
///
/// Safeguarded Newton on log G(e^s u) = 0 in s = log t, falling back to
/// bisection whenever the Newton step leaves the bracket [1e-6, 1e6] or
/// G <= 0. Homogeneous bodies start from the exact value G(u)^(-1/k).
inline double radial_function(const Body& body, const Vec4& u) {
    double lo = std::log(kRadialLo), hi = std::log(kRadialHi);
    const double g_lo = body.value(kRadialLo * u);
    const double g_hi = body.value(kRadialHi * u);
    if (!(g_lo < 1.0) || !(g_hi > 1.0))
        throw StarshapedError("no crossing of the level G = 1 on the ray inside [1e-6, 1e6]");

    double s = 0.0;
    if (const auto k = body.homogeneity()) {
        const double gu = body.value(u);
        if (gu > 0.0 && std::isfinite(gu)) s = -std::log(gu) / *k;
        if (!(s > lo && s < hi)) s = 0.5 * (lo + hi);
    }
    if (!body.smooth()) {
        const double t = std::exp(s);
        if (std::abs(body.value(t * u) - 1.0) <= 1e-13) return t;
    }

    for (int iter = 0; iter < 400; ++iter) {
        const double t = std::exp(s);
        const Vec4 x = t * u;
        const double g = body.value(x);
        if (g == 1.0) return t;
        if (g < 1.0) lo = s;
        else hi = s;

        double next = 0.5 * (lo + hi);
        if (body.smooth() && g > 0.0 && std::isfinite(g)) {
            const double slope = body.gradient(x).dot(x) / g;  // d/ds log G(e^s u)
            if (slope > 0.0 && std::isfinite(slope)) {
                const double newton = s - std::log(g) / slope;
                if (newton > lo && newton < hi) next = newton;
            }
        }
        const double tol = 1e-14 * std::max(1.0, std::abs(s));
        if (std::abs(next - s) <= tol || hi - lo <= tol) return std::exp(next);
        s = next;
    }
    return std::exp(s);
}

/// Deterministic quasi-uniform directions on S^3: the boundary nodes of an
/// m^4 lattice on [-1,1]^4 under the equiangular map s -> tan(pi s / 4),
/// normalized. The set is symmetric under coordinate permutations and sign
/// changes and contains every direction (+-1, ..., +-1)/2. m is the smallest
/// value giving at least `resolution` directions.
inline std::vector<Vec4> sphere_grid(std::size_t resolution) {
    auto count = [](std::int64_t m) {
        const std::int64_t inner = std::max<std::int64_t>(m - 2, 0);
        return m * m * m * m - inner * inner * inner * inner;
    };
    std::int64_t m = 2;
    while (static_cast<std::size_t>(count(m)) < resolution) ++m;

    std::vector<double> coord(m);
    for (std::int64_t j = 0; j < m; ++j) {
        const double s = -1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(m - 1);
        coord[j] = (j == 0) ? -1.0 : (j == m - 1) ? 1.0 : std::tan(std::numbers::pi / 4.0 * s);
    }
    std::vector<Vec4> out;
    out.reserve(count(m));
    for (std::int64_t a = 0; a < m; ++a)
        for (std::int64_t b = 0; b < m; ++b)
            for (std::int64_t c = 0; c < m; ++c)
                for (std::int64_t d = 0; d < m; ++d) {
                    const bool boundary = a == 0 || a == m - 1 || b == 0 || b == m - 1 || c == 0 || c == m - 1 ||
                                          d == 0 || d == m - 1;
                    if (!boundary) continue;
                    out.push_back(Vec4(coord[a], coord[b], coord[c], coord[d]).normalized());
                }
    return out;
}

/// Grid maximum, polished by local search, together with the same quantity
/// on a coarser grid (1/8 of the directions) so callers can see how settled
/// the value is.
struct DistanceReport {
    double value = 0.0;
    double coarse_value = 0.0;
    double grid_value = 0.0;  // raw grid maximum before local refinement
    std::size_t directions = 0;
    std::size_t coarse_directions = 0;
    Vec4 argmax = Vec4::Zero();
};

/// Orthonormal basis of the orthogonal complement of n (n != 0), as columns.
inline Eigen::Matrix<double, 4, 3> complement_basis(const Vec4& n) {
    Eigen::HouseholderQR<Eigen::Matrix<double, 4, 1>> qr(n);
    const Mat4 q = qr.householderQ();
    return q.rightCols<3>();
}

namespace detail {

/// Compass search on S^3 in the tangent frame at the current point. Only
/// improvements are accepted, so the result never falls below fn(u).
template <class PointFn>
std::pair<double, Vec4> polish_max(PointFn& fn, Vec4 u, double step) {
    double best = fn(u);
    while (step > 1e-9) {
        bool improved = false;
        const auto basis = complement_basis(u);
        for (int k = 0; k < 3 && !improved; ++k)
            for (double sgn : {1.0, -1.0}) {
                const Vec4 cand = (u + sgn * step * basis.col(k)).normalized();
                const double v = fn(cand);
                if (v > best) {
                    best = v;
                    u = cand;
                    improved = true;
                    break;
                }
            }
        if (!improved) step *= 0.5;
    }
    return {best, u};
}

template <class PointFn>
DistanceReport grid_max(std::size_t resolution, PointFn&& fn, std::size_t polish_starts = 8) {
    auto run = [&](std::size_t res, Vec4* where, double* raw) {
        const auto grid = sphere_grid(res);
        std::vector<double> vals(grid.size());
        parallel_for(grid.size(), [&](std::size_t i) { vals[i] = fn(grid[i]); });
        std::vector<std::size_t> order(grid.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        const std::size_t k = std::min(polish_starts, order.size());
        std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](std::size_t a, std::size_t b) {
            return vals[a] > vals[b] || (vals[a] == vals[b] && a < b);
        });
        const double spacing = 2.0 * std::cbrt(2.0 * std::numbers::pi * std::numbers::pi / grid.size());
        double best = vals[order[0]];
        Vec4 arg = grid[order[0]];
        if (raw) *raw = best;
        for (std::size_t j = 0; j < k; ++j) {
            const auto [v, u] = polish_max(fn, grid[order[j]], spacing);
            if (v > best) {
                best = v;
                arg = u;
            }
        }
        if (where) *where = arg;
        return std::pair{best, grid.size()};
    };
    DistanceReport r;
    std::tie(r.value, r.directions) = run(resolution, &r.argmax, &r.grid_value);
    std::tie(r.coarse_value, r.coarse_directions) =
        run(std::max<std::size_t>(resolution / 8, 16), nullptr, nullptr);
    return r;
}

}  // namespace detail

/// sup over S^3 of |rho_a(u) - rho_b(u)|, evaluated on the sphere grid and
/// polished by local search from the best grid directions.
inline DistanceReport c0_distance(const Body& a, const Body& b, std::size_t resolution) {
    return detail::grid_max(resolution, [&](const Vec4& u) {
        return std::abs(radial_function(a, u) - radial_function(b, u));
    });
}

struct ConvexityReport {
    bool convex = true;
    std::size_t samples = 0;
    double min_eigenvalue = INFINITY;  // of the tangential Hessian, normalized by |grad G|
};

/// Sampled convexity of the level set: the Hessian of G restricted to the
/// tangent space must be positive semidefinite (up to round-off).
inline ConvexityReport check_convexity(const Body& body, std::size_t samples, std::uint64_t seed = 1) {
    ConvexityReport rep;
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec4 u = rng.on_sphere();
        const Vec4 x = radial_function(body, u) * u;
        const Vec4 g = body.gradient(x);
        const auto basis = complement_basis(g);
        const Eigen::Matrix3d ht = basis.transpose() * body.hessian(x) * basis;
        const double scale = std::max(1.0, body.hessian(x).norm());
        const double lam = Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d>(ht).eigenvalues().minCoeff();
        rep.min_eigenvalue = std::min(rep.min_eigenvalue, lam / g.norm());
        ++rep.samples;
        if (lam < -1e-9 * scale) {
            rep.convex = false;
            break;
        }
    }
    return rep;
}

struct C1DistanceReport {
    double value = 0.0;        // c0 + max_angle
    double c0 = 0.0;
    double max_angle = 0.0;    // radians between unit normals
    double coarse_c0 = 0.0;
    double coarse_max_angle = 0.0;
    std::size_t directions = 0;
    std::size_t convexity_samples = 0;
};

/// C1 distance between convex bodies: c0 distance plus the largest angle
/// between unit normals at radially corresponding points.
inline C1DistanceReport c1_distance_convex(const Body& a, const Body& b, std::size_t resolution,
                                           std::size_t convexity_samples = 2000) {
    for (const Body* body : {&a, &b}) {
        const auto cv = check_convexity(*body, convexity_samples);
        if (!cv.convex) throw PreconditionError("c1_distance_convex: body " + body->kind() + " failed convexity sampling");
    }
    auto normal = [](const Body& body, const Vec4& u) {
        const Vec4 x = radial_function(body, u) * u;
        return Vec4(body.gradient(x).normalized());
    };
    const auto c0 = c0_distance(a, b, resolution);
    const auto ang = detail::grid_max(resolution, [&](const Vec4& u) {
        const Vec4 na = normal(a, u), nb = normal(b, u);
        // Exact zero for equal normals and accurate for tiny angles, unlike acos.
        return 2.0 * std::atan2((na - nb).norm(), (na + nb).norm());
    });
    C1DistanceReport r;
    r.c0 = c0.value;
    r.max_angle = ang.value;
    r.value = r.c0 + r.max_angle;
    r.coarse_c0 = c0.coarse_value;
    r.coarse_max_angle = ang.coarse_value;
    r.directions = c0.directions;
    r.convexity_samples = 2 * convexity_samples;
    return r;
}

struct StarshapedReport {
    bool passed = true;
    std::size_t samples = 0;
    double min_transversality = INFINITY;  // min <grad G(x), x> over sampled level points
    double max_level_residual = 0.0;       // max |G(rho(u) u) - 1|
    std::string failure;
};

/// Samples directions, solves for the radial point and checks G = 1 and
/// <grad G, x> > 0 there.
inline StarshapedReport check_starshaped(const Body& body, std::size_t samples, std::uint64_t seed = 1) {
    StarshapedReport rep;
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec4 u = rng.on_sphere();
        try {
            const Vec4 x = radial_function(body, u) * u;
            rep.max_level_residual = std::max(rep.max_level_residual, std::abs(body.value(x) - 1.0));
            if (body.smooth()) rep.min_transversality = std::min(rep.min_transversality, body.gradient(x).dot(x));
        } catch (const Error& e) {
            rep.passed = false;
            rep.failure = e.what();
            break;
        }
        ++rep.samples;
    }
    if (rep.passed && body.smooth() && !(rep.min_transversality > 0.0)) {
        rep.passed = false;
        rep.failure = "transversality <grad G, x> > 0 violated";
    }
    return rep;
}

/// Members of a smoothing sequence together with their verified distances to the limit.
struct SmoothingFamily {
    std::vector<Body> members;
    std::vector<double> schedule;
    std::vector<double> c0_to_limit;
    Body limit;
};

/// Smoothed polytopes along an increasing sharpness schedule. Each member is
/// sample-checked for starshapedness and the C0 distance to the polytope gauge
/// must strictly decrease along the schedule.
inline SmoothingFamily smoothing_family(const std::vector<Halfspace>& polytope, SmoothingScheme scheme,
                                        const std::vector<double>& schedule, std::size_t resolution = 20000,
                                        std::size_t check_samples = 1000) {
    if (schedule.empty()) throw PreconditionError("smoothing schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i - 1])) throw PreconditionError("smoothing schedule must be strictly increasing");

    SmoothingFamily fam{{}, schedule, {}, Body::polytope_gauge(polytope)};
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        Body member = Body::smoothed_polytope(polytope, schedule[i], scheme);
        const auto chk = check_starshaped(member, check_samples);
        if (!chk.passed)
            throw ConstructionError("smoothing member with sharpness " + std::to_string(schedule[i]) +
                                        " failed the starshapedness check: " + chk.failure,
                                    i);
        fam.c0_to_limit.push_back(c0_distance(member, fam.limit, resolution).value);
        if (i > 0 && !(fam.c0_to_limit[i] < fam.c0_to_limit[i - 1]))
            throw ConstructionError("C0 distance to the polytope does not decrease at sharpness " +
                                        std::to_string(schedule[i]),
                                    i);
        fam.members.push_back(std::move(member));
    }
    return fam;
}

}  // namespace reebdyn

#endif
