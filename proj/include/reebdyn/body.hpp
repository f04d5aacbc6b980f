#ifndef REEBDYN_BODY_HPP
#define REEBDYN_BODY_HPP

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "reebdyn/errors.hpp"
#include "reebdyn/trig_polynomial.hpp"
#include "reebdyn/types.hpp"

namespace reebdyn {

/// Facet constraint <normal, x> <= offset of a polytope containing the origin.
struct Halfspace {
    Vec4 normal;
    double offset;

    Halfspace(const Vec4& n, double b) : normal(n), offset(b) {
        if (std::abs(n.norm() - 1.0) > 1e-12) throw PreconditionError("halfspace normal must be a unit vector");
        if (!(b > 0.0)) throw PreconditionError("halfspace offset must be positive (origin strictly interior)");
    }

    /// Scaled facet functional t(x) = <normal, x> / offset.
    double level(const Vec4& x) const { return normal.dot(x) / offset; }
    Vec4 scaled_normal() const { return normal / offset; }

    bool operator==(const Halfspace& o) const { return normal == o.normal && offset == o.offset; }
};

/// The eight facets of [-r, r]^4.
inline std::vector<Halfspace> cube_facets(double r = 1.0) {
    std::vector<Halfspace> out;
    for (int i = 0; i < 4; ++i)
        for (double s : {1.0, -1.0}) out.emplace_back(s * Vec4::Unit(i), r);
    return out;
}

enum class SmoothingScheme { pnorm, log_sum_exp };

inline const char* to_string(SmoothingScheme s) { return s == SmoothingScheme::pnorm ? "pnorm" : "log_sum_exp"; }

class Body;

/// H_p(x) = |x1|^p + |y1|^p + |x2|^p + |y2|^p, p even.
struct PNormCube {
    int p;
};

/// Smooth approximation of the polytope gauge max_i t_i(x).
///
/// pnorm:       G = (sum_i t_i(x)_+^p)^(1/p), 1-homogeneous.
/// log_sum_exp: G = log(sum_i exp(beta t_i(x))) / beta - log(m) / beta, so that
///              max_i t_i - log(m)/beta <= G <= max_i t_i and G(0) = 0.
struct SmoothedPolytope {
    std::vector<Halfspace> halfspaces;
    double sharpness;
    SmoothingScheme scheme;
};

/// Graph of a function over the base level set in the Liouville direction:
/// the level set is { e^{f(m)/2} m : G_base(m) = 1 } and G(x) = G_base(e^{-f(x/|x|)/2} x).
struct RadialGraph {
    std::shared_ptr<const Body> base;
    TrigPolynomial perturbation;
};

/// G(x) = x^T A x with A symmetric positive definite.
struct Quadric {
    Mat4 coefficients;
};

/// Non-smooth polytope gauge max_i t_i(x); the C0 limit of the smoothing families.
/// Supports values and radial functions only.
struct PolytopeGauge {
    std::vector<Halfspace> halfspaces;
};

/// A starshaped body in R^4 described by a defining function G with the body's
/// boundary at G = 1.
class Body {
public:
    using Variant = std::variant<PNormCube, SmoothedPolytope, RadialGraph, Quadric, PolytopeGauge>;

    static Body pnorm_cube(int p) {
        if (p < 2 || p % 2 != 0) throw PreconditionError("cube exponent p must be an even integer >= 2");
        return Body(PNormCube{p});
    }

    static Body smoothed_polytope(std::vector<Halfspace> hs, double sharpness, SmoothingScheme scheme) {
        check_polytope(hs);
        if (scheme == SmoothingScheme::pnorm) {
            const bool even = sharpness == std::floor(sharpness) && std::fmod(sharpness, 2.0) == 0.0;
            if (!even || sharpness < 2.0)
                throw PreconditionError("pnorm sharpness must be an even integer >= 2");
            // (t_+)^2 is only C1; it is admissible when facets come in antipodal
            // pairs with equal offsets since then (t_+)^2 + ((-t)_+)^2 = t^2.
            if (sharpness < 4.0 && !antipodally_paired(hs))
                throw PreconditionError("pnorm sharpness 2 is not C3 unless facets are antipodally paired; use >= 4");
        } else if (!(sharpness > 0.0)) {
            throw PreconditionError("log-sum-exp sharpness must be positive");
        }
        return Body(SmoothedPolytope{std::move(hs), sharpness, scheme});
    }

    static Body radial_graph(Body base, TrigPolynomial f) {
        return Body(RadialGraph{std::make_shared<const Body>(std::move(base)), std::move(f)});
    }

    static Body quadric(const Mat4& a) {
        if (!a.isApprox(a.transpose(), 0.0)) throw PreconditionError("quadric matrix must be symmetric");
        Eigen::SelfAdjointEigenSolver<Mat4> es(a);
        if (es.eigenvalues().minCoeff() <= 0.0) throw PreconditionError("quadric matrix must be positive definite");
        return Body(Quadric{a});
    }

    static Body quadric_diagonal(double a, double b, double c, double d) {
        return quadric(Vec4(a, b, c, d).asDiagonal().toDenseMatrix());
    }

    static Body polytope_gauge(std::vector<Halfspace> hs) {
        check_polytope(hs);
        return Body(PolytopeGauge{std::move(hs)});
    }

    static Body cube_limit() { return polytope_gauge(cube_facets()); }

    const Variant& variant() const { return v_; }

    std::string kind() const {
        return std::visit(
            [](const auto& b) -> std::string {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, PNormCube>) return "pnorm_cube";
                else if constexpr (std::is_same_v<T, SmoothedPolytope>) return "smoothed_polytope";
                else if constexpr (std::is_same_v<T, RadialGraph>) return "radial_graph";
                else if constexpr (std::is_same_v<T, Quadric>) return "quadric";
                else return "polytope_gauge";
            },
            v_);
    }

    /// Degree k with G(s x) = s^k G(x) for s > 0, if G is homogeneous.
    std::optional<int> homogeneity() const {
        return std::visit(
            [](const auto& b) -> std::optional<int> {
                using T = std::decay_t<decltype(b)>;
                if constexpr (std::is_same_v<T, PNormCube>) return b.p;
                else if constexpr (std::is_same_v<T, SmoothedPolytope>) {
                    if (b.scheme == SmoothingScheme::pnorm) return 1;
                    return std::nullopt;
                } else if constexpr (std::is_same_v<T, RadialGraph>) return b.base->homogeneity();
                else if constexpr (std::is_same_v<T, Quadric>) return 2;
                else return 1;
            },
            v_);
    }

    bool smooth() const { return !std::holds_alternative<PolytopeGauge>(v_); }

    double value(const Vec4& x) const {
        return std::visit([&](const auto& b) { return value_of(b, x); }, v_);
    }

    Vec4 gradient(const Vec4& x) const {
        return std::visit([&](const auto& b) { return gradient_of(b, x); }, v_);
    }

    Mat4 hessian(const Vec4& x) const {
        return std::visit([&](const auto& b) { return hessian_of(b, x); }, v_);
    }

    /// Push x onto the level set G = 1: exact rescaling for homogeneous G,
    /// one Newton step along the ray otherwise.
    Vec4 project(const Vec4& x) const {
        const double g = value(x);
        if (const auto k = homogeneity()) {
            if (!(g > 0.0)) throw DomainError("cannot project a point with G <= 0");
            return x * std::pow(g, -1.0 / *k);
        }
        const double s = gradient(x).dot(x);
        if (!(s > 0.0)) throw DegeneratePointError("projection along a ray with <grad G, x> <= 0");
        return x * (1.0 - (g - 1.0) / s);
    }

private:
    explicit Body(Variant v) : v_(std::move(v)) {}

    static void check_polytope(const std::vector<Halfspace>& hs) {
        if (hs.size() < 5) throw PreconditionError("a bounded polytope in R^4 needs at least 5 facets");
        for (const auto& h : hs)
            if (!(h.offset > 0.0)) throw PreconditionError("halfspace offset must be positive");
    }

    static bool antipodally_paired(const std::vector<Halfspace>& hs) {
        for (const auto& h : hs) {
            const bool found = std::any_of(hs.begin(), hs.end(), [&](const Halfspace& o) {
                return (o.normal + h.normal).norm() < 1e-14 && o.offset == h.offset;
            });
            if (!found) return false;
        }
        return true;
    }

    // --- p-norm cube ---
    static double value_of(const PNormCube& b, const Vec4& x) {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) s += std::pow(x[i], b.p);
        return s;
    }
    static Vec4 gradient_of(const PNormCube& b, const Vec4& x) {
        Vec4 g;
        for (int i = 0; i < 4; ++i) g[i] = b.p * std::pow(x[i], b.p - 1);
        return g;
    }
    static Mat4 hessian_of(const PNormCube& b, const Vec4& x) {
        Mat4 h = Mat4::Zero();
        for (int i = 0; i < 4; ++i) h(i, i) = b.p * (b.p - 1) * std::pow(x[i], b.p - 2);
        return h;
    }

    // --- smoothed polytope ---
    struct PNormParts {
        double tmax;
        double scaled_sum;  // sum (t_i / tmax)_+^p
    };
    static PNormParts pnorm_parts(const SmoothedPolytope& b, const Vec4& x) {
        const double tmax = max_level(b.halfspaces, x);
        if (!(tmax > 0.0)) throw DomainError("smoothed polytope evaluated at the origin");
        double s = 0.0;
        for (const auto& h : b.halfspaces) {
            const double r = h.level(x) / tmax;
            if (r > 0.0) s += std::pow(r, b.sharpness);
        }
        return {tmax, s};
    }
    static double max_level(const std::vector<Halfspace>& hs, const Vec4& x) {
        double m = -INFINITY;
        for (const auto& h : hs) m = std::max(m, h.level(x));
        return m;
    }
    static double value_of(const SmoothedPolytope& b, const Vec4& x) {
        if (b.scheme == SmoothingScheme::pnorm) {
            const auto [tmax, s] = pnorm_parts(b, x);
            return tmax * std::pow(s, 1.0 / b.sharpness);
        }
        const double tmax = max_level(b.halfspaces, x);
        double s = 0.0;
        for (const auto& h : b.halfspaces) s += std::exp(b.sharpness * (h.level(x) - tmax));
        const double m = static_cast<double>(b.halfspaces.size());
        return tmax + (std::log(s) - std::log(m)) / b.sharpness;
    }
    static Vec4 gradient_of(const SmoothedPolytope& b, const Vec4& x) {
        Vec4 g = Vec4::Zero();
        if (b.scheme == SmoothingScheme::pnorm) {
            const auto [tmax, s] = pnorm_parts(b, x);
            const double p = b.sharpness;
            for (const auto& h : b.halfspaces) {
                const double r = h.level(x) / tmax;
                if (r > 0.0) g += std::pow(r, p - 1.0) * h.scaled_normal();
            }
            return g * std::pow(s, 1.0 / p - 1.0);
        }
        const double tmax = max_level(b.halfspaces, x);
        double s = 0.0;
        for (const auto& h : b.halfspaces) {
            const double w = std::exp(b.sharpness * (h.level(x) - tmax));
            s += w;
            g += w * h.scaled_normal();
        }
        return g / s;
    }
    static Mat4 hessian_of(const SmoothedPolytope& b, const Vec4& x) {
        Mat4 h = Mat4::Zero();
        const Vec4 g = gradient_of(b, x);
        if (b.scheme == SmoothingScheme::pnorm) {
            // Hess G = (p-1) [ G^{1-p} sum t_+^{p-2} c c^T - grad G grad G^T / G ]
            const auto [tmax, s] = pnorm_parts(b, x);
            const double p = b.sharpness;
            for (const auto& f : b.halfspaces) {
                const double r = f.level(x) / tmax;
                if (r > 0.0) {
                    const Vec4 c = f.scaled_normal();
                    h += std::pow(r, p - 2.0) * c * c.transpose();
                }
            }
            h *= std::pow(s, (1.0 - p) / p) / tmax;
            const double gval = tmax * std::pow(s, 1.0 / p);
            return (p - 1.0) * (h - g * g.transpose() / gval);
        }
        const double tmax = max_level(b.halfspaces, x);
        double s = 0.0;
        for (const auto& f : b.halfspaces) {
            const double w = std::exp(b.sharpness * (f.level(x) - tmax));
            const Vec4 c = f.scaled_normal();
            s += w;
            h += w * c * c.transpose();
        }
        return b.sharpness * (h / s - g * g.transpose());
    }

    // --- radial graph ---
    static double value_of(const RadialGraph& b, const Vec4& x) {
        const double f = b.perturbation.value(x);
        return b.base->value(std::exp(-0.5 * f) * x);
    }
    static Vec4 gradient_of(const RadialGraph& b, const Vec4& x) {
        const double s = std::exp(-0.5 * b.perturbation.value(x));
        const Vec4 dh = b.perturbation.gradient(x);
        const Vec4 gb = b.base->gradient(s * x);
        return s * (gb - 0.5 * dh * x.dot(gb));
    }
    static Mat4 hessian_of(const RadialGraph& b, const Vec4& x) {
        // y = s(x) x with s = exp(-h/2); Hess G = Dy^T Hb Dy + g s_grad^T + s_grad g^T + (g.x) Hess s.
        const double s = std::exp(-0.5 * b.perturbation.value(x));
        const Vec4 dh = b.perturbation.gradient(x);
        const Mat4 hh = b.perturbation.hessian(x);
        const Vec4 y = s * x;
        const Vec4 g = b.base->gradient(y);
        const Mat4 hb = b.base->hessian(y);
        const Vec4 ds = -0.5 * s * dh;
        const Mat4 hs = -0.5 * s * (hh - 0.5 * dh * dh.transpose());
        const Mat4 dy = s * Mat4::Identity() + x * ds.transpose();
        return dy.transpose() * hb * dy + g * ds.transpose() + ds * g.transpose() + g.dot(x) * hs;
    }

    // --- quadric ---
    static double value_of(const Quadric& b, const Vec4& x) { return x.dot(b.coefficients * x); }
    static Vec4 gradient_of(const Quadric& b, const Vec4& x) { return 2.0 * b.coefficients * x; }
    static Mat4 hessian_of(const Quadric& b, const Vec4&) { return 2.0 * b.coefficients; }

    // --- polytope gauge ---
    static double value_of(const PolytopeGauge& b, const Vec4& x) { return max_level(b.halfspaces, x); }
    static Vec4 gradient_of(const PolytopeGauge&, const Vec4&) {
        throw DomainError("polytope gauge is not differentiable");
    }
    static Mat4 hessian_of(const PolytopeGauge&, const Vec4&) {
        throw DomainError("polytope gauge is not differentiable");
    }

    Variant v_;
};

inline double defining_value(const Body& b, const Vec4& x) { return b.value(x); }
inline Vec4 defining_gradient(const Body& b, const Vec4& x) { return b.gradient(x); }
inline Mat4 defining_hessian(const Body& b, const Vec4& x) { return b.hessian(x); }

}  // namespace reebdyn

#endif
