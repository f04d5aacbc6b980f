#ifndef REEBDYN_GEODESIC_HPP
#define REEBDYN_GEODESIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "reebdyn/entropy.hpp"
#include "reebdyn/errors.hpp"
#include "reebdyn/random.hpp"
#include "reebdyn/types.hpp"

namespace reebdyn::geodesic {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// coefficient * cos(2 pi (k1 q1 + k2 q2) + phase)
struct FourierMode {
    double coefficient = 0.0;
    int k1 = 0;
    int k2 = 0;
    double phase = 0.0;

    bool operator==(const FourierMode&) const = default;
};

/// Finite Fourier series on the torus [0,1)^2 plus a constant.
class FourierFactor {
public:
    FourierFactor() = default;
    explicit FourierFactor(std::vector<FourierMode> modes, double constant = 0.0)
        : modes_(std::move(modes)), constant_(constant) {}

    const std::vector<FourierMode>& modes() const { return modes_; }
    double constant() const { return constant_; }

    double value(const Vec2& q) const {
        double s = constant_;
        for (const auto& m : modes_) s += m.coefficient * std::cos(arg(m, q));
        return s;
    }
    Vec2 gradient(const Vec2& q) const {
        Vec2 g = Vec2::Zero();
        for (const auto& m : modes_) g -= m.coefficient * kTwoPi * std::sin(arg(m, q)) * Vec2(m.k1, m.k2);
        return g;
    }
    Mat2 hessian(const Vec2& q) const {
        Mat2 h = Mat2::Zero();
        for (const auto& m : modes_) {
            const Vec2 k(m.k1, m.k2);
            h -= m.coefficient * kTwoPi * kTwoPi * std::cos(arg(m, q)) * (k * k.transpose());
        }
        return h;
    }

    bool operator==(const FourierFactor&) const = default;

private:
    static double arg(const FourierMode& m, const Vec2& q) { return kTwoPi * (m.k1 * q[0] + m.k2 * q[1]) + m.phase; }

    std::vector<FourierMode> modes_;
    double constant_ = 0.0;
};

/// amplitude * sum_{k<terms} a^k [cos(2 pi b^k q1) + cos(2 pi b^k q2)] + constant.
/// Nowhere differentiable as terms -> infinity when 0 < a < 1 and a b > 1;
/// only values are exposed.
struct WeierstrassFactor {
    double amplitude = 0.0;
    double a = 0.5;
    int b = 3;
    int terms = 6;
    double constant = 0.0;

    WeierstrassFactor() = default;
    WeierstrassFactor(double amplitude_, double a_, int b_, int terms_, double constant_ = 0.0)
        : amplitude(amplitude_), a(a_), b(b_), terms(terms_), constant(constant_) {
        if (!(a > 0.0 && a < 1.0)) throw PreconditionError("weierstrass: a must lie in (0, 1)");
        if (b < 2) throw PreconditionError("weierstrass: b must be an integer >= 2");
        if (!(a * b > 1.0)) throw PreconditionError("weierstrass: a b must exceed 1");
        if (terms < 1) throw PreconditionError("weierstrass: need at least one term");
    }

    /// The same function written as Fourier modes.
    std::vector<FourierMode> modes() const {
        std::vector<FourierMode> out;
        double w = amplitude;
        long long freq = 1;
        for (int k = 0; k < terms; ++k) {
            out.push_back({w, static_cast<int>(freq), 0, 0.0});
            out.push_back({w, 0, static_cast<int>(freq), 0.0});
            w *= a;
            freq *= b;
        }
        return out;
    }

    double value(const Vec2& q) const {
        double s = constant, w = amplitude, freq = 1.0;
        for (int k = 0; k < terms; ++k) {
            s += w * (std::cos(kTwoPi * freq * q[0]) + std::cos(kTwoPi * freq * q[1]));
            w *= a;
            freq *= b;
        }
        return s;
    }

    bool operator==(const WeierstrassFactor&) const = default;
};

/// Fourier multiplier of the normalized bump exp(-1/(1-t^2)) on (-1,1)
/// rescaled to (-sigma, sigma), at integer frequency nu:
///   m(nu) = int phi_sigma(t) cos(2 pi nu t) dt,
/// by the midpoint rule with `resolution` nodes on (-1,1).
inline double bump_multiplier(double sigma, double nu, std::size_t resolution) {
    double num = 0.0, den = 0.0;
    const double h = 2.0 / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i) {
        const double s = -1.0 + (static_cast<double>(i) + 0.5) * h;
        const double w = std::exp(-1.0 / (1.0 - s * s));
        den += w;
        num += w * std::cos(kTwoPi * nu * sigma * s);
    }
    return num / den;
}

class ConformalMetric;

/// Periodic convolution of a Fourier or Weierstrass factor with a C-infinity
/// bump of scale sigma in each coordinate. Every mode is an eigenfunction of
/// the convolution, so the result is again a finite Fourier series.
struct MollifiedFactor {
    std::shared_ptr<const ConformalMetric> base;
    double sigma = 0.0;
    std::size_t resolution = 0;
    FourierFactor smoothed;
};

/// Conformal metric e^{2f} (dq1^2 + dq2^2) on the torus.
class ConformalMetric {
public:
    using Factor = std::variant<FourierFactor, WeierstrassFactor, MollifiedFactor>;

    static ConformalMetric flat() { return ConformalMetric(FourierFactor{}); }
    static ConformalMetric constant(double c) { return ConformalMetric(FourierFactor({}, c)); }
    static ConformalMetric fourier(std::vector<FourierMode> modes, double constant = 0.0) {
        return ConformalMetric(FourierFactor(std::move(modes), constant));
    }
    static ConformalMetric weierstrass(double amplitude, double a, int b, int terms, double constant = 0.0) {
        return ConformalMetric(WeierstrassFactor(amplitude, a, b, terms, constant));
    }
    /// Mollification at scale sigma in (0, 1/2]; the multipliers are computed
    /// at `resolution` and resolution/2 nodes and must agree to 1e-12.
    static ConformalMetric mollified(const ConformalMetric& base, double sigma, std::size_t resolution = 4096);

    explicit ConformalMetric(Factor f) : factor_(std::move(f)) {}

    const Factor& factor() const { return factor_; }
    std::string kind() const {
        switch (factor_.index()) {
            case 0: return "fourier";
            case 1: return "weierstrass";
            default: return "mollified";
        }
    }
    /// False only for the Weierstrass factor, which exposes no derivatives.
    bool smooth() const { return !std::holds_alternative<WeierstrassFactor>(factor_); }

    /// Fourier modes and constant of the factor (exact for all kinds).
    std::vector<FourierMode> modes() const {
        if (const auto* w = std::get_if<WeierstrassFactor>(&factor_)) return w->modes();
        return fourier_part().modes();
    }
    double constant_term() const {
        if (const auto* w = std::get_if<WeierstrassFactor>(&factor_)) return w->constant;
        return fourier_part().constant();
    }

    double value(const Vec2& q) const {
        if (const auto* w = std::get_if<WeierstrassFactor>(&factor_)) return w->value(q);
        return fourier_part().value(q);
    }
    Vec2 gradient(const Vec2& q) const { return differentiable().gradient(q); }
    Mat2 hessian(const Vec2& q) const { return differentiable().hessian(q); }

    /// The same metric with f replaced by f + c.
    ConformalMetric shifted(double c) const {
        if (const auto* w = std::get_if<WeierstrassFactor>(&factor_)) {
            WeierstrassFactor s = *w;
            s.constant += c;
            return ConformalMetric(s);
        }
        if (const auto* m = std::get_if<MollifiedFactor>(&factor_)) {
            MollifiedFactor s = *m;
            s.base = std::make_shared<const ConformalMetric>(m->base->shifted(c));
            s.smoothed = FourierFactor(m->smoothed.modes(), m->smoothed.constant() + c);
            return ConformalMetric(s);
        }
        const auto& f = std::get<FourierFactor>(factor_);
        return ConformalMetric(FourierFactor(f.modes(), f.constant() + c));
    }

private:
    const FourierFactor& fourier_part() const {
        if (const auto* m = std::get_if<MollifiedFactor>(&factor_)) return m->smoothed;
        return std::get<FourierFactor>(factor_);
    }
    const FourierFactor& differentiable() const {
        if (!smooth()) throw UnsupportedError("the weierstrass factor has no derivatives");
        return fourier_part();
    }

    Factor factor_;
};

inline ConformalMetric ConformalMetric::mollified(const ConformalMetric& base, double sigma, std::size_t resolution) {
    if (!(sigma > 0.0 && sigma <= 0.5)) throw PreconditionError("mollification scale must lie in (0, 1/2]");
    if (resolution < 16) throw PreconditionError("mollification resolution must be >= 16");
    std::vector<FourierMode> out;
    for (const auto& m : base.modes()) {
        const double multiplier = [&] {
            double r = 1.0;
            for (int k : {m.k1, m.k2}) {
                if (k == 0) continue;
                const double fine = bump_multiplier(sigma, k, resolution);
                const double coarse = bump_multiplier(sigma, k, resolution / 2);
                if (std::abs(fine - coarse) > 1e-12)
                    throw ResolutionError("mollifier quadrature not converged; increase the resolution");
                r *= fine;
            }
            return r;
        }();
        out.push_back({m.coefficient * multiplier, m.k1, m.k2, m.phase});
    }
    return ConformalMetric(MollifiedFactor{std::make_shared<const ConformalMetric>(base), sigma, resolution,
                                           FourierFactor(std::move(out), base.constant_term())});
}

/// Geodesic flow as the Hamiltonian flow of H(q, p) = 1/2 e^{-2f(q)} |p|^2
/// on the unit level H = 1/2. State (q1, q2, p1, p2); q is kept unwrapped.
class GeodesicFlow {
public:
    explicit GeodesicFlow(ConformalMetric metric) : metric_(std::move(metric)) {
        if (!metric_.smooth()) throw UnsupportedError("geodesic flow needs a differentiable conformal factor");
    }

    const ConformalMetric& metric() const { return metric_; }

    Vec4 field(const Vec4& x) const {
        const Vec2 q = x.head<2>(), p = x.tail<2>();
        const double e = std::exp(-2.0 * metric_.value(q));
        Vec4 out;
        out.head<2>() = e * p;
        out.tail<2>() = e * p.squaredNorm() * metric_.gradient(q);
        return out;
    }
    Mat4 jacobian(const Vec4& x) const {
        const Vec2 q = x.head<2>(), p = x.tail<2>();
        const double e = std::exp(-2.0 * metric_.value(q));
        const Vec2 g = metric_.gradient(q);
        const Mat2 h = metric_.hessian(q);
        Mat4 j;
        j.topLeftCorner<2, 2>() = -2.0 * e * p * g.transpose();
        j.topRightCorner<2, 2>() = e * Mat2::Identity();
        j.bottomLeftCorner<2, 2>() = p.squaredNorm() * e * (h - 2.0 * g * g.transpose());
        j.bottomRightCorner<2, 2>() = 2.0 * e * g * p.transpose();
        return j;
    }
    double level(const Vec4& x) const {
        return 0.5 * std::exp(-2.0 * metric_.value(x.head<2>())) * x.tail<2>().squaredNorm();
    }
    Vec4 level_gradient(const Vec4& x) const {
        const Vec2 q = x.head<2>(), p = x.tail<2>();
        const double e = std::exp(-2.0 * metric_.value(q));
        Vec4 out;
        out.head<2>() = -e * p.squaredNorm() * metric_.gradient(q);
        out.tail<2>() = e * p;
        return out;
    }
    double target_level() const { return 0.5; }
    Vec4 project(const Vec4& x) const {
        const double h = level(x);
        if (!(h > 0.0)) throw DegeneratePointError("cannot rescale a zero momentum onto the unit level");
        Vec4 out = x;
        out.tail<2>() *= std::sqrt(0.5 / h);
        return out;
    }
    double clock_rate(const Vec4&) const { return 1.0; }

private:
    ConformalMetric metric_;
};

inline Vec4 geodesic_field(const ConformalMetric& metric, const Vec4& state) { return GeodesicFlow(metric).field(state); }

/// Initial data uniform in (q, angle of p) on the unit level.
class GeodesicSampler {
public:
    explicit GeodesicSampler(ConformalMetric metric) : metric_(std::move(metric)) {}

    Vec4 point(Rng& rng) const {
        const Vec2 q(rng.uniform(), rng.uniform());
        return on_level(q, rng.uniform(0.0, kTwoPi));
    }
    Vec4 tangent(const Vec4& x, Rng& rng) const {
        const Vec4 n = GeodesicFlow(metric_).level_gradient(x).normalized();
        for (;;) {
            Vec4 v = rng.in_ball();
            v -= v.dot(n) * n;
            if (v.norm() > 1e-3) return v.normalized();
        }
    }
    Vec4 near(const Vec4& x, double radius, Rng& rng) const {
        const Vec4 d = radius * rng.in_ball();
        const double angle = std::atan2(x[3], x[2]) + d[2];
        return on_level(Vec2(x[0] + d[0], x[1] + d[1]), angle);
    }
    /// Liouville density on the unit cotangent bundle relative to dq dangle.
    double weight(const Vec4& x) const { return std::exp(2.0 * metric_.value(x.head<2>())); }

private:
    Vec4 on_level(const Vec2& q, double angle) const {
        const double r = std::exp(metric_.value(q));
        return Vec4(q[0], q[1], r * std::cos(angle), r * std::sin(angle));
    }

    ConformalMetric metric_;
};

/// Lyapunov ensemble of the geodesic flow on the unit level.
inline EntropyEstimate geodesic_entropy(const ConformalMetric& metric, const EstimatorConfig& cfg) {
    EntropyEstimate est = lyapunov_ensemble(GeodesicFlow(metric), GeodesicSampler(metric), cfg);
    est.sampling = "uniform_position_angle";
    return est;
}

/// Conserved quantities of the flat torus flow.
inline std::vector<Integral> momentum_integrals() {
    return {
        {"p1", [](const Vec4& x) { return x[2]; }},
        {"p2", [](const Vec4& x) { return x[3]; }},
    };
}

inline std::vector<Integral> energy_integral(const ConformalMetric& metric) {
    return {{"H", [flow = GeodesicFlow(metric)](const Vec4& x) { return flow.level(x); }}};
}

struct AreaReport {
    double value = 0.0;          // at `resolution`
    double refined = 0.0;        // at 2 * resolution
    std::size_t resolution = 0;
    double refinement_gap() const { return std::abs(refined - value); }
};

/// int_{T^2} e^{2f} dq by the periodic trapezoid rule.
inline double trapezoid_area(const ConformalMetric& metric, std::size_t n) {
    if (n < 1) throw PreconditionError("area resolution must be positive");
    double s = 0.0;
    const double h = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            row += std::exp(2.0 * metric.value(Vec2(static_cast<double>(i) * h, static_cast<double>(j) * h)));
        s += row;
    }
    return s * h * h;
}

inline AreaReport metric_area(const ConformalMetric& metric, std::size_t resolution = 256) {
    return {trapezoid_area(metric, resolution), trapezoid_area(metric, 2 * resolution), resolution};
}

/// f -> f - log(area)/2, giving area one.
inline ConformalMetric normalize_area(const ConformalMetric& metric, std::size_t resolution = 256) {
    return metric.shifted(-0.5 * std::log(metric_area(metric, resolution).refined));
}

struct SandwichReport {
    bool passed = false;
    double margin = 0.0;         // delta - max |f' - f|
    double max_deviation = 0.0;  // max |f' - f| on the grid
    std::size_t resolution = 0;
};

/// e^{-2 delta} g < g' < e^{2 delta} g for conformal metrics is |f' - f| < delta;
/// checked on a resolution x resolution grid.
inline SandwichReport sandwich_check(const ConformalMetric& g, const ConformalMetric& g_prime, double delta,
                                     std::size_t resolution = 512) {
    if (!(delta > 0.0)) throw PreconditionError("sandwich width must be positive");
    if (resolution < 1) throw PreconditionError("sandwich resolution must be positive");
    SandwichReport rep;
    rep.resolution = resolution;
    const double h = 1.0 / static_cast<double>(resolution);
    for (std::size_t i = 0; i < resolution; ++i)
        for (std::size_t j = 0; j < resolution; ++j) {
            const Vec2 q(static_cast<double>(i) * h, static_cast<double>(j) * h);
            rep.max_deviation = std::max(rep.max_deviation, std::abs(g_prime.value(q) - g.value(q)));
        }
    rep.margin = delta - rep.max_deviation;
    rep.passed = rep.margin > 0.0;
    return rep;
}

struct MollifiedSequence {
    std::vector<ConformalMetric> metrics;
    std::vector<double> scales;
    std::vector<double> sup_distances;  // grid sup |f_j - f| to the base
    std::size_t grid = 0;
};

/// Mollifications of `base` at strictly decreasing scales. The grid
/// sup-distance to the base must strictly decrease along the list.
inline MollifiedSequence mollify_sequence(const ConformalMetric& base, const std::vector<double>& scales,
                                          std::size_t resolution = 4096, std::size_t grid = 512) {
    if (scales.empty()) throw PreconditionError("mollification schedule is empty");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw PreconditionError("mollification scales must be positive");
        if (i > 0 && !(scales[i] < scales[i - 1]))
            throw PreconditionError("mollification scales must be strictly decreasing");
    }
    MollifiedSequence seq;
    seq.scales = scales;
    seq.grid = grid;
    for (double s : scales) {
        seq.metrics.push_back(ConformalMetric::mollified(base, s, resolution));
        seq.sup_distances.push_back(sandwich_check(base, seq.metrics.back(), 1.0, grid).max_deviation);
        const auto n = seq.sup_distances.size();
        if (n > 1 && !(seq.sup_distances[n - 1] < seq.sup_distances[n - 2]))
            throw ResolutionError("grid sup-distance to the base does not decrease; refine the grid or the schedule");
    }
    return seq;
}

/// Largest scale in [lo, hi] (to within `tol`) whose mollification passes the
/// sandwich check against the base with width delta, by bisection.
inline double sandwich_scale_threshold(const ConformalMetric& base, double delta, double lo = 1e-4, double hi = 0.5,
                                       double tol = 1e-4, std::size_t resolution = 4096, std::size_t grid = 512) {
    auto passes = [&](double s) {
        return sandwich_check(base, ConformalMetric::mollified(base, s, resolution), delta, grid).passed;
    };
    if (!passes(lo)) throw PreconditionError("sandwich fails even at the smallest scale");
    if (passes(hi)) return hi;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (passes(mid) ? lo : hi) = mid;
    }
    return lo;
}

}  // namespace reebdyn::geodesic

#endif
