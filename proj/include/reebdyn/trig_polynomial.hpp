#ifndef REEBDYN_TRIG_POLYNOMIAL_HPP
#define REEBDYN_TRIG_POLYNOMIAL_HPP

#include <array>
#include <cmath>
#include <vector>

#include "reebdyn/errors.hpp"
#include "reebdyn/types.hpp"

namespace reebdyn {

/// One term coefficient * cos(<frequency, u> + phase) of a trigonometric polynomial.
struct TrigTerm {
    double coefficient = 0.0;
    std::array<int, 4> frequency{0, 0, 0, 0};
    double phase = 0.0;

    bool operator==(const TrigTerm&) const = default;
};

/// A finite trigonometric polynomial f evaluated on the direction u = x/|x|.
///
/// Seen as a function of x in R^4 \ {0} it is 0-homogeneous; value(), gradient()
/// and hessian() take the point x and return the derivatives of x -> f(x/|x|).
class TrigPolynomial {
public:
    TrigPolynomial() = default;
    explicit TrigPolynomial(std::vector<TrigTerm> terms) : terms_(std::move(terms)) {}

    static TrigPolynomial constant(double c) { return TrigPolynomial({TrigTerm{c, {0, 0, 0, 0}, 0.0}}); }

    const std::vector<TrigTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    /// f evaluated at a unit direction.
    double on_sphere(const Vec4& u) const {
        double s = 0.0;
        for (const auto& t : terms_) s += t.coefficient * std::cos(argument(t, u) + t.phase);
        return s;
    }

    double value(const Vec4& x) const {
        const double r = x.norm();
        if (r == 0.0) throw DomainError("trig polynomial evaluated at the origin");
        return on_sphere(x / r);
    }

    Vec4 gradient(const Vec4& x) const {
        const double r = x.norm();
        if (r == 0.0) throw DomainError("trig polynomial differentiated at the origin");
        const Vec4 u = x / r;
        const Vec4 g = sphere_gradient(u);
        return (g - u.dot(g) * u) / r;
    }

    Mat4 hessian(const Vec4& x) const {
        const double r = x.norm();
        if (r == 0.0) throw DomainError("trig polynomial differentiated at the origin");
        const Vec4 u = x / r;
        Vec4 g = Vec4::Zero();
        Mat4 h = Mat4::Zero();
        for (const auto& t : terms_) {
            const Vec4 k = freq(t);
            const double a = argument(t, u) + t.phase;
            g -= t.coefficient * std::sin(a) * k;
            h -= t.coefficient * std::cos(a) * k * k.transpose();
        }
        // u(x) = x/r: Du = (I - u u^T)/r and
        // d2u_a/dx_b dx_c = (-d_ab u_c - d_ac u_b - d_bc u_a + 3 u_a u_b u_c) / r^2.
        const Mat4 du = (Mat4::Identity() - u * u.transpose()) / r;
        const double gu = g.dot(u);
        Mat4 second = -g * u.transpose() - u * g.transpose() - gu * Mat4::Identity() +
                      3.0 * gu * u * u.transpose();
        second /= r * r;
        return du.transpose() * h * du + second;
    }

    /// Copy with every coefficient damped by exp(-|k|^2 / s^2). Tends to *this as s grows.
    TrigPolynomial smoothed(double s) const {
        if (!(s > 0.0)) throw PreconditionError("smoothing scale must be positive");
        std::vector<TrigTerm> out = terms_;
        for (auto& t : out) t.coefficient *= std::exp(-freq(t).squaredNorm() / (s * s));
        return TrigPolynomial(std::move(out));
    }

    /// Sum of |coefficient|, a bound for sup |f|.
    double abs_sum() const {
        double s = 0.0;
        for (const auto& t : terms_) s += std::abs(t.coefficient);
        return s;
    }

    bool operator==(const TrigPolynomial&) const = default;

private:
    static Vec4 freq(const TrigTerm& t) {
        return Vec4(t.frequency[0], t.frequency[1], t.frequency[2], t.frequency[3]);
    }
    static double argument(const TrigTerm& t, const Vec4& u) { return freq(t).dot(u); }

    Vec4 sphere_gradient(const Vec4& u) const {
        Vec4 g = Vec4::Zero();
        for (const auto& t : terms_) g -= t.coefficient * std::sin(argument(t, u) + t.phase) * freq(t);
        return g;
    }

    std::vector<TrigTerm> terms_;
};

}  // namespace reebdyn

#endif
