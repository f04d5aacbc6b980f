#ifndef REEBDYN_CONTACT_HPP
#define REEBDYN_CONTACT_HPP

#include <cmath>
#include <cstdint>

#include "reebdyn/body.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/random.hpp"

namespace reebdyn {

// Standard structures on R^4 with coordinates (x1, y1, x2, y2):
//   omega0  = dx1 ^ dy1 + dx2 ^ dy2
//   lambda0 = 1/2 sum (x_i dy_i - y_i dx_i),   d lambda0 = omega0
//   Y       = 1/2 (x1 d_x1 + y1 d_y1 + x2 d_x2 + y2 d_y2),   i_Y omega0 = lambda0
namespace standard {

/// omega0(u, v) = u^T symplectic_matrix() v.
inline Mat4 symplectic_matrix() {
    Mat4 w = Mat4::Zero();
    w(0, 1) = 1.0;
    w(1, 0) = -1.0;
    w(2, 3) = 1.0;
    w(3, 2) = -1.0;
    return w;
}

/// lambda0_x(v) = x^T liouville_matrix() v. The form is linear in x, so
/// d lambda0 has constant coefficients L - L^T.
inline Mat4 liouville_matrix() { return 0.5 * symplectic_matrix(); }

inline double symplectic_form(const Vec4& u, const Vec4& v) { return u.dot(symplectic_matrix() * v); }

inline double liouville_form(const Vec4& x, const Vec4& v) {
    return 0.5 * (x[0] * v[1] - x[1] * v[0] + x[2] * v[3] - x[3] * v[2]);
}

inline Vec4 liouville_vector(const Vec4& x) { return 0.5 * x; }

/// Sign convention for Hamiltonian fields: X_G = J grad G with
/// X_G = (-dG/dy1, dG/dx1, -dG/dy2, dG/dx2), which gives
/// lambda0(X_G)(x) = +1/2 <grad G(x), x>.
inline Mat4 hamiltonian_matrix() {
    Mat4 j = Mat4::Zero();
    j(0, 1) = -1.0;
    j(1, 0) = 1.0;
    j(2, 3) = -1.0;
    j(3, 2) = 1.0;
    return j;
}

inline Vec4 apply_j(const Vec4& g) { return Vec4(-g[1], g[0], -g[3], g[2]); }

}  // namespace standard

inline Vec4 hamiltonian_field(const Body& body, const Vec4& x) { return standard::apply_j(body.gradient(x)); }

inline Mat4 hamiltonian_jacobian(const Body& body, const Vec4& x) {
    return standard::hamiltonian_matrix() * body.hessian(x);
}

inline constexpr double kTransversalityTol = 1e-12;

/// X_G(x) / (1/2 <grad G(x), x>) without the on-level check. This extension
/// is tangent to every level set of G, and on G = 1 it is the Reeb field of lambda0|_Sigma.
inline Vec4 reeb_field_extended(const Body& body, const Vec4& x) {
    const Vec4 g = body.gradient(x);
    const double s = g.dot(x);
    if (!(s > kTransversalityTol)) throw DegeneratePointError("<grad G, x> <= 0: Reeb field undefined");
    return (2.0 / s) * standard::apply_j(g);
}

/// Exact derivative of reeb_field_extended: with s = <grad G, x>,
/// DR = (2/s) J Hess - (2/s^2) (J grad G)(Hess x + grad G)^T.
inline Mat4 reeb_jacobian_extended(const Body& body, const Vec4& x) {
    const Vec4 g = body.gradient(x);
    const Mat4 h = body.hessian(x);
    const double s = g.dot(x);
    if (!(s > kTransversalityTol)) throw DegeneratePointError("<grad G, x> <= 0: Reeb field undefined");
    const Mat4 jh = standard::hamiltonian_matrix() * h;
    const Vec4 ds = h * x + g;
    return (2.0 / s) * jh - (2.0 / (s * s)) * standard::apply_j(g) * ds.transpose();
}

namespace detail {
inline void require_on_level(const Body& body, const Vec4& x) {
    if (std::abs(body.value(x) - 1.0) > 1e-8) throw PreconditionError("point is not on the level set G = 1");
}
}  // namespace detail

/// Reeb field of lambda0 restricted to Sigma = {G = 1}.
inline Vec4 reeb_field(const Body& body, const Vec4& x) {
    detail::require_on_level(body, x);
    return reeb_field_extended(body, x);
}

inline Mat4 reeb_jacobian(const Body& body, const Vec4& x) {
    detail::require_on_level(body, x);
    return reeb_jacobian_extended(body, x);
}

/// Time-f(m) flow of the Liouville field: m -> e^{f(m)/2} m.
inline Vec4 graph_pushforward(const TrigPolynomial& f, const Vec4& m) { return std::exp(0.5 * f.value(m)) * m; }

inline Vec4 graph_pushforward(const Body& base, const TrigPolynomial& f, const Vec4& m) {
    if (std::abs(base.value(m) - 1.0) > 1e-8) throw PreconditionError("graph_pushforward: m is not on the base level set");
    return graph_pushforward(f, m);
}

/// Differential of m -> e^{f(m)/2} m applied to v.
inline Vec4 graph_pushforward_differential(const TrigPolynomial& f, const Vec4& m, const Vec4& v) {
    return std::exp(0.5 * f.value(m)) * (v + 0.5 * f.gradient(m).dot(v) * m);
}

struct GraphFormReport {
    double max_residual = 0.0;     // exact differential
    double max_fd_residual = 0.0;  // central finite-difference differential
    std::size_t samples = 0;
};

/// Checks psi_f^*(lambda0|_S) = e^f lambda0|_Sigma on random base points and
/// random tangent vectors. Residuals are relative to e^f |m||v|/2, the natural
/// size of |e^f lambda0_m(v)|.
inline GraphFormReport verify_graph_form_relation(const Body& base, const TrigPolynomial& f, std::size_t samples,
                                                  double fd_step = 1e-6, std::uint64_t seed = 1) {
    GraphFormReport rep;
    Rng rng(seed);
    for (std::size_t i = 0; i < samples; ++i) {
        const Vec4 u = rng.on_sphere();
        const Vec4 m = radial_function(base, u) * u;
        const Vec4 n = base.gradient(m).normalized();
        Vec4 v = rng.in_ball();
        v -= v.dot(n) * n;
        if (v.norm() == 0.0) continue;
        v.normalize();

        const double ef = std::exp(f.value(m));
        const double expected = ef * standard::liouville_form(m, v);
        const double scale = 0.5 * ef * m.norm();

        const Vec4 image = graph_pushforward(base, f, m);
        const double pulled = standard::liouville_form(image, graph_pushforward_differential(f, m, v));
        const Vec4 fd = (graph_pushforward(f, m + fd_step * v) - graph_pushforward(f, m - fd_step * v)) / (2.0 * fd_step);
        const double pulled_fd = standard::liouville_form(image, fd);

        rep.max_residual = std::max(rep.max_residual, std::abs(pulled - expected) / scale);
        rep.max_fd_residual = std::max(rep.max_fd_residual, std::abs(pulled_fd - expected) / scale);
        ++rep.samples;
    }
    return rep;
}

}  // namespace reebdyn

#endif
