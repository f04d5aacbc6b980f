#ifndef REEBDYN_FLOW_HPP
#define REEBDYN_FLOW_HPP

#include <cmath>
#include <concepts>
#include <functional>
#include <string>
#include <vector>

#include "reebdyn/body.hpp"
#include "reebdyn/contact.hpp"

namespace reebdyn {

enum class FieldKind { hamiltonian, reeb };

inline const char* to_string(FieldKind k) { return k == FieldKind::hamiltonian ? "hamiltonian" : "reeb"; }

/// A flow on R^4 that preserves the level set {level = target_level}, with
/// its Jacobian and a projection back onto that level.
template <class M>
concept FlowModel = requires(const M& m, const Vec4& x) {
    { m.field(x) } -> std::convertible_to<Vec4>;
    { m.jacobian(x) } -> std::convertible_to<Mat4>;
    { m.level(x) } -> std::convertible_to<double>;
    { m.level_gradient(x) } -> std::convertible_to<Vec4>;
    { m.target_level() } -> std::convertible_to<double>;
    { m.project(x) } -> std::convertible_to<Vec4>;
    { m.clock_rate(x) } -> std::convertible_to<double>;
};

/// Hamiltonian or Reeb flow of a body's defining function.
///
/// clock_rate is d(Reeb time)/d(own time): 1/2 <grad G, x> for the
/// Hamiltonian flow, 1 for the Reeb flow.
class BodyFlow {
public:
    BodyFlow(Body body, FieldKind kind) : body_(std::move(body)), kind_(kind) {}

    const Body& body() const { return body_; }
    FieldKind kind() const { return kind_; }

    Vec4 field(const Vec4& x) const {
        return kind_ == FieldKind::reeb ? reeb_field_extended(body_, x) : hamiltonian_field(body_, x);
    }
    Mat4 jacobian(const Vec4& x) const {
        return kind_ == FieldKind::reeb ? reeb_jacobian_extended(body_, x) : hamiltonian_jacobian(body_, x);
    }
    double level(const Vec4& x) const { return body_.value(x); }
    Vec4 level_gradient(const Vec4& x) const { return body_.gradient(x); }
    double target_level() const { return 1.0; }
    Vec4 project(const Vec4& x) const { return body_.project(x); }
    double clock_rate(const Vec4& x) const {
        return kind_ == FieldKind::reeb ? 1.0 : 0.5 * body_.gradient(x).dot(x);
    }

private:
    Body body_;
    FieldKind kind_;
};

/// A named conserved quantity monitored along trajectories.
struct Integral {
    std::string name;
    std::function<double(const Vec4&)> evaluate;
};

/// H_p and the commuting integrals F1 = x1^p + y1^p, F2 = x2^p + y2^p of the cube family.
inline std::vector<Integral> cube_integrals(int p) {
    auto f1 = [p](const Vec4& x) { return std::pow(x[0], p) + std::pow(x[1], p); };
    auto f2 = [p](const Vec4& x) { return std::pow(x[2], p) + std::pow(x[3], p); };
    return {
        {"H", [f1, f2](const Vec4& x) { return f1(x) + f2(x); }},
        {"F1", f1},
        {"F2", f2},
    };
}

/// Quadratic forms x_i^2 + y_i^2 of each symplectic plane; conserved by flows
/// of quadrics diagonal in those planes.
inline std::vector<Integral> plane_integrals() {
    return {
        {"P1", [](const Vec4& x) { return x[0] * x[0] + x[1] * x[1]; }},
        {"P2", [](const Vec4& x) { return x[2] * x[2] + x[3] * x[3]; }},
    };
}

}  // namespace reebdyn

#endif
