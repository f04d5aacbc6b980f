#include <gtest/gtest.h>

#include <cmath>

#include "reebdyn/contact.hpp"
#include "reebdyn/fixtures.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/random.hpp"
#include "test_support.hpp"

using namespace reebdyn;

namespace {

Vec4 level_point(const Body& b, Rng& rng) {
    const Vec4 u = rng.on_sphere();
    return radial_function(b, u) * u;
}

Vec4 tangent_at(const Body& b, const Vec4& x, Rng& rng) {
    const Vec4 n = b.gradient(x).normalized();
    Vec4 v = rng.in_ball();
    v -= v.dot(n) * n;
    return v.normalized();
}

}  // namespace

TEST(StandardStructure, LiouvilleIsPrimitiveOfSymplecticForm) {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const Vec4 x = rng.in_ball(), u = rng.in_ball(), v = rng.in_ball();
        // iota_Y omega = lambda for the Liouville field Y = x/2
        EXPECT_NEAR(standard::symplectic_form(standard::liouville_vector(x), v), standard::liouville_form(x, v), 1e-15);
        // d lambda(u, v) = u(lambda(v)) - v(lambda(u)) for the linear 1-form x -> lambda_x
        const double d_lambda = standard::liouville_form(u, v) - standard::liouville_form(v, u);
        EXPECT_NEAR(d_lambda, standard::symplectic_form(u, v), 1e-15);
        EXPECT_NEAR(standard::symplectic_form(u, v), -standard::symplectic_form(v, u), 1e-15);
    }
}

TEST(StandardStructure, HamiltonianFieldConvention) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        const Vec4 x = level_point(b, rng);
        const Vec4 X = hamiltonian_field(b, x);
        const Vec4 g = b.gradient(x);
        const Vec4 v = rng.in_ball();
        EXPECT_NEAR(standard::symplectic_form(X, v), -g.dot(v), 1e-12);
        EXPECT_NEAR(standard::liouville_form(x, X), 0.5 * g.dot(x), 1e-12);
    }
}

TEST(ReebField, ContractsOnShippedBodies) {
    for (const auto& [name, body] : fixtures::shipped_bodies()) {
        Rng rng(derive_seed(11, std::hash<std::string>{}(name)));
        double worst_alpha = 0.0, worst_dg = 0.0, worst_kernel = 0.0;
        for (int i = 0; i < 10000; ++i) {
            const Vec4 x = level_point(body, rng);
            const Vec4 R = reeb_field(body, x);
            const Vec4 g = body.gradient(x);
            worst_alpha = std::max(worst_alpha, std::abs(standard::liouville_form(x, R) - 1.0));
            worst_dg = std::max(worst_dg, std::abs(g.dot(R)) / g.norm());
            if (i % 10 == 0) {
                const Vec4 v = tangent_at(body, x, rng);
                worst_kernel = std::max(worst_kernel, std::abs(standard::symplectic_form(R, v)) / R.norm());
            }
        }
        EXPECT_LE(worst_alpha, 1e-10) << name;
        EXPECT_LE(worst_dg, 1e-10) << name;
        EXPECT_LE(worst_kernel, 1e-10) << name;
    }
}

TEST(ReebField, JacobianMatchesFiniteDifferences) {
    for (const auto& [name, body] : fixtures::shipped_bodies()) {
        Rng rng(5);
        double worst = 0.0;
        for (int i = 0; i < 200; ++i) {
            const Vec4 x = level_point(body, rng);
            const Mat4 J = reeb_jacobian(body, x);
            const Mat4 fd = reebdyn::testing::fd_hessian([&](const Vec4& y) { return reeb_field_extended(body, y); }, x, 1e-5);
            worst = std::max(worst, (J - fd).norm() / std::max(1.0, J.norm()));
        }
        EXPECT_LE(worst, 1e-6) << name;
    }
}

TEST(ReebField, RoundSphereIsHopfField) {
    const Body b = Body::pnorm_cube(2);
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const Vec4 x = level_point(b, rng);
        const Vec4 expected(-2 * x[1], 2 * x[0], -2 * x[3], 2 * x[2]);
        EXPECT_LE((reeb_field(b, x) - expected).norm(), 1e-13);
    }
}

TEST(ReebField, ReparametrizesHamiltonianField) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(7);
    for (int i = 0; i < 100; ++i) {
        const Vec4 x = level_point(b, rng);
        // <grad H_4, x> = 4 on the level set, so R = X_H / 2
        EXPECT_LE((reeb_field(b, x) - 0.5 * hamiltonian_field(b, x)).norm(), 1e-12);
    }
}

TEST(ReebField, RequiresPointOnLevel) {
    const Body b = Body::pnorm_cube(4);
    EXPECT_THROW(reeb_field(b, Vec4(2, 0, 0, 0)), PreconditionError);
    EXPECT_THROW(reeb_jacobian(b, Vec4(0.5, 0, 0, 0)), PreconditionError);
    EXPECT_NO_THROW(reeb_field_extended(b, Vec4(2, 0, 0, 0)));
}

TEST(GraphForm, RelationHoldsForFixtures) {
    const Body base = fixtures::ellipsoid_1122();
    const std::vector<std::pair<const char*, TrigPolynomial>> cases = {
        {"zero", TrigPolynomial::constant(0.0)},
        {"constant", TrigPolynomial::constant(0.3)},
        {"one_term", TrigPolynomial({TrigTerm{0.2, {1, 0, 2, 0}, 0.4}})},
        {"chaotic", fixtures::chaotic_perturbation()},
    };
    for (const auto& [name, f] : cases) {
        const auto rep = verify_graph_form_relation(base, f, 1000);
        EXPECT_EQ(rep.samples, 1000u) << name;
        EXPECT_LE(rep.max_residual, 1e-8) << name;
        EXPECT_LE(rep.max_fd_residual, 1e-8) << name;
    }
}

TEST(GraphForm, PushforwardLandsOnGraphBody) {
    const Body base = fixtures::ellipsoid_1122();
    const TrigPolynomial f({TrigTerm{0.2, {1, 0, 2, 0}, 0.4}});
    const Body graph = Body::radial_graph(base, f);
    Rng rng(8);
    for (int i = 0; i < 500; ++i) {
        const Vec4 m = level_point(base, rng);
        EXPECT_NEAR(graph.value(graph_pushforward(base, f, m)), 1.0, 1e-12);
    }
    EXPECT_THROW(graph_pushforward(base, f, Vec4(3, 0, 0, 0)), PreconditionError);
}

TEST(GraphForm, ConstantFactorScalesRadially) {
    const Vec4 m(0.6, 0.0, 0.8, 0.0);
    const Vec4 img = graph_pushforward(TrigPolynomial::constant(std::log(4.0)), m);
    EXPECT_LE((img - 2.0 * m).norm(), 1e-15);
}
