#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "reebdyn/fixtures.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/integrate.hpp"
#include "reebdyn/random.hpp"

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

FlowConfig horizon(double T) {
    FlowConfig c;
    c.horizon = T;
    return c;
}

// x' = (x1^2, 0, 0, 0) blows up at t = 1/x1(0); the level x1 is not conserved,
// so the level is taken to be the constant y1.
struct BlowUpModel {
    Vec4 field(const Vec4& x) const { return Vec4(x[0] * x[0], 0, 0, 0); }
    Mat4 jacobian(const Vec4& x) const {
        Mat4 m = Mat4::Zero();
        m(0, 0) = 2 * x[0];
        return m;
    }
    double level(const Vec4& x) const { return x[1]; }
    Vec4 level_gradient(const Vec4&) const { return Vec4(0, 1, 0, 0); }
    double target_level() const { return 1.0; }
    Vec4 project(const Vec4& x) const { return Vec4(x[0], 1.0, x[2], x[3]); }
    double clock_rate(const Vec4&) const { return 1.0; }
};

}  // namespace

TEST(Integrate, HopfOrbitsClose) {
    const Body b = Body::pnorm_cube(2);
    Rng rng(21);
    for (int i = 0; i < 10; ++i) {
        const Vec4 x0 = level_point(b, rng);
        const FlowRun run = integrate_flow(b, FieldKind::reeb, x0, horizon(std::numbers::pi));
        EXPECT_LE((run.final_state - x0).norm(), 1e-7);
        // closed form z_k(t) = e^{2it} z_k(0)
        const double t = 0.3;
        FlowConfig c = horizon(t);
        const FlowRun part = integrate_flow(b, FieldKind::reeb, x0, c);
        const double co = std::cos(2 * t), si = std::sin(2 * t);
        const Vec4 exact(co * x0[0] - si * x0[1], si * x0[0] + co * x0[1], co * x0[2] - si * x0[3], si * x0[2] + co * x0[3]);
        EXPECT_LE((part.final_state - exact).norm(), 1e-9);
    }
}

TEST(Integrate, CubeIntegralsConserved) {
    for (int p : {2, 4, 8, 16}) {
        const Body b = Body::pnorm_cube(p);
        Rng rng(22 + p);
        const Vec4 x0 = level_point(b, rng);
        for (FieldKind kind : {FieldKind::hamiltonian, FieldKind::reeb}) {
            FlowConfig c = horizon(1000.0);
            c.record_trajectory = false;
            // Hamiltonian time 1000 is Reeb time 500 p; keep the per-unit-Reeb-time error budget
            if (kind == FieldKind::hamiltonian && p > 8) c.rtol = 1e-11;
            const FlowRun run = integrate_flow(b, kind, x0, c, cube_integrals(p));
            ASSERT_EQ(run.max_monitor_drift.size(), 3u);
            for (std::size_t m = 0; m < 3; ++m)
                EXPECT_LE(run.max_monitor_drift[m], 1e-7) << "p=" << p << " " << run.monitor_names[m] << " " << to_string(kind);
        }
    }
}

TEST(Integrate, LevelDriftBoundedForShippedBodies) {
    for (const auto& [name, b] : fixtures::shipped_bodies()) {
        Rng rng(23);
        const Vec4 x0 = level_point(b, rng);
        FlowConfig c = horizon(1000.0);
        const FlowRun run = integrate_flow(b, FieldKind::reeb, x0, c);
        EXPECT_LE(run.max_level_drift, 100 * c.rtol) << name;
        for (const Vec4& x : run.points) ASSERT_LE(std::abs(b.value(x) - 1.0), c.projection_threshold) << name;
        EXPECT_GT(run.accepted, 0u);
    }
}

TEST(Integrate, ZeroHorizonIsSinglePoint) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(24);
    const Vec4 x0 = level_point(b, rng);
    const FlowRun run = integrate_flow(b, FieldKind::reeb, x0, horizon(0.0), cube_integrals(4));
    ASSERT_EQ(run.points.size(), 1u);
    EXPECT_EQ(run.points[0], x0);
    EXPECT_EQ(run.final_state, x0);
    EXPECT_EQ(run.max_level_drift, 0.0);
    for (double d : run.max_monitor_drift) EXPECT_EQ(d, 0.0);
    EXPECT_EQ(run.accepted, 0u);
}

TEST(Integrate, TimeReversal) {
    // the smoothed simplex is strongly chaotic, so its round-off grows fast; use a shorter horizon
    for (const auto& [name, T] : std::vector<std::pair<const char*, double>>{
             {"cube_p8", 50.0}, {"chaotic_demo", 50.0}, {"simplex_lse20", 10.0}}) {
        Body b = Body::pnorm_cube(2);
        for (const auto& [n, body] : fixtures::shipped_bodies())
            if (n == name) b = body;
        Rng rng(25);
        const Vec4 x0 = level_point(b, rng);
        const FlowRun fwd = integrate_flow(b, FieldKind::reeb, x0, horizon(T));
        const FlowRun back = integrate_flow(b, FieldKind::reeb, fwd.final_state, horizon(-T));
        EXPECT_LE((back.final_state - x0).norm(), 1e-6) << name;
        EXPECT_DOUBLE_EQ(back.final_time, -T);
    }
}

TEST(Integrate, OutputTimesAreHitExactly) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(26);
    FlowConfig c = horizon(10.0);
    c.output_times = {0.5, 1.0, 2.5, 10.0};
    const FlowRun run = integrate_flow(b, FieldKind::reeb, level_point(b, rng), c);
    ASSERT_EQ(run.times.size(), 5u);
    EXPECT_EQ(run.times[0], 0.0);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(run.times[i + 1], c.output_times[i]);

    c.output_times = {2.0, 1.0};
    EXPECT_THROW(integrate_flow(b, FieldKind::reeb, level_point(b, rng), c), PreconditionError);
    c.output_times = {11.0};
    EXPECT_THROW(integrate_flow(b, FieldKind::reeb, level_point(b, rng), c), PreconditionError);
}

TEST(Integrate, SampleIntervalGrid) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(27);
    FlowConfig c = horizon(3.0);
    c.sample_interval = 0.5;
    const FlowRun run = integrate_flow(b, FieldKind::hamiltonian, level_point(b, rng), c);
    ASSERT_EQ(run.times.size(), 7u);
    for (std::size_t i = 0; i < run.times.size(); ++i) EXPECT_NEAR(run.times[i], 0.5 * static_cast<double>(i), 1e-15);
}

TEST(Integrate, Preconditions) {
    const Body b = Body::pnorm_cube(4);
    EXPECT_THROW(integrate_flow(b, FieldKind::reeb, Vec4(2, 0, 0, 0), horizon(1.0)), PreconditionError);
    FlowConfig c = horizon(1.0);
    c.rtol = 0.0;
    EXPECT_THROW(integrate_flow(b, FieldKind::reeb, Vec4(1, 0, 0, 0), c), PreconditionError);
    c = horizon(1.0);
    c.renorm_interval = -1.0;
    EXPECT_THROW(integrate_flow(b, FieldKind::reeb, Vec4(1, 0, 0, 0), c), PreconditionError);
    EXPECT_THROW(integrate_tangent_flow(b, FieldKind::reeb, Vec4(1, 0, 0, 0), Vec4(1, 0, 0, 0), horizon(1.0)),
                 PreconditionError);
}

TEST(Integrate, StepUnderflowReportsLastState) {
    FlowConfig c = horizon(2.0);
    try {
        integrate_model(BlowUpModel{}, Vec4(1, 1, 0, 0), c);
        FAIL() << "expected an integration error";
    } catch (const IntegrationError& e) {
        EXPECT_GT(e.time(), 0.9);
        EXPECT_LT(e.time(), 1.0);
        EXPECT_GT(e.last_state()[0], 1e3);
    }
}

TEST(Integrate, DegeneratePointIsReported) {
    const Body b = Body::pnorm_cube(4);
    EXPECT_THROW(reeb_field_extended(b, Vec4::Zero()), DegeneratePointError);
}

TEST(Reparametrize, ConstantRateOnHomogeneousLevels) {
    for (int p : {2, 4}) {
        const Body b = Body::pnorm_cube(p);
        Rng rng(28);
        FlowConfig c = horizon(5.0);
        c.sample_interval = 0.25;
        const FlowRun run = integrate_flow(b, FieldKind::hamiltonian, level_point(b, rng), c);
        const FlowRun re = reparametrize(run);
        EXPECT_EQ(re.field, "reeb_reparametrized");
        ASSERT_EQ(re.times.size(), run.times.size());
        for (std::size_t i = 0; i < re.times.size(); ++i) EXPECT_NEAR(re.times[i], 0.5 * p * run.times[i], 1e-9 * std::max(1.0, re.times[i]));
    }
}

TEST(Reparametrize, RejectsReebRuns) {
    const Body b = Body::pnorm_cube(2);
    const FlowRun run = integrate_flow(b, FieldKind::reeb, Vec4(1, 0, 0, 0), horizon(1.0));
    EXPECT_THROW(reparametrize(run), PreconditionError);
}

namespace {

double reparametrization_gap(const Body& b, const Vec4& x0, double reeb_horizon) {
    // Hamiltonian run long enough to pass the target Reeb time, sampled densely
    const double rate = 0.5 * b.gradient(x0).dot(x0);
    FlowConfig hc = horizon(1.2 * reeb_horizon / rate);
    hc.rtol = 1e-13;
    hc.atol = 1e-15;
    hc.sample_interval = 0.01 * reeb_horizon / rate;
    const FlowRun re = reparametrize(integrate_flow(b, FieldKind::hamiltonian, x0, hc));
    FlowConfig rc = horizon(reeb_horizon);
    rc.rtol = hc.rtol;
    rc.atol = hc.atol;
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < re.times.size() && re.times[i] <= reeb_horizon; ++i) {
        rc.output_times.push_back(re.times[i]);
        idx.push_back(i);
    }
    EXPECT_GE(idx.size(), 99u);
    const FlowRun direct = integrate_flow(b, FieldKind::reeb, x0, rc);
    double gap = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) gap = std::max(gap, (direct.points[j + 1] - re.points[idx[j]]).norm());
    return gap;
}

}  // namespace

TEST(Reparametrize, MatchesDirectReebIntegration) {
    Rng rng(29);
    const Body cube = Body::pnorm_cube(4);
    const Body graph = fixtures::chaotic_demo();
    for (int i = 0; i < 3; ++i) {
        EXPECT_LE(reparametrization_gap(cube, level_point(cube, rng), 100.0), 1e-6);
        EXPECT_LE(reparametrization_gap(graph, level_point(graph, rng), 100.0), 1e-6);
    }
    // non-homogeneous G, so the rate varies along the orbit; the flow is strongly chaotic, hence the shorter horizon
    const Body lse = Body::smoothed_polytope(fixtures::simplex_facets(), 20, SmoothingScheme::log_sum_exp);
    EXPECT_LE(reparametrization_gap(lse, level_point(lse, rng), 10.0), 1e-6);
}

TEST(TangentFlow, HopfHasNoStretch) {
    const Body b = Body::pnorm_cube(2);
    Rng rng(30);
    const Vec4 x0 = level_point(b, rng);
    FlowConfig c = horizon(1000.0);
    c.record_trajectory = false;
    const FlowRun run = integrate_tangent_flow(b, FieldKind::reeb, x0, tangent_at(b, x0, rng), c);
    EXPECT_LE(std::abs(run.total_log_stretch), 1e-2);
    EXPECT_EQ(run.stretch_increments.size(), 1000u);
    EXPECT_LE(run.max_tangent_residual, 1e-6);
}

TEST(TangentFlow, StaysTangent) {
    for (const auto& [name, b] : fixtures::shipped_bodies()) {
        Rng rng(31);
        const Vec4 x0 = level_point(b, rng);
        FlowConfig c = horizon(200.0);
        c.record_trajectory = false;
        const FlowRun run = integrate_tangent_flow(b, FieldKind::reeb, x0, tangent_at(b, x0, rng), c);
        EXPECT_LE(run.max_tangent_residual, 1e-6) << name;
        EXPECT_NEAR(run.final_tangent.norm(), 1.0, 1e-12) << name;
    }
}

TEST(TangentFlow, ZeroVectorIsDegenerate) {
    const Body b = Body::pnorm_cube(4);
    Rng rng(32);
    const Vec4 x0 = level_point(b, rng);
    const FlowRun run = integrate_tangent_flow(b, FieldKind::reeb, x0, Vec4::Zero(), horizon(20.0));
    EXPECT_TRUE(run.degenerate);
    EXPECT_EQ(run.final_tangent, Vec4::Zero());
    EXPECT_EQ(run.total_log_stretch, 0.0);
    EXPECT_TRUE(run.stretch_increments.empty());
}

TEST(TangentFlow, ShadowsFiniteDifferenceOfTrajectories) {
    const double delta = 1e-8;
    for (const char* name : {"cube_p4", "chaotic_demo", "simplex_lse20"}) {
        Body b = Body::pnorm_cube(2);
        for (const auto& [n, body] : fixtures::shipped_bodies())
            if (n == name) b = body;
        Rng rng(33);
        const Vec4 x0 = level_point(b, rng);
        const Vec4 v0 = tangent_at(b, x0, rng);
        FlowConfig c = horizon(10.0);
        c.rtol = 1e-13;
        c.atol = 1e-15;
        c.renorm_interval = 100.0;  // no renormalization inside the horizon
        c.output_times = {1.0, 2.0, 5.0, 10.0};
        // the shifted start sits O(delta^2) off the level set; move it back on
        const Vec4 x1 = b.project(x0 + delta * v0);
        for (double t : c.output_times) {
            FlowConfig ct = c;
            ct.horizon = t;
            ct.output_times.clear();
            ct.record_trajectory = false;
            // v is renormalized once, at the horizon; undo it with the logged stretch
            const FlowRun tan = integrate_tangent_flow(b, FieldKind::reeb, x0, v0, ct);
            const Vec4 v = std::exp(tan.total_log_stretch) * tan.final_tangent;
            const Vec4 fd = (integrate_flow(b, FieldKind::reeb, x1, ct).final_state -
                             integrate_flow(b, FieldKind::reeb, x0, ct).final_state) / delta;
            EXPECT_LE((fd - v).norm() / v.norm(), 1e-3) << name << " t=" << t;
        }
    }
}

TEST(Integrate, Deterministic) {
    const Body b = fixtures::chaotic_demo();
    Rng rng(34);
    const Vec4 x0 = level_point(b, rng);
    const Vec4 v0 = tangent_at(b, x0, rng);
    const FlowRun r1 = integrate_tangent_flow(b, FieldKind::reeb, x0, v0, horizon(100.0));
    const FlowRun r2 = integrate_tangent_flow(b, FieldKind::reeb, x0, v0, horizon(100.0));
    ASSERT_EQ(r1.points.size(), r2.points.size());
    for (std::size_t i = 0; i < r1.points.size(); ++i) {
        ASSERT_EQ(r1.points[i], r2.points[i]);
        ASSERT_EQ(r1.times[i], r2.times[i]);
        ASSERT_EQ(r1.log_stretch[i], r2.log_stretch[i]);
    }
    EXPECT_EQ(r1.stretch_increments, r2.stretch_increments);
    EXPECT_EQ(r1.accepted, r2.accepted);
}
