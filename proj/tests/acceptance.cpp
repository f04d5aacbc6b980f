// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "reebdyn/contact.hpp"
#include "reebdyn/entropy.hpp"
#include "reebdyn/fixtures.hpp"
#include "reebdyn/geodesic.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/integrate.hpp"
#include "reebdyn/io.hpp"

using namespace reebdyn;
using io::json;

namespace {

struct Outcome {
    bool passed = true;
    std::string detail;
    json report = json::object();

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }
};

std::string fmt(double x, int digits = 3) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

Vec4 level_point(const Body& b, Rng& rng) {
    const Vec4 u = rng.on_sphere();
    return radial_function(b, u) * u;
}

FlowConfig horizon(double T, double rtol = 1e-10) {
    FlowConfig c;
    c.horizon = T;
    c.rtol = rtol;
    c.record_trajectory = false;
    return c;
}

// 1. Integrable cubes: vanishing Lyapunov estimates, conserved integrals.
Outcome cube_suite(unsigned threads) {
    Outcome o;
    double worst_value = 0.0, worst_stderr = 0.0, worst_drift = 0.0;
    for (int p : {2, 4, 8, 16}) {
        const Body b = Body::pnorm_cube(p);
        EstimatorConfig c;
        c.flow.horizon = 1000.0;
        c.samples = 10;
        c.seed = 1;
        c.threads = threads;
        const auto est = lyapunov_estimate(b, c);
        o.report["p" + std::to_string(p)] = io::estimate_json(est);
        o.require(est.value <= 0.01 && est.stderr_value <= 0.005,
                  "p=" + std::to_string(p) + " value " + fmt(est.value) + " stderr " + fmt(est.stderr_value));
        worst_value = std::max(worst_value, est.value);
        worst_stderr = std::max(worst_stderr, est.stderr_value);

        Rng rng(derive_seed(1, p));
        const Vec4 x0 = level_point(b, rng);
        for (FieldKind field : {FieldKind::reeb, FieldKind::hamiltonian}) {
            const double rtol = field == FieldKind::hamiltonian && p > 8 ? 1e-11 : 1e-10;
            const FlowRun run = integrate_flow(b, field, x0, horizon(1000.0, rtol), cube_integrals(p));
            for (double d : run.max_monitor_drift) worst_drift = std::max(worst_drift, d);
        }
    }
    o.require(worst_drift <= 1e-7, "integral drift " + fmt(worst_drift));
    if (o.passed)
        o.detail = "max value " + fmt(worst_value) + ", max stderr " + fmt(worst_stderr) + ", max drift " + fmt(worst_drift);
    return o;
}

// 2. Hopf periodicity.
Outcome hopf_periodicity() {
    Outcome o;
    const Body b = Body::pnorm_cube(2);
    Rng rng(2);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
        const Vec4 x0 = level_point(b, rng);
        FlowConfig c = horizon(M_PI, 1e-12);
        c.atol = 1e-14;
        const FlowRun run = integrate_flow(b, FieldKind::reeb, x0, c);
        worst = std::max(worst, (run.final_state - x0).norm());
    }
    o.require(worst <= 1e-7, "return distance " + fmt(worst));
    if (o.passed) o.detail = "max return distance " + fmt(worst);
    return o;
}

double reparametrization_gap(const Body& b, const Vec4& x0, double reeb_horizon) {
    const double rate = 0.5 * b.gradient(x0).dot(x0);
    FlowConfig hc;
    hc.rtol = 1e-13;
    hc.atol = 1e-15;
    hc.horizon = 1.2 * reeb_horizon / rate;
    hc.sample_interval = 0.01 * reeb_horizon / rate;
    const FlowRun re = reparametrize(integrate_flow(b, FieldKind::hamiltonian, x0, hc));
    FlowConfig rc = hc;
    rc.sample_interval = 0.0;
    rc.horizon = reeb_horizon;
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i < re.times.size() && re.times[i] <= reeb_horizon; ++i) {
        rc.output_times.push_back(re.times[i]);
        idx.push_back(i);
    }
    const FlowRun direct = integrate_flow(b, FieldKind::reeb, x0, rc);
    double gap = 0.0;
    for (std::size_t j = 0; j < idx.size(); ++j) gap = std::max(gap, (direct.points[j + 1] - re.points[idx[j]]).norm());
    return idx.size() >= 99 ? gap : INFINITY;
}

// 3. Reparametrized Hamiltonian flow equals the Reeb flow.
Outcome reparametrization() {
    Outcome o;
    Rng rng(3);
    const Body cube = Body::pnorm_cube(4);
    const Body graph = fixtures::chaotic_demo();
    double g1 = 0.0, g2 = 0.0;
    for (int i = 0; i < 5; ++i) {
        g1 = std::max(g1, reparametrization_gap(cube, level_point(cube, rng), 100.0));
        g2 = std::max(g2, reparametrization_gap(graph, level_point(graph, rng), 100.0));
    }
    o.require(g1 <= 1e-6, "quartic cube gap " + fmt(g1));
    o.require(g2 <= 1e-6, "radial graph gap " + fmt(g2));
    if (o.passed) o.detail = "gaps " + fmt(g1) + " (quartic cube), " + fmt(g2) + " (radial graph)";
    return o;
}

// 4. Smoothed cubes converge to the cube.
Outcome cube_convergence() {
    Outcome o;
    const Body limit = Body::cube_limit();
    double prev = INFINITY, worst = 0.0;
    for (int p : {2, 4, 8, 16, 32, 64}) {
        const double d = c0_distance(Body::pnorm_cube(p), limit, 100000).value;
        const double expected = 2.0 * (1.0 - std::pow(4.0, -1.0 / p));
        worst = std::max(worst, std::abs(d - expected));
        o.require(std::abs(d - expected) <= 1e-3, "p=" + std::to_string(p) + " distance " + fmt(d));
        o.require(d < prev, "not decreasing at p=" + std::to_string(p));
        prev = d;
    }
    if (o.passed) o.detail = "max deviation from closed form " + fmt(worst) + ", strictly decreasing";
    return o;
}

// 5. Graph-form relation.
Outcome graph_form() {
    Outcome o;
    const Body base = fixtures::ellipsoid_1122();
    double worst = 0.0;
    for (const TrigPolynomial& f : {TrigPolynomial::constant(0.0), TrigPolynomial::constant(0.3),
                                    TrigPolynomial({TrigTerm{0.2, {1, 0, 2, 0}, 0.4}})}) {
        const auto rep = verify_graph_form_relation(base, f, 1000);
        worst = std::max({worst, rep.max_residual, rep.max_fd_residual});
        o.require(rep.samples == 1000, "sample count");
    }
    o.require(worst <= 1e-8, "residual " + fmt(worst));
    if (o.passed) o.detail = "max residual " + fmt(worst);
    return o;
}

// 6. Reeb field contracts on every shipped body.
Outcome contracts() {
    Outcome o;
    double worst_alpha = 0.0, worst_dg = 0.0, worst_jac = 0.0;
    for (const auto& [name, body] : fixtures::shipped_bodies()) {
        Rng rng(derive_seed(6, std::hash<std::string>{}(name)));
        for (int i = 0; i < 10000; ++i) {
            const Vec4 x = level_point(body, rng);
            const Vec4 r = reeb_field(body, x);
            worst_alpha = std::max(worst_alpha, std::abs(standard::liouville_form(x, r) - 1.0));
            worst_dg = std::max(worst_dg, std::abs(body.gradient(x).dot(r)) / body.gradient(x).norm());
            if (i % 100 == 0) {
                Mat4 fd;
                const double h = 1e-5;
                for (int k = 0; k < 4; ++k) {
                    Vec4 e = Vec4::Zero();
                    e[k] = h;
                    fd.col(k) = (reeb_field_extended(body, x + e) - reeb_field_extended(body, x - e)) / (2 * h);
                }
                worst_jac = std::max(worst_jac, (reeb_jacobian(body, x) - fd).norm() / std::max(1.0, fd.norm()));
            }
        }
    }
    o.require(worst_alpha <= 1e-10, "alpha(R) - 1 = " + fmt(worst_alpha));
    o.require(worst_dg <= 1e-10, "dG(R) = " + fmt(worst_dg));
    o.require(worst_jac <= 1e-6, "Jacobian error " + fmt(worst_jac));
    if (o.passed)
        o.detail = "|alpha(R)-1| " + fmt(worst_alpha) + ", |dG(R)| " + fmt(worst_dg) + ", Jacobian " + fmt(worst_jac);
    return o;
}

// 7. The frozen chaotic fixture shows positive estimates.
Outcome chaotic_demo(unsigned threads) {
    Outcome o;
    const Body body = fixtures::chaotic_demo();
    double worst_ratio = INFINITY;
    for (std::uint64_t seed : {7, 8, 9}) {
        EstimatorConfig c;
        c.flow.horizon = 1000.0;
        c.samples = 20;
        c.seed = seed;
        c.threads = threads;
        const auto est = lyapunov_estimate(body, c);
        o.report["seed" + std::to_string(seed)] = io::estimate_json(est);
        o.require(est.value > 3.0 * est.stderr_value,
                  "seed " + std::to_string(seed) + " value " + fmt(est.value) + " stderr " + fmt(est.stderr_value));
        worst_ratio = std::min(worst_ratio, est.value / est.stderr_value);
    }
    const auto fam = radial_graph_family(fixtures::ellipsoid_1122(), fixtures::chaotic_perturbation(),
                                         fixtures::chaotic_schedule());
    EstimatorConfig c;
    c.flow.horizon = 1000.0;
    c.samples = 20;
    c.seed = 7;
    c.threads = threads;
    const auto rep = sequence_entropy(fam, c, "chaotic_demo");
    o.report["sequence"] = io::sequence_json(rep);
    o.require(rep.tail_minimum > 0.0, "tail minimum " + fmt(rep.tail_minimum));
    if (o.passed) o.detail = "min value/stderr " + fmt(worst_ratio) + ", sequence tail minimum " + fmt(rep.tail_minimum);
    return o;
}

// 8. Geodesic suite.
Outcome geodesic_suite(unsigned threads) {
    using namespace geodesic;
    Outcome o;
    const ConformalMetric flat = ConformalMetric::flat();
    EstimatorConfig c;
    c.flow.horizon = 1000.0;
    c.samples = 10;
    c.seed = 8;
    c.threads = threads;
    const auto est = geodesic_entropy(flat, c);
    o.report["flat"] = io::estimate_json(est);
    o.require(est.value <= 0.01, "flat estimate " + fmt(est.value));

    const ConformalMetric bumpy = fixtures::bumpy_torus();
    Rng rng(8);
    double h_drift = 0.0;
    for (int i = 0; i < 3; ++i) {
        const FlowRun run =
            integrate_model(GeodesicFlow(bumpy), GeodesicSampler(bumpy).point(rng), horizon(1000.0), energy_integral(bumpy), "geodesic");
        h_drift = std::max(h_drift, run.max_monitor_drift[0]);
    }
    const FlowRun free = integrate_model(GeodesicFlow(flat), GeodesicSampler(flat).point(rng), horizon(1000.0),
                                         momentum_integrals(), "geodesic");
    double p_drift = 0.0;
    for (double d : free.max_monitor_drift) p_drift = std::max(p_drift, d);
    o.require(h_drift <= 1e-7, "energy drift " + fmt(h_drift));
    o.require(p_drift <= 1e-10, "momentum drift " + fmt(p_drift));
    o.report["drifts"] = {{"energy", h_drift}, {"momentum", p_drift}};

    const ConformalMetric w = fixtures::weierstrass_torus();
    const auto sandwich = sandwich_check(w, ConformalMetric::mollified(w, fixtures::kSandwichScale), fixtures::kSandwichWidth);
    o.require(sandwich.passed, "sandwich at the frozen scale, deviation " + fmt(sandwich.max_deviation));

    const auto seq = mollify_sequence(w, fixtures::weierstrass_scales());
    for (std::size_t i = 1; i < seq.sup_distances.size(); ++i)
        o.require(seq.sup_distances[i] < seq.sup_distances[i - 1], "sup distances not decreasing");

    std::vector<ConformalMetric> sandwiched = seq.metrics;
    sandwiched.push_back(w);
    sandwiched.push_back(ConformalMetric::mollified(w, fixtures::kSandwichScale));
    double lo = INFINITY, hi = 0.0;
    for (const auto& m : sandwiched) {
        o.require(sandwich_check(flat, m, 0.1).passed, "fixture outside the flat sandwich");
        const double area = metric_area(m, 512).refined;
        lo = std::min(lo, area);
        hi = std::max(hi, area);
    }
    o.require(lo >= 0.75 && hi <= 1.25, "areas in [" + fmt(lo, 6) + ", " + fmt(hi, 6) + "]");
    o.report["areas"] = {{"min", lo}, {"max", hi}};
    o.report["sup_distances"] = seq.sup_distances;
    if (o.passed)
        o.detail = "flat " + fmt(est.value) + ", drifts " + fmt(h_drift) + "/" + fmt(p_drift) + ", sandwich deviation " +
                   fmt(sandwich.max_deviation) + ", areas in [" + fmt(lo, 6) + ", " + fmt(hi, 6) + "]";
    return o;
}

void print(int id, const char* name, const Outcome& o, double seconds) {
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", o.passed ? "PASS" : "FAIL", id, name, o.detail.c_str(), seconds);
    std::fflush(stdout);
}

}  // namespace

int main() {
    using clock = std::chrono::steady_clock;
    bool all = true;
    auto timed = [&](int id, const char* name, const std::function<Outcome()>& fn) {
        const auto t0 = clock::now();
        Outcome o = fn();
        print(id, name, o, std::chrono::duration<double>(clock::now() - t0).count());
        all = all && o.passed;
        return o;
    };

    const Outcome c1 = timed(1, "integrable cubes", [] { return cube_suite(0); });
    timed(2, "Hopf periodicity", hopf_periodicity);
    timed(3, "reparametrization", reparametrization);
    timed(4, "cube convergence", cube_convergence);
    timed(5, "graph-form relation", graph_form);
    timed(6, "contact contracts", contracts);
    const Outcome c7 = timed(7, "positive-entropy demo", [] { return chaotic_demo(0); });
    const Outcome c8 = timed(8, "geodesic suite", [] { return geodesic_suite(0); });

    timed(9, "determinism", [&] {
        // rerun with a different worker count; reports must match byte for byte
        Outcome o;
        const std::vector<std::pair<const Outcome*, Outcome>> reruns = {
            {&c1, cube_suite(3)}, {&c7, chaotic_demo(3)}, {&c8, geodesic_suite(3)}};
        const char* names[] = {"1", "7", "8"};
        for (std::size_t i = 0; i < reruns.size(); ++i)
            o.require(reruns[i].first->report.dump() == reruns[i].second.report.dump(),
                      std::string("criterion ") + names[i] + " report differs");
        if (o.passed) o.detail = "reports of criteria 1, 7, 8 byte-identical across reruns";
        return o;
    });

    std::printf("%s\n", all ? "ALL PASS" : "SOME CRITERIA FAILED");
    return all ? 0 : 1;
}
