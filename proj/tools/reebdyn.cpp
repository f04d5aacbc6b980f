#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "reebdyn/contact.hpp"
#include "reebdyn/entropy.hpp"
#include "reebdyn/geodesic.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/integrate.hpp"

using namespace reebdyn;
using namespace reebdyn::cli;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kGeometry = 3, kIntegration = 4 };

struct OptionSpec {
    const char* flag;
    const char* key;
    const char* help;
};

using Handler = std::function<int(Params&, Output&)>;

struct Command {
    std::string name;
    std::vector<OptionSpec> options;
    std::vector<OptionSpec> flags;  // boolean switches
    Handler run;
};

// ---------------------------------------------------------------- shared pieces

FlowConfig flow_config(const Params& p, double default_horizon) {
    FlowConfig c;
    c.horizon = p.get<double>("T", default_horizon);
    c.rtol = p.get<double>("rtol", c.rtol);
    c.atol = p.get<double>("atol", c.atol);
    c.max_step = p.get<double>("max_step", c.max_step);
    c.renorm_interval = p.get<double>("tau", c.renorm_interval);
    c.projection_threshold = p.get<double>("projection_threshold", c.projection_threshold);
    c.sample_interval = p.get<double>("sample_interval", c.sample_interval);
    c.seed = p.get<std::uint64_t>("seed", 0);
    c.validate();
    return c;
}

const std::initializer_list<const char*> kFlowKeys = {"T", "rtol", "atol", "max_step", "tau", "projection_threshold",
                                                      "sample_interval", "seed"};

Vec4 start_point(const Params& p, const Body& body) {
    if (p.has("x0")) return io::vec_from_json(p.raw("x0"), "x0");
    Vec4 u;
    if (p.has("direction")) {
        u = io::vec_from_json(p.raw("direction"), "direction");
        if (!(u.norm() > 0.0)) throw PreconditionError("direction must be non-zero");
        u.normalize();
    } else {
        Rng rng(derive_seed(p.get<std::uint64_t>("seed", 0), 0));
        u = rng.on_sphere();
    }
    return radial_function(body, u) * u;
}

std::vector<Integral> monitors_for(const Params& p, const Body& body) {
    const auto which = p.get<std::string>("monitors", "auto");
    const auto* cube = std::get_if<PNormCube>(&body.variant());
    if (which == "none") return {};
    if (which == "planes") return plane_integrals();
    if (which == "cube") {
        if (!cube) throw ConfigError("cube monitors need a pnorm_cube body");
        return cube_integrals(cube->p);
    }
    if (which == "auto") return cube ? cube_integrals(cube->p) : std::vector<Integral>{};
    throw ConfigError("unknown monitors \"" + which + "\" (auto, cube, planes, none)");
}

EstimatorConfig estimator_config(const Params& p) {
    EstimatorConfig c;
    const auto m = p.get<std::string>("method", "lyapunov");
    if (m != "lyapunov" && m != "separated_set") throw ConfigError("unknown method \"" + m + "\"");
    c.method = m == "lyapunov" ? EntropyMethod::lyapunov : EntropyMethod::separated_set;
    c.field = field_from_string(p.get<std::string>("field", "reeb"));
    c.flow = flow_config(p, 1000.0);
    c.samples = p.get<std::size_t>("N", c.method == EntropyMethod::lyapunov ? 10 : 500);
    c.seed = p.get<std::uint64_t>("seed", 0);
    c.segments = p.get<std::size_t>("n", c.segments);
    c.epsilon = p.get<double>("eps", c.epsilon);
    c.patch_radius = p.get<double>("patch", c.patch_radius);
    c.threads = p.get<unsigned>("threads", 0);
    return c;
}

const std::initializer_list<const char*> kEstimatorKeys = {"method", "field", "N", "n", "eps", "patch", "threads"};

std::string stem(const Params& p, const char* fallback) { return p.get<std::string>("name", fallback); }

// ---------------------------------------------------------------- body

int body_build(Params& p, Output& out) {
    p.allow({"fixture", "cube_p", "polytope", "scheme", "sharpness", "quadric", "base", "perturbation", "gauge", "name"});
    p.validate();
    Body body = Body::pnorm_cube(2);
    if (p.has("fixture")) {
        body = resolve_body(p.raw("fixture"));
    } else if (p.has("cube_p")) {
        body = Body::pnorm_cube(p.require<int>("cube_p"));
    } else if (p.has("polytope")) {
        const auto hs = resolve_polytope(p.raw("polytope"));
        body = p.get<bool>("gauge", false)
                   ? Body::polytope_gauge(hs)
                   : Body::smoothed_polytope(hs, p.require<double>("sharpness"),
                                             io::scheme_from_string(p.get<std::string>("scheme", "pnorm")));
    } else if (p.has("quadric")) {
        const auto d = p.list("quadric");
        if (d.size() != 4) throw ConfigError("quadric needs 4 diagonal entries");
        body = Body::quadric_diagonal(d[0], d[1], d[2], d[3]);
    } else if (p.has("base")) {
        const json pert = p.raw("perturbation");
        body = Body::radial_graph(resolve_body(p.raw("base")),
                                  io::trig_from_json(pert.is_string() ? io::read_json(pert.get<std::string>()) : pert));
    } else {
        throw ConfigError("body build needs one of fixture, cube_p, polytope, quadric or base");
    }
    json spec = io::body_json(body);
    spec["version"] = kVersion;
    spec["generated_by"] = out.envelope();
    const auto path = out.write_raw_json(stem(p, "body") + ".json", spec, stem(p, "body"));
    std::cout << path.string() << '\n';
    return kOk;
}

int body_distance(Params& p, Output& out) {
    p.allow({"a", "b", "resolution", "c1", "convexity_samples", "name"});
    p.validate();
    const Body a = resolve_body(p.raw("a"));
    const Body b = resolve_body(p.raw("b"));
    const auto res = p.get<std::size_t>("resolution", 100000);
    json result = io::distance_json(c0_distance(a, b, res));
    if (p.get<bool>("c1", false))
        result = {{"c0", result},
                  {"c1", io::distance_json(c1_distance_convex(a, b, res, p.get<std::size_t>("convexity_samples", 2000)))}};
    out.write_report(stem(p, "distance"), result);
    const double value = p.get<bool>("c1", false) ? result["c1"]["value"].get<double>() : result["value"].get<double>();
    std::cout << "distance " << io::format_double(value) << '\n';
    return kOk;
}

int body_check(Params& p, Output& out) {
    p.allow({"body", "samples", "seed", "name"});
    p.validate();
    const Body body = resolve_body(p.raw("body"));
    const auto samples = p.get<std::size_t>("samples", 2000);
    const auto seed = p.get<std::uint64_t>("seed", 1);

    const auto star = check_starshaped(body, samples, seed);
    json result = {{"starshaped",
                    {{"passed", star.passed},
                     {"samples", star.samples},
                     {"min_transversality", io::number(star.min_transversality)},
                     {"max_level_residual", star.max_level_residual},
                     {"failure", star.failure}}}};
    bool passed = star.passed;

    if (body.smooth()) {
        // transversality of the Reeb direction and derivative consistency at level points
        Rng rng(derive_seed(seed, 1));
        double min_cos = 1.0, grad_err = 0.0, hess_err = 0.0;
        const double h = 1e-6;
        for (std::size_t i = 0; i < samples; ++i) {
            const Vec4 u = rng.on_sphere();
            const Vec4 x = radial_function(body, u) * u;
            const Vec4 g = body.gradient(x);
            min_cos = std::min(min_cos, g.dot(x) / (g.norm() * x.norm()));
            Vec4 fd_g;
            Mat4 fd_h;
            for (int k = 0; k < 4; ++k) {
                Vec4 e = Vec4::Zero();
                e[k] = h;
                fd_g[k] = (body.value(x + e) - body.value(x - e)) / (2 * h);
                fd_h.col(k) = (body.gradient(x + e) - body.gradient(x - e)) / (2 * h);
            }
            grad_err = std::max(grad_err, (fd_g - g).norm() / std::max(1.0, g.norm()));
            const Mat4 hs = body.hessian(x);
            hess_err = std::max(hess_err, (fd_h - hs).norm() / std::max(1.0, hs.norm()));
        }
        const bool transversal = min_cos > 0.0;
        const bool derivatives = grad_err <= 1e-6 && hess_err <= 1e-5;
        const auto convex = check_convexity(body, samples, seed);
        result["transversality"] = {{"passed", transversal}, {"min_cosine", min_cos}};
        result["derivatives"] = {{"passed", derivatives}, {"gradient_error", grad_err}, {"hessian_error", hess_err}};
        result["convexity"] = {{"convex", convex.convex}, {"min_eigenvalue", io::number(convex.min_eigenvalue)}};
        passed = passed && transversal && derivatives;
    }
    result["passed"] = passed;
    out.write_report(stem(p, "check"), result);
    std::cout << (passed ? "PASS" : "FAIL") << '\n';
    return passed ? kOk : kGeometry;
}

// ---------------------------------------------------------------- flow

int flow_run(Params& p, Output& out, const char* mode) {
    p.allow(kFlowKeys);
    p.allow({"body", "field", "x0", "direction", "v0", "monitors", "name", "output_times"});
    p.validate();
    const Body body = resolve_body(p.raw("body"));
    const std::string m = mode;
    const FieldKind field = m == "reparametrize" ? FieldKind::hamiltonian : field_from_string(p.get<std::string>("field", "reeb"));
    if (m == "reparametrize" && p.has("field") && p.get<std::string>("field", "") != "hamiltonian")
        throw ConfigError("reparametrize runs the Hamiltonian flow; field must be hamiltonian");
    FlowConfig cfg = flow_config(p, 0.0);
    if (p.has("output_times")) cfg.output_times = p.list("output_times");
    const Vec4 x0 = start_point(p, body);
    const auto monitors = monitors_for(p, body);

    FlowRun run;
    if (m == "tangent") {
        Vec4 v0;
        if (p.has("v0")) {
            v0 = io::vec_from_json(p.raw("v0"), "v0");
        } else {
            Rng rng(derive_seed(cfg.seed, 1));
            v0 = BodySampler(body).tangent(x0, rng);
        }
        run = integrate_tangent_flow(body, field, x0, v0, cfg, monitors);
    } else {
        run = integrate_flow(body, field, x0, cfg, monitors);
        if (m == "reparametrize") run = reparametrize(run);
    }
    const std::string name = stem(p, m == "integrate" ? "flow" : mode);
    json summary = io::flow_summary_json(run);
    if (m == "reparametrize") summary["time_ratio"] = run.final_clock == 0.0 ? 0.0 : run.final_time / run.final_clock;
    out.write_text(name + ".csv", io::flow_csv(run));
    out.write_report(name, summary);
    std::cout << "return_distance " << io::format_double(summary["return_distance"].get<double>()) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- entropy

int entropy_estimate(Params& p, Output& out) {
    p.allow(kFlowKeys);
    p.allow(kEstimatorKeys);
    p.allow({"body", "name"});
    p.validate();
    const Body body = resolve_body(p.raw("body"));
    const auto est = estimate_entropy(body, estimator_config(p));
    out.write_report(stem(p, "estimate"), io::estimate_json(est));
    std::cout << "value " << io::format_double(est.value) << " stderr " << io::format_double(est.stderr_value)
              << (est.unreliable ? " unreliable" : "") << '\n';
    return kOk;
}

std::string gnuplot_script(const std::string& csv) {
    return "set datafile separator ','\n"
           "set key autotitle columnhead\n"
           "set logscale x 2\n"
           "set xlabel 'sharpness'\n"
           "set ylabel 'entropy estimate'\n"
           "plot '" + csv + "' using 1:3:4 with yerrorlines\n";
}

int entropy_sequence(Params& p, Output& out) {
    p.allow(kFlowKeys);
    p.allow(kEstimatorKeys);
    p.allow({"polytope", "scheme", "schedule", "body", "resolution", "gnuplot", "name"});
    p.validate();
    const auto schedule = p.list("schedule");
    if (schedule.empty()) throw ConfigError("entropy sequence needs a schedule");
    const auto res = p.get<std::size_t>("resolution", 20000);
    std::string family;
    auto build = [&]() -> SmoothingFamily {
        if (p.has("polytope")) {
            const auto scheme = io::scheme_from_string(p.get<std::string>("scheme", "pnorm"));
            family = std::string("polytope/") + to_string(scheme);
            return smoothing_family(resolve_polytope(p.raw("polytope")), scheme, schedule, res);
        }
        if (!p.has("body")) throw ConfigError("entropy sequence needs a polytope or a radial_graph body");
        const Body body = resolve_body(p.raw("body"));
        const auto* g = std::get_if<RadialGraph>(&body.variant());
        if (!g) throw ConfigError("a sequence over a body needs a radial_graph (its perturbation is damped)");
        family = "radial_graph/damped";
        return radial_graph_family(*g->base, g->perturbation, schedule, res);
    };
    const SmoothingFamily fam = build();
    const auto rep = sequence_entropy(fam, estimator_config(p), family);
    const std::string name = stem(p, "sequence");
    out.write_report(name, io::sequence_json(rep));
    out.write_text(name + ".csv", io::sequence_csv(rep));
    if (p.get<bool>("gnuplot", false)) out.write_text(name + ".gp", gnuplot_script(name + ".csv"));
    std::cout << "tail_minimum " << io::format_double(rep.tail_minimum) << '\n';
    return kOk;
}

int entropy_geodesic(Params& p, Output& out) {
    p.allow(kFlowKeys);
    p.allow({"metric", "N", "threads", "name", "normalize"});
    p.validate();
    auto metric = resolve_metric(p.has("metric") ? p.raw("metric") : json("flat"));
    if (p.get<bool>("normalize", false)) metric = geodesic::normalize_area(metric);
    EstimatorConfig c;
    c.flow = flow_config(p, 1000.0);
    c.samples = p.get<std::size_t>("N", 10);
    c.seed = p.get<std::uint64_t>("seed", 0);
    c.threads = p.get<unsigned>("threads", 0);
    const auto est = geodesic::geodesic_entropy(metric, c);
    json result = io::estimate_json(est);
    result["metric"] = io::metric_json(metric);
    result["area"] = geodesic::metric_area(metric).refined;
    out.write_report(stem(p, "geodesic"), result);
    std::cout << "value " << io::format_double(est.value) << " stderr " << io::format_double(est.stderr_value) << '\n';
    return kOk;
}

// ---------------------------------------------------------------- driver

std::vector<std::pair<std::string, std::vector<Command>>> command_table() {
    const std::vector<OptionSpec> flow_opts = {
        {"--body", "body", "body spec: JSON file, shipped name or cube_limit"},
        {"--field", "field", "reeb | hamiltonian"},
        {"--T", "T", "horizon (negative integrates backward)"},
        {"--x0", "x0", "start point x1,y1,x2,y2 on the level set"},
        {"--direction", "direction", "start on the ray through this direction"},
        {"--rtol", "rtol", "relative tolerance"},
        {"--atol", "atol", "absolute tolerance"},
        {"--max-step", "max_step", "largest step"},
        {"--projection-threshold", "projection_threshold", "level drift that triggers projection"},
        {"--sample-interval", "sample_interval", "sample spacing (0: every step)"},
        {"--output-times", "output_times", "explicit sample times"},
        {"--monitors", "monitors", "auto | cube | planes | none"},
        {"--seed", "seed", "seed for default start data"},
        {"--name", "name", "output file stem"},
    };
    auto tangent_opts = flow_opts;
    tangent_opts.push_back({"--v0", "v0", "initial tangent vector"});
    tangent_opts.push_back({"--tau", "tau", "renormalization interval"});

    const std::vector<OptionSpec> estimator_opts = {
        {"--method", "method", "lyapunov | separated_set"},
        {"--field", "field", "reeb | hamiltonian"},
        {"--N", "N", "ensemble size"},
        {"--T", "T", "horizon"},
        {"--tau", "tau", "renormalization interval"},
        {"--seed", "seed", "ensemble seed"},
        {"--eps", "eps", "separation radius"},
        {"--n", "n", "snapshot count"},
        {"--patch", "patch", "angular radius of the initial patch (default eps)"},
        {"--rtol", "rtol", "relative tolerance"},
        {"--atol", "atol", "absolute tolerance"},
        {"--threads", "threads", "worker threads (0: hardware)"},
        {"--name", "name", "output file stem"},
    };
    auto estimate_opts = estimator_opts;
    estimate_opts.push_back({"--body", "body", "body spec"});
    auto sequence_opts = estimator_opts;
    sequence_opts.push_back({"--polytope", "polytope", "cube | simplex | JSON file with halfspaces"});
    sequence_opts.push_back({"--scheme", "scheme", "pnorm | log_sum_exp"});
    sequence_opts.push_back({"--schedule", "schedule", "comma-separated sharpness values"});
    sequence_opts.push_back({"--body", "body", "radial_graph body whose perturbation is damped"});
    sequence_opts.push_back({"--resolution", "resolution", "sphere-grid resolution for distances"});

    return {
        {"body",
         {
             {"build",
              {{"--fixture", "fixture", "export a shipped body by name"},
               {"--cube-p", "cube_p", "even exponent of the p-norm cube"},
               {"--polytope", "polytope", "cube | simplex | JSON file with halfspaces"},
               {"--scheme", "scheme", "pnorm | log_sum_exp"},
               {"--sharpness", "sharpness", "smoothing sharpness"},
               {"--quadric", "quadric", "diagonal entries a,b,c,d"},
               {"--base", "base", "base body of a radial graph"},
               {"--perturbation", "perturbation", "JSON file with the perturbation terms"},
               {"--name", "name", "output file stem"}},
              {{"--gauge", "gauge", "write the non-smooth polytope gauge"}},
              body_build},
             {"distance",
              {{"--a", "a", "first body"},
               {"--b", "b", "second body"},
               {"--resolution", "resolution", "sphere-grid directions"},
               {"--convexity-samples", "convexity_samples", "samples for the convexity precondition"},
               {"--name", "name", "output file stem"}},
              {{"--c1", "c1", "also compute the C1 distance (convex bodies)"}},
              body_distance},
             {"check",
              {{"--body", "body", "body spec"},
               {"--samples", "samples", "sample count"},
               {"--seed", "seed", "sampling seed"},
               {"--name", "name", "output file stem"}},
              {},
              body_check},
         }},
        {"flow",
         {
             {"integrate", flow_opts, {}, [](Params& p, Output& o) { return flow_run(p, o, "integrate"); }},
             {"reparametrize", flow_opts, {}, [](Params& p, Output& o) { return flow_run(p, o, "reparametrize"); }},
             {"tangent", tangent_opts, {}, [](Params& p, Output& o) { return flow_run(p, o, "tangent"); }},
         }},
        {"entropy",
         {
             {"estimate", estimate_opts, {}, entropy_estimate},
             {"sequence", sequence_opts, {{"--gnuplot", "gnuplot", "also write a gnuplot script"}}, entropy_sequence},
             {"geodesic",
              {{"--metric", "metric", "flat | bumpy | weierstrass | JSON metric spec"},
               {"--N", "N", "ensemble size"},
               {"--T", "T", "horizon"},
               {"--tau", "tau", "renormalization interval"},
               {"--seed", "seed", "ensemble seed"},
               {"--rtol", "rtol", "relative tolerance"},
               {"--atol", "atol", "absolute tolerance"},
               {"--threads", "threads", "worker threads"},
               {"--name", "name", "output file stem"}},
              {{"--normalize", "normalize", "rescale the metric to unit area"}},
              entropy_geodesic},
         }},
    };
}

int report_error(const std::string& kind, const std::string& what, int code) {
    std::cerr << "reebdyn: " << kind << ": " << what << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reeb and geodesic flow dynamics on starshaped hypersurfaces"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string config_path, out_dir;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_dir, "output directory (default: $REEBDYN_OUT or .)");

    const auto table = command_table();
    struct Bound {
        CLI::App* app;
        const Command* command;
        std::string full_name;
        std::map<std::string, std::string> values;
        std::map<std::string, bool> switches;
        std::vector<std::pair<std::string, CLI::Option*>> options;
    };
    std::vector<std::unique_ptr<Bound>> bound;
    for (const auto& [group, commands] : table) {
        CLI::App* g = app.add_subcommand(group, group + " commands");
        g->require_subcommand(1);
        for (const auto& cmd : commands) {
            auto b = std::make_unique<Bound>();
            b->app = g->add_subcommand(cmd.name);
            b->command = &cmd;
            b->full_name = group + " " + cmd.name;
            for (const auto& o : cmd.options) b->options.emplace_back(o.key, b->app->add_option(o.flag, b->values[o.key], o.help));
            for (const auto& f : cmd.flags) b->options.emplace_back(f.key, b->app->add_flag(f.flag, b->switches[f.key], f.help));
            bound.push_back(std::move(b));
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    std::vector<std::string> args(argv, argv + argc);
    fs::path out = out_dir.empty() ? fs::path(std::getenv("REEBDYN_OUT") ? std::getenv("REEBDYN_OUT") : ".") : fs::path(out_dir);
    try {
        const Bound* chosen = nullptr;
        for (const auto& b : bound)
            if (b->app->parsed()) chosen = b.get();
        if (!chosen) throw ConfigError("no command given");

        json values = json::object();
        if (!config_path.empty()) {
            json cfg = io::read_json(config_path);
            if (!cfg.is_object()) throw ConfigError("configuration must be a JSON object");
            if (cfg.contains("version")) {
                const auto v = io::get_field<std::string>(cfg, "version", "configuration");
                if (v.substr(0, v.find('.')) != std::string(kVersion).substr(0, 1))
                    throw ConfigError("configuration version " + v + " is not supported by " + kVersion);
                cfg.erase("version");
            }
            if (cfg.contains("command")) {
                const auto c = io::get_field<std::string>(cfg, "command", "configuration");
                if (c != chosen->full_name) throw ConfigError("configuration is for \"" + c + "\"");
                cfg.erase("command");
            }
            if (cfg.contains("out")) {
                if (out_dir.empty()) out = io::get_field<std::string>(cfg, "out", "configuration");
                cfg.erase("out");
            }
            values = cfg;
        }
        for (const auto& [key, opt] : chosen->options) {
            if (opt->count() == 0) continue;
            if (chosen->switches.count(key)) values[key] = true;
            else values[key] = parse_flag_value(chosen->values.at(key));
        }
        Params params(chosen->full_name, values);
        Output output(out, params, args);
        return chosen->command->run(params, output);
    } catch (const ConfigError& e) {
        return report_error("config", e.what(), kConfig);
    } catch (const PreconditionError& e) {
        return report_error("precondition", e.what(), kConfig);
    } catch (const ConstructionError& e) {
        return report_error("geometry", std::string(e.what()) + " (member " + std::to_string(e.index()) + ")", kGeometry);
    } catch (const IntegrationError& e) {
        const Vec4& s = e.last_state();
        std::cerr << "reebdyn: integration: " << e.what() << " at t=" << io::format_double(e.time()) << "; last state "
                  << io::format_double(s[0]) << ',' << io::format_double(s[1]) << ',' << io::format_double(s[2]) << ','
                  << io::format_double(s[3]) << '\n';
        try {
            io::write_json(out / "error.json", {{"tool", "reebdyn"},
                                                {"version", kVersion},
                                                {"error", e.what()},
                                                {"time", io::number(e.time())},
                                                {"last_state", io::vec_json(s)}});
        } catch (const std::exception&) {
        }
        return kIntegration;
    } catch (const StarshapedError& e) {
        return report_error("geometry", e.what(), kGeometry);
    } catch (const DomainError& e) {
        return report_error("geometry", e.what(), kGeometry);
    } catch (const DegeneratePointError& e) {
        return report_error("geometry", e.what(), kGeometry);
    } catch (const UnsupportedError& e) {
        return report_error("geometry", e.what(), kGeometry);
    } catch (const ResolutionError& e) {
        return report_error("geometry", e.what(), kGeometry);
    } catch (const Error& e) {
        return report_error("error", e.what(), 1);
    } catch (const std::exception& e) {
        return report_error("error", e.what(), 1);
    }
}
