#ifndef REEBDYN_IO_HPP
#define REEBDYN_IO_HPP

// JSON and CSV serialization of specs and reports. Needs nlohmann/json
// (vendor/json.hpp) on the include path.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "reebdyn/body.hpp"
#include "reebdyn/entropy.hpp"
#include "reebdyn/geodesic.hpp"
#include "reebdyn/geometry.hpp"
#include "reebdyn/integrate.hpp"
#include "reebdyn/types.hpp"

namespace reebdyn::io {

using json = nlohmann::ordered_json;

/// Throws ConfigError naming the first key of `j` outside `allowed`.
inline void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError(where + ": unknown field \"" + k + "\"");
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing field \"" + std::string(key) + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + ": field \"" + std::string(key) + "\" has the wrong type");
    }
}

template <class T>
T get_field(const json& j, const char* key, const std::string& where, T fallback) {
    return j.contains(key) ? get_field<T>(j, key, where) : fallback;
}

inline json vec_json(const Vec4& v) { return json::array({v[0] + 0.0, v[1] + 0.0, v[2] + 0.0, v[3] + 0.0}); }

inline Vec4 vec_from_json(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(where + ": expected an array of 4 numbers");
    Vec4 v;
    for (int i = 0; i < 4; ++i) {
        if (!j[i].is_number()) throw ConfigError(where + ": expected an array of 4 numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

/// Doubles that are not finite become null.
inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json numbers(const std::vector<double>& v) {
    json a = json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

// ---------------------------------------------------------------- bodies

inline json halfspaces_json(const std::vector<Halfspace>& hs) {
    json a = json::array();
    for (const auto& h : hs) a.push_back({{"normal", vec_json(h.normal)}, {"offset", h.offset}});
    return a;
}

inline std::vector<Halfspace> halfspaces_from_json(const json& j) {
    if (!j.is_array()) throw ConfigError("halfspaces: expected an array");
    std::vector<Halfspace> hs;
    for (const auto& h : j) {
        require_keys(h, {"normal", "offset"}, "halfspace");
        Vec4 n = vec_from_json(h.at("normal"), "halfspace.normal");
        // normals in files are normalized up to print precision
        if (n.norm() > 0.0 && std::abs(n.norm() - 1.0) < 1e-9) n.normalize();
        hs.emplace_back(n, get_field<double>(h, "offset", "halfspace"));
    }
    return hs;
}

inline json trig_json(const TrigPolynomial& f) {
    json terms = json::array();
    for (const auto& t : f.terms())
        terms.push_back({{"coefficient", t.coefficient},
                         {"frequency", json::array({t.frequency[0], t.frequency[1], t.frequency[2], t.frequency[3]})},
                         {"phase", t.phase}});
    return {{"terms", terms}};
}

inline TrigPolynomial trig_from_json(const json& j) {
    require_keys(j, {"terms"}, "perturbation");
    std::vector<TrigTerm> terms;
    for (const auto& t : get_field<json>(j, "terms", "perturbation")) {
        require_keys(t, {"coefficient", "frequency", "phase"}, "perturbation term");
        const auto k = get_field<std::vector<int>>(t, "frequency", "perturbation term");
        if (k.size() != 4) throw ConfigError("perturbation term: frequency needs 4 integers");
        terms.push_back({get_field<double>(t, "coefficient", "perturbation term"), {k[0], k[1], k[2], k[3]},
                         get_field<double>(t, "phase", "perturbation term", 0.0)});
    }
    return TrigPolynomial(std::move(terms));
}

inline json body_json(const Body& body) {
    return std::visit(
        [](const auto& b) -> json {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, PNormCube>) {
                return {{"kind", "pnorm_cube"}, {"p", b.p}};
            } else if constexpr (std::is_same_v<T, SmoothedPolytope>) {
                return {{"kind", "smoothed_polytope"},
                        {"halfspaces", halfspaces_json(b.halfspaces)},
                        {"sharpness", b.sharpness},
                        {"scheme", to_string(b.scheme)}};
            } else if constexpr (std::is_same_v<T, RadialGraph>) {
                return {{"kind", "radial_graph"}, {"base", body_json(*b.base)}, {"perturbation", trig_json(b.perturbation)}};
            } else if constexpr (std::is_same_v<T, Quadric>) {
                json rows = json::array();
                for (int i = 0; i < 4; ++i)
                    rows.push_back(json::array({b.coefficients(i, 0), b.coefficients(i, 1), b.coefficients(i, 2),
                                                b.coefficients(i, 3)}));
                return {{"kind", "quadric"}, {"matrix", rows}};
            } else {
                return {{"kind", "polytope_gauge"}, {"halfspaces", halfspaces_json(b.halfspaces)}};
            }
        },
        body.variant());
}

inline SmoothingScheme scheme_from_string(const std::string& s) {
    if (s == "pnorm") return SmoothingScheme::pnorm;
    if (s == "log_sum_exp" || s == "lse") return SmoothingScheme::log_sum_exp;
    throw ConfigError("unknown smoothing scheme \"" + s + "\"");
}

inline Body body_from_json(const json& j) {
    const auto kind = get_field<std::string>(j, "kind", "body");
    if (kind == "pnorm_cube") {
        require_keys(j, {"kind", "p", "version"}, "pnorm_cube");
        return Body::pnorm_cube(get_field<int>(j, "p", "pnorm_cube"));
    }
    if (kind == "smoothed_polytope") {
        require_keys(j, {"kind", "halfspaces", "sharpness", "scheme", "version"}, "smoothed_polytope");
        return Body::smoothed_polytope(halfspaces_from_json(j.at("halfspaces")),
                                       get_field<double>(j, "sharpness", "smoothed_polytope"),
                                       scheme_from_string(get_field<std::string>(j, "scheme", "smoothed_polytope")));
    }
    if (kind == "radial_graph") {
        require_keys(j, {"kind", "base", "perturbation", "version"}, "radial_graph");
        return Body::radial_graph(body_from_json(j.at("base")), trig_from_json(j.at("perturbation")));
    }
    if (kind == "quadric") {
        require_keys(j, {"kind", "matrix", "diagonal", "version"}, "quadric");
        if (j.contains("diagonal")) {
            const auto d = get_field<std::vector<double>>(j, "diagonal", "quadric");
            if (d.size() != 4) throw ConfigError("quadric: diagonal needs 4 numbers");
            return Body::quadric_diagonal(d[0], d[1], d[2], d[3]);
        }
        const auto rows = get_field<std::vector<std::vector<double>>>(j, "matrix", "quadric");
        if (rows.size() != 4) throw ConfigError("quadric: matrix needs 4 rows");
        Mat4 a;
        for (int i = 0; i < 4; ++i) {
            if (rows[i].size() != 4) throw ConfigError("quadric: matrix rows need 4 entries");
            for (int k = 0; k < 4; ++k) a(i, k) = rows[i][k];
        }
        return Body::quadric(a);
    }
    if (kind == "polytope_gauge") {
        require_keys(j, {"kind", "halfspaces", "version"}, "polytope_gauge");
        return Body::polytope_gauge(halfspaces_from_json(j.at("halfspaces")));
    }
    throw ConfigError("unknown body kind \"" + kind + "\"");
}

// ---------------------------------------------------------------- metrics

inline json metric_json(const geodesic::ConformalMetric& m) {
    using namespace geodesic;
    if (const auto* w = std::get_if<WeierstrassFactor>(&m.factor()))
        return {{"kind", "weierstrass"}, {"amplitude", w->amplitude}, {"a", w->a},
                {"b", w->b},             {"terms", w->terms},         {"constant", w->constant}};
    if (const auto* s = std::get_if<MollifiedFactor>(&m.factor()))
        return {{"kind", "mollified"}, {"base", metric_json(*s->base)}, {"sigma", s->sigma}, {"resolution", s->resolution}};
    json modes = json::array();
    for (const auto& md : m.modes())
        modes.push_back({{"coefficient", md.coefficient}, {"k", json::array({md.k1, md.k2})}, {"phase", md.phase}});
    return {{"kind", "fourier"}, {"constant", m.constant_term()}, {"modes", modes}};
}

inline geodesic::ConformalMetric metric_from_json(const json& j) {
    using namespace geodesic;
    const auto kind = get_field<std::string>(j, "kind", "metric");
    if (kind == "fourier") {
        require_keys(j, {"kind", "constant", "modes", "version"}, "fourier metric");
        std::vector<FourierMode> modes;
        for (const auto& md : get_field<json>(j, "modes", "fourier metric", json::array())) {
            require_keys(md, {"coefficient", "k", "phase"}, "fourier mode");
            const auto k = get_field<std::vector<int>>(md, "k", "fourier mode");
            if (k.size() != 2) throw ConfigError("fourier mode: k needs 2 integers");
            modes.push_back({get_field<double>(md, "coefficient", "fourier mode"), k[0], k[1],
                             get_field<double>(md, "phase", "fourier mode", 0.0)});
        }
        return ConformalMetric::fourier(std::move(modes), get_field<double>(j, "constant", "fourier metric", 0.0));
    }
    if (kind == "weierstrass") {
        require_keys(j, {"kind", "amplitude", "a", "b", "terms", "constant", "version"}, "weierstrass metric");
        return ConformalMetric::weierstrass(
            get_field<double>(j, "amplitude", "weierstrass metric"), get_field<double>(j, "a", "weierstrass metric"),
            get_field<int>(j, "b", "weierstrass metric"), get_field<int>(j, "terms", "weierstrass metric"),
            get_field<double>(j, "constant", "weierstrass metric", 0.0));
    }
    if (kind == "mollified") {
        require_keys(j, {"kind", "base", "sigma", "resolution", "version"}, "mollified metric");
        return ConformalMetric::mollified(metric_from_json(j.at("base")), get_field<double>(j, "sigma", "mollified metric"),
                                          get_field<std::size_t>(j, "resolution", "mollified metric", 4096));
    }
    throw ConfigError("unknown metric kind \"" + kind + "\"");
}

// ---------------------------------------------------------------- reports

inline json distance_json(const DistanceReport& r) {
    return {{"kind", "c0_distance"},
            {"value", r.value},
            {"grid_value", r.grid_value},
            {"coarse_value", r.coarse_value},
            {"directions", r.directions},
            {"coarse_directions", r.coarse_directions},
            {"argmax", vec_json(r.argmax)}};
}

inline json distance_json(const C1DistanceReport& r) {
    return {{"kind", "c1_distance"},
            {"value", r.value},
            {"c0", r.c0},
            {"max_angle", r.max_angle},
            {"coarse_c0", r.coarse_c0},
            {"coarse_max_angle", r.coarse_max_angle},
            {"directions", r.directions},
            {"convexity_samples", r.convexity_samples}};
}

inline json estimate_json(const EntropyEstimate& e) {
    json j = {{"method", to_string(e.method)},
              {"value", number(e.value)},
              {"stderr", number(e.stderr_value)},
              {"N", e.requested},
              {"used", e.used},
              {"unreliable", e.unreliable},
              {"seed", e.seed},
              {"per_sample", numbers(e.per_sample)},
              {"excluded", e.excluded}};
    json cfg = {{"T", e.horizon}};
    if (e.method == EntropyMethod::lyapunov) {
        cfg["tau"] = e.renorm_interval;
        j["sampling"] = e.sampling;
        j["liouville_weights"] = numbers(e.liouville_weights);
        j["liouville_weighted_value"] = number(e.liouville_weighted_value);
    } else {
        cfg["epsilon"] = e.epsilon;
        cfg["n"] = e.segments;
        cfg["patch_radius"] = e.patch_radius;
        j["initial_count"] = e.initial_count;
        j["final_count"] = e.final_count;
    }
    j["estimator"] = cfg;
    return j;
}

inline json sequence_json(const SequenceReport& r) {
    json members = json::array();
    for (std::size_t i = 0; i < r.estimates.size(); ++i)
        members.push_back({{"sharpness", r.schedule[i]}, {"c0_distance", r.c0_distances[i]}, {"estimate", estimate_json(r.estimates[i])}});
    return {{"family", r.family},
            {"schedule", r.schedule},
            {"c0_distances", r.c0_distances},
            {"tail_minimum", number(r.tail_minimum)},
            {"tail_length", (r.schedule.size() + 1) / 2},
            {"members", members}};
}

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Columns: sharpness, c0_distance, entropy_value, stderr.
inline std::string sequence_csv(const SequenceReport& r) {
    std::ostringstream os;
    os << "sharpness,c0_distance,entropy_value,stderr\n";
    for (std::size_t i = 0; i < r.estimates.size(); ++i)
        os << format_double(r.schedule[i]) << ',' << format_double(r.c0_distances[i]) << ','
           << format_double(r.estimates[i].value) << ',' << format_double(r.estimates[i].stderr_value) << '\n';
    return os.str();
}

/// Columns: t, x1, y1, x2, y2, G_drift, one drift column per monitor, log_stretch.
inline std::string flow_csv(const FlowRun& run, const std::vector<std::string>& coordinate_names = {"x1", "y1", "x2", "y2"}) {
    std::ostringstream os;
    os << 't';
    for (const auto& c : coordinate_names) os << ',' << c;
    os << ",G_drift";
    for (const auto& m : run.monitor_names) os << ',' << m << "_drift";
    os << ",log_stretch\n";
    for (std::size_t i = 0; i < run.times.size(); ++i) {
        os << format_double(run.times[i]);
        for (int k = 0; k < 4; ++k) os << ',' << format_double(run.points[i][k]);
        os << ',' << format_double(run.level_drift[i]);
        for (double d : run.monitor_drift[i]) os << ',' << format_double(d);
        os << ',' << format_double(run.log_stretch[i]) << '\n';
    }
    return os.str();
}

inline json flow_summary_json(const FlowRun& run) {
    json monitors = json::object();
    for (std::size_t i = 0; i < run.monitor_names.size(); ++i) monitors[run.monitor_names[i]] = run.max_monitor_drift[i];
    json j = {{"field", run.field},
              {"final_time", run.final_time},
              {"final_clock", run.final_clock},
              {"initial", vec_json(run.initial)},
              {"final_state", vec_json(run.final_state)},
              {"return_distance", (run.final_state - run.initial).norm()},
              {"samples", run.times.size()},
              {"max_level_drift", run.max_level_drift},
              {"max_monitor_drift", monitors},
              {"accepted_steps", run.accepted},
              {"rejected_steps", run.rejected},
              {"projections", run.projections}};
    if (run.tangent) {
        j["degenerate"] = run.degenerate;
        j["final_tangent"] = vec_json(run.final_tangent);
        j["total_log_stretch"] = run.total_log_stretch;
        j["lyapunov"] = run.lyapunov();
        j["max_tangent_residual"] = run.max_tangent_residual;
        j["renormalizations"] = run.stretch_increments.size();
    }
    return j;
}

// ---------------------------------------------------------------- files

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open " + tmp.string() + " for writing");
        os << content;
        os.flush();
        if (!os) throw Error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) { write_atomic(path, j.dump(2) + "\n"); }

inline json read_json(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

}  // namespace reebdyn::io

#endif
