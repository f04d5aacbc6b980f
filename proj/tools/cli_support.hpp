#ifndef REEBDYN_TOOLS_CLI_SUPPORT_HPP
#define REEBDYN_TOOLS_CLI_SUPPORT_HPP

#include <chrono>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reebdyn/fixtures.hpp"
#include "reebdyn/io.hpp"

namespace reebdyn::cli {

namespace fs = std::filesystem;
using io::json;

/// Parameters of one command: config-file values overridden by flags.
class Params {
public:
    Params(std::string command, json values) : command_(std::move(command)), values_(std::move(values)) {}

    const std::string& command() const { return command_; }
    const json& values() const { return values_; }

    void allow(std::initializer_list<const char*> keys) {
        for (const char* k : keys) allowed_.insert(k);
    }
    void validate() const {
        for (const auto& [k, v] : values_.items())
            if (!allowed_.count(k)) throw ConfigError(command_ + ": unknown field \"" + k + "\"");
    }

    bool has(const char* key) const { return values_.contains(key); }

    template <class T>
    T get(const char* key, T fallback) const {
        return io::get_field<T>(values_, key, command_, fallback);
    }
    template <class T>
    T require(const char* key) const {
        return io::get_field<T>(values_, key, command_);
    }
    std::vector<double> list(const char* key, std::vector<double> fallback = {}) const {
        if (!has(key)) return fallback;
        const json& v = values_.at(key);
        if (v.is_number()) return {v.get<double>()};
        return get<std::vector<double>>(key, fallback);
    }
    const json& raw(const char* key) const {
        if (!has(key)) throw ConfigError(command_ + ": missing field \"" + std::string(key) + "\"");
        return values_.at(key);
    }

private:
    std::string command_;
    json values_;
    std::set<std::string> allowed_;
};

/// Flag text to JSON: numbers and booleans as such, comma lists as arrays,
/// anything else as a string.
inline json parse_flag_value(const std::string& text) {
    if (text.find(',') != std::string::npos) {
        json arr = json::array();
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto end = text.find(',', start);
            const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
            arr.push_back(parse_flag_value(item));
            if (end == std::string::npos) break;
            start = end + 1;
        }
        return arr;
    }
    try {
        std::size_t pos = 0;
        const double d = std::stod(text, &pos);
        if (pos == text.size()) {
            if (text.find_first_of(".eE") == std::string::npos) return json(std::stoll(text));
            return json(d);
        }
    } catch (const std::exception&) {
    }
    if (text == "true") return true;
    if (text == "false") return false;
    return text;
}

inline json strip_metadata(json j) {
    if (j.is_object()) {
        j.erase("version");
        j.erase("generated_by");
    }
    return j;
}

/// A body reference: an inline spec, a shipped fixture name, "hopf", "cube_limit",
/// "cube_p<N>", or a JSON file.
inline Body resolve_body(const json& ref) {
    if (ref.is_object()) return io::body_from_json(strip_metadata(ref));
    if (!ref.is_string()) throw ConfigError("body reference must be a name, a path or an object");
    const auto name = ref.get<std::string>();
    if (name == "cube_limit") return Body::cube_limit();
    if (name == "hopf") return Body::pnorm_cube(2);
    if (name.rfind("cube_p", 0) == 0 && name.size() > 6 &&
        name.find_first_not_of("0123456789", 6) == std::string::npos)
        return Body::pnorm_cube(std::stoi(name.substr(6)));
    for (const auto& [n, b] : fixtures::shipped_bodies())
        if (n == name) return b;
    return io::body_from_json(strip_metadata(io::read_json(name)));
}

/// "cube", "simplex", a JSON file holding {"halfspaces": [...]}, or a body spec with halfspaces.
inline std::vector<Halfspace> resolve_polytope(const json& ref) {
    if (ref.is_string()) {
        const auto name = ref.get<std::string>();
        if (name == "cube") return cube_facets();
        if (name == "simplex") return fixtures::simplex_facets();
        return resolve_polytope(io::read_json(name));
    }
    if (!ref.is_object() || !ref.contains("halfspaces")) throw ConfigError("polytope needs a \"halfspaces\" list");
    return io::halfspaces_from_json(ref.at("halfspaces"));
}

inline geodesic::ConformalMetric resolve_metric(const json& ref) {
    if (ref.is_object()) return io::metric_from_json(strip_metadata(ref));
    if (!ref.is_string()) throw ConfigError("metric reference must be a name, a path or an object");
    const auto name = ref.get<std::string>();
    if (name == "flat") return geodesic::ConformalMetric::flat();
    if (name == "bumpy") return fixtures::bumpy_torus();
    if (name == "weierstrass") return fixtures::weierstrass_torus();
    return io::metric_from_json(strip_metadata(io::read_json(name)));
}

inline FieldKind field_from_string(const std::string& s) {
    if (s == "reeb") return FieldKind::reeb;
    if (s == "hamiltonian") return FieldKind::hamiltonian;
    throw ConfigError("unknown field \"" + s + "\" (expected reeb or hamiltonian)");
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Output sink: every JSON artifact carries the tool version and config echo;
/// wall-clock data goes to <stem>.meta.json only.
class Output {
public:
    Output(fs::path dir, const Params& params, std::vector<std::string> argv)
        : dir_(std::move(dir)), params_(params), argv_(std::move(argv)) {}

    const fs::path& dir() const { return dir_; }

    json envelope() const {
        return {{"tool", "reebdyn"}, {"version", kVersion}, {"command", params_.command()}, {"config", params_.values()}};
    }

    fs::path write_report(const std::string& stem, const json& result) {
        json j = envelope();
        j["result"] = result;
        return write_raw_json(stem + ".json", j, stem);
    }

    fs::path write_raw_json(const std::string& file, const json& j, const std::string& stem) {
        const fs::path p = dir_ / file;
        io::write_json(p, j);
        written_.push_back(p);
        write_meta(stem);
        return p;
    }

    fs::path write_text(const std::string& file, const std::string& text) {
        const fs::path p = dir_ / file;
        io::write_atomic(p, text);
        written_.push_back(p);
        return p;
    }

    const std::vector<fs::path>& written() const { return written_; }

private:
    void write_meta(const std::string& stem) {
        json argv = json::array();
        for (const auto& a : argv_) argv.push_back(a);
        io::write_json(dir_ / (stem + ".meta.json"),
                       {{"tool", "reebdyn"}, {"version", kVersion}, {"created", utc_timestamp()}, {"argv", argv}});
    }

    fs::path dir_;
    const Params& params_;
    std::vector<std::string> argv_;
    std::vector<fs::path> written_;
};

}  // namespace reebdyn::cli

#endif
