#ifndef REEBDYN_ENTROPY_HPP
#define REEBDYN_ENTROPY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "reebdyn/geometry.hpp"
#include "reebdyn/integrate.hpp"
#include "reebdyn/parallel.hpp"
#include "reebdyn/random.hpp"

namespace reebdyn {

enum class EntropyMethod { lyapunov, separated_set };

inline const char* to_string(EntropyMethod m) { return m == EntropyMethod::lyapunov ? "lyapunov" : "separated_set"; }

/// Settings shared by both estimators. For Lyapunov runs `flow.horizon` is T
/// and `flow.renorm_interval` is tau; the separated-set estimator uses
/// `segments`, `epsilon` and `patch_radius` in addition.
struct EstimatorConfig {
    EntropyMethod method = EntropyMethod::lyapunov;
    FieldKind field = FieldKind::reeb;
    FlowConfig flow{};
    std::size_t samples = 10;  // N
    std::uint64_t seed = 0;
    std::size_t segments = 100;  // n
    double epsilon = 0.05;
    double patch_radius = 0.0;   // 0 means epsilon
    unsigned threads = 0;
};

/// A numerical entropy proxy with its ensemble statistics.
struct EntropyEstimate {
    EntropyMethod method = EntropyMethod::lyapunov;
    double value = 0.0;
    double stderr_value = 0.0;  // sample standard deviation / sqrt(N)
    std::size_t requested = 0;
    std::size_t used = 0;
    std::vector<double> per_sample;
    std::vector<std::size_t> excluded;
    bool unreliable = false;
    std::uint64_t seed = 0;
    // config echo
    double horizon = 0.0;
    double renorm_interval = 0.0;
    double epsilon = 0.0;
    std::size_t segments = 0;
    double patch_radius = 0.0;
    // separated-set details
    std::size_t initial_count = 0;
    std::size_t final_count = 0;
    // uniform-in-direction sampling; Liouville density rho^4 is recorded, not applied
    std::string sampling = "uniform_direction";
    std::vector<double> liouville_weights;
    double liouville_weighted_value = 0.0;
};

struct EnsembleStats {
    double mean = 0.0;
    double stderr_value = 0.0;
};

/// Mean and standard error in index order; stderr is NaN for fewer than two values.
inline EnsembleStats ensemble_stats(const std::vector<double>& v) {
    EnsembleStats s;
    if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() < 2) {
        s.stderr_value = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_value = std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
    return s;
}

/// Initial data for ensemble members: a point on the invariant level, a unit
/// tangent vector there, and a point near a given centre for local patches.
template <class S>
concept EnsembleSampler = requires(const S& s, Rng& rng, const Vec4& x) {
    { s.point(rng) } -> std::convertible_to<Vec4>;
    { s.tangent(x, rng) } -> std::convertible_to<Vec4>;
    { s.near(x, 0.1, rng) } -> std::convertible_to<Vec4>;
    { s.weight(x) } -> std::convertible_to<double>;
};

/// Samples on Sigma = {G = 1}: uniform directions pushed radially to the level set.
class BodySampler {
public:
    explicit BodySampler(Body body) : body_(std::move(body)) {}

    Vec4 point(Rng& rng) const {
        const Vec4 u = rng.on_sphere();
        return radial_function(body_, u) * u;
    }
    Vec4 tangent(const Vec4& x, Rng& rng) const {
        const Vec4 n = body_.gradient(x).normalized();
        for (;;) {
            Vec4 v = rng.in_ball();
            v -= v.dot(n) * n;
            if (v.norm() > 1e-3) return v.normalized();
        }
    }
    /// Radial image of a direction within `radius` of the direction of x.
    Vec4 near(const Vec4& x, double radius, Rng& rng) const {
        const Vec4 u = (x.normalized() + radius * rng.in_ball()).normalized();
        return radial_function(body_, u) * u;
    }
    /// Density of the contact volume lambda0 ^ d lambda0 relative to the direction measure.
    double weight(const Vec4& x) const { return std::pow(x.norm(), 4); }

private:
    Body body_;
};

namespace detail {

inline void finalize(EntropyEstimate& est, const std::vector<double>& values, const std::vector<double>& weights,
                     const std::vector<bool>& ok) {
    std::vector<double> kept, kept_w;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (ok[i]) {
            kept.push_back(values[i]);
            kept_w.push_back(weights[i]);
        } else {
            est.excluded.push_back(i);
        }
    }
    est.per_sample = kept;
    est.liouville_weights = kept_w;
    est.used = kept.size();
    const auto st = ensemble_stats(kept);
    est.value = st.mean;
    est.stderr_value = st.stderr_value;
    const double wsum = std::accumulate(kept_w.begin(), kept_w.end(), 0.0);
    double wv = 0.0;
    for (std::size_t i = 0; i < kept.size(); ++i) wv += kept_w[i] * kept[i];
    est.liouville_weighted_value = wsum > 0.0 ? wv / wsum : 0.0;
    est.unreliable = static_cast<double>(est.excluded.size()) > 0.1 * static_cast<double>(est.requested) ||
                     est.used < 2;
}

}  // namespace detail

/// Ensemble of largest-Lyapunov-exponent estimates (total log-stretch / T of
/// a renormalized tangent vector). Member i uses the seed derive_seed(seed, i),
/// so results do not depend on scheduling. Failed members are excluded; more
/// than 10% exclusions mark the estimate unreliable.
template <FlowModel M, EnsembleSampler S>
EntropyEstimate lyapunov_ensemble(const M& model, const S& sampler, const EstimatorConfig& cfg) {
    if (cfg.samples < 2) throw PreconditionError("lyapunov estimate needs N >= 2");
    if (!(cfg.flow.horizon > 0.0)) throw PreconditionError("lyapunov estimate needs T > 0");
    cfg.flow.validate();

    EntropyEstimate est;
    est.method = EntropyMethod::lyapunov;
    est.requested = cfg.samples;
    est.seed = cfg.seed;
    est.horizon = cfg.flow.horizon;
    est.renorm_interval = cfg.flow.renorm_interval;

    FlowConfig fc = cfg.flow;
    fc.record_trajectory = false;
    fc.output_times.clear();
    std::vector<double> values(cfg.samples, 0.0), weights(cfg.samples, 0.0);
    std::vector<bool> ok(cfg.samples, false);
    parallel_for(
        cfg.samples,
        [&](std::size_t i) {
            Rng rng(derive_seed(cfg.seed, i));
            try {
                const Vec4 x0 = sampler.point(rng);
                const Vec4 v0 = sampler.tangent(x0, rng);
                const FlowRun run = integrate_model_tangent(model, x0, v0, fc);
                values[i] = run.lyapunov();
                weights[i] = sampler.weight(x0);
                ok[i] = std::isfinite(values[i]);
            } catch (const Error&) {
                ok[i] = false;
            }
        },
        cfg.threads);
    detail::finalize(est, values, weights, ok);
    return est;
}

inline EntropyEstimate lyapunov_estimate(const Body& body, const EstimatorConfig& cfg) {
    return lyapunov_ensemble(BodyFlow(body, cfg.field), BodySampler(body), cfg);
}

/// Greedy maximal subset, in index order, of trajectories pairwise separated
/// by more than epsilon in the Bowen metric max_k |x_a(t_k) - x_b(t_k)| over
/// the snapshots [0, upto).
inline std::size_t greedy_separated_count(const std::vector<std::vector<Vec4>>& snaps, std::size_t upto, double eps) {
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < snaps.size(); ++i) {
        bool separated = true;
        for (std::size_t j : chosen) {
            double d = 0.0;
            for (std::size_t k = 0; k < upto && d <= eps; ++k) d = std::max(d, (snaps[i][k] - snaps[j][k]).norm());
            if (d <= eps) {
                separated = false;
                break;
            }
        }
        if (separated) chosen.push_back(i);
    }
    return chosen.size();
}

/// Bowen separated-set growth rate log(s_T / s_0) / T.
///
/// N initial points are drawn in a patch of angular radius patch_radius
/// (default epsilon) around a seed-chosen centre, integrated for time T with
/// n + 1 equispaced snapshots, and s_T, s_0 are the greedy (n, epsilon)- and
/// (0, epsilon)-separated counts. The rate only lower-bounds the entropy in
/// the limit N, T -> infinity.
template <FlowModel M, EnsembleSampler S>
EntropyEstimate separated_set_ensemble(const M& model, const S& sampler, const EstimatorConfig& cfg) {
    if (!(cfg.epsilon > 0.0)) throw PreconditionError("separation radius must be positive");
    if (cfg.segments < 2) throw PreconditionError("segment count must be >= 2");
    if (cfg.samples < 1) throw PreconditionError("separated-set estimate needs N >= 1");
    const double T = cfg.flow.horizon;
    if (!(T > 0.0)) throw PreconditionError("separated-set estimate needs T > 0");
    cfg.flow.validate();

    EntropyEstimate est;
    est.method = EntropyMethod::separated_set;
    est.requested = cfg.samples;
    est.seed = cfg.seed;
    est.horizon = T;
    est.epsilon = cfg.epsilon;
    est.segments = cfg.segments;
    est.patch_radius = cfg.patch_radius > 0.0 ? cfg.patch_radius : cfg.epsilon;

    Rng centre_rng(derive_seed(cfg.seed, std::numeric_limits<std::uint64_t>::max()));
    const Vec4 centre = sampler.point(centre_rng);

    FlowConfig fc = cfg.flow;
    fc.record_trajectory = true;
    fc.output_times.clear();
    for (std::size_t k = 1; k <= cfg.segments; ++k)
        fc.output_times.push_back(T * static_cast<double>(k) / static_cast<double>(cfg.segments));

    std::vector<std::vector<Vec4>> snaps(cfg.samples);
    std::vector<bool> ok(cfg.samples, false);
    parallel_for(
        cfg.samples,
        [&](std::size_t i) {
            Rng rng(derive_seed(cfg.seed, i));
            try {
                const Vec4 x0 = sampler.near(centre, est.patch_radius, rng);
                const FlowRun run = integrate_model(model, x0, fc);
                snaps[i] = run.points;
                ok[i] = snaps[i].size() == cfg.segments + 1;
            } catch (const Error&) {
                ok[i] = false;
            }
        },
        cfg.threads);

    std::vector<std::vector<Vec4>> kept;
    for (std::size_t i = 0; i < cfg.samples; ++i) {
        if (ok[i]) kept.push_back(std::move(snaps[i]));
        else est.excluded.push_back(i);
    }
    est.used = kept.size();
    est.unreliable = static_cast<double>(est.excluded.size()) > 0.1 * static_cast<double>(cfg.samples);
    if (kept.empty()) {
        est.value = std::numeric_limits<double>::quiet_NaN();
        est.unreliable = true;
        return est;
    }
    est.initial_count = greedy_separated_count(kept, 1, cfg.epsilon);
    est.final_count = greedy_separated_count(kept, cfg.segments + 1, cfg.epsilon);
    est.value = std::log(static_cast<double>(est.final_count) / static_cast<double>(est.initial_count)) / T;
    est.per_sample = {est.value};
    est.stderr_value = std::numeric_limits<double>::quiet_NaN();
    return est;
}

inline EntropyEstimate separated_set_estimate(const Body& body, const EstimatorConfig& cfg) {
    return separated_set_ensemble(BodyFlow(body, cfg.field), BodySampler(body), cfg);
}

inline EntropyEstimate estimate_entropy(const Body& body, const EstimatorConfig& cfg) {
    return cfg.method == EntropyMethod::lyapunov ? lyapunov_estimate(body, cfg) : separated_set_estimate(body, cfg);
}

/// Radial graphs over a fixed base whose perturbation is damped by
/// exp(-|k|^2/s^2) for each schedule value s; the limit is the undamped graph.
/// The C0 distance to the limit must strictly decrease along the schedule.
inline SmoothingFamily radial_graph_family(const Body& base, const TrigPolynomial& f, const std::vector<double>& schedule,
                                           std::size_t resolution = 20000) {
    if (schedule.empty()) throw PreconditionError("smoothing schedule is empty");
    for (std::size_t i = 1; i < schedule.size(); ++i)
        if (!(schedule[i] > schedule[i - 1])) throw PreconditionError("smoothing schedule must be strictly increasing");
    SmoothingFamily fam{{}, schedule, {}, Body::radial_graph(base, f)};
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        Body member = Body::radial_graph(base, f.smoothed(schedule[i]));
        const auto chk = check_starshaped(member, 1000);
        if (!chk.passed) throw ConstructionError("radial graph member failed the starshapedness check", i);
        fam.c0_to_limit.push_back(c0_distance(member, fam.limit, resolution).value);
        if (i > 0 && !(fam.c0_to_limit[i] < fam.c0_to_limit[i - 1]))
            throw ConstructionError("C0 distance to the limit does not decrease along the schedule", i);
        fam.members.push_back(std::move(member));
    }
    return fam;
}

/// Per-member estimates of a smoothing sequence and the tail minimum, the
/// finite-schedule stand-in for liminf_j h(M_j).
struct SequenceReport {
    std::string family;
    std::vector<double> schedule;
    std::vector<double> c0_distances;
    std::vector<EntropyEstimate> estimates;
    double tail_minimum = 0.0;
};

/// Minimum over the last ceil(L/2) values.
inline double tail_minimum(const std::vector<double>& values) {
    if (values.empty()) throw PreconditionError("tail minimum of an empty sequence");
    const std::size_t tail = (values.size() + 1) / 2;
    return *std::min_element(values.end() - static_cast<std::ptrdiff_t>(tail), values.end());
}

inline SequenceReport sequence_entropy(const SmoothingFamily& family, const EstimatorConfig& cfg,
                                       std::string family_name = "") {
    SequenceReport rep;
    rep.family = std::move(family_name);
    rep.schedule = family.schedule;
    rep.c0_distances = family.c0_to_limit;
    std::vector<double> values;
    for (std::size_t j = 0; j < family.members.size(); ++j) {
        rep.estimates.push_back(estimate_entropy(family.members[j], cfg));
        values.push_back(rep.estimates.back().value);
    }
    rep.tail_minimum = tail_minimum(values);
    return rep;
}

}  // namespace reebdyn

#endif
