#ifndef REEBDYN_INTEGRATE_HPP
#define REEBDYN_INTEGRATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "reebdyn/dopri5.hpp"
#include "reebdyn/errors.hpp"
#include "reebdyn/flow.hpp"

namespace reebdyn {

struct FlowConfig {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double horizon = 0.0;          // T; negative integrates backward
    double renorm_interval = 1.0;  // tau, tangent runs only
    double projection_threshold = 1e-9;
    std::uint64_t seed = 0;
    double sample_interval = 0.0;  // 0 records every accepted step
    bool record_trajectory = true; // false keeps only the first and last sample
    std::vector<double> output_times;  // explicit sample times; overrides sample_interval

    void validate() const {
        if (!(rtol > 0.0) || !(atol > 0.0)) throw PreconditionError("tolerances must be positive");
        if (!(renorm_interval > 0.0)) throw PreconditionError("renormalization interval must be positive");
        if (!(projection_threshold > 0.0)) throw PreconditionError("projection threshold must be positive");
        if (!(max_step > 0.0)) throw PreconditionError("max step must be positive");
        if (sample_interval < 0.0) throw PreconditionError("sample interval must be non-negative");
        if (!std::isfinite(horizon)) throw PreconditionError("horizon must be finite");
    }

    Tolerances tolerances() const { return {rtol, atol, max_step, 50'000'000}; }
};

/// Record of one integrated trajectory.
struct FlowRun {
    std::string field;
    std::vector<double> times;
    std::vector<double> clock;  // Reeb time at each sample (Hamiltonian time after reparametrize)
    std::vector<Vec4> points;
    std::vector<double> level_drift;  // level - target before projection
    std::vector<std::string> monitor_names;
    std::vector<std::vector<double>> monitor_drift;  // [sample][monitor]
    std::vector<double> log_stretch;                 // cumulative log |v|, tangent runs

    std::vector<double> stretch_increments;  // log |v| at each renormalization
    std::vector<double> max_monitor_drift;
    double max_level_drift = 0.0;      // max |level - target| before projection
    double max_tangent_residual = 0.0;  // max |d level(v)| / (|grad level| |v|)
    double total_log_stretch = 0.0;
    bool tangent = false;
    bool degenerate = false;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t projections = 0;

    Vec4 initial = Vec4::Zero();
    Vec4 final_state = Vec4::Zero();
    Vec4 final_tangent = Vec4::Zero();
    double final_time = 0.0;
    double final_clock = 0.0;

    /// Largest Lyapunov exponent estimate total_log_stretch / |T|.
    double lyapunov() const { return final_time == 0.0 ? 0.0 : total_log_stretch / std::abs(final_time); }
};

namespace detail {

struct Stop {
    double t;
    bool record;
    bool renormalize;
};

inline std::vector<Stop> build_stops(const FlowConfig& cfg, bool tangent) {
    const double T = cfg.horizon;
    const double dir = T >= 0.0 ? 1.0 : -1.0;
    std::vector<Stop> stops;
    auto within = [&](double t) { return t * dir > 0.0 && t * dir <= std::abs(T); };
    if (!cfg.output_times.empty()) {
        for (std::size_t i = 0; i < cfg.output_times.size(); ++i) {
            const double t = cfg.output_times[i];
            if (!within(t)) throw PreconditionError("output time outside (0, T]");
            if (i > 0 && !((t - cfg.output_times[i - 1]) * dir > 0.0))
                throw PreconditionError("output times must be strictly monotone in the integration direction");
            stops.push_back({t, true, false});
        }
    } else if (cfg.sample_interval > 0.0 && cfg.record_trajectory) {
        for (std::size_t k = 1;; ++k) {
            const double t = dir * static_cast<double>(k) * cfg.sample_interval;
            if (!within(t)) break;
            stops.push_back({t, true, false});
        }
    }
    if (tangent) {
        for (std::size_t k = 1;; ++k) {
            const double t = dir * static_cast<double>(k) * cfg.renorm_interval;
            if (!within(t)) break;
            stops.push_back({t, false, true});
        }
    }
    stops.push_back({T, cfg.output_times.empty(), tangent});
    std::stable_sort(stops.begin(), stops.end(), [dir](const Stop& a, const Stop& b) { return a.t * dir < b.t * dir; });
    // Merge stops that coincide up to round-off.
    std::vector<Stop> merged;
    for (const auto& s : stops) {
        if (!merged.empty() && std::abs(s.t - merged.back().t) <= 1e-12 * std::max(1.0, std::abs(s.t))) {
            merged.back().record = merged.back().record || s.record;
            merged.back().renormalize = merged.back().renormalize || s.renormalize;
            merged.back().t = s.t == T ? T : merged.back().t;
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

/// Shared driver for plain and tangent runs. Dim is 5 (x, clock) or 9 (x, v, clock).
template <int Dim, FlowModel M>
FlowRun run_flow(const M& model, const Vec4& x0, const Vec4& v0, const FlowConfig& cfg,
                 const std::vector<Integral>& monitors, const char* field_name) {
    static_assert(Dim == 5 || Dim == 9);
    constexpr bool tangent = Dim == 9;
    using State = Eigen::Matrix<double, Dim, 1>;
    cfg.validate();
    if (std::abs(model.level(x0) - model.target_level()) > 1e-8)
        throw PreconditionError("initial point is not on the level set");

    FlowRun run;
    run.field = field_name;
    run.tangent = tangent;
    run.initial = x0;
    for (const auto& m : monitors) run.monitor_names.push_back(m.name);
    run.max_monitor_drift.assign(monitors.size(), 0.0);
    std::vector<double> monitor0;
    for (const auto& m : monitors) monitor0.push_back(m.evaluate(x0));

    State y0 = State::Zero();
    y0.template head<4>() = x0;
    if constexpr (tangent) {
        const Vec4 g = model.level_gradient(x0);
        if (v0.norm() > 0.0 && std::abs(g.dot(v0)) > 1e-10 * g.norm() * v0.norm())
            throw PreconditionError("initial tangent vector is not tangent to the level set");
        run.degenerate = v0.norm() == 0.0;
        y0.template segment<4>(4) = run.degenerate ? v0 : Vec4(v0.normalized());
    }

    double stretch_total = 0.0;
    double last_level_drift = 0.0;
    std::vector<double> last_monitor(monitors.size(), 0.0);

    auto record = [&](double t, const State& y) {
        run.times.push_back(t);
        run.clock.push_back(y[Dim - 1]);
        run.points.push_back(y.template head<4>());
        run.level_drift.push_back(last_level_drift);
        run.monitor_drift.push_back(last_monitor);
        double ls = stretch_total;
        if constexpr (tangent) {
            const double n = y.template segment<4>(4).norm();
            if (!run.degenerate && n > 0.0) ls += std::log(n);
        }
        run.log_stretch.push_back(ls);
    };
    record(0.0, y0);

    auto rhs = [&model](const State& y) -> State {
        State dy;
        const Vec4 x = y.template head<4>();
        dy.template head<4>() = model.field(x);
        if constexpr (tangent) dy.template segment<4>(4) = model.jacobian(x) * Vec4(y.template segment<4>(4));
        dy[Dim - 1] = model.clock_rate(x);
        return dy;
    };

    const bool every_step = cfg.record_trajectory && cfg.output_times.empty() && cfg.sample_interval == 0.0;
    auto on_accept = [&](double t, State& y) {
        Vec4 x = y.template head<4>();
        last_level_drift = model.level(x) - model.target_level();
        run.max_level_drift = std::max(run.max_level_drift, std::abs(last_level_drift));
        for (std::size_t i = 0; i < monitors.size(); ++i) {
            last_monitor[i] = std::abs(monitors[i].evaluate(x) - monitor0[i]);
            run.max_monitor_drift[i] = std::max(run.max_monitor_drift[i], last_monitor[i]);
        }
        if constexpr (tangent) {
            const Vec4 v = y.template segment<4>(4);
            const Vec4 g = model.level_gradient(x);
            const double denom = g.norm() * v.norm();
            if (denom > 0.0) run.max_tangent_residual = std::max(run.max_tangent_residual, std::abs(g.dot(v)) / denom);
        }
        bool modified = false;
        if (std::abs(last_level_drift) > cfg.projection_threshold) {
            y.template head<4>() = model.project(x);
            ++run.projections;
            modified = true;
        }
        if (every_step) record(t, y);
        return modified;
    };

    if (cfg.horizon != 0.0) {
        Dopri5<Dim, decltype(rhs)> stepper(rhs, y0, 0.0, cfg.tolerances());
        try {
            for (const auto& stop : build_stops(cfg, tangent)) {
                stepper.advance_to(stop.t, on_accept);
                State y = stepper.state();
                if (stop.record && !every_step) record(stop.t, y);
                if constexpr (tangent) {
                    if (stop.renormalize && !run.degenerate) {
                        const double n = y.template segment<4>(4).norm();
                        const double inc = std::log(n);
                        run.stretch_increments.push_back(inc);
                        stretch_total += inc;
                        y.template segment<4>(4) /= n;
                        stepper.set_state(y);
                    }
                }
            }
        } catch (const StepFailure& e) {
            throw IntegrationError(std::string("integration failed: ") + e.what(), e.time(),
                                   Vec4(stepper.state().template head<4>()));
        }
        run.accepted = stepper.accepted();
        run.rejected = stepper.rejected();
        const State& y = stepper.state();
        run.final_state = y.template head<4>();
        if constexpr (tangent) run.final_tangent = y.template segment<4>(4);
        run.final_clock = y[Dim - 1];
    } else {
        run.final_state = x0;
        if constexpr (tangent) run.final_tangent = y0.template segment<4>(4);
    }
    run.final_time = cfg.horizon;
    run.total_log_stretch = stretch_total;
    return run;
}

}  // namespace detail

/// Integrates a level-preserving flow from x0 over the configured horizon.
template <FlowModel M>
FlowRun integrate_model(const M& model, const Vec4& x0, const FlowConfig& cfg,
                        const std::vector<Integral>& monitors = {}, const char* name = "flow") {
    return detail::run_flow<5>(model, x0, Vec4::Zero(), cfg, monitors, name);
}

/// Integrates the coupled state/variational system (x, v)' = (F(x), DF(x) v),
/// renormalizing v every renorm_interval and logging log |v| increments.
template <FlowModel M>
FlowRun integrate_model_tangent(const M& model, const Vec4& x0, const Vec4& v0, const FlowConfig& cfg,
                                const std::vector<Integral>& monitors = {}, const char* name = "flow") {
    return detail::run_flow<9>(model, x0, v0, cfg, monitors, name);
}

inline FlowRun integrate_flow(const Body& body, FieldKind field, const Vec4& x0, const FlowConfig& cfg,
                              const std::vector<Integral>& monitors = {}) {
    return integrate_model(BodyFlow(body, field), x0, cfg, monitors, to_string(field));
}

inline FlowRun integrate_tangent_flow(const Body& body, FieldKind field, const Vec4& x0, const Vec4& v0,
                                      const FlowConfig& cfg, const std::vector<Integral>& monitors = {}) {
    return integrate_model_tangent(BodyFlow(body, field), x0, v0, cfg, monitors, to_string(field));
}

/// Re-times a Hamiltonian run by Reeb time tau(t) = int_0^t 1/2 <grad G, x> dt.
/// The quadrature is carried along the trajectory by the integrator itself
/// (the clock component), so this only swaps the time axes.
inline FlowRun reparametrize(const FlowRun& run) {
    if (run.field != "hamiltonian") throw PreconditionError("reparametrize expects a Hamiltonian run");
    FlowRun out = run;
    out.field = "reeb_reparametrized";
    std::swap(out.times, out.clock);
    out.final_time = run.final_clock;
    out.final_clock = run.final_time;
    return out;
}

}  // namespace reebdyn

#endif
