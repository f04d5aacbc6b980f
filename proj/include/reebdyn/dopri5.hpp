#ifndef REEBDYN_DOPRI5_HPP
#define REEBDYN_DOPRI5_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace reebdyn {

struct Tolerances {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 50'000'000;
};

/// Thrown by Dopri5 on step-size underflow; the caller attaches the state.
class StepFailure : public std::runtime_error {
public:
    StepFailure(double t, const std::string& reason) : std::runtime_error(reason), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

/// Dormand-Prince 5(4) embedded pair with local extrapolation and FSAL, for
/// autonomous systems y' = f(y) of fixed dimension N.
///
/// advance_to() integrates exactly up to the requested time and invokes
/// on_accept(t, y) after every accepted step; the hook may modify y (e.g.
/// project onto a level set) and must return true if it did.
template <int N, class Rhs>
class Dopri5 {
public:
    using State = Eigen::Matrix<double, N, 1>;

    Dopri5(Rhs rhs, const State& y0, double t0, Tolerances tol) : f_(std::move(rhs)), y_(y0), t_(t0), tol_(tol) {
        k1_ = f_(y_);
    }

    double time() const { return t_; }
    const State& state() const { return y_; }
    std::size_t accepted() const { return accepted_; }
    std::size_t rejected() const { return rejected_; }

    /// Replaces the current state (e.g. after renormalization), keeping the step size.
    void set_state(const State& y) {
        y_ = y;
        k1_ = f_(y_);
    }

    template <class OnAccept>
    void advance_to(double t_end, OnAccept&& on_accept) {
        if (t_end == t_) return;
        const double dir = t_end > t_ ? 1.0 : -1.0;
        if (h_ == 0.0 || (h_ > 0.0) != (dir > 0.0)) h_ = dir * initial_step(dir);

        bool last_rejected = false;
        while ((t_end - t_) * dir > 0.0) {
            if (accepted_ + rejected_ >= tol_.max_steps) throw StepFailure(t_, "step budget exhausted");
            double h = dir * std::min(std::abs(h_), tol_.max_step);
            bool clamped = false;
            if ((t_ + h - t_end) * dir >= 0.0 || std::abs(t_end - t_ - h) < 1e-12 * std::abs(h)) {
                h = t_end - t_;
                clamped = true;
            }
            if (std::abs(h) < 1e-13 * std::max(1.0, std::abs(t_)) && !clamped)
                throw StepFailure(t_, "step size underflow");

            State y_new, k7, err_vec;
            step(h, y_new, k7, err_vec);
            const double err = error_norm(err_vec, y_new);
            if (!std::isfinite(err)) {
                h_ = 0.2 * h;
                ++rejected_;
                last_rejected = true;
                if (std::abs(h_) < 1e-13 * std::max(1.0, std::abs(t_))) throw StepFailure(t_, "non-finite derivative");
                continue;
            }
            double fac = 0.9 * std::pow(std::max(err, 1e-300), -0.2);
            if (err <= 1.0) {
                fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
                t_ = clamped ? t_end : t_ + h;
                y_ = y_new;
                k1_ = k7;
                ++accepted_;
                last_rejected = false;
                if (on_accept(t_, y_)) k1_ = f_(y_);
                // A clamped final step says little about the natural step size.
                if (!clamped || fac < 1.0) h_ = h * fac;
            } else {
                h_ = h * std::max(fac, 0.2);
                ++rejected_;
                last_rejected = true;
            }
        }
    }

private:
    double error_norm(const State& e, const State& y_new) const {
        double s = 0.0;
        for (int i = 0; i < N; ++i) {
            const double sc = tol_.atol + tol_.rtol * std::max(std::abs(y_[i]), std::abs(y_new[i]));
            s += (e[i] / sc) * (e[i] / sc);
        }
        return std::sqrt(s / N);
    }

    double initial_step(double dir) {
        State sc;
        for (int i = 0; i < N; ++i) sc[i] = tol_.atol + tol_.rtol * std::abs(y_[i]);
        const double d0 = std::sqrt((y_.array() / sc.array()).square().mean());
        const double d1 = std::sqrt((k1_.array() / sc.array()).square().mean());
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        if (!std::isfinite(h0)) h0 = 1e-6;
        h0 = std::min(h0, tol_.max_step);
        const State k2 = f_(State(y_ + dir * h0 * k1_));
        const double d2 = std::sqrt(((k2 - k1_).array() / sc.array()).square().mean()) / h0;
        const double m = std::max(d1, d2);
        const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
        return std::isfinite(h1) ? std::min({100.0 * h0, h1, tol_.max_step}) : std::min(h0, tol_.max_step);
    }

    void step(double h, State& y_new, State& k7, State& err) const {
        constexpr double a21 = 1.0 / 5.0;
        constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
        constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
        constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                         a54 = -212.0 / 729.0;
        constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                         a65 = -5103.0 / 18656.0;
        constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                         b6 = 11.0 / 84.0;
        constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                         e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

        const State& k1 = k1_;
        const State k2 = f_(State(y_ + h * a21 * k1));
        const State k3 = f_(State(y_ + h * (a31 * k1 + a32 * k2)));
        const State k4 = f_(State(y_ + h * (a41 * k1 + a42 * k2 + a43 * k3)));
        const State k5 = f_(State(y_ + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
        const State k6 = f_(State(y_ + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
        y_new = y_ + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        k7 = f_(y_new);
        err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    }

    Rhs f_;
    State y_;
    State k1_;
    double t_;
    double h_ = 0.0;
    Tolerances tol_;
    std::size_t accepted_ = 0;
    std::size_t rejected_ = 0;
};

}  // namespace reebdyn

#endif
