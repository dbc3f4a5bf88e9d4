#pragma once

/**
 * @file ode.hpp
 * @brief Explicit Runge-Kutta integration of y' = f(t, y) with dense output.
 *
 * Two schemes: classical RK4 with a fixed step, and the embedded
 * Dormand-Prince 5(4) pair with error control. Time is never integrated; it
 * advances as t0 + k*h (fixed step) or by accepted step sizes (adaptive).
 * Between samples the solution is reconstructed by cubic Hermite
 * interpolation from the stored derivatives.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocontact {

enum class Scheme { rk4, rk45 };

struct IntegratorSettings {
    Scheme scheme = Scheme::rk4;
    double step = 1e-3;  ///< fixed step, or initial step for rk45
    double rtol = 1e-9;
    double atol = 1e-12;
    double min_step = 1e-12;
    double max_step = 0.1;
};

struct IntegrationStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

class IntegrationError : public std::runtime_error {
public:
    enum class Kind { step_underflow, non_finite };
    IntegrationError(Kind kind, double last_good_time, const std::string& what)
        : std::runtime_error(what + " (last good time " + std::to_string(last_good_time) + ")"),
          kind_(kind),
          last_good_time_(last_good_time) {}
    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double last_good_time() const { return last_good_time_; }

private:
    Kind kind_;
    double last_good_time_;
};

/// Hermite cubic through (t0, y0, f0) and (t1, y1, f1), evaluated at t.
inline void hermite_interpolate(double t0, double t1, std::span<const double> y0, std::span<const double> f0,
                                std::span<const double> y1, std::span<const double> f1, double t,
                                std::span<double> y, std::span<double> dy) {
    const double h = t1 - t0;
    const double s = (t - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double d00 = (6 * s2 - 6 * s) / h, d10 = 3 * s2 - 4 * s + 1, d01 = (-6 * s2 + 6 * s) / h, d11 = 3 * s2 - 2 * s;
    for (std::size_t i = 0; i < y0.size(); ++i) {
        if (!y.empty()) y[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i];
        if (!dy.empty()) dy[i] = d00 * y0[i] + d10 * f0[i] + d01 * y1[i] + d11 * f1[i];
    }
}

struct OdeSolution {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    std::vector<std::vector<double>> derivatives;
    IntegratorSettings settings;
    IntegrationStats stats;

    /// Dense output (state and derivative) at t within [times.front(), times.back()].
    void interpolate(double t, std::span<double> y, std::span<double> dy = {}) const {
        if (times.empty()) throw std::logic_error("interpolate on empty solution");
        if (t < times.front() || t > times.back()) throw std::out_of_range("interpolate outside integration span");
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t k = static_cast<std::size_t>(it - times.begin());
        if (k == 0) k = 1;
        if (k >= times.size()) k = times.size() - 1;
        hermite_interpolate(times[k - 1], times[k], states[k - 1], derivatives[k - 1], states[k], derivatives[k], t,
                            y, dy);
    }
};

namespace detail {

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

template <class Rhs>
void eval_rhs(const Rhs& rhs, double t, std::span<const double> y, std::span<double> dy, IntegrationStats& st) {
    rhs(t, y, dy);
    ++st.evaluations;
}

}  // namespace detail

/// Integrates `rhs(t, y, dy)` from (t0, y0) to t_end.
template <class Rhs>
OdeSolution integrate_ode(const Rhs& rhs, double t0, std::vector<double> y0, double t_end,
                          const IntegratorSettings& settings) {
    if (!(t_end > t0)) throw std::invalid_argument("integrate: t_end must exceed the initial time");
    if (settings.scheme == Scheme::rk4 && !(settings.step > 0.0))
        throw std::invalid_argument("integrate: step must be positive");
    if (settings.scheme == Scheme::rk45 && !(settings.rtol > 0.0 && settings.atol > 0.0))
        throw std::invalid_argument("integrate: tolerances must be positive");
    if (!detail::all_finite(y0)) throw IntegrationError(IntegrationError::Kind::non_finite, t0, "non-finite initial state");

    const std::size_t dim = y0.size();
    OdeSolution sol;
    sol.settings = settings;
    std::vector<double> f0(dim);
    detail::eval_rhs(rhs, t0, y0, f0, sol.stats);
    sol.times.push_back(t0);
    sol.states.push_back(y0);
    sol.derivatives.push_back(f0);

    std::vector<double> y = std::move(y0), f = f0, yn(dim), fn(dim), tmp(dim);

    if (settings.scheme == Scheme::rk4) {
        const double span = t_end - t0;
        auto steps = static_cast<std::size_t>(std::ceil(span / settings.step - 1e-9));
        if (steps == 0) steps = 1;
        std::vector<double> k2(dim), k3(dim), k4(dim);
        double t = t0;
        for (std::size_t k = 1; k <= steps; ++k) {
            const double t_next = k == steps ? t_end : t0 + static_cast<double>(k) * settings.step;
            const double h = t_next - t;
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * f[i];
            detail::eval_rhs(rhs, t + 0.5 * h, tmp, k2, sol.stats);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
            detail::eval_rhs(rhs, t + 0.5 * h, tmp, k3, sol.stats);
            for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * k3[i];
            detail::eval_rhs(rhs, t_next, tmp, k4, sol.stats);
            for (std::size_t i = 0; i < dim; ++i) yn[i] = y[i] + h / 6.0 * (f[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!detail::all_finite(yn)) {
                throw IntegrationError(IntegrationError::Kind::non_finite, t, "state became non-finite");
            }
            detail::eval_rhs(rhs, t_next, yn, fn, sol.stats);
            ++sol.stats.accepted;
            y = yn;
            f = fn;
            t = t_next;
            sol.times.push_back(t);
            sol.states.push_back(y);
            sol.derivatives.push_back(f);
        }
        return sol;
    }

    // Dormand-Prince 5(4), FSAL.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::vector<double> k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
    double t = t0;
    double h = std::clamp(settings.step, settings.min_step, settings.max_step);
    while (t < t_end) {
        bool last = false;
        if (t + h >= t_end) {
            h = t_end - t;
            last = true;
        }
        if (h < settings.min_step && !last) {
            throw IntegrationError(IntegrationError::Kind::step_underflow, t, "step size underflow");
        }
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * a21 * f[i];
        detail::eval_rhs(rhs, t + c2 * h, tmp, k2, sol.stats);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a31 * f[i] + a32 * k2[i]);
        detail::eval_rhs(rhs, t + c3 * h, tmp, k3, sol.stats);
        for (std::size_t i = 0; i < dim; ++i) tmp[i] = y[i] + h * (a41 * f[i] + a42 * k2[i] + a43 * k3[i]);
        detail::eval_rhs(rhs, t + c4 * h, tmp, k4, sol.stats);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a51 * f[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        detail::eval_rhs(rhs, t + c5 * h, tmp, k5, sol.stats);
        for (std::size_t i = 0; i < dim; ++i)
            tmp[i] = y[i] + h * (a61 * f[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        detail::eval_rhs(rhs, last ? t_end : t + h, tmp, k6, sol.stats);
        for (std::size_t i = 0; i < dim; ++i)
            yn[i] = y[i] + h * (b1 * f[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const double t_next = last ? t_end : t + h;
        bool finite = detail::all_finite(yn);
        double err = 0.0;
        if (finite) {
            detail::eval_rhs(rhs, t_next, yn, k7, sol.stats);
            for (std::size_t i = 0; i < dim; ++i) {
                const double e =
                    h * (e1 * f[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
                const double scale = settings.atol + settings.rtol * std::max(std::abs(y[i]), std::abs(yn[i]));
                err = std::max(err, std::abs(e) / scale);
            }
            finite = std::isfinite(err);
        }
        if (!finite) {
            // Shrink and retry; a state that stays non-finite ends in underflow or is reported here.
            ++sol.stats.rejected;
            if (h <= settings.min_step) {
                throw IntegrationError(IntegrationError::Kind::non_finite, t, "state became non-finite");
            }
            h = std::max(0.25 * h, settings.min_step);
            continue;
        }
        if (err <= 1.0) {
            ++sol.stats.accepted;
            t = t_next;
            y = yn;
            f = k7;
            sol.times.push_back(t);
            sol.states.push_back(y);
            sol.derivatives.push_back(f);
            if (last) break;
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h = std::min(h * factor, settings.max_step);
        } else {
            ++sol.stats.rejected;
            const double factor = std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
            const double shrunk = h * factor;
            if (shrunk < settings.min_step) {
                throw IntegrationError(IntegrationError::Kind::step_underflow, t, "step size underflow");
            }
            h = shrunk;
        }
    }
    return sol;
}

}  // namespace cocontact
