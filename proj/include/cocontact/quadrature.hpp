#pragma once

/**
 * @file quadrature.hpp
 * @brief Adaptive Simpson quadrature and a knot cache for running integrals
 *        F(t) = int_{a}^{t} f(s) ds with a fixed lower limit a.
 *
 * The cache keeps F on a uniform knot lattice a + k*h (k may be negative),
 * extended lazily outward from a, and completes a query from the nearest knot
 * towards a. Knot values never depend on query order, so repeated queries at
 * the same t are bit-identical and concurrent callers see the same numbers.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocontact/dual.hpp"

namespace cocontact {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Panel budget shared by one adaptive integration.
inline constexpr std::size_t max_quadrature_panels = std::size_t{1} << 20;

namespace detail {

struct SimpsonBudget {
    std::size_t panels = 0;
};

template <class F>
double adaptive_simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole,
                             double tol, int depth, SimpsonBudget& budget) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (++budget.panels > max_quadrature_panels) {
        throw QuadratureError("adaptive Simpson refinement exceeded 2^20 panels");
    }
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol || m == a || m == b) {
        return left + right + delta / 15.0;
    }
    return adaptive_simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget) +
           adaptive_simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget);
}

}  // namespace detail

/// Signed integral of f over [a, b] (b < a allowed) to absolute tolerance `tol`.
template <class F>
double adaptive_simpson(const F& f, double a, double b, double tol = 1e-12) {
    if (a == b) return 0.0;
    const double sign = b > a ? 1.0 : -1.0;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double fa = f(lo);
    const double fb = f(hi);
    const double fm = f(0.5 * (lo + hi));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm)) {
        throw QuadratureError("integrand is not finite on [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
    detail::SimpsonBudget budget;
    const double value = detail::adaptive_simpson_step(f, lo, hi, fa, fm, fb, whole, tol, 48, budget);
    if (!std::isfinite(value)) throw QuadratureError("integral is not finite");
    return sign * value;
}

class QuadratureCache {
public:
    using Integrand = std::function<double(double)>;

    explicit QuadratureCache(Integrand integrand, double lower_limit = 1.0, double tolerance = 1e-12,
                             double knot_spacing = 0.125)
        : state_(std::make_shared<State>()) {
        state_->f = std::move(integrand);
        state_->lower = lower_limit;
        state_->tol = tolerance;
        state_->h = knot_spacing;
        state_->up.push_back(0.0);
        state_->down.push_back(0.0);
    }

    [[nodiscard]] double lower_limit() const { return state_->lower; }
    [[nodiscard]] double tolerance() const { return state_->tol; }
    [[nodiscard]] double integrand(double s) const { return state_->f(s); }

    /// int_{lower}^{t} f(s) ds.
    double operator()(double t) const {
        State& s = *state_;
        if (!std::isfinite(t)) throw QuadratureError("quadrature queried at non-finite time");
        const double offset = t - s.lower;
        if (offset == 0.0) return 0.0;
        const bool forward = offset > 0.0;
        const auto k = static_cast<std::size_t>(std::floor(std::abs(offset) / s.h));
        const double knot_value = knot(forward, k);
        const double knot_t = s.lower + (forward ? 1.0 : -1.0) * static_cast<double>(k) * s.h;
        return knot_value + adaptive_simpson(s.f, knot_t, t, panel_tolerance());
    }

    /// Dual-aware evaluation: d/dt int_{lower}^{t} f = f(t).
    Dual operator()(const Dual& t) const { return t.apply((*this)(t.value()), state_->f(t.value())); }

    /// Number of knots currently stored (both directions, excluding the origin twice).
    [[nodiscard]] std::size_t knot_count() const {
        std::shared_lock lock(state_->mutex);
        return state_->up.size() + state_->down.size() - 1;
    }

private:
    struct State {
        Integrand f;
        double lower = 1.0;
        double tol = 1e-12;
        double h = 0.125;
        mutable std::shared_mutex mutex;
        std::vector<double> up;    // F(lower + k h)
        std::vector<double> down;  // F(lower - k h)
    };

    [[nodiscard]] double panel_tolerance() const { return state_->tol * std::min(1.0, state_->h) / 16.0; }

    double knot(bool forward, std::size_t k) const {
        State& s = *state_;
        {
            std::shared_lock lock(s.mutex);
            const auto& table = forward ? s.up : s.down;
            if (k < table.size()) return table[k];
        }
        std::unique_lock lock(s.mutex);
        auto& table = forward ? s.up : s.down;
        const double dir = forward ? 1.0 : -1.0;
        while (table.size() <= k) {
            const std::size_t j = table.size() - 1;
            const double a = s.lower + dir * static_cast<double>(j) * s.h;
            const double b = s.lower + dir * static_cast<double>(j + 1) * s.h;
            table.push_back(table.back() + adaptive_simpson(s.f, a, b, panel_tolerance()));
        }
        return table[k];
    }

    std::shared_ptr<State> state_;
};

}  // namespace cocontact
