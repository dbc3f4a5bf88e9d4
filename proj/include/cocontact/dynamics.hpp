#pragma once

/**
 * @file dynamics.hpp
 * @brief Cocontact Hamiltonian vector field, its flow, and the Herglotz action.
 *
 * In Darboux coordinates
 *
 *     X_H = d/dt + H_p d/dq - (H_q + p H_z) d/dp + (p H_p - H) d/dz,
 *
 * so tau(X_H) = 1 and eta(X_H) = -H hold identically.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cocontact/geometry.hpp"
#include "cocontact/ode.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/scalar_field.hpp"

namespace cocontact {

using VectorField = std::function<TangentVector(const PhasePoint&)>;

inline TangentVector hamiltonian_vector_field(const PhasePoint& x, const ValueAndGradient& h) {
    detail::require_dimension(x.dimension(), h.gradient.dimension(), "hamiltonian_vector_field");
    const std::size_t n = x.dimension();
    const Covector& d = h.gradient;
    TangentVector v = TangentVector::zero(n);
    v.dt = 1.0;
    double p_hp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v.dq[i] = d.a_p[i];
        v.dp[i] = -(d.a_q[i] + x.p[i] * d.a_z);
        p_hp += x.p[i] * d.a_p[i];
    }
    v.dz = p_hp - h.value;
    return v;
}

inline TangentVector hamiltonian_vector_field(const ScalarField& H, const PhasePoint& x) {
    return hamiltonian_vector_field(x, H.value_and_gradient(x));
}

inline VectorField hamiltonian_field(const ScalarField& H) {
    return [H](const PhasePoint& x) { return hamiltonian_vector_field(H, x); };
}

/// Integral curve samples of X_H with their velocities (used for dense output).
struct Trajectory {
    std::vector<PhasePoint> samples;
    std::vector<TangentVector> velocities;
    IntegratorSettings settings;
    IntegrationStats stats;

    [[nodiscard]] std::size_t size() const { return samples.size(); }
    [[nodiscard]] std::size_t dimension() const { return samples.empty() ? 0 : samples.front().dimension(); }
    [[nodiscard]] double start_time() const { return samples.front().t; }
    [[nodiscard]] double end_time() const { return samples.back().t; }

    /// Cubic Hermite interpolation of the state at t; `velocity` receives the derivative if non-null.
    PhasePoint at(double t, TangentVector* velocity = nullptr) const {
        if (samples.size() < 2) throw std::logic_error("Trajectory::at needs two samples");
        if (t < start_time() || t > end_time()) throw std::out_of_range("Trajectory::at outside sampled span");
        auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const PhasePoint& s) { return v < s.t; });
        std::size_t k = static_cast<std::size_t>(it - samples.begin());
        k = std::clamp<std::size_t>(k, 1, samples.size() - 1);
        const auto y0 = samples[k - 1].flatten();
        const auto y1 = samples[k].flatten();
        const auto f0 = velocities[k - 1].flatten();
        const auto f1 = velocities[k].flatten();
        std::vector<double> y(y0.size()), dy(y0.size());
        hermite_interpolate(samples[k - 1].t, samples[k].t, y0, f0, y1, f1, t, y, dy);
        PhasePoint r = PhasePoint::unflatten(y);
        r.t = t;
        if (velocity != nullptr) {
            *velocity = TangentVector::unflatten(dy);
            velocity->dt = 1.0;
        }
        return r;
    }
};

namespace detail {

inline PhasePoint point_from_state(double t, std::span<const double> y, std::size_t n) {
    PhasePoint x;
    x.t = t;
    x.q.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n));
    x.p.assign(y.begin() + static_cast<std::ptrdiff_t>(n), y.begin() + static_cast<std::ptrdiff_t>(2 * n));
    x.z = y[2 * n];
    return x;
}

inline std::vector<double> state_of(const PhasePoint& x) {
    std::vector<double> y(x.q);
    y.insert(y.end(), x.p.begin(), x.p.end());
    y.push_back(x.z);
    return y;
}

inline TangentVector velocity_from_state(std::span<const double> dy, std::size_t n) {
    PhasePoint v = point_from_state(1.0, dy, n);
    return {1.0, std::move(v.q), std::move(v.p), v.z};
}

}  // namespace detail

/// Converts an ODE solution over y = (q, p, z) into a Trajectory.
inline Trajectory trajectory_from_solution(const OdeSolution& sol, std::size_t n) {
    Trajectory tr;
    tr.settings = sol.settings;
    tr.stats = sol.stats;
    tr.samples.reserve(sol.times.size());
    tr.velocities.reserve(sol.times.size());
    for (std::size_t k = 0; k < sol.times.size(); ++k) {
        tr.samples.push_back(detail::point_from_state(sol.times[k], sol.states[k], n));
        tr.velocities.push_back(detail::velocity_from_state(sol.derivatives[k], n));
    }
    return tr;
}

/// Integrates the cocontact Hamilton equations from x0 to t_end. Time advances exactly.
inline Trajectory integrate(const ScalarField& H, const PhasePoint& x0, double t_end,
                            const IntegratorSettings& settings = {}) {
    const std::size_t n = x0.dimension();
    detail::require_dimension(H.dimension(), n, "integrate");
    if (!x0.finite()) throw IntegrationError(IntegrationError::Kind::non_finite, x0.t, "non-finite initial state");
    auto rhs = [&H, n](double t, std::span<const double> y, std::span<double> dy) {
        const PhasePoint x = detail::point_from_state(t, y, n);
        const TangentVector v = hamiltonian_vector_field(H, x);
        std::copy(v.dq.begin(), v.dq.end(), dy.begin());
        std::copy(v.dp.begin(), v.dp.end(), dy.begin() + static_cast<std::ptrdiff_t>(n));
        dy[2 * n] = v.dz;
    };
    Trajectory tr = trajectory_from_solution(integrate_ode(rhs, x0.t, detail::state_of(x0), t_end, settings), n);
    tr.samples.front() = x0;
    return tr;
}

/// Weights w_j with f'(x0) ~ sum_j w_j f(nodes[j]): derivative of the Lagrange basis at x0.
inline std::vector<double> derivative_weights(double x0, std::span<const double> nodes) {
    const std::size_t m = nodes.size();
    std::vector<double> w(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        for (std::size_t l = 0; l < m; ++l) {
            if (l == j) continue;
            double term = 1.0 / (nodes[j] - nodes[l]);
            for (std::size_t r = 0; r < m; ++r) {
                if (r == j || r == l) continue;
                term *= (x0 - nodes[r]) / (nodes[j] - nodes[r]);
            }
            w[j] += term;
        }
    }
    return w;
}

/// Fourth-order finite-difference derivative of sampled values (five-point stencils,
/// one-sided near the ends).
inline std::vector<double> sampled_derivative(std::span<const double> times, std::span<const double> values) {
    const std::size_t m = times.size();
    if (m < 5) throw std::invalid_argument("sampled_derivative needs at least five samples");
    std::vector<double> d(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t lo = std::min(k >= 2 ? k - 2 : 0, m - 5);
        const auto w = derivative_weights(times[k], times.subspan(lo, 5));
        double s = 0.0;
        for (std::size_t j = 0; j < 5; ++j) s += w[j] * values[lo + j];
        d[k] = s;
    }
    return d;
}

struct EnergyLawSample {
    double t = 0.0;
    double slope = 0.0;     ///< finite-difference d(H o psi)/dt
    double predicted = 0.0; ///< -(R_z H) H + R_t H
};

/// Compares the sampled slope of H along the trajectory with -(R_z H) H + R_t H.
inline std::vector<EnergyLawSample> energy_law(const ScalarField& H, const Trajectory& tr) {
    std::vector<double> times, values;
    std::vector<EnergyLawSample> out(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const auto h = H.value_and_gradient(tr.samples[k]);
        times.push_back(tr.samples[k].t);
        values.push_back(h.value);
        out[k].t = tr.samples[k].t;
        out[k].predicted = -h.gradient.a_z * h.value + h.gradient.a_t;
    }
    const auto slope = sampled_derivative(times, values);
    for (std::size_t k = 0; k < tr.size(); ++k) out[k].slope = slope[k];
    return out;
}

/// Largest componentwise defect between the finite-difference velocity of the samples and
/// X_H at each sample (checks that a sampled curve solves the Hamilton equations).
inline double hamilton_equation_residual(const ScalarField& H, const Trajectory& tr) {
    const std::size_t m = tr.size();
    if (m < 5) throw std::invalid_argument("hamilton_equation_residual needs at least five samples");
    std::vector<double> times(m);
    for (std::size_t k = 0; k < m; ++k) times[k] = tr.samples[k].t;
    const std::size_t dim = 2 * tr.dimension() + 2;
    std::vector<std::vector<double>> columns(dim, std::vector<double>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const auto f = tr.samples[k].flatten();
        for (std::size_t c = 0; c < dim; ++c) columns[c][k] = f[c];
    }
    std::vector<std::vector<double>> slopes(dim);
    for (std::size_t c = 0; c < dim; ++c) slopes[c] = sampled_derivative(times, columns[c]);
    double worst = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        const auto v = hamiltonian_vector_field(H, tr.samples[k]).flatten();
        for (std::size_t c = 1; c < dim; ++c) worst = std::max(worst, std::abs(slopes[c][k] - v[c]));
    }
    return worst;
}

/// Cumulative Herglotz action int (p q' - H) dt at every sample, by Simpson's rule on each
/// sample interval with the midpoint taken from the Hermite dense output.
inline std::vector<double> herglotz_action_profile(const ScalarField& H, const Trajectory& tr) {
    if (tr.size() < 3) throw std::invalid_argument("herglotz_action needs at least three samples");
    auto integrand = [&H](const PhasePoint& x, const TangentVector& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < x.dimension(); ++i) s += x.p[i] * v.dq[i];
        return s - H.value(x);
    };
    std::vector<double> profile(tr.size(), 0.0);
    double left = integrand(tr.samples[0], tr.velocities[0]);
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double t0 = tr.samples[k - 1].t;
        const double t1 = tr.samples[k].t;
        TangentVector vm;
        const PhasePoint xm = tr.at(0.5 * (t0 + t1), &vm);
        const double mid = integrand(xm, vm);
        const double right = integrand(tr.samples[k], tr.velocities[k]);
        profile[k] = profile[k - 1] + (t1 - t0) / 6.0 * (left + 4.0 * mid + right);
        left = right;
    }
    return profile;
}

inline double herglotz_action(const ScalarField& H, const Trajectory& tr) {
    return herglotz_action_profile(H, tr).back();
}

}  // namespace cocontact
