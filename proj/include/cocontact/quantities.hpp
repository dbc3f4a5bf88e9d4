#pragma once

/**
 * @file quantities.hpp
 * @brief Conserved and dissipated quantities, Noether symmetries, involution.
 *
 * f is dissipated when X_H f = -(R_z H) f and conserved when X_H f = 0.
 * Residual functions return the defect at a single point; `*_report`
 * helpers sweep a sample set.
 */

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocontact/dynamics.hpp"
#include "cocontact/geometry.hpp"
#include "cocontact/quadrature.hpp"
#include "cocontact/sampling.hpp"
#include "cocontact/scalar_field.hpp"

namespace cocontact {

enum class QuantityKind { conserved, dissipated, bracket_characterization, symmetry, involution };

inline const char* to_string(QuantityKind k) {
    switch (k) {
        case QuantityKind::conserved: return "conserved";
        case QuantityKind::dissipated: return "dissipated";
        case QuantityKind::bracket_characterization: return "bracket-characterization";
        case QuantityKind::symmetry: return "symmetry";
        case QuantityKind::involution: return "involution";
    }
    return "?";
}

struct QuantityReport {
    QuantityKind kind = QuantityKind::conserved;
    ResidualStats stats;
    double tolerance = 1e-6;
    bool pass = false;
};

inline QuantityReport make_report(QuantityKind kind, const std::vector<double>& residuals, double tolerance,
                                  std::size_t skipped = 0) {
    QuantityReport r;
    r.kind = kind;
    r.stats = summarize(residuals, skipped);
    r.tolerance = tolerance;
    r.pass = r.stats.max <= tolerance;
    return r;
}

/// X_H f + (R_z H) f.
inline double dissipation_residual(const ScalarField& f, const ScalarField& H, const PhasePoint& x) {
    const auto h = H.value_and_gradient(x);
    const auto fv = f.value_and_gradient(x);
    return fv.gradient(hamiltonian_vector_field(x, h)) + h.gradient.a_z * fv.value;
}

/// X_H g.
inline double conservation_residual(const ScalarField& g, const ScalarField& H, const PhasePoint& x) {
    return g.value_and_gradient(x).gradient(hamiltonian_vector_field(H, x));
}

/// {f,H} - R_t f with the structure-derived bracket; equals -dissipation_residual.
inline double bracket_characterization_residual(const ScalarField& f, const ScalarField& H, const PhasePoint& x) {
    const auto fv = f.value_and_gradient(x);
    const auto h = H.value_and_gradient(x);
    return intrinsic_jacobi_bracket(x, fv.value, fv.gradient, h.value, h.gradient) - fv.gradient.a_t;
}

/// Y = X_f - R_t, the infinitesimal symmetry associated with f; -eta(Y) = f.
inline VectorField noether_symmetry(const ScalarField& f, const ScalarField& H) {
    detail::require_dimension(H.dimension(), f.dimension(), "noether_symmetry");
    return [f](const PhasePoint& x) {
        TangentVector y = hamiltonian_vector_field(f, x);
        y.dt -= 1.0;
        return y;
    };
}

namespace detail {

inline PhasePoint displaced(const PhasePoint& x, const TangentVector& v, double s) {
    PhasePoint r = x;
    r.t += s * v.dt;
    for (std::size_t i = 0; i < r.q.size(); ++i) {
        r.q[i] += s * v.dq[i];
        r.p[i] += s * v.dp[i];
    }
    r.z += s * v.dz;
    return r;
}

inline double euclidean(const TangentVector& v) {
    double s = 0.0;
    for (double c : v.flatten()) s += c * c;
    return std::sqrt(s);
}

/// DF(x) v by central differences along the unit direction of v.
inline TangentVector jvp(const VectorField& F, const PhasePoint& x, const TangentVector& v, double eps) {
    const double len = euclidean(v);
    if (len == 0.0) return TangentVector::zero(x.dimension());
    const TangentVector plus = F(displaced(x, v, eps / len));
    const TangentVector minus = F(displaced(x, v, -eps / len));
    auto fp = plus.flatten();
    const auto fm = minus.flatten();
    for (std::size_t i = 0; i < fp.size(); ++i) {
        fp[i] = (fp[i] - fm[i]) / (2.0 * eps) * len;
        if (!std::isfinite(fp[i])) throw std::domain_error("non-finite difference quotient in Lie bracket");
    }
    return TangentVector::unflatten(fp);
}

}  // namespace detail

/// [Y, X](x) = DX Y - DY X by central differences, step 1e-5 * max(1, |x|).
inline TangentVector lie_bracket(const VectorField& Y, const VectorField& X, const PhasePoint& x) {
    const double eps = 1e-5 * std::max(1.0, norm(x));
    const TangentVector yx = Y(x);
    const TangentVector xx = X(x);
    return detail::jvp(X, x, yx, eps) - detail::jvp(Y, x, xx, eps);
}

/// (|eta([Y, X_H])|, |tau(Y)|) at x.
inline std::pair<double, double> symmetry_residual(const VectorField& Y, const ScalarField& H, const PhasePoint& x) {
    const TangentVector br = lie_bracket(Y, hamiltonian_field(H), x);
    return {std::abs(eta(x, br)), std::abs(tau(Y(x)))};
}

struct ProductQuotientResidual {
    std::optional<double> quotient;  ///< X_H(f1/f2); empty when |f2| < 1e-8
    double product = 0.0;            ///< dissipation residual of f1 * g
};

/// Checks that f1/f2 is conserved (f1, f2 dissipated) and f1*g is dissipated (g conserved).
inline ProductQuotientResidual product_quotient_check(const ScalarField& f1, const ScalarField& f2,
                                                      const ScalarField& g, const ScalarField& H,
                                                      const PhasePoint& x) {
    ProductQuotientResidual r;
    if (std::abs(f2.value(x)) >= 1e-8) r.quotient = conservation_residual(f1 / f2, H, x);
    r.product = dissipation_residual(f1 * g, H, x);
    return r;
}

/// {H f_i, H f_j}(x), or empty when R_t H != 0 at x (theorem not applicable).
inline std::optional<double> involution_residual(const ScalarField& fi, const ScalarField& fj, const ScalarField& H,
                                                 const PhasePoint& x, double time_tolerance = 1e-12) {
    const auto h = H.value_and_gradient(x);
    if (std::abs(h.gradient.a_t) > time_tolerance) return std::nullopt;
    return jacobi_bracket(H * fi, H * fj, x);
}

/// The same bracket expanded through {ab, c} = a{b,c} + b{a,c} + ab c_z, from the elementary
/// brackets of H, f_i, f_j only.
inline double involution_expansion(const ScalarField& fi, const ScalarField& fj, const ScalarField& H,
                                   const PhasePoint& x) {
    const auto h = H.value_and_gradient(x);
    const auto a = fi.value_and_gradient(x);
    const auto b = fj.value_and_gradient(x);
    auto br = [&x](const ValueAndGradient& u, const ValueAndGradient& v) {
        return jacobi_bracket(x, u.value, u.gradient, v.value, v.gradient);
    };
    // {H a, H b} = H {a, H b} + a {H, H b} + H a (H b)_z
    auto bracket_with_hb = [&](const ValueAndGradient& u) {
        // {u, H b} = -{H b, u} = -(H {b,u} + b {H,u} + H b u_z)
        return -(h.value * br(b, u) + b.value * br(h, u) + h.value * b.value * u.gradient.a_z);
    };
    const double hb_z = h.gradient.a_z * b.value + h.value * b.gradient.a_z;
    return h.value * bracket_with_hb(a) + a.value * bracket_with_hb(h) + h.value * a.value * hb_z;
}

/// Sweeps a residual over sample points (in parallel, deterministic order).
template <class F>
std::vector<double> sweep(const std::vector<PhasePoint>& points, std::size_t jobs, const F& residual) {
    return parallel_map<double>(points.size(), jobs, [&](std::size_t i) { return std::abs(residual(points[i])); });
}

inline QuantityReport conservation_report(const ScalarField& g, const ScalarField& H,
                                          const std::vector<PhasePoint>& points, double tolerance,
                                          std::size_t jobs = 1) {
    return make_report(QuantityKind::conserved,
                       sweep(points, jobs, [&](const PhasePoint& x) { return conservation_residual(g, H, x); }),
                       tolerance);
}

inline QuantityReport dissipation_report(const ScalarField& f, const ScalarField& H,
                                         const std::vector<PhasePoint>& points, double tolerance,
                                         std::size_t jobs = 1) {
    return make_report(QuantityKind::dissipated,
                       sweep(points, jobs, [&](const PhasePoint& x) { return dissipation_residual(f, H, x); }),
                       tolerance);
}

/// Relative error with a floor of one on the scale.
inline double relative_error(double value, double reference) {
    return std::abs(value - reference) / std::max(std::abs(reference), 1.0);
}

/// max_k |g(psi(t_k)) - g(psi(t_0))| relative to g(psi(t_0)).
inline double conserved_drift(const ScalarField& g, const Trajectory& tr) {
    const double g0 = g.value(tr.samples.front());
    double worst = 0.0;
    for (const auto& x : tr.samples) worst = std::max(worst, relative_error(g.value(x), g0));
    return worst;
}

/// max_k |f(psi(t_k)) exp(int_0^{t_k} R_z H) - f(psi(t_0))| relative to f(psi(t_0)); the rate
/// integral uses Simpson's rule per sample interval with Hermite midpoints.
inline double dissipated_drift(const ScalarField& f, const ScalarField& H, const Trajectory& tr) {
    auto rate = [&H](const PhasePoint& x) { return H.value_and_gradient(x).gradient.a_z; };
    const double f0 = f.value(tr.samples.front());
    double integral = 0.0;
    double left = rate(tr.samples.front());
    double worst = 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double t0 = tr.samples[k - 1].t;
        const double t1 = tr.samples[k].t;
        const double mid = rate(tr.at(0.5 * (t0 + t1)));
        const double right = rate(tr.samples[k]);
        integral += (t1 - t0) / 6.0 * (left + 4.0 * mid + right);
        left = right;
        worst = std::max(worst, relative_error(f.value(tr.samples[k]) * std::exp(integral), f0));
    }
    return worst;
}

}  // namespace cocontact
