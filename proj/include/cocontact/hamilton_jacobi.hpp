#pragma once

/**
 * @file hamilton_jacobi.hpp
 * @brief Sections, complete solutions and residuals of the two Hamilton-Jacobi problems.
 *
 * Action-independent approach: a section of R x T*Q x R -> R x Q,
 *     (t, q) -> (t, q, gamma(t, q), S(t, q)),
 * solves the problem when gamma = d_q S and H(j^1_t S) + S_t = 0.
 *
 * Action-dependent approach: a section of R x T*Q x R -> R x Q x R,
 *     (t, q, z) -> (t, q, gamma(t, q, z), z),
 * with coisotropic image, solves it when
 *     H_q + H_p d_q gamma + gamma (H_p d_z gamma + H_z) + d_t gamma - H d_z gamma = 0.
 *
 * Section derivatives come from running the dual-number engine through the
 * section maps; sections built from an arbitrary generating function get their
 * momentum Jacobian by central differences of the exact gradient.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cocontact/dynamics.hpp"
#include "cocontact/ode.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/sampling.hpp"
#include "cocontact/scalar_field.hpp"
#include "cocontact/smooth_map.hpp"

namespace cocontact {

namespace detail {

inline std::vector<double> base_input(double t, std::span<const double> q) {
    std::vector<double> in;
    in.reserve(q.size() + 2);
    in.push_back(t);
    in.insert(in.end(), q.begin(), q.end());
    return in;
}

inline void require_size(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(expected) +
                                    " coordinates, got " + std::to_string(got));
    }
}

}  // namespace detail

/// S(t, q) with exact first derivatives.
class GeneratingFunction {
public:
    GeneratingFunction() = default;
    GeneratingFunction(std::size_t n, SmoothMap map) : n_(n), map_(std::move(map)) {
        if (map_.inputs() != n + 1 || map_.outputs() != 1) {
            throw std::invalid_argument("GeneratingFunction: map must be (n+1) -> 1");
        }
    }

    /// From `f(std::span<const T> tq) -> T` with tq = [t, q...].
    template <class F>
    static GeneratingFunction from_generic(std::size_t n, F f) {
        return GeneratingFunction(n, SmoothMap::from_generic(n + 1, 1, [f](auto in, auto out) { out[0] = f(in); }));
    }

    [[nodiscard]] std::size_t dimension() const { return n_; }
    [[nodiscard]] const SmoothMap& map() const { return map_; }

    struct Jet {
        double value = 0.0;
        double dt = 0.0;
        std::vector<double> dq;
    };

    [[nodiscard]] Jet jet(double t, std::span<const double> q) const {
        detail::require_size(n_, q.size(), "GeneratingFunction");
        const Linearization l = map_.linearize(detail::base_input(t, q));
        Jet j;
        j.value = l.values[0];
        j.dt = l.jacobian[0][0];
        j.dq.assign(l.jacobian[0].begin() + 1, l.jacobian[0].end());
        return j;
    }

    [[nodiscard]] double value(double t, std::span<const double> q) const {
        detail::require_size(n_, q.size(), "GeneratingFunction");
        const auto in = detail::base_input(t, q);
        double out = 0.0;
        map_.eval(std::span<const double>(in), std::span<double>(&out, 1));
        return out;
    }

private:
    std::size_t n_ = 0;
    SmoothMap map_;
};

/// j^1_t S(t, q) = (t, q, d_q S, S).
inline PhasePoint jet_t(const GeneratingFunction& S, double t, std::span<const double> q) {
    const auto j = S.jet(t, q);
    return PhasePoint{t, std::vector<double>(q.begin(), q.end()), j.dq, j.value};
}

/// Section (t, q) -> (t, q, gamma(t, q), S(t, q)).
class SectionT {
public:
    SectionT() = default;
    SectionT(std::size_t n, SmoothMap momentum, SmoothMap action)
        : n_(n), momentum_(std::move(momentum)), action_(std::move(action)) {
        if (momentum_.inputs() != n + 1 || momentum_.outputs() != n || action_.inputs() != n + 1 ||
            action_.outputs() != 1) {
            throw std::invalid_argument("SectionT: maps must be (n+1) -> n and (n+1) -> 1");
        }
    }

    /// The 1-jet section of S. The momentum Jacobian (the Hessian of S) is obtained by
    /// central differences of the exact gradient.
    static SectionT from_generating(const GeneratingFunction& S) {
        const std::size_t n = S.dimension();
        const SmoothMap smap = S.map();
        SmoothMap::DoubleFn grad = [smap, n](std::span<const double> in, std::span<double> out) {
            const Linearization l = smap.linearize(in);
            for (std::size_t i = 0; i < n; ++i) out[i] = l.jacobian[0][1 + i];
        };
        auto lin = [grad, n](std::span<const double> in) {
            return finite_difference_linearization(grad, n, in);
        };
        return SectionT(n, SmoothMap::from_linearization(n + 1, n, grad, lin), smap);
    }

    [[nodiscard]] std::size_t dimension() const { return n_; }
    [[nodiscard]] const SmoothMap& momentum() const { return momentum_; }
    [[nodiscard]] const SmoothMap& action() const { return action_; }

    [[nodiscard]] PhasePoint point(double t, std::span<const double> q) const {
        detail::require_size(n_, q.size(), "SectionT");
        const auto in = detail::base_input(t, q);
        PhasePoint x{t, std::vector<double>(q.begin(), q.end()), std::vector<double>(n_), 0.0};
        momentum_.eval(std::span<const double>(in), std::span<double>(x.p));
        action_.eval(std::span<const double>(in), std::span<double>(&x.z, 1));
        return x;
    }

    /// gamma, S and their first derivatives; column 0 is d/dt, column 1 + j is d/dq^j.
    struct Derivatives {
        std::vector<double> gamma;
        std::vector<std::vector<double>> dgamma;
        double S = 0.0;
        std::vector<double> dS;
    };

    [[nodiscard]] Derivatives derivatives(double t, std::span<const double> q) const {
        detail::require_size(n_, q.size(), "SectionT");
        const auto in = detail::base_input(t, q);
        const Linearization g = momentum_.linearize(in);
        const Linearization s = action_.linearize(in);
        return {g.values, g.jacobian, s.values[0], s.jacobian[0]};
    }

private:
    std::size_t n_ = 0;
    SmoothMap momentum_;
    SmoothMap action_;
};

/// Section (t, q, z) -> (t, q, gamma(t, q, z), z).
class SectionTZ {
public:
    SectionTZ() = default;
    SectionTZ(std::size_t n, SmoothMap momentum) : n_(n), momentum_(std::move(momentum)) {
        if (momentum_.inputs() != n + 2 || momentum_.outputs() != n) {
            throw std::invalid_argument("SectionTZ: momentum map must be (n+2) -> n");
        }
    }

    /// From `f(std::span<const T> tqz, std::span<T> gamma)`.
    template <class F>
    static SectionTZ from_generic(std::size_t n, F f) {
        return SectionTZ(n, SmoothMap::from_generic(n + 2, n, std::move(f)));
    }

    [[nodiscard]] std::size_t dimension() const { return n_; }
    [[nodiscard]] const SmoothMap& momentum() const { return momentum_; }

    [[nodiscard]] PhasePoint point(double t, std::span<const double> q, double z) const {
        detail::require_size(n_, q.size(), "SectionTZ");
        auto in = detail::base_input(t, q);
        in.push_back(z);
        PhasePoint x{t, std::vector<double>(q.begin(), q.end()), std::vector<double>(n_), z};
        momentum_.eval(std::span<const double>(in), std::span<double>(x.p));
        return x;
    }

    /// gamma and its Jacobian; column 0 is d/dt, 1 + j is d/dq^j, n + 1 is d/dz.
    [[nodiscard]] Linearization derivatives(double t, std::span<const double> q, double z) const {
        detail::require_size(n_, q.size(), "SectionTZ");
        auto in = detail::base_input(t, q);
        in.push_back(z);
        return momentum_.linearize(in);
    }

private:
    std::size_t n_ = 0;
    SmoothMap momentum_;
};

enum class Approach { action_independent, action_dependent };

/// A lambda-parameterized family of solutions, optionally with the inverse map
/// x -> lambda (possibly preceded by a time-like coordinate) whose components are
/// constants of the motion.
struct CompleteSolution {
    std::string name;
    Approach approach = Approach::action_independent;
    std::size_t n = 1;
    std::size_t lambda_dim = 1;
    std::vector<double> default_lambda;
    std::function<GeneratingFunction(const std::vector<double>&)> generating;  ///< action-independent
    std::function<SectionT(const std::vector<double>&)> section_t;             ///< action-independent
    std::function<SectionTZ(const std::vector<double>&)> section_tz;           ///< action-dependent
    std::optional<SmoothMap> inverse;                                          ///< phase -> components
    std::vector<std::string> inverse_labels;

    void check_lambda(const std::vector<double>& lambda) const {
        if (lambda.size() != lambda_dim) {
            throw std::invalid_argument("solution `" + name + "` expects " + std::to_string(lambda_dim) +
                                        " lambda values, got " + std::to_string(lambda.size()));
        }
    }
};

/// gamma_i(t,q) - d S/d q^i.
inline std::vector<double> legendrian_residual(const SectionT& sec, double t, std::span<const double> q) {
    const auto d = sec.derivatives(t, q);
    std::vector<double> r(sec.dimension());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = d.gamma[i] - d.dS[1 + i];
    return r;
}

/// H(j^1_t S) + d S/d t.
inline double hj_independent_residual(const GeneratingFunction& S, const ScalarField& H, double t,
                                      std::span<const double> q) {
    const auto j = S.jet(t, q);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), j.dq, j.value};
    return H.value(x) + j.dt;
}

struct RelatednessResidualT {
    std::vector<double> momentum;  ///< one entry per q^i
    double action = 0.0;
};

/// Residual of X_H being gamma-related to its projection, before any Legendrian assumption:
///   momentum_i = -(H_q + gamma_i H_z) - (d_t gamma_i + d_{q^j} gamma_i H_{p_j})
///   action     = (gamma . H_p - H) - (d_t S + d_q S . H_p)
inline RelatednessResidualT gamma_relatedness_residual_T(const SectionT& sec, const ScalarField& H, double t,
                                                         std::span<const double> q) {
    const std::size_t n = sec.dimension();
    const auto d = sec.derivatives(t, q);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), d.gamma, d.S};
    const auto h = H.value_and_gradient(x);
    const auto& Hq = h.gradient.a_q;
    const auto& Hp = h.gradient.a_p;
    const double Hz = h.gradient.a_z;
    RelatednessResidualT r;
    r.momentum.resize(n);
    double gamma_hp = 0.0, ds_hp = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double push = d.dgamma[i][0];
        for (std::size_t j = 0; j < n; ++j) push += d.dgamma[i][1 + j] * Hp[j];
        r.momentum[i] = -(Hq[i] + d.gamma[i] * Hz) - push;
        gamma_hp += d.gamma[i] * Hp[i];
        ds_hp += d.dS[1 + i] * Hp[i];
    }
    r.action = (gamma_hp - h.value) - (d.dS[0] + ds_hp);
    return r;
}

/// Tangent of pi o X_H o gamma: (1, H_p at the section point).
struct BaseVelocity {
    double dt = 1.0;
    std::vector<double> dq;
};

inline BaseVelocity projected_field_T(const SectionT& sec, const ScalarField& H, double t,
                                      std::span<const double> q) {
    const auto h = H.value_and_gradient(sec.point(t, q));
    return {1.0, h.gradient.a_p};
}

/// Integrates q' = H_p on the leaf Phi_lambda from (t0, q0) and lifts every sample by the
/// section; velocities of the lift follow from the chain rule through the section.
inline Trajectory reconstruct_T(const CompleteSolution& sol, const ScalarField& H, const std::vector<double>& lambda,
                                double t0, const std::vector<double>& q0, double t_end,
                                const IntegratorSettings& settings = {}) {
    if (sol.approach != Approach::action_independent || !sol.section_t) {
        throw std::invalid_argument("reconstruct_T: solution `" + sol.name + "` is not action-independent");
    }
    sol.check_lambda(lambda);
    const SectionT sec = sol.section_t(lambda);
    const std::size_t n = sec.dimension();
    detail::require_size(n, q0.size(), "reconstruct_T");
    auto rhs = [&](double t, std::span<const double> q, std::span<double> dq) {
        const auto v = projected_field_T(sec, H, t, q);
        std::copy(v.dq.begin(), v.dq.end(), dq.begin());
    };
    const OdeSolution base = integrate_ode(rhs, t0, q0, t_end, settings);
    Trajectory tr;
    tr.settings = base.settings;
    tr.stats = base.stats;
    for (std::size_t k = 0; k < base.times.size(); ++k) {
        const double t = base.times[k];
        const auto& q = base.states[k];
        const auto& qdot = base.derivatives[k];
        const auto d = sec.derivatives(t, q);
        TangentVector v = TangentVector::zero(n);
        v.dt = 1.0;
        v.dq = qdot;
        v.dz = d.dS[0];
        for (std::size_t j = 0; j < n; ++j) v.dz += d.dS[1 + j] * qdot[j];
        for (std::size_t i = 0; i < n; ++i) {
            v.dp[i] = d.dgamma[i][0];
            for (std::size_t j = 0; j < n; ++j) v.dp[i] += d.dgamma[i][1 + j] * qdot[j];
        }
        tr.samples.push_back(PhasePoint{t, q, d.gamma, d.S});
        tr.velocities.push_back(std::move(v));
    }
    return tr;
}

/// f_i = pi_i o Phi^{-1}.
inline ScalarField extract_conserved(const CompleteSolution& sol, std::size_t i) {
    if (!sol.inverse) throw std::invalid_argument("solution `" + sol.name + "` has no inverse map");
    if (i >= sol.inverse->outputs()) {
        throw std::out_of_range("solution `" + sol.name + "` inverse has " + std::to_string(sol.inverse->outputs()) +
                                " components, requested " + std::to_string(i));
    }
    return ScalarField(sol.n, sol.inverse->component(i));
}

/// Antisymmetric matrix R_ij = A_ij - A_ji with A_ij = d_{q^j} gamma_i + gamma_j d_z gamma_i.
inline std::vector<std::vector<double>> coisotropy_residual(const SectionTZ& sec, double t, std::span<const double> q,
                                                            double z) {
    const std::size_t n = sec.dimension();
    const Linearization l = sec.derivatives(t, q, z);
    std::vector<std::vector<double>> a(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i][j] = l.jacobian[i][1 + j] + l.values[j] * l.jacobian[i][n + 1];
    std::vector<std::vector<double>> r(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r[i][j] = a[i][j] - a[j][i];
    return r;
}

inline double max_abs(const std::vector<std::vector<double>>& m) {
    double s = 0.0;
    for (const auto& row : m)
        for (double v : row) s = std::max(s, std::abs(v));
    return s;
}

inline double max_abs(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::abs(x));
    return s;
}

/// H_q + H_{p_j} d_{q^i} gamma_j + gamma_i (H_{p_j} d_z gamma_j + H_z) + d_t gamma_i - H d_z gamma_i.
inline std::vector<double> hj_dependent_residual(const SectionTZ& sec, const ScalarField& H, double t,
                                                 std::span<const double> q, double z) {
    const std::size_t n = sec.dimension();
    const Linearization l = sec.derivatives(t, q, z);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), l.values, z};
    const auto h = H.value_and_gradient(x);
    const auto& Hp = h.gradient.a_p;
    double hp_dz_gamma = 0.0;
    for (std::size_t j = 0; j < n; ++j) hp_dz_gamma += Hp[j] * l.jacobian[j][n + 1];
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = h.gradient.a_q[i];
        for (std::size_t j = 0; j < n; ++j) s += Hp[j] * l.jacobian[j][1 + i];
        s += l.values[i] * (hp_dz_gamma + h.gradient.a_z);
        s += l.jacobian[i][0] - h.value * l.jacobian[i][n + 1];
        r[i] = s;
    }
    return r;
}

/// d_t gamma_i + H_{p_j} d_{q^j} gamma_i + d_z gamma_i (gamma . H_p - H) + H_{q^i} + gamma_i H_z,
/// i.e. right side minus left side of the gamma-relatedness condition.
inline std::vector<double> gamma_relatedness_residual_TZ(const SectionTZ& sec, const ScalarField& H, double t,
                                                         std::span<const double> q, double z) {
    const std::size_t n = sec.dimension();
    const Linearization l = sec.derivatives(t, q, z);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), l.values, z};
    const auto h = H.value_and_gradient(x);
    const auto& Hp = h.gradient.a_p;
    double gamma_hp = 0.0;
    for (std::size_t j = 0; j < n; ++j) gamma_hp += l.values[j] * Hp[j];
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = l.jacobian[i][0];
        for (std::size_t j = 0; j < n; ++j) s += Hp[j] * l.jacobian[i][1 + j];
        s += l.jacobian[i][n + 1] * (gamma_hp - h.value);
        s += h.gradient.a_q[i] + l.values[i] * h.gradient.a_z;
        r[i] = s;
    }
    return r;
}

/// H(t, q, d_q f, f) for the Legendrian section q -> (q, d_q f, f) of an autonomous system.
inline double autonomous_hj_residual(const SmoothMap& f, const ScalarField& H, std::span<const double> q,
                                     double t = 0.0) {
    detail::require_size(f.inputs(), q.size(), "autonomous_hj_residual");
    const Linearization l = f.linearize(q);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), l.jacobian[0], l.values[0]};
    return H.value(x);
}

/// H(t, q, d_q alpha, alpha + beta) + d beta/dt for the split S = alpha(q) + beta(t).
inline double separable_split_residual(const SmoothMap& alpha, const SmoothMap& beta, const ScalarField& H, double t,
                                       std::span<const double> q) {
    detail::require_size(alpha.inputs(), q.size(), "separable_split_residual");
    if (beta.inputs() != 1) throw std::invalid_argument("separable_split_residual: beta must depend on t only");
    const Linearization a = alpha.linearize(q);
    const std::vector<double> tv{t};
    const Linearization b = beta.linearize(tv);
    const PhasePoint x{t, std::vector<double>(q.begin(), q.end()), a.jacobian[0], a.values[0] + b.values[0]};
    return H.value(x) + b.jacobian[0][0];
}

/// max_k |S(t_k, q_k) - S(t_0, q_0) - A[t_0, t_k]| along a lifted curve j^1_t S o sigma.
inline double action_identity_check(const GeneratingFunction& S, const ScalarField& H, const Trajectory& lifted) {
    const auto action = herglotz_action_profile(H, lifted);
    const double s0 = S.value(lifted.samples.front().t, lifted.samples.front().q);
    double worst = 0.0;
    for (std::size_t k = 0; k < lifted.size(); ++k) {
        const auto& x = lifted.samples[k];
        worst = std::max(worst, std::abs(S.value(x.t, x.q) - s0 - action[k]));
    }
    return worst;
}

/// Sup/mean of |residual(b)| over grid nodes.
template <class F>
ResidualStats grid_sweep(const Grid& grid, std::size_t n, bool with_z, std::size_t jobs, const F& residual) {
    const auto nodes = grid_points(grid, n, with_z);
    return summarize(parallel_map<double>(nodes.size(), jobs, [&](std::size_t i) { return residual(nodes[i]); }));
}

}  // namespace cocontact
