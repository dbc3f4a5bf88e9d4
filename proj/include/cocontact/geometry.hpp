#pragma once

/**
 * @file geometry.hpp
 * @brief The canonical cocontact structure (tau, eta) = (dt, dz - p_i dq^i).
 *
 * Everything is expressed in Darboux coordinates. The flat map is
 *
 *     flat(v) = tau(v) tau + i_v d(eta) + eta(v) eta,   d(eta) = dq^i ^ dp_i,
 *
 * and `sharp` is its closed-form inverse. The Reeb fields are R_t = d/dt and
 * R_z = d/dz.
 */

#include <cstddef>
#include <stdexcept>
#include <string>

#include "cocontact/phase_space.hpp"
#include "cocontact/scalar_field.hpp"

namespace cocontact {

namespace detail {
inline void require_dimension(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (point n=" +
                                    std::to_string(expected) + ", argument n=" + std::to_string(got) + ")");
    }
}
}  // namespace detail

inline double tau(const TangentVector& v) { return v.dt; }

inline double eta(const PhasePoint& x, const TangentVector& v) {
    detail::require_dimension(x.dimension(), v.dimension(), "eta");
    double s = v.dz;
    for (std::size_t i = 0; i < x.p.size(); ++i) s -= x.p[i] * v.dq[i];
    return s;
}

inline TangentVector reeb_time(std::size_t n) {
    TangentVector r = TangentVector::zero(n);
    r.dt = 1.0;
    return r;
}

inline TangentVector reeb_contact(std::size_t n) {
    TangentVector r = TangentVector::zero(n);
    r.dz = 1.0;
    return r;
}

/// tau as a covector.
inline Covector tau_form(std::size_t n) {
    Covector c = Covector::zero(n);
    c.a_t = 1.0;
    return c;
}

/// eta at x as a covector: dz - p_i dq^i.
inline Covector eta_form(const PhasePoint& x) {
    Covector c = Covector::zero(x.dimension());
    c.a_z = 1.0;
    for (std::size_t i = 0; i < x.p.size(); ++i) c.a_q[i] = -x.p[i];
    return c;
}

inline Covector flat(const PhasePoint& x, const TangentVector& v) {
    detail::require_dimension(x.dimension(), v.dimension(), "flat");
    const std::size_t n = x.dimension();
    const double e = eta(x, v);
    Covector a = Covector::zero(n);
    a.a_t = v.dt;
    for (std::size_t i = 0; i < n; ++i) {
        a.a_q[i] = -v.dp[i] - e * x.p[i];
        a.a_p[i] = v.dq[i];
    }
    a.a_z = e;
    return a;
}

inline TangentVector sharp(const PhasePoint& x, const Covector& a) {
    detail::require_dimension(x.dimension(), a.dimension(), "sharp");
    const std::size_t n = x.dimension();
    TangentVector v = TangentVector::zero(n);
    v.dt = a.a_t;
    double p_dot_dq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        v.dq[i] = a.a_p[i];
        v.dp[i] = -a.a_q[i] - a.a_z * x.p[i];
        p_dot_dq += x.p[i] * a.a_p[i];
    }
    v.dz = a.a_z + p_dot_dq;
    return v;
}

/// Bivector map: sharp(alpha) - alpha(R_z) R_z - alpha(R_t) R_t. Kernel is span{tau, eta}.
inline TangentVector lambda_hat(const PhasePoint& x, const Covector& a) {
    TangentVector v = sharp(x, a);
    v.dt -= a.a_t;
    v.dz -= a.a_z;
    return v;
}

/// Jacobi bracket in Darboux coordinates from values and differentials:
///   {f,g} = f_q g_p - g_q f_p - p (f_p g_z - g_p f_z) - f g_z + g f_z.
/// Gives {q^i,p_j} = delta, {q^i,z} = -q^i, {p_i,z} = -2 p_i.
inline double jacobi_bracket(const PhasePoint& x, double f, const Covector& df, double g, const Covector& dg) {
    detail::require_dimension(x.dimension(), df.dimension(), "jacobi_bracket");
    detail::require_dimension(x.dimension(), dg.dimension(), "jacobi_bracket");
    double s = 0.0;
    for (std::size_t i = 0; i < x.dimension(); ++i) {
        s += df.a_q[i] * dg.a_p[i] - dg.a_q[i] * df.a_p[i];
        s -= x.p[i] * (df.a_p[i] * dg.a_z - dg.a_p[i] * df.a_z);
    }
    return s - f * dg.a_z + g * df.a_z;
}

inline double jacobi_bracket(const ScalarField& f, const ScalarField& g, const PhasePoint& x) {
    const auto fv = f.value_and_gradient(x);
    const auto gv = g.value_and_gradient(x);
    return jacobi_bracket(x, fv.value, fv.gradient, gv.value, gv.gradient);
}

/// Bracket assembled from the structure itself: Lambda(df, dg) + f E(g) - g E(f)
/// with Lambda(df, dg) = dg(lambda_hat(df)) and E = -R_z. Its bivector part has the
/// opposite sign of `jacobi_bracket`; this is the bracket for which
/// {f,H} - R_t f = -(X_H f + (R_z H) f).
inline double intrinsic_jacobi_bracket(const PhasePoint& x, double f, const Covector& df, double g,
                                       const Covector& dg) {
    const TangentVector v = lambda_hat(x, df);
    return dg(v) - f * dg.a_z + g * df.a_z;
}

inline double intrinsic_jacobi_bracket(const ScalarField& f, const ScalarField& g, const PhasePoint& x) {
    const auto fv = f.value_and_gradient(x);
    const auto gv = g.value_and_gradient(x);
    return intrinsic_jacobi_bracket(x, fv.value, fv.gradient, gv.value, gv.gradient);
}

}  // namespace cocontact
