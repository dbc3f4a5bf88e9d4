#pragma once

// Points, tangent vectors and covectors of the extended phase space
// R x T*Q x R in Darboux coordinates (t, q^1..q^n, p_1..p_n, z).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cocontact {

struct PhasePoint {
    double t = 0.0;
    std::vector<double> q;
    std::vector<double> p;
    double z = 0.0;

    [[nodiscard]] std::size_t dimension() const { return q.size(); }

    /// Flat layout [t, q..., p..., z] used by SmoothMap inputs.
    [[nodiscard]] std::vector<double> flatten() const {
        std::vector<double> x;
        x.reserve(2 * q.size() + 2);
        x.push_back(t);
        x.insert(x.end(), q.begin(), q.end());
        x.insert(x.end(), p.begin(), p.end());
        x.push_back(z);
        return x;
    }

    static PhasePoint unflatten(const std::vector<double>& x) {
        if (x.size() < 4 || x.size() % 2 != 0) {
            throw std::invalid_argument("phase point needs 2n+2 coordinates with n >= 1, got " +
                                        std::to_string(x.size()));
        }
        const std::size_t n = (x.size() - 2) / 2;
        PhasePoint pt;
        pt.t = x[0];
        pt.q.assign(x.begin() + 1, x.begin() + 1 + static_cast<std::ptrdiff_t>(n));
        pt.p.assign(x.begin() + 1 + static_cast<std::ptrdiff_t>(n), x.end() - 1);
        pt.z = x.back();
        return pt;
    }

    [[nodiscard]] bool finite() const {
        if (!std::isfinite(t) || !std::isfinite(z)) return false;
        for (double v : q)
            if (!std::isfinite(v)) return false;
        for (double v : p)
            if (!std::isfinite(v)) return false;
        return true;
    }

    friend bool operator==(const PhasePoint&, const PhasePoint&) = default;
};

struct TangentVector {
    double dt = 0.0;
    std::vector<double> dq;
    std::vector<double> dp;
    double dz = 0.0;

    static TangentVector zero(std::size_t n) { return {0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }

    [[nodiscard]] std::size_t dimension() const { return dq.size(); }

    [[nodiscard]] std::vector<double> flatten() const {
        std::vector<double> x;
        x.reserve(2 * dq.size() + 2);
        x.push_back(dt);
        x.insert(x.end(), dq.begin(), dq.end());
        x.insert(x.end(), dp.begin(), dp.end());
        x.push_back(dz);
        return x;
    }

    static TangentVector unflatten(const std::vector<double>& x) {
        const PhasePoint p = PhasePoint::unflatten(x);
        return {p.t, p.q, p.p, p.z};
    }

    friend TangentVector operator-(const TangentVector& a, const TangentVector& b) {
        TangentVector r = a;
        r.dt -= b.dt;
        for (std::size_t i = 0; i < r.dq.size(); ++i) {
            r.dq[i] -= b.dq[i];
            r.dp[i] -= b.dp[i];
        }
        r.dz -= b.dz;
        return r;
    }

    friend bool operator==(const TangentVector&, const TangentVector&) = default;
};

struct Covector {
    double a_t = 0.0;
    std::vector<double> a_q;
    std::vector<double> a_p;
    double a_z = 0.0;

    static Covector zero(std::size_t n) { return {0.0, std::vector<double>(n, 0.0), std::vector<double>(n, 0.0), 0.0}; }

    [[nodiscard]] std::size_t dimension() const { return a_q.size(); }

    /// Pairing <alpha, v>.
    [[nodiscard]] double operator()(const TangentVector& v) const {
        double s = a_t * v.dt + a_z * v.dz;
        for (std::size_t i = 0; i < a_q.size(); ++i) s += a_q[i] * v.dq[i] + a_p[i] * v.dp[i];
        return s;
    }

    [[nodiscard]] std::vector<double> flatten() const {
        return TangentVector{a_t, a_q, a_p, a_z}.flatten();
    }

    friend bool operator==(const Covector&, const Covector&) = default;
};

/// Euclidean norm of the flat coordinates.
inline double norm(const PhasePoint& x) {
    double s = 0.0;
    for (double v : x.flatten()) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_difference(const TangentVector& a, const TangentVector& b) {
    const auto fa = a.flatten();
    const auto fb = b.flatten();
    double m = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

inline double max_abs_difference(const PhasePoint& a, const PhasePoint& b) {
    const auto fa = a.flatten();
    const auto fb = b.flatten();
    double m = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) m = std::max(m, std::abs(fa[i] - fb[i]));
    return m;
}

}  // namespace cocontact
