#pragma once

/**
 * @file dual.hpp
 * @brief Forward-mode dual scalar with a runtime number of tangents.
 *
 * A Dual carries a value and the partial derivatives of that value with
 * respect to k seeded inputs. Constants keep an empty partials vector, which
 * is read as the zero vector, so mixing constants and seeded inputs does not
 * allocate.
 *
 * The value part of every operation is computed with exactly the same double
 * arithmetic as the plain-double overload, so value(f(Dual)) == f(double)
 * bit-for-bit.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace cocontact {

class Dual {
public:
    Dual() = default;
    Dual(double value) : value_(value) {}  // NOLINT: implicit lift of constants
    Dual(double value, std::vector<double> partials)
        : value_(value), partials_(std::move(partials)) {}

    /// Input number `index` out of `count` seeded variables.
    static Dual variable(double value, std::size_t index, std::size_t count) {
        std::vector<double> d(count, 0.0);
        d[index] = 1.0;
        return {value, std::move(d)};
    }

    [[nodiscard]] double value() const { return value_; }
    [[nodiscard]] std::span<const double> partials() const { return partials_; }
    [[nodiscard]] std::size_t size() const { return partials_.size(); }

    /// Partial i, zero when the dual is a constant.
    [[nodiscard]] double partial(std::size_t i) const {
        return i < partials_.size() ? partials_[i] : 0.0;
    }

    Dual operator-() const {
        Dual r(-value_);
        r.partials_.resize(partials_.size());
        for (std::size_t i = 0; i < partials_.size(); ++i) r.partials_[i] = -partials_[i];
        return r;
    }

    Dual& operator+=(const Dual& o) { return *this = *this + o; }
    Dual& operator-=(const Dual& o) { return *this = *this - o; }
    Dual& operator*=(const Dual& o) { return *this = *this * o; }
    Dual& operator/=(const Dual& o) { return *this = *this / o; }

    friend Dual operator+(const Dual& a, const Dual& b) {
        return combine(a.value_ + b.value_, a, 1.0, b, 1.0);
    }
    friend Dual operator-(const Dual& a, const Dual& b) {
        return combine(a.value_ - b.value_, a, 1.0, b, -1.0);
    }
    // (fg)' = f'g + fg'
    friend Dual operator*(const Dual& a, const Dual& b) {
        return combine(a.value_ * b.value_, a, b.value_, b, a.value_);
    }
    friend Dual operator/(const Dual& a, const Dual& b) {
        const double v = a.value_ / b.value_;
        const double inv = 1.0 / b.value_;
        return combine(v, a, inv, b, -v * inv);
    }

    /// Chain rule for a unary function with value `v` and derivative `dv`.
    [[nodiscard]] Dual apply(double v, double dv) const {
        Dual r(v);
        r.partials_.resize(partials_.size());
        for (std::size_t i = 0; i < partials_.size(); ++i) r.partials_[i] = dv * partials_[i];
        return r;
    }

private:
    static Dual combine(double v, const Dual& a, double ca, const Dual& b, double cb) {
        Dual r(v);
        const std::size_t n = std::max(a.partials_.size(), b.partials_.size());
        if (n == 0) return r;
        r.partials_.assign(n, 0.0);
        for (std::size_t i = 0; i < a.partials_.size(); ++i) r.partials_[i] += ca * a.partials_[i];
        for (std::size_t i = 0; i < b.partials_.size(); ++i) r.partials_[i] += cb * b.partials_[i];
        return r;
    }

    double value_ = 0.0;
    std::vector<double> partials_;
};

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.value(); }

inline Dual exp(const Dual& x) {
    const double e = std::exp(x.value());
    return x.apply(e, e);
}
inline Dual log(const Dual& x) { return x.apply(std::log(x.value()), 1.0 / x.value()); }
inline Dual sin(const Dual& x) { return x.apply(std::sin(x.value()), std::cos(x.value())); }
inline Dual cos(const Dual& x) { return x.apply(std::cos(x.value()), -std::sin(x.value())); }
inline Dual sinh(const Dual& x) { return x.apply(std::sinh(x.value()), std::cosh(x.value())); }
inline Dual cosh(const Dual& x) { return x.apply(std::cosh(x.value()), std::sinh(x.value())); }
inline Dual sqrt(const Dual& x) {
    const double s = std::sqrt(x.value());
    return x.apply(s, 0.5 / s);
}
inline Dual abs(const Dual& x) {
    const double v = x.value();
    return x.apply(std::abs(v), v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
}

/// x^k by repeated squaring; shared by the double and Dual paths.
template <class T>
T ipow(const T& x, long long k) {
    if (k < 0) return T(1.0) / ipow(x, -k);
    T result(1.0);
    T base = x;
    bool first = true;
    while (k > 0) {
        if (k & 1) {
            if (first) {
                result = base;
                first = false;
            } else {
                result = result * base;
            }
        }
        k >>= 1;
        if (k > 0) base = base * base;
    }
    return result;
}

}  // namespace cocontact
