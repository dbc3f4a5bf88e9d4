#pragma once

/**
 * @file scalar_field.hpp
 * @brief Functions on extended phase space with exact first derivatives.
 *
 * A ScalarField hosts a Hamiltonian or a candidate quantity. It is either a
 * parsed expression or a built-in generic callable; in both cases gradients
 * come from the dual-number engine.
 */

#include <cstddef>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

#include "cocontact/dual.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/smooth_map.hpp"

namespace cocontact {

/// Read-only view of flat phase coordinates [t, q..., p..., z].
template <class T>
struct PhaseView {
    std::span<const T> x;
    std::size_t n;

    const T& t() const { return x[0]; }
    const T& q(std::size_t i) const { return x[1 + i]; }
    const T& p(std::size_t i) const { return x[1 + n + i]; }
    const T& z() const { return x[2 * n + 1]; }
};

struct ValueAndGradient {
    double value = 0.0;
    Covector gradient;
};

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(std::size_t n, SmoothMap map) : n_(n), map_(std::move(map)) {
        if (map_.inputs() != 2 * n + 2 || map_.outputs() != 1) {
            throw std::invalid_argument("ScalarField: map must be (2n+2) -> 1");
        }
    }

    /// From a callable `f(PhaseView<T>) -> T`, generic in T.
    template <class F>
    static ScalarField from_generic(std::size_t n, F f) {
        return ScalarField(n, SmoothMap::from_generic(2 * n + 2, 1, [f, n](auto in, auto out) {
                               using T = std::remove_cvref_t<decltype(in[0])>;
                               out[0] = f(PhaseView<T>{in, n});
                           }));
    }

    static ScalarField constant(std::size_t n, double c) {
        return from_generic(n, [c](auto) { return c; });
    }

    [[nodiscard]] std::size_t dimension() const { return n_; }
    [[nodiscard]] const SmoothMap& map() const { return map_; }

    [[nodiscard]] double value(const PhasePoint& x) const {
        check(x);
        const auto flat = x.flatten();
        double out = 0.0;
        map_.eval(std::span<const double>(flat), std::span<double>(&out, 1));
        return out;
    }

    [[nodiscard]] ValueAndGradient value_and_gradient(const PhasePoint& x) const {
        check(x);
        const Linearization l = map_.linearize(x.flatten());
        ValueAndGradient r;
        r.value = l.values[0];
        const auto& j = l.jacobian[0];
        r.gradient.a_t = j[0];
        r.gradient.a_q.assign(j.begin() + 1, j.begin() + 1 + static_cast<std::ptrdiff_t>(n_));
        r.gradient.a_p.assign(j.begin() + 1 + static_cast<std::ptrdiff_t>(n_), j.end() - 1);
        r.gradient.a_z = j.back();
        return r;
    }

    friend ScalarField operator*(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, [](auto u, auto v) { return u * v; });
    }
    friend ScalarField operator/(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, [](auto u, auto v) { return u / v; });
    }
    friend ScalarField operator+(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, [](auto u, auto v) { return u + v; });
    }
    friend ScalarField operator-(const ScalarField& a, const ScalarField& b) {
        return combine(a, b, [](auto u, auto v) { return u - v; });
    }

private:
    template <class Op>
    static ScalarField combine(const ScalarField& a, const ScalarField& b, Op op) {
        if (a.n_ != b.n_) throw std::invalid_argument("ScalarField: dimension mismatch");
        const SmoothMap ma = a.map_;
        const SmoothMap mb = b.map_;
        return ScalarField(a.n_, SmoothMap::from_generic(2 * a.n_ + 2, 1, [ma, mb, op](auto in, auto out) {
                               using T = std::remove_cvref_t<decltype(in[0])>;
                               T u{}, v{};
                               ma.eval(in, std::span<T>(&u, 1));
                               mb.eval(in, std::span<T>(&v, 1));
                               out[0] = op(u, v);
                           }));
    }

    void check(const PhasePoint& x) const {
        if (x.q.size() != n_ || x.p.size() != n_) {
            throw std::invalid_argument("ScalarField: point dimension " + std::to_string(x.q.size()) +
                                        " does not match field dimension " + std::to_string(n_));
        }
    }

    std::size_t n_ = 0;
    SmoothMap map_;
};

}  // namespace cocontact
