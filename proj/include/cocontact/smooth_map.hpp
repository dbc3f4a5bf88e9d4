#pragma once

/**
 * @file smooth_map.hpp
 * @brief Type-erased differentiable maps R^k -> R^m.
 *
 * A SmoothMap can be evaluated on doubles or on Dual scalars. Built from a
 * generic callable, both paths run the same code; built from a value+Jacobian
 * pair, the Dual path chains the supplied Jacobian into the input tangents.
 */

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cocontact/dual.hpp"

namespace cocontact {

/// Values and first derivatives of a map at a point; `jacobian[r][c]` is d out_r / d in_c.
struct Linearization {
    std::vector<double> values;
    std::vector<std::vector<double>> jacobian;
};

class SmoothMap {
public:
    using DoubleFn = std::function<void(std::span<const double>, std::span<double>)>;
    using DualFn = std::function<void(std::span<const Dual>, std::span<Dual>)>;

    SmoothMap() = default;
    SmoothMap(std::size_t inputs, std::size_t outputs, DoubleFn f, DualFn df)
        : inputs_(inputs), outputs_(outputs), f_(std::move(f)), df_(std::move(df)) {}

    /// Wrap a callable `f(std::span<const T> in, std::span<T> out)` generic in T.
    template <class F>
    static SmoothMap from_generic(std::size_t inputs, std::size_t outputs, F f) {
        auto shared = std::make_shared<F>(std::move(f));
        return SmoothMap(
            inputs, outputs,
            [shared](std::span<const double> in, std::span<double> out) { (*shared)(in, out); },
            [shared](std::span<const Dual> in, std::span<Dual> out) { (*shared)(in, out); });
    }

    /// Build from a double evaluator and a Jacobian provider (used for maps whose
    /// derivatives come from finite differencing).
    static SmoothMap from_linearization(std::size_t inputs, std::size_t outputs, DoubleFn f,
                                        std::function<Linearization(std::span<const double>)> lin) {
        auto lin_shared = std::make_shared<decltype(lin)>(std::move(lin));
        DualFn df = [lin_shared, inputs, outputs](std::span<const Dual> in, std::span<Dual> out) {
            std::vector<double> x(inputs);
            std::size_t tangents = 0;
            for (std::size_t i = 0; i < inputs; ++i) {
                x[i] = in[i].value();
                tangents = std::max(tangents, in[i].size());
            }
            const Linearization l = (*lin_shared)(x);
            for (std::size_t r = 0; r < outputs; ++r) {
                std::vector<double> d(tangents, 0.0);
                for (std::size_t c = 0; c < inputs; ++c) {
                    const double j = l.jacobian[r][c];
                    if (j == 0.0) continue;
                    for (std::size_t k = 0; k < in[c].size(); ++k) d[k] += j * in[c].partial(k);
                }
                out[r] = tangents == 0 ? Dual(l.values[r]) : Dual(l.values[r], std::move(d));
            }
        };
        return SmoothMap(inputs, outputs, std::move(f), std::move(df));
    }

    [[nodiscard]] std::size_t inputs() const { return inputs_; }
    [[nodiscard]] std::size_t outputs() const { return outputs_; }
    [[nodiscard]] bool valid() const { return static_cast<bool>(f_); }

    void eval(std::span<const double> in, std::span<double> out) const {
        check(in.size(), out.size());
        f_(in, out);
    }
    void eval(std::span<const Dual> in, std::span<Dual> out) const {
        check(in.size(), out.size());
        df_(in, out);
    }

    [[nodiscard]] std::vector<double> operator()(std::span<const double> in) const {
        std::vector<double> out(outputs_);
        eval(in, out);
        return out;
    }

    /// Value and full Jacobian at `in`, seeding every input as a tangent.
    [[nodiscard]] Linearization linearize(std::span<const double> in) const {
        std::vector<Dual> x;
        x.reserve(in.size());
        for (std::size_t i = 0; i < in.size(); ++i) x.push_back(Dual::variable(in[i], i, in.size()));
        std::vector<Dual> y(outputs_);
        eval(std::span<const Dual>(x), std::span<Dual>(y));
        Linearization l;
        l.values.resize(outputs_);
        l.jacobian.assign(outputs_, std::vector<double>(inputs_, 0.0));
        for (std::size_t r = 0; r < outputs_; ++r) {
            l.values[r] = y[r].value();
            for (std::size_t c = 0; c < inputs_; ++c) l.jacobian[r][c] = y[r].partial(c);
        }
        return l;
    }

    /// Fixes the trailing `values.size()` inputs.
    [[nodiscard]] SmoothMap bind_trailing(std::vector<double> values) const {
        if (values.size() > inputs_) throw std::invalid_argument("bind_trailing: too many values");
        const std::size_t keep = inputs_ - values.size();
        auto self = *this;
        auto bound = std::make_shared<std::vector<double>>(std::move(values));
        return SmoothMap(
            keep, outputs_,
            [self, bound, keep](std::span<const double> in, std::span<double> out) {
                std::vector<double> full(in.begin(), in.end());
                full.insert(full.end(), bound->begin(), bound->end());
                self.eval(std::span<const double>(full), out);
            },
            [self, bound, keep](std::span<const Dual> in, std::span<Dual> out) {
                std::vector<Dual> full(in.begin(), in.end());
                for (double v : *bound) full.emplace_back(v);
                self.eval(std::span<const Dual>(full), out);
            });
    }

    /// Selects output `index` as a scalar map.
    [[nodiscard]] SmoothMap component(std::size_t index) const {
        if (index >= outputs_) throw std::out_of_range("SmoothMap::component");
        auto self = *this;
        const std::size_t m = outputs_;
        return SmoothMap(
            inputs_, 1,
            [self, index, m](std::span<const double> in, std::span<double> out) {
                std::vector<double> all(m);
                self.eval(in, all);
                out[0] = all[index];
            },
            [self, index, m](std::span<const Dual> in, std::span<Dual> out) {
                std::vector<Dual> all(m);
                self.eval(in, std::span<Dual>(all));
                out[0] = std::move(all[index]);
            });
    }

private:
    void check(std::size_t in, std::size_t out) const {
        if (!f_) throw std::logic_error("SmoothMap: empty map evaluated");
        if (in != inputs_ || out != outputs_) {
            throw std::invalid_argument("SmoothMap: dimension mismatch (expected " +
                                        std::to_string(inputs_) + "->" + std::to_string(outputs_) +
                                        ", got " + std::to_string(in) + "->" + std::to_string(out) +
                                        ")");
        }
    }

    std::size_t inputs_ = 0;
    std::size_t outputs_ = 0;
    DoubleFn f_;
    DualFn df_;
};

/// Stacks scalar maps sharing one input space into a single vector-valued map.
inline SmoothMap stack(std::vector<SmoothMap> parts) {
    if (parts.empty()) throw std::invalid_argument("stack: no maps");
    const std::size_t inputs = parts.front().inputs();
    for (const auto& m : parts) {
        if (m.inputs() != inputs || m.outputs() != 1) throw std::invalid_argument("stack: maps must be scalar with equal inputs");
    }
    auto shared = std::make_shared<const std::vector<SmoothMap>>(std::move(parts));
    return SmoothMap::from_generic(inputs, shared->size(), [shared](auto in, auto out) {
        for (std::size_t i = 0; i < shared->size(); ++i) (*shared)[i].eval(in, out.subspan(i, 1));
    });
}

/// Central-difference Jacobian of a double map; step scaled per coordinate.
inline Linearization finite_difference_linearization(const SmoothMap::DoubleFn& f, std::size_t outputs,
                                                     std::span<const double> x, double rel_step = 6e-6) {
    Linearization l;
    l.values.resize(outputs);
    f(x, l.values);
    l.jacobian.assign(outputs, std::vector<double>(x.size(), 0.0));
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> fp(outputs), fm(outputs);
    for (std::size_t c = 0; c < x.size(); ++c) {
        const double h = rel_step * std::max(1.0, std::abs(x[c]));
        const double orig = xp[c];
        xp[c] = orig + h;
        f(xp, fp);
        xp[c] = orig - h;
        f(xp, fm);
        xp[c] = orig;
        for (std::size_t r = 0; r < outputs; ++r) l.jacobian[r][c] = (fp[r] - fm[r]) / (2.0 * h);
    }
    return l;
}

}  // namespace cocontact
