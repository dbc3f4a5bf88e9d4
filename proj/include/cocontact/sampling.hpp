#pragma once

// Reproducible sample sets (shifted Halton points in a box, tensor grids) and a small
// index-ordered parallel map used by the residual sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cocontact/phase_space.hpp"

namespace cocontact {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    [[nodiscard]] double at(double u) const { return lo + (hi - lo) * u; }
};

/// Sampling box for extended phase space; every q^i shares `q`, every p_i shares `p`.
struct Box {
    Interval t{0.0, 2.0};
    Interval q{-2.0, 2.0};
    Interval p{-2.0, 2.0};
    Interval z{-2.0, 2.0};
};

inline constexpr std::uint64_t default_seed = 20240917;
inline constexpr std::size_t default_sample_count = 200;

namespace detail {

inline std::vector<unsigned> first_primes(std::size_t count) {
    std::vector<unsigned> primes;
    for (unsigned c = 2; primes.size() < count; ++c) {
        bool prime = true;
        for (unsigned p : primes) {
            if (p * p > c) break;
            if (c % p == 0) {
                prime = false;
                break;
            }
        }
        if (prime) primes.push_back(c);
    }
    return primes;
}

inline double radical_inverse(std::uint64_t index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

/// Uniform double in [0,1) from the top 53 bits, identical on every platform.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace detail

/// `count` points of a Halton sequence in [0,1)^dim with a seeded Cranley-Patterson shift.
inline std::vector<std::vector<double>> shifted_halton(std::size_t dim, std::size_t count, std::uint64_t seed) {
    const auto primes = detail::first_primes(dim);
    std::mt19937_64 rng(seed);
    std::vector<double> shift(dim);
    for (auto& s : shift) s = detail::unit_uniform(rng);
    std::vector<std::vector<double>> pts(count, std::vector<double>(dim));
    for (std::size_t k = 0; k < count; ++k) {
        for (std::size_t d = 0; d < dim; ++d) {
            double u = detail::radical_inverse(k + 1, primes[d]) + shift[d];
            pts[k][d] = u - std::floor(u);
        }
    }
    return pts;
}

inline std::vector<PhasePoint> sample_box(const Box& box, std::size_t n, std::size_t count = default_sample_count,
                                          std::uint64_t seed = default_seed) {
    if (n == 0) throw std::invalid_argument("sample_box: dimension must be positive");
    const auto unit = shifted_halton(2 * n + 2, count, seed);
    std::vector<PhasePoint> out;
    out.reserve(count);
    for (const auto& u : unit) {
        PhasePoint x;
        x.t = box.t.at(u[0]);
        for (std::size_t i = 0; i < n; ++i) x.q.push_back(box.q.at(u[1 + i]));
        for (std::size_t i = 0; i < n; ++i) x.p.push_back(box.p.at(u[1 + n + i]));
        x.z = box.z.at(u[2 * n + 1]);
        out.push_back(std::move(x));
    }
    return out;
}

struct GridAxis {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 1;

    [[nodiscard]] double at(std::size_t k) const {
        if (count <= 1) return lo;
        return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    }
};

/// Tensor grid over (t, q^1..q^n) and, for action-dependent sections, z.
struct Grid {
    GridAxis t{0.0, 2.0, 50};
    GridAxis q{-2.0, 2.0, 50};
    GridAxis z{-2.0, 2.0, 21};
};

struct BasePoint {
    double t = 0.0;
    std::vector<double> q;
    double z = 0.0;
};

/// Grid nodes in row-major order (t slowest, then q^1..q^n, then z when `with_z`).
inline std::vector<BasePoint> grid_points(const Grid& g, std::size_t n, bool with_z) {
    std::size_t total = g.t.count;
    for (std::size_t i = 0; i < n; ++i) total *= g.q.count;
    if (with_z) total *= g.z.count;
    std::vector<BasePoint> out;
    out.reserve(total);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t r = idx;
        BasePoint b;
        b.q.resize(n);
        if (with_z) {
            b.z = g.z.at(r % g.z.count);
            r /= g.z.count;
        }
        for (std::size_t i = n; i-- > 0;) {
            b.q[i] = g.q.at(r % g.q.count);
            r /= g.q.count;
        }
        b.t = g.t.at(r);
        out.push_back(std::move(b));
    }
    return out;
}

inline std::size_t default_jobs() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// out[i] = f(i) for i < count, computed on up to `jobs` threads in contiguous blocks.
/// Exceptions are rethrown from the lowest failing index so failures are deterministic.
template <class R, class F>
std::vector<R> parallel_map(std::size_t count, std::size_t jobs, const F& f) {
    std::vector<R> out(count);
    std::vector<std::exception_ptr> errors(count);
    jobs = std::max<std::size_t>(1, std::min(jobs, count));
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                out[i] = f(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        work(0, count);
    } else {
        std::vector<std::thread> threads;
        const std::size_t block = (count + jobs - 1) / jobs;
        for (std::size_t j = 0; j < jobs; ++j) {
            const std::size_t begin = j * block;
            const std::size_t end = std::min(count, begin + block);
            if (begin >= end) break;
            threads.emplace_back(work, begin, end);
        }
        for (auto& th : threads) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

/// Sup and mean of |residual| over a sample set.
struct ResidualStats {
    double max = 0.0;
    double mean = 0.0;
    std::size_t count = 0;
    std::size_t skipped = 0;
};

inline ResidualStats summarize(const std::vector<double>& abs_values, std::size_t skipped = 0) {
    ResidualStats s;
    s.skipped = skipped;
    s.count = abs_values.size();
    double sum = 0.0;
    for (double v : abs_values) {
        const double a = std::abs(v);
        s.max = std::max(s.max, a);
        sum += a;
    }
    s.mean = s.count == 0 ? 0.0 : sum / static_cast<double>(s.count);
    s.mean = std::min(s.mean, s.max);
    return s;
}

}  // namespace cocontact
