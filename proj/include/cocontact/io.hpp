#pragma once

// Text formats shared by the command-line front end: shortest round-trip floats,
// trajectory CSV, and the small list/grid/key=value syntaxes used by flags.

#include <charconv>
#include <cstddef>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cocontact/dynamics.hpp"
#include "cocontact/expression.hpp"
#include "cocontact/sampling.hpp"

namespace cocontact {

/// Shortest decimal that round-trips; exponents are always signed ("1e+20", "2.5e-07").
inline std::string format_number(double v) { return detail::format_double(v); }

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    const std::size_t n = tr.dimension();
    os << "t";
    for (std::size_t i = 1; i <= n; ++i) os << ",q" << i;
    for (std::size_t i = 1; i <= n; ++i) os << ",p" << i;
    os << ",z\n";
    for (const auto& x : tr.samples) {
        os << format_number(x.t);
        for (double v : x.q) os << ',' << format_number(v);
        for (double v : x.p) os << ',' << format_number(v);
        os << ',' << format_number(x.z) << '\n';
    }
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view s, std::string_view what) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw std::invalid_argument(std::string(what) + ": `" + std::string(s) + "` is not a number");
    }
    return v;
}

inline std::vector<double> parse_number_list(std::string_view s, std::string_view what) {
    std::vector<double> out;
    for (auto part : split(s, ',')) out.push_back(parse_number(part, what));
    return out;
}

/// "k=v[,k=v...]"; values stay textual so callers can tell numbers from selectors.
inline std::map<std::string, std::string> parse_assignments(std::string_view s) {
    std::map<std::string, std::string> out;
    if (trim(s).empty()) return out;
    for (auto part : split(s, ',')) {
        const auto eq = part.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw std::invalid_argument("--params: expected key=value, got `" + std::string(part) + "`");
        }
        const std::string key(trim(part.substr(0, eq)));
        if (out.count(key) != 0) throw std::invalid_argument("--params: duplicate key `" + key + "`");
        out[key] = std::string(trim(part.substr(eq + 1)));
    }
    return out;
}

/// "tmin:tmax:N,qmin:qmax:N[,zmin:zmax:N]".
inline Grid parse_grid(std::string_view s) {
    const auto axes = split(s, ',');
    if (axes.size() != 2 && axes.size() != 3) throw std::invalid_argument("--grid: expected two or three axes");
    Grid g;
    auto axis = [](std::string_view a) {
        const auto parts = split(a, ':');
        if (parts.size() != 3) throw std::invalid_argument("--grid: axis `" + std::string(a) + "` is not lo:hi:N");
        GridAxis ax;
        ax.lo = parse_number(parts[0], "--grid");
        ax.hi = parse_number(parts[1], "--grid");
        const double count = parse_number(parts[2], "--grid");
        if (!(count >= 1.0) || count != static_cast<double>(static_cast<std::size_t>(count)) || count > 1e6) {
            throw std::invalid_argument("--grid: node count must be a positive integer");
        }
        ax.count = static_cast<std::size_t>(count);
        if (!(ax.hi >= ax.lo)) throw std::invalid_argument("--grid: axis upper bound below lower bound");
        return ax;
    };
    g.t = axis(axes[0]);
    g.q = axis(axes[1]);
    if (axes.size() == 3) g.z = axis(axes[2]);
    return g;
}

/// "tlo:thi,qlo:qhi,plo:phi,zlo:zhi".
inline Box parse_box(std::string_view s) {
    const auto axes = split(s, ',');
    if (axes.size() != 4) throw std::invalid_argument("--box: expected four intervals t,q,p,z");
    auto interval = [](std::string_view a) {
        const auto parts = split(a, ':');
        if (parts.size() != 2) throw std::invalid_argument("--box: interval `" + std::string(a) + "` is not lo:hi");
        Interval iv{parse_number(parts[0], "--box"), parse_number(parts[1], "--box")};
        if (!(iv.hi >= iv.lo)) throw std::invalid_argument("--box: interval upper bound below lower bound");
        return iv;
    };
    return Box{interval(axes[0]), interval(axes[1]), interval(axes[2]), interval(axes[3])};
}

/// "t,q1..qn,p1..pn,z" into a phase point of dimension n.
inline PhasePoint parse_phase_point(std::string_view s, std::size_t n) {
    const auto v = parse_number_list(s, "--init");
    if (v.size() != 2 * n + 2) {
        throw std::invalid_argument("--init: expected " + std::to_string(2 * n + 2) + " values for n=" +
                                    std::to_string(n) + ", got " + std::to_string(v.size()));
    }
    return PhasePoint::unflatten(v);
}

}  // namespace cocontact
