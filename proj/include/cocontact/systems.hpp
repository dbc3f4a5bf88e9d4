#pragma once

/**
 * @file systems.hpp
 * @brief Built-in example systems with their known solutions and invariants.
 *
 *   free_particle_tm          H = p^2/(2m(t)) - kappa z/m(t)
 *   free_particle_autonomous  H = p^2/2 - kappa z
 *   falling_particle          H = p^2/(2m(t)) + m(t) g q + gamma z/m(t)
 *   damped_oscillator         H = p^2/(2m) + k q^2/2 - q F(t) + gamma z/m
 *
 * Mass laws: constant m0 or linear m0 + a t. Forcing laws: zero, constant F0,
 * F0 sin(omega t). Running integrals keep the lower limits of the published
 * formulas (0 for the time-dependent free particle, 1 elsewhere).
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "cocontact/dual.hpp"
#include "cocontact/expression.hpp"
#include "cocontact/hamilton_jacobi.hpp"
#include "cocontact/phase_space.hpp"
#include "cocontact/quadrature.hpp"
#include "cocontact/quantities.hpp"
#include "cocontact/sampling.hpp"
#include "cocontact/scalar_field.hpp"
#include "cocontact/smooth_map.hpp"

namespace cocontact {

/// Invalid system name, parameter, or selector.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct MassLaw {
    bool linear = false;
    double m0 = 1.0;
    double a = 0.0;

    template <class T>
    T operator()(const T& t) const {
        if (linear) return T(m0) + a * t;
        return T(m0);
    }

    /// Closed form of int_{lower}^{t} ds / m(s).
    [[nodiscard]] double inverse_integral(double lower, double t) const {
        if (!linear || a == 0.0) return (t - lower) / m0;
        return std::log((m0 + a * t) / (m0 + a * lower)) / a;
    }
};

struct ForcingLaw {
    enum class Kind { zero, constant, sine };
    Kind kind = Kind::zero;
    double F0 = 0.0;
    double omega = 0.0;

    template <class T>
    T operator()(const T& t) const {
        using std::sin;
        switch (kind) {
            case Kind::zero: return T(0.0);
            case Kind::constant: return T(F0);
            case Kind::sine: return F0 * sin(omega * t);
        }
        return T(0.0);
    }
};

/// cosh(kappa x) and sinh(kappa x)/kappa for kappa^2 = D of either sign, real throughout:
/// hyperbolic for D > 0, trigonometric for D < 0, and a series when |kappa x| < 1e-4.
template <class T>
std::pair<T, T> oscillator_cs(double D, const T& x) {
    using std::cos, std::cosh, std::sin, std::sinh, std::sqrt, std::abs;
    const double xv = value_of(x);
    if (std::abs(D) * xv * xv < 1e-8) {
        const T x2 = x * x;
        const T c = 1.0 + D * x2 / 2.0 + D * D * x2 * x2 / 24.0 + D * D * D * x2 * x2 * x2 / 720.0;
        const T s = x * (1.0 + D * x2 / 6.0 + D * D * x2 * x2 / 120.0 + D * D * D * x2 * x2 * x2 / 5040.0);
        return {c, s};
    }
    if (D > 0.0) {
        const double k = std::sqrt(D);
        return {cosh(k * x), sinh(k * x) / k};
    }
    const double w = std::sqrt(-D);
    return {cos(w * x), sin(w * x) / w};
}

struct RegisteredQuantity {
    std::string name;
    QuantityKind kind = QuantityKind::conserved;
    ScalarField field;
};

/// S = alpha(q) + beta(t).
struct SeparableSplit {
    SmoothMap alpha;  ///< config layout [q...]
    SmoothMap beta;   ///< [t]
};

struct SystemSpec {
    std::string name;
    std::size_t n = 1;
    Parameters params;
    std::map<std::string, std::string> selectors;
    ScalarField H;
    bool autonomous = false;
    std::vector<RegisteredQuantity> quantities;
    std::vector<CompleteSolution> solutions;
    PhasePoint default_init;
    /// Closed-form orbit through lambda with integration constant c (when known).
    std::function<PhasePoint(double t, const std::vector<double>& lambda, double c)> orbit;
    /// Initial base point (t0 = 0) of the closed-form orbit for (lambda, c).
    std::function<std::vector<double>(const std::vector<double>& lambda, double c)> orbit_q0;
    std::function<SeparableSplit(const std::vector<double>& lambda)> split;

    [[nodiscard]] const RegisteredQuantity& quantity(const std::string& q) const {
        for (const auto& r : quantities)
            if (r.name == q) return r;
        throw ConfigError("system `" + name + "` has no quantity `" + q + "`");
    }
    [[nodiscard]] const CompleteSolution& solution(const std::string& s = {}) const {
        if (solutions.empty()) throw ConfigError("system `" + name + "` registers no complete solution");
        if (s.empty()) return solutions.front();
        for (const auto& r : solutions)
            if (r.name == s) return r;
        throw ConfigError("system `" + name + "` has no solution `" + s + "`");
    }
};

struct SystemOptions {
    Parameters params;
    std::map<std::string, std::string> selectors;
    Interval time_range{0.0, 2.0};  ///< mass must stay positive here
    bool self_test = true;
};

inline const std::vector<std::string>& system_names() {
    static const std::vector<std::string> names{"free_particle_tm", "free_particle_autonomous", "falling_particle",
                                                "damped_oscillator"};
    return names;
}

namespace detail {

struct ParamReader {
    const std::string& system;
    const SystemOptions& opts;
    std::vector<std::string> allowed;
    std::vector<std::string> allowed_selectors;

    void validate() const {
        for (const auto& [k, v] : opts.params) {
            if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
                throw ConfigError("unknown parameter `" + k + "` for system `" + system + "`");
            if (!std::isfinite(v)) throw ConfigError("parameter `" + k + "` must be finite");
        }
        for (const auto& [k, v] : opts.selectors) {
            if (std::find(allowed_selectors.begin(), allowed_selectors.end(), k) == allowed_selectors.end())
                throw ConfigError("unknown selector `" + k + "` for system `" + system + "`");
        }
    }
    [[nodiscard]] double get(const std::string& key, std::optional<double> fallback) const {
        auto it = opts.params.find(key);
        if (it != opts.params.end()) return it->second;
        if (!fallback) throw ConfigError("missing parameter `" + key + "` for system `" + system + "`");
        return *fallback;
    }
    [[nodiscard]] std::string selector(const std::string& key, const std::string& fallback) const {
        auto it = opts.selectors.find(key);
        return it == opts.selectors.end() ? fallback : it->second;
    }
};

inline MassLaw read_mass(const ParamReader& r, const std::string& default_law, std::optional<double> default_a,
                         Parameters& resolved, std::map<std::string, std::string>& sel) {
    MassLaw m;
    const std::string law = r.selector("mass", default_law);
    m.m0 = r.get("m0", 1.0);
    resolved["m0"] = m.m0;
    if (law == "linear") {
        m.linear = true;
        m.a = r.get("a", default_a);
        resolved["a"] = m.a;
    } else if (law != "constant") {
        throw ConfigError("mass law must be `constant` or `linear`, got `" + law + "`");
    }
    sel["mass"] = law;
    for (double t : {r.opts.time_range.lo, r.opts.time_range.hi}) {
        if (!(m(t) > 0.0)) {
            throw ConfigError("mass is not positive at t = " + format_double(t) + " on the requested time range");
        }
    }
    return m;
}

inline void require_positive(double v, const char* key) {
    if (!(v > 0.0)) throw ConfigError(std::string("parameter `") + key + "` must be positive");
}

template <class F>
ScalarField field(std::size_t n, F f) {
    return ScalarField::from_generic(n, std::move(f));
}

template <class F>
SmoothMap config_map(std::size_t n, F f) {
    return SmoothMap::from_generic(n, 1, [f](auto in, auto out) { out[0] = f(in[0]); });
}

template <class F>
SmoothMap time_map(F f) {
    return SmoothMap::from_generic(1, 1, [f](auto in, auto out) { out[0] = f(in[0]); });
}

inline SystemSpec free_particle_tm(const SystemOptions& opts) {
    const std::string name = "free_particle_tm";
    ParamReader r{name, opts, {"kappa", "m0", "a"}, {"mass"}};
    r.validate();
    SystemSpec s;
    s.name = name;
    const double kappa = r.get("kappa", 2.0);
    require_positive(kappa, "kappa");
    s.params["kappa"] = kappa;
    const MassLaw m = read_mass(r, "linear", 1.0, s.params, s.selectors);
    // K0(t) = int_0^t ds / m(s)
    const QuadratureCache K0([m](double u) { return 1.0 / m(u); }, 0.0);
    const double rk = std::sqrt(kappa / 2.0);
    const double r2k = std::sqrt(2.0 * kappa);

    s.H = field(1, [kappa, m](auto x) { return x.p(0) * x.p(0) / (2.0 * m(x.t())) - kappa * x.z() / m(x.t()); });
    s.quantities.push_back({"f1", QuantityKind::conserved, field(1, [kappa, K0](auto x) {
                                using std::exp;
                                return exp(-kappa * K0(x.t())) * (x.z() - x.p(0) * x.p(0) / (2.0 * kappa));
                            })});
    s.quantities.push_back(
        {"f2", QuantityKind::conserved, field(1, [kappa, r2k](auto x) { return (x.p(0) - kappa * x.q(0)) / r2k; })});

    CompleteSolution sol;
    sol.name = "S_lambda";
    sol.approach = Approach::action_independent;
    sol.n = 1;
    sol.lambda_dim = 2;
    sol.default_lambda = {1.0, 0.0};
    sol.generating = [kappa, K0, rk](const std::vector<double>& l) {
        return GeneratingFunction::from_generic(1, [kappa, K0, rk, l](auto tq) {
            using std::exp;
            const auto b = rk * tq[1] + l[1];
            return l[0] * exp(kappa * K0(tq[0])) + b * b;
        });
    };
    sol.section_t = [kappa, K0, rk, r2k](const std::vector<double>& l) {
        SmoothMap gamma = SmoothMap::from_generic(2, 1, [rk, r2k, l](auto in, auto out) {
            out[0] = r2k * (rk * in[1] + l[1]);
        });
        SmoothMap action = SmoothMap::from_generic(2, 1, [kappa, K0, rk, l](auto in, auto out) {
            using std::exp;
            const auto b = rk * in[1] + l[1];
            out[0] = l[0] * exp(kappa * K0(in[0])) + b * b;
        });
        return SectionT(1, std::move(gamma), std::move(action));
    };
    sol.inverse = SmoothMap::from_generic(4, 2, [kappa, K0, r2k](auto in, auto out) {
        using std::exp;
        out[0] = exp(-kappa * K0(in[0])) * (in[3] - in[2] * in[2] / (2.0 * kappa));
        out[1] = (in[2] - kappa * in[1]) / r2k;
    });
    sol.inverse_labels = {"lambda1", "lambda2"};
    s.solutions.push_back(std::move(sol));

    // q(t) = c e^{K1(t)} + sqrt(2/kappa) lambda2 (e^{K1(t)} - 1), K1 = kappa int_1^t ds/m.
    const double s2k = std::sqrt(2.0 / kappa);
    s.orbit = [m, kappa, rk, r2k, s2k](double t, const std::vector<double>& l, double c) {
        const double e1 = std::exp(kappa * m.inverse_integral(1.0, t));
        const double q = c * e1 + s2k * l[1] * (e1 - 1.0);
        const double b = rk * q + l[1];
        return PhasePoint{t, {q}, {r2k * b}, l[0] * std::exp(kappa * m.inverse_integral(0.0, t)) + b * b};
    };
    s.orbit_q0 = [orbit = s.orbit](const std::vector<double>& l, double c) { return orbit(0.0, l, c).q; };
    s.split = [kappa, K0, rk](const std::vector<double>& l) {
        return SeparableSplit{config_map(1, [rk, l](auto q) {
                                  const auto b = rk * q + l[1];
                                  return b * b;
                              }),
                              time_map([kappa, K0, l](auto t) {
                                  using std::exp;
                                  return l[0] * exp(kappa * K0(t));
                              })};
    };
    s.default_init = s.orbit(0.0, {1.0, 0.0}, 1.0);
    return s;
}

inline SystemSpec free_particle_autonomous(const SystemOptions& opts) {
    const std::string name = "free_particle_autonomous";
    ParamReader r{name, opts, {"kappa"}, {}};
    r.validate();
    SystemSpec s;
    s.name = name;
    s.autonomous = true;
    const double kappa = r.get("kappa", 2.0);
    require_positive(kappa, "kappa");
    s.params["kappa"] = kappa;
    const double rk = std::sqrt(kappa / 2.0);
    const double r2k = std::sqrt(2.0 * kappa);

    s.H = field(1, [kappa](auto x) { return x.p(0) * x.p(0) / 2.0 - kappa * x.z(); });
    s.quantities.push_back(
        {"f1", QuantityKind::conserved, field(1, [kappa, r2k](auto x) { return (x.p(0) - kappa * x.q(0)) / r2k; })});
    s.quantities.push_back({"H", QuantityKind::dissipated, s.H});

    CompleteSolution sol;
    sol.name = "S_lambda";
    sol.approach = Approach::action_independent;
    sol.n = 1;
    sol.lambda_dim = 1;
    sol.default_lambda = {0.0};
    sol.generating = [kappa, rk](const std::vector<double>& l) {
        return GeneratingFunction::from_generic(1, [kappa, rk, l](auto tq) {
            using std::exp;
            const auto b = rk * tq[1] + l[0];
            return exp(kappa * tq[0]) + b * b;
        });
    };
    sol.section_t = [kappa, rk, r2k](const std::vector<double>& l) {
        SmoothMap gamma = SmoothMap::from_generic(2, 1, [rk, r2k, l](auto in, auto out) {
            out[0] = r2k * (rk * in[1] + l[0]);
        });
        SmoothMap action = SmoothMap::from_generic(2, 1, [kappa, rk, l](auto in, auto out) {
            using std::exp;
            const auto b = rk * in[1] + l[0];
            out[0] = exp(kappa * in[0]) + b * b;
        });
        return SectionT(1, std::move(gamma), std::move(action));
    };
    // (t, lambda) = ((1/kappa) log|z - p^2/(2 kappa)|, (p - kappa q)/sqrt(2 kappa))
    sol.inverse = SmoothMap::from_generic(4, 2, [kappa, r2k](auto in, auto out) {
        using std::abs, std::log;
        const auto w = in[3] - in[2] * in[2] / (2.0 * kappa);
        if (value_of(w) == 0.0) throw DomainError("log of zero in inverse map", "log|z - p^2/(2 kappa)|");
        out[0] = log(abs(w)) / kappa;
        out[1] = (in[2] - kappa * in[1]) / r2k;
    });
    sol.inverse_labels = {"t", "lambda"};
    s.solutions.push_back(std::move(sol));

    // q = c e^{kappa t} - sqrt(2/kappa) lambda, p = kappa c e^{kappa t}, z = e^{kappa t} + (kappa/2) c^2 e^{2 kappa t}
    const double s2k = std::sqrt(2.0 / kappa);
    s.orbit = [kappa, s2k](double t, const std::vector<double>& l, double c) {
        const double e = std::exp(kappa * t);
        return PhasePoint{t, {c * e - s2k * l[0]}, {kappa * c * e}, e + 0.5 * kappa * c * c * e * e};
    };
    s.orbit_q0 = [orbit = s.orbit](const std::vector<double>& l, double c) { return orbit(0.0, l, c).q; };
    s.split = [kappa, rk](const std::vector<double>& l) {
        return SeparableSplit{config_map(1, [rk, l](auto q) {
                                  const auto b = rk * q + l[0];
                                  return b * b;
                              }),
                              time_map([kappa](auto t) {
                                  using std::exp;
                                  return exp(kappa * t);
                              })};
    };
    s.default_init = s.orbit(0.0, {0.0}, 1.0);
    return s;
}

inline SystemSpec falling_particle(const SystemOptions& opts) {
    const std::string name = "falling_particle";
    ParamReader r{name, opts, {"m0", "a", "g", "friction"}, {"mass"}};
    r.validate();
    SystemSpec s;
    s.name = name;
    const MassLaw m = read_mass(r, "constant", std::nullopt, s.params, s.selectors);
    const double g = r.get("g", 9.8);
    const double gamma = r.get("friction", 0.5);
    s.params["g"] = g;
    s.params["friction"] = gamma;
    s.autonomous = !m.linear || m.a == 0.0;

    // Gamma(t) = int_1^t gamma/m, I(t) = int_1^t e^{Gamma(u)} m(u) du
    const QuadratureCache Gam([m, gamma](double u) { return gamma / m(u); }, 1.0);
    const QuadratureCache I([m, Gam](double u) { return std::exp(Gam(u)) * m(u); }, 1.0);

    s.H = field(1, [m, g, gamma](auto x) {
        const auto mt = m(x.t());
        return x.p(0) * x.p(0) / (2.0 * mt) + mt * g * x.q(0) + gamma * x.z() / mt;
    });
    s.quantities.push_back({"f", QuantityKind::conserved, field(1, [g, Gam, I](auto x) {
                                using std::exp;
                                return exp(Gam(x.t())) * x.p(0) + g * I(x.t());
                            })});
    s.quantities.push_back({"k", QuantityKind::dissipated, field(1, [g, Gam, I](auto x) {
                                using std::exp;
                                return x.p(0) + g * exp(-Gam(x.t())) * I(x.t());
                            })});
    if (s.autonomous) s.quantities.push_back({"H", QuantityKind::dissipated, s.H});

    CompleteSolution sol;
    sol.name = "P_lambda";
    sol.approach = Approach::action_dependent;
    sol.n = 1;
    sol.lambda_dim = 1;
    sol.default_lambda = {1.0};
    // P(t, lambda) = e^{-Gamma} (lambda - g I)
    sol.section_tz = [g, Gam, I](const std::vector<double>& l) {
        return SectionTZ::from_generic(1, [g, Gam, I, l](auto in, auto out) {
            using std::exp;
            out[0] = exp(-Gam(in[0])) * (l[0] - g * I(in[0]));
        });
    };
    sol.inverse = SmoothMap::from_generic(4, 1, [g, Gam, I](auto in, auto out) {
        using std::exp;
        out[0] = exp(Gam(in[0])) * in[2] + g * I(in[0]);
    });
    sol.inverse_labels = {"lambda"};
    s.solutions.push_back(std::move(sol));
    s.default_init = PhasePoint{0.0, {0.0}, {1.0}, 0.0};
    return s;
}

inline SystemSpec damped_oscillator(const SystemOptions& opts) {
    const std::string name = "damped_oscillator";
    ParamReader r{name, opts, {"m0", "k", "friction", "F0", "omega"}, {"forcing"}};
    r.validate();
    SystemSpec s;
    s.name = name;
    const double m = r.get("m0", 1.0);
    require_positive(m, "m0");
    const double k = r.get("k", 1.0);
    const double gamma = r.get("friction", 0.2);
    s.params["m0"] = m;
    s.params["k"] = k;
    s.params["friction"] = gamma;
    ForcingLaw F;
    const std::string law = r.selector("forcing", "zero");
    if (law == "constant") {
        F.kind = ForcingLaw::Kind::constant;
        F.F0 = r.get("F0", std::nullopt);
        s.params["F0"] = F.F0;
    } else if (law == "sine") {
        F.kind = ForcingLaw::Kind::sine;
        F.F0 = r.get("F0", std::nullopt);
        F.omega = r.get("omega", std::nullopt);
        s.params["F0"] = F.F0;
        s.params["omega"] = F.omega;
    } else if (law != "zero") {
        throw ConfigError("forcing law must be `zero`, `constant` or `sine`, got `" + law + "`");
    }
    s.selectors["forcing"] = law;
    s.autonomous = F.kind != ForcingLaw::Kind::sine;

    const double D = gamma * gamma - 4.0 * k * m;  // kappa^2
    const double half = 1.0 / (2.0 * m);
    // J(t) = int_1^t F(s) e^{gamma s/2m} (C(s) + gamma S(s)) ds
    const QuadratureCache J(
        [F, D, gamma, half](double u) {
            const auto [c, sk] = oscillator_cs(D, u * half);
            return F(u) * std::exp(gamma * u * half) * (c + gamma * sk);
        },
        1.0);
    const bool forced = F.kind != ForcingLaw::Kind::zero;
    auto J_of = [J, forced](const auto& t) -> std::remove_cvref_t<decltype(t)> {
        if (!forced) return 0.0 * t;
        return J(t);
    };

    s.H = field(1, [m, k, gamma, F](auto x) {
        return x.p(0) * x.p(0) / (2.0 * m) + k * x.q(0) * x.q(0) / 2.0 - x.q(0) * F(x.t()) + gamma * x.z() / m;
    });
    auto g_of = [m, k, gamma, D, half, J_of](auto t, auto q, auto p) {
        using std::exp;
        const auto [c, sk] = oscillator_cs(D, t * half);
        return exp(gamma * t * half) * (sk * (2.0 * k * m * q + gamma * p) + p * c) - J_of(t);
    };
    s.quantities.push_back(
        {"g", QuantityKind::conserved, field(1, [g_of](auto x) { return g_of(x.t(), x.q(0), x.p(0)); })});
    s.quantities.push_back({"f", QuantityKind::dissipated, field(1, [g_of, gamma, m](auto x) {
                                using std::exp;
                                return exp(-gamma * x.t() / m) * g_of(x.t(), x.q(0), x.p(0));
                            })});
    if (s.autonomous) s.quantities.push_back({"H", QuantityKind::dissipated, s.H});

    CompleteSolution sol;
    sol.name = "P_lambda";
    sol.approach = Approach::action_dependent;
    sol.n = 1;
    sol.lambda_dim = 1;
    sol.default_lambda = {1.0};
    // P = (lambda + J - 2 k m q A S) / (A (gamma S + C)), A = e^{gamma t/2m}
    sol.section_tz = [m, k, gamma, D, half, J_of](const std::vector<double>& l) {
        return SectionTZ::from_generic(1, [m, k, gamma, D, half, J_of, l](auto in, auto out) {
            using std::exp;
            const auto& t = in[0];
            const auto [c, sk] = oscillator_cs(D, t * half);
            const auto A = exp(gamma * t * half);
            out[0] = (l[0] + J_of(t) - 2.0 * k * m * in[1] * A * sk) / (A * (gamma * sk + c));
        });
    };
    sol.inverse = SmoothMap::from_generic(4, 1, [g_of](auto in, auto out) { out[0] = g_of(in[0], in[1], in[2]); });
    sol.inverse_labels = {"lambda"};
    s.solutions.push_back(std::move(sol));
    s.default_init = PhasePoint{0.0, {1.0}, {0.0}, 0.0};
    return s;
}

}  // namespace detail

struct SelfTestResult {
    std::string quantity;
    QuantityReport report;
};

/// Residual check of every registered quantity on the default box.
inline std::vector<SelfTestResult> self_test(const SystemSpec& s, double tolerance = 1e-6, std::size_t jobs = 1) {
    const auto pts = sample_box(Box{}, s.n);
    std::vector<SelfTestResult> out;
    for (const auto& q : s.quantities) {
        QuantityReport rep = q.kind == QuantityKind::dissipated ? dissipation_report(q.field, s.H, pts, tolerance, jobs)
                                                                : conservation_report(q.field, s.H, pts, tolerance, jobs);
        out.push_back({q.name, rep});
    }
    return out;
}

inline SystemSpec build_system(const std::string& name, const SystemOptions& opts = {}) {
    SystemSpec s;
    if (name == "free_particle_tm") {
        s = detail::free_particle_tm(opts);
    } else if (name == "free_particle_autonomous") {
        s = detail::free_particle_autonomous(opts);
    } else if (name == "falling_particle") {
        s = detail::falling_particle(opts);
    } else if (name == "damped_oscillator") {
        s = detail::damped_oscillator(opts);
    } else {
        throw ConfigError("unknown system `" + name + "`");
    }
    if (opts.self_test) {
        for (const auto& r : self_test(s)) {
            if (!r.report.pass) {
                throw std::runtime_error("self-test of `" + name + "` quantity `" + r.quantity + "` failed: max residual " +
                                         detail::format_double(r.report.stats.max));
            }
        }
    }
    return s;
}

}  // namespace cocontact
