#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cocontact/dual.hpp"
#include "cocontact/expression.hpp"

using namespace cocontact;

namespace {

PhasePoint point1(double t, double q, double p, double z) { return PhasePoint{t, {q}, {p}, z}; }

double eval1(const std::string& s, const PhasePoint& x, const Parameters& params = {}) {
    return evaluate(parse(s, x.dimension()), x, params);
}

/// Random expression over t, q1, p1, q2, p2, z whose functions stay inside their domains.
std::string random_expression(std::mt19937_64& rng, int depth) {
    static const char* leaves[] = {"t", "q1", "p1", "q2", "p2", "z", "0.5", "1.25", "2", "c"};
    std::uniform_int_distribution<int> pick(0, 99);
    if (depth == 0 || pick(rng) < 25) return leaves[pick(rng) % 10];
    const int k = pick(rng) % 11;
    const std::string a = random_expression(rng, depth - 1);
    switch (k) {
        case 0: return "(" + a + " + " + random_expression(rng, depth - 1) + ")";
        case 1: return "(" + a + " - " + random_expression(rng, depth - 1) + ")";
        case 2: return a + " * " + random_expression(rng, depth - 1);
        case 3: return a + " / (1.5 + " + random_expression(rng, depth - 1) + "^2)";
        case 4: return "(" + a + ")^2";
        case 5: return "exp(0.3 * " + a + ")";
        case 6: return "sin(" + a + ")";
        case 7: return "cos(" + a + ")";
        case 8: return "log(1 + (" + a + ")^2)";
        case 9: return "sqrt(2 + sinh(" + a + ")^2)";
        default: return "-cosh(0.2 * " + a + ")";
    }
}

}  // namespace

TEST(Parse, ParameterIsRecorded) {
    const Expr e = parse("p1^2/2 - kappa*z", 1);
    ASSERT_EQ(e.parameters().size(), 1u);
    EXPECT_EQ(e.parameters()[0], "kappa");
    EXPECT_DOUBLE_EQ(evaluate(e, point1(0, 0, 2, 1), {{"kappa", 2.0}}), 0.0);
}

TEST(Parse, IndexOutOfRange) {
    try {
        (void)parse("q2", 1);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 0u);
        EXPECT_NE(std::string(e.what()).find("out of range"), std::string::npos);
    }
    EXPECT_THROW((void)parse("p0", 3), ParseError);
    EXPECT_NO_THROW((void)parse("q2 + p3", 3));
}

TEST(Parse, Precedence) {
    const auto x = point1(0, 0, 0, 0);
    EXPECT_EQ(eval1("1+2*3", x), 7.0);
    EXPECT_EQ(eval1("2^3^2", x), 512.0);   // right-associative
    EXPECT_EQ(eval1("8/4/2", x), 1.0);     // left-associative
    EXPECT_EQ(eval1("10-4-3", x), 3.0);
    EXPECT_EQ(eval1("-2^2", x), -4.0);     // ^ binds tighter than unary minus
    EXPECT_EQ(eval1("2^-1", x), 0.5);
    EXPECT_EQ(eval1("--3", x), 3.0);
    EXPECT_EQ(eval1("(1+2)*3", x), 9.0);
    EXPECT_NEAR(eval1("2*pi", x), 2.0 * M_PI, 0.0);
    EXPECT_EQ(eval1("1.5e2 + 2E-1", x), 150.2);
}

TEST(Parse, Errors) {
    EXPECT_THROW((void)parse("", 1), ParseError);
    EXPECT_THROW((void)parse("   ", 1), ParseError);
    EXPECT_THROW((void)parse("(1+2", 1), ParseError);
    EXPECT_THROW((void)parse("1+2)", 1), ParseError);
    EXPECT_THROW((void)parse("foo(q1)", 1), ParseError);
    EXPECT_THROW((void)parse("exp", 1), ParseError);
    EXPECT_THROW((void)parse("1 $ 2", 1), ParseError);
    EXPECT_THROW((void)parse("1..2", 1), ParseError);
    EXPECT_THROW((void)parse("q1 +", 1), ParseError);
    EXPECT_THROW((void)parse("q1", 0), std::invalid_argument);
    try {
        (void)parse("q1 + # 2", 1);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 5u);
    }
}

TEST(Parse, UnboundParameterRejected) {
    EXPECT_THROW((void)evaluate(parse("a*q1", 1), point1(0, 1, 0, 0), {}), std::invalid_argument);
}

TEST(EvalWithGrad, ProductRule) {
    const auto r = eval_with_grad(parse("q1*p1", 1), point1(0, 2, 3, 0), {});
    EXPECT_EQ(r.value, 6.0);
    EXPECT_EQ(r.gradient.a_q[0], 3.0);
    EXPECT_EQ(r.gradient.a_p[0], 2.0);
    EXPECT_EQ(r.gradient.a_t, 0.0);
    EXPECT_EQ(r.gradient.a_z, 0.0);
}

TEST(EvalWithGrad, ExpOfTime) {
    const auto r = eval_with_grad(parse("exp(t)", 1), point1(1, 0, 0, 0), {});
    EXPECT_DOUBLE_EQ(r.value, std::exp(1.0));
    EXPECT_DOUBLE_EQ(r.gradient.a_t, std::exp(1.0));
}

TEST(EvalWithGrad, CoordinateIsBasisVector) {
    const PhasePoint x{0.3, {1, 2}, {3, 4}, 5};
    const char* names[] = {"t", "q1", "q2", "p1", "p2", "z"};
    for (int k = 0; k < 6; ++k) {
        const auto r = eval_with_grad(parse(names[k], 2), x, {});
        std::vector<double> g = r.gradient.flatten();
        for (int j = 0; j < 6; ++j) EXPECT_EQ(g[j], j == k ? 1.0 : 0.0) << names[k] << " slot " << j;
    }
}

TEST(EvalWithGrad, DomainErrorsNameTheNode) {
    const auto x = point1(0, -1, 0, 0);
    try {
        (void)eval_with_grad(parse("2 + log(q1)", 1), x, {});
        FAIL();
    } catch (const DomainError& e) {
        EXPECT_NE(e.node().find("log"), std::string::npos);
    }
    EXPECT_THROW((void)evaluate(parse("sqrt(q1)", 1), x, {}), DomainError);
    EXPECT_THROW((void)evaluate(parse("1/(q1+1)", 1), x, {}), DomainError);
    EXPECT_THROW((void)evaluate(parse("q1^0.5", 1), x, {}), DomainError);
    EXPECT_EQ(evaluate(parse("q1^3", 1), x, {}), -1.0);  // integer exponent allows negative base
}

TEST(EvalWithGrad, AllFunctionsDifferentiate) {
    const auto x = point1(0.4, 0.7, -0.2, 0.1);
    const char* exprs[] = {"exp(q1)", "log(q1)", "sin(q1)", "cos(q1)", "sinh(q1)", "cosh(q1)", "sqrt(q1)", "abs(p1)", "q1^2.5"};
    for (const char* s : exprs) {
        const Expr e = parse(s, 1);
        const auto r = eval_with_grad(e, x, {});
        const double h = 1e-6;
        PhasePoint a = x, b = x;
        double fd = 0.0;
        if (std::string(s).find("p1") != std::string::npos) {
            a.p[0] += h;
            b.p[0] -= h;
            fd = (evaluate(e, a, {}) - evaluate(e, b, {})) / (2 * h);
            EXPECT_NEAR(r.gradient.a_p[0], fd, 1e-8) << s;
        } else {
            a.q[0] += h;
            b.q[0] -= h;
            fd = (evaluate(e, a, {}) - evaluate(e, b, {})) / (2 * h);
            EXPECT_NEAR(r.gradient.a_q[0], fd, 1e-8) << s;
        }
    }
}

TEST(EvalWithGrad, RandomCubicMatchesFiniteDifference) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::string s = "0";
        const char* vars[] = {"t", "q1", "p1", "z"};
        for (int term = 0; term < 6; ++term) {
            s += " + " + detail::format_double(std::abs(coef(rng)));
            for (int f = 0; f < 3; ++f) s += std::string("*") + vars[rng() % 4];
        }
        const Expr e = parse(s, 1);
        const PhasePoint x = point1(coef(rng), coef(rng), coef(rng), coef(rng));
        const auto r = eval_with_grad(e, x, {});
        auto flat = x.flatten();
        const auto g = r.gradient.flatten();
        for (std::size_t k = 0; k < flat.size(); ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(flat[k]));
            auto up = flat, dn = flat;
            up[k] += h;
            dn[k] -= h;
            const double fd = (evaluate(e, PhasePoint::unflatten(up), {}) - evaluate(e, PhasePoint::unflatten(dn), {})) / (2 * h);
            EXPECT_LE(std::abs(g[k] - fd), 1e-7 * std::max(1.0, std::abs(g[k]))) << s;
        }
    }
}

TEST(Properties, RoundTripReparsesToSameTree) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        const std::string s = random_expression(rng, 4);
        const Expr a = parse(s, 2);
        const Expr b = parse(a.to_string(), 2);
        EXPECT_TRUE(same_structure(a.root(), b.root())) << s << "  ->  " << a.to_string();
        EXPECT_EQ(a.to_string(), b.to_string());
    }
}

TEST(Properties, GradientAgreesWithFiniteDifferences) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const Parameters params{{"c", 0.75}};
    int checked = 0;
    for (int i = 0; checked < 1000 && i < 20000; ++i) {
        const Expr e = parse(random_expression(rng, 4), 2);
        const PhasePoint x{u(rng), {u(rng), u(rng)}, {u(rng), u(rng)}, u(rng)};
        ValueAndGradient r;
        try {
            r = eval_with_grad(e, x, params);
        } catch (const DomainError&) {
            continue;
        }
        if (!(std::abs(r.value) >= 1e-3 && std::abs(r.value) <= 1e3)) continue;
        ++checked;
        auto flat = x.flatten();
        const auto g = r.gradient.flatten();
        for (std::size_t k = 0; k < flat.size(); ++k) {
            const double h = 1e-5 * std::max(1.0, std::abs(flat[k]));
            auto up = flat, dn = flat;
            up[k] += h;
            dn[k] -= h;
            // Richardson-extrapolated central difference keeps truncation well below 1e-7.
            auto central = [&](double step) {
                auto a = flat, b = flat;
                a[k] += step;
                b[k] -= step;
                return (evaluate(e, PhasePoint::unflatten(a), params) - evaluate(e, PhasePoint::unflatten(b), params)) /
                       (2 * step);
            };
            const double fd = (4.0 * central(h / 2) - central(h)) / 3.0;
            EXPECT_LE(std::abs(g[k] - fd), 1e-7 * std::max(1.0, std::abs(g[k]))) << e.to_string() << " slot " << k;
        }
    }
    EXPECT_EQ(checked, 1000);
}

TEST(Properties, GradientValueIsBitIdenticalToPlainEvaluation) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 500; ++i) {
        const Expr e = parse(random_expression(rng, 4), 2);
        const PhasePoint x{u(rng), {u(rng), u(rng)}, {u(rng), u(rng)}, u(rng)};
        const Parameters params{{"c", 0.75}};
        const double v = evaluate(e, x, params);
        EXPECT_EQ(eval_with_grad(e, x, params).value, v) << e.to_string();
    }
}

TEST(Dual, LeibnizRule) {
    const Dual a = Dual::variable(1.5, 0, 2);
    const Dual b = Dual::variable(-0.5, 1, 2);
    const Dual c = a * b + a / b - sin(a) * exp(b);
    EXPECT_DOUBLE_EQ(c.partial(0), b.value() + 1.0 / b.value() - std::cos(1.5) * std::exp(-0.5));
    EXPECT_DOUBLE_EQ(c.partial(1), a.value() - a.value() / (b.value() * b.value()) - std::sin(1.5) * std::exp(-0.5));
}
