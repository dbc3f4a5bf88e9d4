#include <gtest/gtest.h>

#include <cmath>
#include <span>
#include <vector>

#include "cocontact/dynamics.hpp"
#include "cocontact/expression.hpp"
#include "cocontact/quantities.hpp"
#include "cocontact/sampling.hpp"
#include "oracle/frozen_values.hpp"

using namespace cocontact;

namespace {

ScalarField H_of(const char* s, std::size_t n = 1, const Parameters& params = {}) {
    return to_field(parse(s, n), params);
}

IntegratorSettings rk4(double h) {
    IntegratorSettings s;
    s.step = h;
    return s;
}

IntegratorSettings rk45() {
    IntegratorSettings s;
    s.scheme = Scheme::rk45;
    return s;
}

double kappa_orbit_error(const Trajectory& tr) {
    double worst = 0.0;
    for (const auto& x : tr.samples) {
        const double e = std::exp(2.0 * x.t);
        worst = std::max({worst, std::abs(x.q[0] - e), std::abs(x.p[0] - 2.0 * e), std::abs(x.z - e - e * e)});
    }
    return worst;
}

}  // namespace

TEST(VectorField, ZeroHamiltonian) {
    const auto v = hamiltonian_vector_field(H_of("0"), PhasePoint{0.3, {1}, {2}, 3});
    EXPECT_EQ(v.dt, 1.0);
    EXPECT_EQ(v.dq[0], 0.0);
    EXPECT_EQ(v.dp[0], 0.0);
    EXPECT_EQ(v.dz, 0.0);
}

TEST(VectorField, KappaParticle) {
    const auto v = hamiltonian_vector_field(H_of("p1^2/2 - kappa*z", 1, {{"kappa", 2.0}}), PhasePoint{0, {1}, {2}, 1});
    EXPECT_EQ(v.dt, oracle::xh_kappa_dt);
    EXPECT_EQ(v.dq[0], oracle::xh_kappa_dq);
    EXPECT_EQ(v.dp[0], oracle::xh_kappa_dp);
    EXPECT_EQ(v.dz, oracle::xh_kappa_dz);
}

TEST(VectorField, DampedOscillator) {
    const auto v = hamiltonian_vector_field(H_of("p1^2/2 + q1^2/2 + 0.2*z"), PhasePoint{0, {1}, {0}, 0});
    EXPECT_EQ(v.dt, oracle::xh_osc_dt);
    EXPECT_EQ(v.dq[0], oracle::xh_osc_dq);
    EXPECT_EQ(v.dp[0], oracle::xh_osc_dp);
    EXPECT_EQ(v.dz, oracle::xh_osc_dz);
}

TEST(VectorField, ContractedIdentities) {
    const ScalarField H = H_of("sin(t)*p1*p2 + q1^2*z - exp(0.1*z)*q2 + p1^3", 2);
    for (const auto& x : sample_box(Box{}, 2, 1000, 1)) {
        const auto v = hamiltonian_vector_field(H, x);
        EXPECT_EQ(tau(v), 1.0);
        EXPECT_LT(std::abs(eta(x, v) + H.value(x)), 1e-12);
    }
}

TEST(Integrate, FreeParticle) {
    const Trajectory tr = integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 1.0, rk4(1e-3));
    const auto& e = tr.samples.back();
    EXPECT_EQ(e.t, 1.0);
    EXPECT_NEAR(e.q[0], 1.0, 1e-10);
    EXPECT_NEAR(e.p[0], 1.0, 1e-10);
    EXPECT_NEAR(e.z, 0.5, 1e-10);
}

TEST(Integrate, KappaOrbitClosedForm) {
    const ScalarField H = H_of("p1^2/2 - 2*z");
    const Trajectory tr = integrate(H, PhasePoint{0, {1}, {2}, 2}, 1.0, rk4(1e-3));
    EXPECT_LT(kappa_orbit_error(tr), 1e-6);
    const Trajectory ad = integrate(H, PhasePoint{0, {1}, {2}, 2}, 1.0, rk45());
    EXPECT_LT(kappa_orbit_error(ad), 1e-6);
}

TEST(Integrate, HarmonicLimitOfOscillator) {
    const Trajectory tr = integrate(H_of("p1^2/2 + q1^2/2"), PhasePoint{0, {1}, {0}, 0}, 10.0, rk4(1e-3));
    double worst = 0.0;
    for (const auto& x : tr.samples) worst = std::max(worst, std::abs(x.q[0] - std::cos(x.t)));
    EXPECT_LT(worst, 1e-8);
}

TEST(Integrate, TrajectoryInvariants) {
    const PhasePoint x0{0.25, {0.1, -0.3}, {0.7, 0.2}, 0.4};
    const Trajectory tr = integrate(H_of("p1^2/2 + p2^2/2 + q1*q2 - 0.3*z", 2), x0, 1.25, rk4(1e-2));
    ASSERT_EQ(tr.size(), 101u);
    EXPECT_EQ(tr.samples.front().flatten(), x0.flatten());
    for (std::size_t k = 1; k < tr.size(); ++k) {
        EXPECT_GT(tr.samples[k].t, tr.samples[k - 1].t);
        EXPECT_EQ(tr.samples[k].t, 0.25 + static_cast<double>(k) * 1e-2);
    }
    EXPECT_EQ(tr.stats.accepted, 100u);
    EXPECT_EQ(tr.stats.rejected, 0u);
}

TEST(Integrate, FinalStepLandsOnEndTime) {
    const Trajectory tr = integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 0.1005, rk4(1e-3));
    EXPECT_EQ(tr.samples.back().t, 0.1005);
    const Trajectory ad = integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 0.7, rk45());
    EXPECT_EQ(ad.samples.back().t, 0.7);
}

TEST(Integrate, Rk4OrderFour) {
    const ScalarField H = H_of("p1^2/2 - 2*z");
    auto endpoint_error = [&](double h) {
        const auto e = integrate(H, PhasePoint{0, {1}, {2}, 2}, 1.0, rk4(h)).samples.back();
        const double x = std::exp(2.0);
        return std::max({std::abs(e.q[0] - x), std::abs(e.p[0] - 2 * x), std::abs(e.z - x - x * x)});
    };
    const double ratio = endpoint_error(0.02) / endpoint_error(0.01);
    EXPECT_GE(ratio, 12.0);
    EXPECT_LE(ratio, 20.0);
}

TEST(Integrate, AdaptiveRespectsStepBounds) {
    const Trajectory tr = integrate(H_of("p1^2/2 + q1^2/2 + 0.2*z"), PhasePoint{0, {1}, {0}, 0}, 5.0, rk45());
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double h = tr.samples[k].t - tr.samples[k - 1].t;
        EXPECT_LE(h, 0.1 + 1e-15);
        EXPECT_GE(h, 1e-12);
    }
    EXPECT_GT(tr.stats.accepted, 0u);
}

TEST(Integrate, Errors) {
    EXPECT_THROW((void)integrate(H_of("p1^2/2"), PhasePoint{1, {0}, {1}, 0}, 1.0), std::invalid_argument);
    EXPECT_THROW((void)integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 1.0, rk4(-1.0)), std::invalid_argument);
    EXPECT_THROW((void)integrate(H_of("p1^2/2", 2), PhasePoint{0, {0}, {1}, 0}, 1.0), std::invalid_argument);
    try {
        (void)integrate(H_of("-z^2"), PhasePoint{0, {0}, {0}, 1}, 2.0, rk4(1e-3));  // z' = z^2 blows up at t = 1
        FAIL();
    } catch (const IntegrationError& e) {
        EXPECT_EQ(e.kind(), IntegrationError::Kind::non_finite);
        // The fixed step may straddle the pole before the state overflows.
        EXPECT_GT(e.last_good_time(), 0.99);
        EXPECT_LT(e.last_good_time(), 2.0);
    }
    IntegratorSettings tight = rk45();
    tight.min_step = 1e-3;
    tight.rtol = 1e-14;
    tight.atol = 1e-14;
    try {
        (void)integrate(H_of("-z^2"), PhasePoint{0, {0}, {0}, 1}, 2.0, tight);
        FAIL();
    } catch (const IntegrationError& e) {
        EXPECT_EQ(e.kind(), IntegrationError::Kind::step_underflow);
    }
}

TEST(DenseOutput, HermiteReproducesNodesAndCubics) {
    const Trajectory tr = integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 1.0, rk4(0.1));
    for (const auto& x : tr.samples) EXPECT_EQ(tr.at(x.t).flatten(), x.flatten());
    // q = t is reproduced exactly between nodes.
    EXPECT_NEAR(tr.at(0.537).q[0], 0.537, 1e-14);
    TangentVector v;
    (void)tr.at(0.537, &v);
    EXPECT_NEAR(v.dq[0], 1.0, 1e-13);
    EXPECT_THROW((void)tr.at(1.5), std::out_of_range);
}

TEST(HerglotzAction, ConstantHamiltonian) {
    const Trajectory tr = integrate(H_of("3"), PhasePoint{0, {0.4}, {1.2}, 0}, 2.0, rk4(1e-2));
    EXPECT_NEAR(herglotz_action(H_of("3"), tr), -6.0, 1e-12);
}

TEST(HerglotzAction, MatchesActionVariable) {
    const Trajectory tr = integrate(H_of("p1^2/2"), PhasePoint{0, {0}, {1}, 0}, 1.0, rk4(1e-3));
    EXPECT_NEAR(herglotz_action(H_of("p1^2/2"), tr), tr.samples.back().z - tr.samples.front().z, 1e-6);
}

TEST(HerglotzAction, KappaOrbit) {
    const ScalarField H = H_of("p1^2/2 - 2*z");
    const Trajectory tr = integrate(H, PhasePoint{0, {1}, {2}, 2}, 1.0, rk4(1e-3));
    EXPECT_NEAR(herglotz_action(H, tr), oracle::action_kappa2_unit, 1e-5);
    const auto profile = herglotz_action_profile(H, tr);
    EXPECT_EQ(profile.front(), 0.0);
    EXPECT_EQ(profile.size(), tr.size());
}

TEST(HerglotzAction, NeedsThreeSamples) {
    Trajectory tr;
    tr.samples = {PhasePoint{0, {0}, {0}, 0}, PhasePoint{1, {0}, {0}, 0}};
    tr.velocities = {TangentVector::zero(1), TangentVector::zero(1)};
    EXPECT_THROW((void)herglotz_action(H_of("0"), tr), std::invalid_argument);
}

TEST(EnergyLaw, SampledSlopeMatches) {
    const char* hs[] = {"p1^2/(2*(1+t)) - 2*z/(1+t)", "p1^2/2 - 2*z", "p1^2/2 + 9.8*q1 + 0.5*z",
                        "p1^2/2 + q1^2/2 - q1*sin(2*t) + 0.2*z"};
    for (const char* s : hs) {
        const ScalarField H = H_of(s);
        const Trajectory tr = integrate(H, PhasePoint{0, {0.5}, {1}, 0.2}, 2.0, rk4(1e-3));
        double worst = 0.0;
        for (const auto& e : energy_law(H, tr)) worst = std::max(worst, relative_error(e.slope, e.predicted));
        EXPECT_LT(worst, 1e-5) << s;
    }
}

TEST(SampledDerivative, ExactForQuartics) {
    const std::vector<double> t{0.0, 0.1, 0.25, 0.3, 0.5, 0.55, 0.8};
    std::vector<double> y;
    for (double v : t) y.push_back(v * v * v * v - 2 * v + 1);
    const auto d = sampled_derivative(t, y);
    for (std::size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(d[k], 4 * t[k] * t[k] * t[k] - 2, 1e-11);
}

TEST(HamiltonResidual, SmallOnIntegratedCurve) {
    const ScalarField H = H_of("p1^2/2 + q1^2/2 + 0.2*z");
    const Trajectory tr = integrate(H, PhasePoint{0, {1}, {0}, 0}, 2.0, rk4(1e-3));
    EXPECT_LT(hamilton_equation_residual(H, tr), 1e-9);
}
