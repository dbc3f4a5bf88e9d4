#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

#include "cocontact/expression.hpp"
#include "cocontact/geometry.hpp"
#include "cocontact/sampling.hpp"

using namespace cocontact;

namespace {

Eigen::VectorXd to_eigen(const std::vector<double>& v) { return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()); }

/// Matrix of v -> (i_v tau) tau + i_v d eta + (i_v eta) eta in the basis (t, q, p, z),
/// assembled from the forms themselves: tau = dt, eta = dz - p dq, d eta = sum dq^i ^ dp_i.
Eigen::MatrixXd flat_matrix(const PhasePoint& x) {
    const auto n = static_cast<Eigen::Index>(x.dimension());
    const Eigen::Index N = 2 * n + 2;
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(N), eta = Eigen::VectorXd::Zero(N);
    tau(0) = 1.0;
    eta(N - 1) = 1.0;
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(N, N);  // omega(v, w) = v^T Omega w
    for (Eigen::Index i = 0; i < n; ++i) {
        eta(1 + i) = -x.p[static_cast<std::size_t>(i)];
        omega(1 + i, 1 + n + i) = 1.0;
        omega(1 + n + i, 1 + i) = -1.0;
    }
    // Row k of the result is the k-th component of the covector as a function of v.
    return tau * tau.transpose() + omega.transpose() + eta * eta.transpose();
}

std::vector<PhasePoint> random_points(std::size_t n, std::size_t count, std::uint64_t seed) {
    return sample_box(Box{}, n, count, seed);
}

TangentVector random_vector(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    TangentVector v = TangentVector::zero(n);
    v.dt = u(rng);
    v.dz = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
        v.dq[i] = u(rng);
        v.dp[i] = u(rng);
    }
    return v;
}

ScalarField coordinate(const char* name, std::size_t n) { return to_field(parse(name, n), {}); }

}  // namespace

TEST(Forms, EtaAndTau) {
    const PhasePoint x{0, {1}, {2}, 0};
    TangentVector v = TangentVector::zero(1);
    v.dq[0] = 1.0;
    EXPECT_EQ(eta(x, v), -2.0);
    EXPECT_EQ(eta(x, reeb_contact(1)), 1.0);
    EXPECT_EQ(tau(reeb_contact(1)), 0.0);
    EXPECT_EQ(eta(x, reeb_time(1)), 0.0);
    EXPECT_EQ(tau(reeb_time(1)), 1.0);
    EXPECT_THROW((void)eta(x, TangentVector::zero(2)), std::invalid_argument);
}

TEST(Flat, ReebFieldsMapToTheForms) {
    const PhasePoint x{0.5, {1.0, -2.0}, {0.3, 4.0}, 1.5};
    const Covector ft = flat(x, reeb_time(2));
    EXPECT_EQ(max_abs_difference(sharp(x, ft), reeb_time(2)), 0.0);
    EXPECT_EQ(ft.flatten(), tau_form(2).flatten());
    EXPECT_EQ(flat(x, reeb_contact(2)).flatten(), eta_form(x).flatten());
}

TEST(Flat, SharpIsInverse) {
    std::mt19937_64 rng(3);
    for (std::size_t n : {1u, 2u, 3u}) {
        for (const auto& x : random_points(n, 1000, 17 + n)) {
            const TangentVector v = random_vector(rng, n);
            EXPECT_LT(max_abs_difference(sharp(x, flat(x, v)), v), 1e-12);
        }
    }
}

TEST(Flat, AgreesWithDenseLinearSolve) {
    std::mt19937_64 rng(5);
    for (std::size_t n : {1u, 2u}) {
        for (const auto& x : random_points(n, 1000, 100 + n)) {
            const Eigen::MatrixXd M = flat_matrix(x);
            const TangentVector v = random_vector(rng, n);
            const Eigen::VectorXd a = M * to_eigen(v.flatten());
            const Covector c = flat(x, v);
            EXPECT_LT((a - to_eigen(c.flatten())).cwiseAbs().maxCoeff(), 1e-10);

            // Nondegeneracy proxy: M is invertible and sharp matches the numerical solve.
            Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
            ASSERT_TRUE(lu.isInvertible());
            const Eigen::VectorXd solved = lu.solve(to_eigen(c.flatten()));
            EXPECT_LT((solved - to_eigen(sharp(x, c).flatten())).cwiseAbs().maxCoeff(), 1e-10);
        }
    }
}

TEST(LambdaHat, KernelIsSpannedByTauAndEta) {
    const PhasePoint x{0.2, {0.5}, {-1.5}, 0.7};
    EXPECT_LT(max_abs_difference(lambda_hat(x, tau_form(1)), TangentVector::zero(1)), 1e-15);
    EXPECT_LT(max_abs_difference(lambda_hat(x, eta_form(x)), TangentVector::zero(1)), 1e-15);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-5, 5);
    for (const auto& y : random_points(3, 500, 9)) {
        const double a = u(rng), b = u(rng);
        Covector c = eta_form(y);
        for (auto& v : c.a_q) v *= b;
        c.a_z *= b;
        c.a_t += a;
        EXPECT_LT(max_abs_difference(lambda_hat(y, c), TangentVector::zero(3)), 1e-12);
    }
}

TEST(LambdaHat, DqAtOrigin) {
    const PhasePoint x{0, {0}, {0}, 0};
    Covector dq = Covector::zero(1);
    dq.a_q[0] = 1.0;
    const TangentVector v = lambda_hat(x, dq);
    EXPECT_EQ(v.dt, 0.0);
    EXPECT_EQ(v.dq[0], 0.0);
    EXPECT_EQ(v.dp[0], -1.0);
    EXPECT_EQ(v.dz, 0.0);
}

TEST(Bracket, DarbouxAtAPoint) {
    const PhasePoint x{0, {2}, {3}, 5};
    EXPECT_EQ(jacobi_bracket(coordinate("q1", 1), coordinate("p1", 1), x), 1.0);
    EXPECT_EQ(jacobi_bracket(coordinate("q1", 1), coordinate("z", 1), x), -2.0);
    EXPECT_EQ(jacobi_bracket(coordinate("p1", 1), coordinate("z", 1), x), -6.0);
}

TEST(Bracket, DarbouxTableAtRandomPoints) {
    const std::size_t n = 3;
    const char* qs[] = {"q1", "q2", "q3"};
    const char* ps[] = {"p1", "p2", "p3"};
    const ScalarField z = coordinate("z", n);
    double worst = 0.0;
    for (const auto& x : random_points(n, 1000, 21)) {
        for (std::size_t i = 0; i < n; ++i) {
            const ScalarField qi = coordinate(qs[i], n), pi = coordinate(ps[i], n);
            for (std::size_t j = 0; j < n; ++j) {
                const ScalarField qj = coordinate(qs[j], n), pj = coordinate(ps[j], n);
                worst = std::max(worst, std::abs(jacobi_bracket(qi, pj, x) - (i == j ? 1.0 : 0.0)));
                worst = std::max(worst, std::abs(jacobi_bracket(qi, qj, x)));
                worst = std::max(worst, std::abs(jacobi_bracket(pi, pj, x)));
            }
            worst = std::max(worst, std::abs(jacobi_bracket(qi, z, x) + x.q[i]));
            worst = std::max(worst, std::abs(jacobi_bracket(pi, z, x) + 2.0 * x.p[i]));
        }
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Bracket, Antisymmetry) {
    const ScalarField f = to_field(parse("sin(q1)*p2 + z*q2^2 - t*p1", 2), {});
    const ScalarField g = to_field(parse("exp(0.3*z) + q1*q2*p1 - cos(p2)", 2), {});
    for (const auto& x : random_points(2, 1000, 33)) {
        EXPECT_LT(std::abs(jacobi_bracket(f, g, x) + jacobi_bracket(g, f, x)), 1e-12);
        EXPECT_LT(std::abs(jacobi_bracket(f, f, x)), 1e-12);
        EXPECT_LT(std::abs(intrinsic_jacobi_bracket(f, g, x) + intrinsic_jacobi_bracket(g, f, x)), 1e-12);
    }
}

TEST(Bracket, IntrinsicFormHasOppositeBivectorPart) {
    // The bracket assembled from lambda_hat and E = -R_z agrees with the coordinate formula on
    // the f g_z - g f_z terms and flips the sign of the bivector terms.
    const ScalarField f = to_field(parse("q1*p1 + z^2", 1), {});
    const ScalarField g = to_field(parse("sin(q1) + p1*z", 1), {});
    for (const auto& x : random_points(1, 200, 4)) {
        const auto fv = f.value_and_gradient(x);
        const auto gv = g.value_and_gradient(x);
        const double e_part = -fv.value * gv.gradient.a_z + gv.value * fv.gradient.a_z;
        const double coord = jacobi_bracket(f, g, x);
        const double intrinsic = intrinsic_jacobi_bracket(f, g, x);
        EXPECT_NEAR(intrinsic - e_part, -(coord - e_part), 1e-12);
    }
}
