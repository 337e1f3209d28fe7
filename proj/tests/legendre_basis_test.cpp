#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "qvh/legendre_basis.hpp"
#include "support/reference.hpp"

namespace {

using qvh::LegendreBasis;
using qvh::ValidationError;

TEST(LegendrePolynomial, RecurrenceMatchesExplicitForms)
{
    for (int n = 0; n <= 4; ++n) {
        for (double x = -1.0; x <= 1.0; x += 0.125) {
            EXPECT_NEAR(qvh::legendre_p(n, x), qvh::reference::legendre_explicit(n, x), 1e-14) << n << " " << x;
        }
    }
}

TEST(LegendrePolynomial, IntegralIdentityAgainstQuadrature)
{
    // int_{-1}^{x} P_n = [P_{n+1}(x) - P_{n-1}(x)] / (2n+1)
    for (int n = 1; n <= 8; ++n) {
        for (double x : {-0.7, -0.2, 0.0, 0.35, 0.9, 1.0}) {
            const double numeric = qvh::reference::midpoint([n](double s) { return qvh::legendre_p(n, s); }, -1.0, x, 400000);
            EXPECT_NEAR(qvh::legendre_p_integral(n, x), numeric, 1e-8) << n << " " << x;
        }
    }
}

TEST(Theta, ZerothModeIsFlat)
{
    for (double length : {1.0, 2.5}) {
        for (double z = -length / 2; z <= length / 2; z += length / 8) {
            EXPECT_NEAR(qvh::theta(0, z, length), std::sqrt(1.0 / length), 1e-15);
        }
    }
}

TEST(Theta, FirstModeVanishesAtCentre)
{
    EXPECT_EQ(qvh::theta(1, 0.0, 1.0), 0.0);
    EXPECT_EQ(qvh::theta(1, 0.0, 3.0), 0.0);
}

TEST(Theta, MatchesExplicitForm)
{
    const double length = 1.7;
    for (int n = 0; n <= 4; ++n) {
        for (double z = -0.85; z <= 0.85; z += 0.1) {
            EXPECT_NEAR(qvh::theta(n, z, length), qvh::reference::theta_explicit(n, z, length), 1e-13);
        }
    }
}

TEST(Theta, SecondModeIsNormalized)
{
    // Brute-force midpoint rule, independent of the library's Simpson quadrature; its own
    // error at 2e5 nodes is ~1e-10.
    const double length = 1.0;
    const double norm = qvh::reference::midpoint(
        [&](double z) { return std::pow(qvh::reference::theta_explicit(2, z, length), 2); }, -0.5, 0.5, 200000);
    EXPECT_NEAR(norm, 1.0, 1e-8);
    const double lib = qvh::reference::midpoint([&](double z) { return std::pow(qvh::theta(2, z, length), 2); },
                                                -0.5, 0.5, 200000);
    EXPECT_NEAR(lib, 1.0, 1e-8);
}

TEST(Theta, RejectsOutOfRangeArguments)
{
    EXPECT_THROW(qvh::theta(0, 0.51, 1.0), ValidationError);
    EXPECT_THROW(qvh::theta(-1, 0.0, 1.0), ValidationError);
    EXPECT_THROW(qvh::theta(0, 0.0, 0.0), ValidationError);
    EXPECT_NO_THROW(qvh::theta(3, 0.5, 1.0));
    const LegendreBasis basis(1.0, 2);
    EXPECT_THROW(basis.theta(3, 0.0), ValidationError);
}

TEST(LegendreBasis, GramMatrixIsIdentity)
{
    for (double length : {1.0, 0.3, 4.0}) {
        const LegendreBasis basis(length, 6);
        const Eigen::MatrixXd gram = qvh::gram_matrix(basis, 20000);
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(7, 7)).cwiseAbs().maxCoeff(), 1e-10) << length;
    }
}

TEST(LegendreBasis, GramMatrixOnOracleGridWithinLooseTolerance)
{
    const LegendreBasis basis(1.0, 4);
    const Eigen::MatrixXd gram = qvh::gram_matrix(basis, 4000);
    EXPECT_LT((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
}

std::vector<double> sampled(const LegendreBasis& basis, std::size_t intervals, auto&& f)
{
    const auto z = basis.grid(intervals);
    std::vector<double> out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = f(z[i]);
    }
    return out;
}

TEST(ProjectOntoBasis, ThetaZeroGivesUnitVector)
{
    const LegendreBasis basis(1.0, 4);
    const auto samples = sampled(basis, 20000, [&](double z) { return qvh::theta(0, z, 1.0); });
    const auto proj = qvh::project_onto_basis(samples, basis);
    EXPECT_NEAR(proj.amplitudes[0], 1.0, 1e-12);
    for (int n = 1; n <= 4; ++n) {
        EXPECT_NEAR(proj.amplitudes[static_cast<std::size_t>(n)], 0.0, 1e-12);
    }
}

TEST(ProjectOntoBasis, LinearProfile)
{
    // int z theta_1(z) dz = sqrt(L^3/12); even orders vanish by parity.
    for (double length : {1.0, 2.0}) {
        const LegendreBasis basis(length, 4);
        const auto proj = qvh::project_onto_basis(sampled(basis, 20000, [](double z) { return z; }), basis);
        EXPECT_NEAR(proj.amplitudes[1], std::sqrt(length * length * length / 12.0), 1e-12);
        EXPECT_NEAR(proj.amplitudes[0], 0.0, 1e-13);
        EXPECT_NEAR(proj.amplitudes[2], 0.0, 1e-13);
        EXPECT_NEAR(proj.amplitudes[3], 0.0, 1e-12);
        EXPECT_NEAR(proj.amplitudes[4], 0.0, 1e-13);
    }
}

TEST(ProjectOntoBasis, SumOfModes)
{
    const LegendreBasis basis(1.0, 5);
    const auto samples = sampled(basis, 20000, [](double z) { return qvh::theta(1, z, 1.0) + qvh::theta(2, z, 1.0); });
    const auto proj = qvh::project_onto_basis(samples, basis);
    const std::vector<double> expected{0, 1, 1, 0, 0, 0};
    for (std::size_t n = 0; n < expected.size(); ++n) {
        EXPECT_NEAR(proj.amplitudes[n], expected[n], 1e-10) << n;
    }
    EXPECT_GE(proj.error_estimate, 0.0);
}

TEST(ProjectOntoBasis, RejectsCoarseOrEvenGrids)
{
    const LegendreBasis basis(1.0, 4);
    EXPECT_THROW(qvh::project_onto_basis(std::vector<double>(9, 1.0), basis), ValidationError);
    EXPECT_THROW(qvh::project_onto_basis(std::vector<double>(100, 1.0), basis), ValidationError);
    EXPECT_NO_THROW(qvh::project_onto_basis(std::vector<double>(17, 1.0), basis));
}

TEST(QMatrix, ClosedFormEntries)
{
    const auto q = qvh::q_matrix(2);
    EXPECT_NEAR(q(1, 0), 1.0 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(q(1, 0), 0.5773503, 1e-7);
    EXPECT_NEAR(q(1, 2), -1.0 / std::sqrt(15.0), 1e-15);
    EXPECT_NEAR(q(1, 2), -0.2581989, 1e-7);
    EXPECT_EQ(q(0, 0), 0.0);
    EXPECT_EQ(q(0, 2), 0.0);
    EXPECT_THROW(qvh::q_matrix(0), ValidationError);
}

TEST(QMatrix, AntisymmetricOffDiagonalPattern)
{
    const auto q = qvh::q_matrix(8);
    for (int n = 0; n < 8; ++n) {
        EXPECT_NEAR(q(n, n + 1), -q(n + 1, n), 1e-15) << n;
        for (int m = 0; m <= 8; ++m) {
            if (std::abs(n - m) != 1) {
                EXPECT_EQ(q(n, m), 0.0);
            }
        }
    }
}

TEST(QMatrix, MatchesProjectionOfRunningIntegral)
{
    // Q arises from int theta_n(z) int_{-L/2}^{z} theta_m dz' dz, scaled by 2/L, minus the
    // constant piece carried by theta_0. Check it by brute-force double quadrature.
    const double length = 1.0;
    const auto q = qvh::q_matrix(4);
    for (int n = 0; n <= 4; ++n) {
        for (int m = 0; m <= 4; ++m) {
            const double inner = qvh::reference::midpoint(
                [&](double z) {
                    const double running = qvh::reference::midpoint(
                        [&](double s) { return qvh::reference::theta_explicit(m, s, length); }, -0.5, z, 400);
                    return qvh::reference::theta_explicit(n, z, length) * running;
                },
                -0.5, 0.5, 400);
            const double expected = q(n, m) + ((n == 0 && m == 0) ? 1.0 : 0.0);
            EXPECT_NEAR(2.0 / length * inner, expected, 1e-4) << n << "," << m;
        }
    }
}

} // namespace
