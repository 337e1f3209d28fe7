#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "qvh/pde_oracle.hpp"
#include "qvh/protocol.hpp"

namespace {

using qvh::OracleGrid;
using qvh::ValidationError;

qvh::ComparisonReport compare_with_analytic(const OracleGrid& grid, double tolerance = 0.01)
{
    const auto oracle = qvh::extract_map(grid, false);
    return qvh::compare(oracle, qvh::single_pass(grid.protocol()), tolerance);
}

TEST(FilonWeights, SeriesMatchesClosedFormAtSwitchover)
{
    for (double th : {0.49, -0.49}) {
        const auto [s0, s1] = qvh::detail::filon_linear_weights(th);
        const std::complex<double> a(0.0, th);
        const auto e = std::exp(a);
        EXPECT_NEAR(std::abs(s0 - (e - 1.0) / a), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(s1 - (a * e - e + 1.0) / (a * a)), 0.0, 1e-13);
    }
    const auto [z0, z1] = qvh::detail::filon_linear_weights(0.0);
    EXPECT_EQ(z0, std::complex<double>(1.0, 0.0));
    EXPECT_EQ(z1, std::complex<double>(0.5, 0.0));
}

TEST(OracleGrid, FromPeriods)
{
    const auto grid = OracleGrid::from_periods(1.0, 4, 100.0, 40);
    EXPECT_EQ(grid.z_points, 4001u);
    EXPECT_NEAR(grid.grating_phase, 200.0 * std::numbers::pi, 1e-12);
    EXPECT_NEAR(grid.points_per_period(), 40.0, 1e-12);
    const auto odd = OracleGrid::from_periods(1.0, 4, 10.5, 21);
    EXPECT_EQ(odd.z_intervals() % 2, 0u);
    const auto fine = grid.refined(2);
    EXPECT_EQ(fine.z_points, 8001u);
    EXPECT_EQ(fine.t_steps, 400u);
}

TEST(OracleGrid, RejectsUnderResolvedGrids)
{
    EXPECT_THROW(OracleGrid::from_periods(1.0, 4, 100.0, 10).validate(), ValidationError);
    auto grid = OracleGrid::from_periods(1.0, 4, 100.0, 40);
    grid.t_steps = 50;
    EXPECT_THROW(grid.validate(), ValidationError);
    grid = OracleGrid::from_periods(1.0, 4, 100.0, 40);
    grid.z_points = 4000;
    EXPECT_THROW(grid.validate(), ValidationError);
    grid = OracleGrid::from_periods(-1.0, 4, 100.0, 40);
    EXPECT_THROW(grid.validate(), ValidationError);
    EXPECT_THROW(qvh::SinglePassIntegrator(OracleGrid::from_periods(1.0, 4, 100.0, 10)), ValidationError);
}

TEST(Integrator, IsLinear)
{
    const auto grid = OracleGrid::from_periods(1.0, 3, 20.0, 40);
    const qvh::SinglePassIntegrator integrator(grid);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist;
    const auto dim = static_cast<Eigen::Index>(integrator.dimension());
    Eigen::VectorXd u(dim);
    Eigen::VectorXd v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        u(i) = dist(rng);
        v(i) = dist(rng);
    }
    const Eigen::VectorXd combined = integrator.run(0.7 * u - 1.9 * v);
    const Eigen::VectorXd separate = 0.7 * integrator.run(u) - 1.9 * integrator.run(v);
    EXPECT_LT((combined - separate).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(integrator.run(Eigen::VectorXd::Zero(dim + 1)), ValidationError);
}

/// Integration by parts bounds the counter-rotating overlap int theta_n theta_m e^{2i dk z}
/// by the edge values theta_n theta_m = sqrt((2n+1)(2m+1))/L over dk.
double counter_rotating_bound(const OracleGrid& grid)
{
    return (2.0 * grid.order_max + 1.0) / grid.effective_phase();
}

TEST(Integrator, SpinMomentaUnchanged)
{
    const auto grid = OracleGrid::from_periods(1.0, 4, 100.0, 40);
    auto uncoupled = grid;
    uncoupled.kappa = 0.0;
    const auto coupled = qvh::extract_map(grid, false).map;
    const auto free = qvh::extract_map(uncoupled, false).map;
    const double bound = counter_rotating_bound(grid);
    for (const auto& out : coupled.outputs()) {
        if (out.mode.kind != qvh::ModeKind::SpinP) {
            continue;
        }
        for (const auto& in : coupled.inputs()) {
            const bool same = in.mode.kind == qvh::ModeKind::SpinP && in.mode.order == out.mode.order &&
                              in.part == out.part;
            // P never evolves, so its projected rows cannot depend on the coupling.
            EXPECT_NEAR(coupled.coefficient(out, in), free.coefficient(out, in), 1e-14);
            EXPECT_NEAR(coupled.coefficient(out, in), same ? 1.0 : 0.0, bound) << out.name() << " <- " << in.name();
        }
    }
}

TEST(Integrator, UncoupledIsIdentity)
{
    const auto grid = OracleGrid::from_periods(0.0, 4, 100.0, 40);
    const auto oracle = qvh::extract_map(grid, false);
    const auto n = oracle.map.coefficients().rows();
    EXPECT_LT((oracle.map.coefficients() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(),
              counter_rotating_bound(grid));
    // Light passes through untouched.
    EXPECT_NEAR(oracle.map.coefficients()(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(oracle.map.coefficients()(1, 1), 1.0, 1e-12);
}

TEST(Integrator, ProjectionLeakageShrinksWithGratingPhase)
{
    auto deviation = [](double periods) {
        const auto oracle = qvh::extract_map(OracleGrid::from_periods(0.0, 3, periods, 40), false);
        const auto n = oracle.map.coefficients().rows();
        return (oracle.map.coefficients() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    };
    const double ratio = deviation(100.0) / deviation(50.0);
    EXPECT_GT(ratio, 0.35);
    EXPECT_LT(ratio, 0.65);
}

TEST(Oracle, AgreesWithAnalyticMapInManyLayerRegime)
{
    for (double kappa : {0.5, 1.0}) {
        const auto report = compare_with_analytic(OracleGrid::from_periods(kappa, 4, 100.0, 40));
        EXPECT_TRUE(report.passed) << "kappa " << kappa << " rel " << report.max_rel_error;
        EXPECT_LE(report.max_rel_error, 0.01);
    }
}

TEST(Oracle, LeakageHalvesWhenGratingPhaseDoubles)
{
    const auto base = compare_with_analytic(OracleGrid::from_periods(1.0, 4, 100.0, 40));
    const auto doubled = compare_with_analytic(OracleGrid::from_periods(1.0, 4, 200.0, 40));
    ASSERT_GT(base.leakage, 0.0);
    const double ratio = doubled.leakage / base.leakage;
    EXPECT_GE(ratio, 0.35);
    EXPECT_LE(ratio, 0.65);
}

TEST(Oracle, FewLayersDisagreeMoreThanManyLayers)
{
    const auto few = compare_with_analytic(OracleGrid::from_periods(1.0, 4, 10.0, 40));
    const auto many = compare_with_analytic(OracleGrid::from_periods(1.0, 4, 100.0, 40));
    EXPECT_GT(few.max_abs_error, 5.0 * many.max_abs_error);
    EXPECT_FALSE(OracleGrid::from_periods(1.0, 4, 10.0, 40).protocol().warnings().empty());
    EXPECT_TRUE(OracleGrid::from_periods(1.0, 4, 100.0, 40).protocol().warnings().empty());
}

TEST(Oracle, FineGridAtLargeGratingPhase)
{
    const auto report = compare_with_analytic(OracleGrid::from_periods(1.0, 4, 200.0, 80), 0.005);
    EXPECT_LE(report.max_rel_error, 0.005);
}

TEST(Oracle, RefinementChangeBelowReportedTolerance)
{
    const auto oracle = qvh::extract_map(OracleGrid::from_periods(1.0, 3, 50.0, 40), true);
    ASSERT_TRUE(oracle.convergence.has_value());
    const auto& study = *oracle.convergence;
    EXPECT_GT(study.change_first, study.change_second);
    EXPECT_LE(study.change_second, study.tolerance);
    EXPECT_GT(study.estimated_order, 1.0);
}

TEST(Oracle, LightCommutatorIsExact)
{
    const auto oracle = qvh::extract_map(OracleGrid::from_periods(1.0, 4, 100.0, 40), false);
    const qvh::RealQuadrature ax{qvh::ModeLabel::light(qvh::Stage::Out), qvh::Quadrature::X};
    EXPECT_NEAR(oracle.map.commutator(ax, qvh::conjugate(ax)), 1.0, 1e-12);
}

TEST(Compare, RejectsMismatchedRegisters)
{
    const auto small = qvh::to_quadrature_map(qvh::single_pass({1.0, 2}));
    const auto large = qvh::to_quadrature_map(qvh::single_pass({1.0, 3}));
    EXPECT_THROW(qvh::compare(small, large, 0.01), ValidationError);
    EXPECT_THROW(qvh::compare(small, small, -1.0), ValidationError);
    const auto self = qvh::compare(small, small, 0.0);
    EXPECT_TRUE(self.passed);
    EXPECT_EQ(self.max_abs_error, 0.0);
}

} // namespace
