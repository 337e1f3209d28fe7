#pragma once

// Direct integration of the single-pass field/spin equations with the grating carrier
// resolved on a z grid:
//
//   da/dz = k / sqrt(LT) * P(z) e^{-i dk z}                    (1/c term neglected)
//   dX/dt = 2k / sqrt(LT) * Im[a(z,t) e^{i dk z}],   dP/dt = 0
//
// X(z), P(z) are the real spin fields of one transverse mode; the light amplitude a is
// complex. The resulting map is real-linear, so it is extracted over real quadratures
// one basis vector at a time and compared with the analytic single-pass map.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qvh/detail/parallel.hpp"
#include "qvh/error.hpp"
#include "qvh/legendre_basis.hpp"
#include "qvh/protocol.hpp"
#include "qvh/quadrature_algebra.hpp"

namespace qvh {

struct OracleGrid {
    double kappa = 1.0;
    int order_max = 4;
    /// Delta k_z L.
    double grating_phase = 200.0 * std::numbers::pi;
    /// Lumped diffraction phase q^2 L / 2k_0, subtracted from the grating phase.
    double transverse_shift = 0.0;
    double length = 1.0;
    std::size_t z_points = 4001;
    std::size_t t_steps = 200;

    static constexpr double kMinPointsPerPeriod = 20.0;
    static constexpr std::size_t kMinTimeSteps = 100;

    /// Grid with `z_per_period` intervals per grating period (rounded up to an even total).
    static OracleGrid from_periods(double kappa, int order_max, double periods, int z_per_period = 40,
                                   std::size_t t_steps = 200)
    {
        detail::require(periods > 0.0 && std::isfinite(periods), "OracleGrid: grating periods must be positive");
        detail::require(z_per_period > 0, "OracleGrid: z points per period must be positive");
        OracleGrid grid;
        grid.kappa = kappa;
        grid.order_max = order_max;
        grid.grating_phase = 2.0 * std::numbers::pi * periods;
        auto intervals = static_cast<std::size_t>(std::ceil(periods * z_per_period - 1e-9));
        intervals += intervals % 2;
        grid.z_points = intervals + 1;
        grid.t_steps = t_steps;
        return grid;
    }

    double effective_phase() const { return grating_phase - transverse_shift; }
    double periods() const { return effective_phase() / (2.0 * std::numbers::pi); }
    std::size_t z_intervals() const { return z_points - 1; }
    double points_per_period() const { return static_cast<double>(z_intervals()) / periods(); }

    OracleGrid refined(std::size_t factor) const
    {
        OracleGrid out = *this;
        out.z_points = z_intervals() * factor + 1;
        out.t_steps = t_steps * factor;
        return out;
    }

    ProtocolConfig protocol() const { return {kappa, order_max, effective_phase()}; }

    void validate() const
    {
        protocol().validate();
        detail::require(length > 0.0, "OracleGrid: cell length must be positive");
        detail::require(effective_phase() > 0.0, "OracleGrid: effective grating phase must be positive");
        detail::require(z_points >= 3 && z_points % 2 == 1, "OracleGrid: z_points must be odd and at least 3");
        detail::require(points_per_period() >= kMinPointsPerPeriod,
                        "OracleGrid: z resolution " + std::to_string(points_per_period()) +
                            " points per grating period is below the floor of 20");
        detail::require(t_steps >= kMinTimeSteps, "OracleGrid: need at least 100 time steps");
    }
};

namespace detail {

/// (e^{i th} - 1)/(i th) and int_0^1 u e^{i th u} du, by series near zero.
inline std::pair<complex, complex> filon_linear_weights(double th)
{
    const complex a(0.0, th);
    if (std::abs(th) < 0.5) {
        complex w0 = 0.0;
        complex w1 = 0.0;
        complex power = 1.0;
        double factorial = 1.0;
        for (int m = 0; m < 30; ++m) {
            w0 += power / (factorial * (m + 1));
            w1 += power / (factorial * (m + 2));
            power *= a;
            factorial *= (m + 1);
        }
        return {w0, w1};
    }
    const complex e = std::exp(a);
    return {(e - 1.0) / a, (a * e - e + 1.0) / (a * a)};
}

} // namespace detail

/// Precomputed grid state for repeated single-pass integrations on one OracleGrid.
class SinglePassIntegrator {
public:
    explicit SinglePassIntegrator(const OracleGrid& grid)
        : grid_((grid.validate(), grid)), basis_(grid.length, grid.order_max)
    {
        z_ = basis_.grid(grid_.z_intervals());
        step_ = grid_.length / static_cast<double>(grid_.z_intervals());
        wavenumber_ = grid_.effective_phase() / grid_.length;
        theta_ = basis_.sample(z_);
        cos_.resize(z_.size());
        sin_.resize(z_.size());
        carrier_.resize(z_.size());
        for (std::size_t j = 0; j < z_.size(); ++j) {
            const double phase = wavenumber_ * z_[j];
            cos_[j] = std::numbers::sqrt2 * std::cos(phase);
            sin_[j] = std::numbers::sqrt2 * std::sin(phase);
            carrier_[j] = std::polar(1.0, phase);
        }
        const auto [w0, w1] = detail::filon_linear_weights(-wavenumber_ * step_);
        filon0_ = step_ * w0;
        filon1_ = step_ * w1;
        n_modes_ = grid_.order_max + 1;
    }

    const OracleGrid& grid() const { return grid_; }

    /// Real register {a.X, a.P, x_n.c, x_n.s, p_n.c, p_n.s} at the given stage.
    std::vector<RealQuadrature> quadratures(Stage stage) const
    {
        return quadrature_register(Register::protocol(stage, stage, grid_.order_max));
    }

    std::size_t dimension() const { return static_cast<std::size_t>(2 + 4 * n_modes_); }

    /// Integrates one pass from real input quadratures; returns the output quadratures
    /// (light averaged over the pulse, spins projected onto the grating modes).
    Eigen::VectorXd run(const Eigen::VectorXd& initial) const
    {
        detail::require(static_cast<std::size_t>(initial.size()) == dimension(),
                        "integrate_single_pass: initial amplitudes do not match the register");
        const std::size_t m = z_.size();
        const double length = grid_.length;
        const double duration = 1.0;
        const double kappa = grid_.kappa;

        // Spin fields from the slow mode amplitudes times the grating carrier.
        std::vector<double> x(m, 0.0);
        std::vector<double> p(m, 0.0);
        for (int n = 0; n < n_modes_; ++n) {
            const double xc = initial(x_index(n));
            const double xs = initial(x_index(n) + 1);
            const double pc = initial(p_index(n));
            const double ps = initial(p_index(n) + 1);
            for (std::size_t j = 0; j < m; ++j) {
                const double th = theta_(n, static_cast<Eigen::Index>(j));
                x[j] += th * (xc * cos_[j] + xs * sin_[j]);
                p[j] += th * (pc * cos_[j] + ps * sin_[j]);
            }
        }
        const complex a_in = complex(initial(0), initial(1)) / std::numbers::sqrt2;

        // G(z) = int_{-L/2}^{z} P e^{-i dk z'} dz', piecewise-linear P against the exact carrier.
        std::vector<complex> source(m);
        source[0] = 0.0;
        for (std::size_t j = 0; j + 1 < m; ++j) {
            const complex e0 = std::conj(carrier_[j]);
            source[j + 1] = source[j] + e0 * (p[j] * filon0_ + (p[j + 1] - p[j]) * filon1_);
        }

        const double coupling = kappa / std::sqrt(length * duration);
        const double dt = duration / static_cast<double>(grid_.t_steps);
        const complex pulse = a_in / std::sqrt(duration);
        complex a_out_sum = 0.0;
        std::vector<complex> field(m);
        for (std::size_t step = 0; step < grid_.t_steps; ++step) {
            // The field follows the spins adiabatically; P is static, so one sweep per step.
            for (std::size_t j = 0; j < m; ++j) {
                field[j] = pulse + coupling * source[j];
            }
            for (std::size_t j = 0; j < m; ++j) {
                x[j] += dt * 2.0 * coupling * std::imag(field[j] * carrier_[j]);
            }
            a_out_sum += field[m - 1] * dt;
        }
        const complex a_out = a_out_sum / std::sqrt(duration);

        Eigen::VectorXd out(static_cast<Eigen::Index>(dimension()));
        out(0) = std::numbers::sqrt2 * a_out.real();
        out(1) = std::numbers::sqrt2 * a_out.imag();
        const auto xc = project(x, cos_);
        const auto xs = project(x, sin_);
        const auto pc = project(p, cos_);
        const auto ps = project(p, sin_);
        for (int n = 0; n < n_modes_; ++n) {
            const auto nn = static_cast<std::size_t>(n);
            out(x_index(n)) = xc[nn];
            out(x_index(n) + 1) = xs[nn];
            out(p_index(n)) = pc[nn];
            out(p_index(n) + 1) = ps[nn];
        }
        return out;
    }

private:
    Eigen::Index x_index(int n) const { return 2 + 2 * n; }
    Eigen::Index p_index(int n) const { return 2 + 2 * n_modes_ + 2 * n; }

    std::vector<double> project(const std::vector<double>& field, const std::vector<double>& carrier) const
    {
        std::vector<double> product(field.size());
        for (std::size_t j = 0; j < field.size(); ++j) {
            product[j] = field[j] * carrier[j];
        }
        return project_onto_basis(product, basis_).amplitudes;
    }

    OracleGrid grid_;
    LegendreBasis basis_;
    std::vector<double> z_;
    double step_ = 0.0;
    double wavenumber_ = 0.0;
    Eigen::MatrixXd theta_;
    std::vector<double> cos_;
    std::vector<double> sin_;
    std::vector<complex> carrier_;
    complex filon0_;
    complex filon1_;
    int n_modes_ = 0;
};

inline Eigen::VectorXd integrate_single_pass(const OracleGrid& grid, const Eigen::VectorXd& initial)
{
    return SinglePassIntegrator(grid).run(initial);
}

struct ConvergenceStudy {
    /// Max coefficient change base -> 2x grid, and 2x -> 4x grid.
    double change_first = 0.0;
    double change_second = 0.0;
    /// log2(change_first / change_second); NaN when undetermined.
    double estimated_order = std::numeric_limits<double>::quiet_NaN();
    /// Error bound for the base-grid coefficients (Richardson estimate).
    double tolerance = 0.0;
};

struct OracleResult {
    QuadratureMap map;
    OracleGrid grid;
    std::optional<ConvergenceStudy> convergence;
};

namespace detail {

inline QuadratureMap oracle_map(const OracleGrid& grid, unsigned threads)
{
    const SinglePassIntegrator integrator(grid);
    const std::size_t dim = integrator.dimension();
    Eigen::MatrixXd coefficients(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    parallel_for(
        dim,
        [&](std::size_t col) {
            Eigen::VectorXd unit = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
            unit(static_cast<Eigen::Index>(col)) = 1.0;
            coefficients.col(static_cast<Eigen::Index>(col)) = integrator.run(unit);
        },
        threads);
    return {integrator.quadratures(Stage::In), integrator.quadratures(Stage::Out), std::move(coefficients)};
}

} // namespace detail

/// Numerical single-pass map, one integration per real basis vector. With
/// `study_convergence`, the grid is also refined 2x and 4x to estimate the
/// discretization error of the base-grid coefficients.
inline OracleResult extract_map(const OracleGrid& grid, bool study_convergence = true, unsigned threads = 0)
{
    OracleResult result{detail::oracle_map(grid, threads), grid, std::nullopt};
    if (study_convergence) {
        const QuadratureMap twice = detail::oracle_map(grid.refined(2), threads);
        const QuadratureMap four = detail::oracle_map(grid.refined(4), threads);
        ConvergenceStudy study;
        study.change_first = (twice.coefficients() - result.map.coefficients()).cwiseAbs().maxCoeff();
        study.change_second = (four.coefficients() - twice.coefficients()).cwiseAbs().maxCoeff();
        if (study.change_first > 0.0 && study.change_second > 0.0) {
            study.estimated_order = std::log2(study.change_first / study.change_second);
        }
        const double order = study.estimated_order;
        const double factor = (std::isfinite(order) && order > 0.5) ? std::exp2(order) / (std::exp2(order) - 1.0) : 2.0;
        const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, result.map.coefficients().cwiseAbs().maxCoeff());
        study.tolerance = factor * study.change_first + roundoff;
        result.convergence = study;
    }
    return result;
}

struct CoefficientDeviation {
    RealQuadrature output;
    RealQuadrature input;
    double analytic = 0.0;
    double numeric = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
};

struct ComparisonReport {
    double max_abs_error = 0.0;
    /// Over entries whose analytic value is nonzero.
    double max_rel_error = 0.0;
    /// Largest |numeric| among entries whose analytic value is zero.
    double leakage = 0.0;
    double tolerance = 0.0;
    bool passed = true;
    /// Largest relative deviations first.
    std::vector<CoefficientDeviation> worst;
};

inline ComparisonReport compare(const QuadratureMap& numeric, const QuadratureMap& analytic, double tolerance,
                                std::size_t worst_count = 5, double zero_threshold = 1e-12)
{
    detail::require(numeric.inputs() == analytic.inputs() && numeric.outputs() == analytic.outputs(),
                    "compare: maps are over different registers");
    detail::require(tolerance >= 0.0, "compare: tolerance must be nonnegative");
    ComparisonReport report;
    report.tolerance = tolerance;
    std::vector<CoefficientDeviation> deviations;
    const auto& a = analytic.coefficients();
    const auto& b = numeric.coefficients();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            const double err = std::abs(b(i, j) - a(i, j));
            report.max_abs_error = std::max(report.max_abs_error, err);
            if (std::abs(a(i, j)) <= zero_threshold) {
                report.leakage = std::max(report.leakage, std::abs(b(i, j)));
                continue;
            }
            const double rel = err / std::abs(a(i, j));
            report.max_rel_error = std::max(report.max_rel_error, rel);
            deviations.push_back({analytic.outputs()[static_cast<std::size_t>(i)],
                                  analytic.inputs()[static_cast<std::size_t>(j)], a(i, j), b(i, j), err, rel});
        }
    }
    std::stable_sort(deviations.begin(), deviations.end(),
                     [](const auto& l, const auto& r) { return l.rel_error > r.rel_error; });
    deviations.resize(std::min(worst_count, deviations.size()));
    report.worst = std::move(deviations);
    report.passed = report.max_rel_error <= tolerance;
    return report;
}

inline ComparisonReport compare(const OracleResult& oracle, const LinearInOutMap& analytic, double tolerance,
                                std::size_t worst_count = 5)
{
    return compare(oracle.map, to_quadrature_map(analytic), tolerance, worst_count);
}

} // namespace qvh
