#pragma once

// Pixelized noise covariance and the multipixel coherent-state fidelity
//   F_N = [det(1 + C^X) det(1 + C^P)]^{-1/2},   F_av = F_N^{1/N}.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvh/error.hpp"
#include "qvh/protocol.hpp"
#include "qvh/quadrature_algebra.hpp"

namespace qvh {

inline constexpr double kClassicalBenchmark = 0.5;
inline constexpr double kCloningLimit = 2.0 / 3.0;

/// Covariances of the Hermitian noise quadratures F_X(j), F_P(j) over N pixels.
struct PixelNoiseModel {
    Eigen::MatrixXd cov_x;
    Eigen::MatrixXd cov_p;

    int pixel_count() const { return static_cast<int>(cov_x.rows()); }

    void validate() const
    {
        detail::require(cov_x.rows() >= 1, "PixelNoiseModel: need at least one pixel");
        detail::require(cov_x.rows() == cov_x.cols() && cov_p.rows() == cov_p.cols() && cov_x.rows() == cov_p.rows(),
                        "PixelNoiseModel: covariance matrices must be square and equally sized");
        for (const Eigen::MatrixXd* c : {&cov_x, &cov_p}) {
            const double scale = std::max(1.0, c->cwiseAbs().maxCoeff());
            detail::require((*c - c->transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
                            "PixelNoiseModel: covariance must be symmetric");
            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(*c, Eigen::EigenvaluesOnly);
            detail::require(eig.eigenvalues().minCoeff() >= -1e-12 * scale,
                            "PixelNoiseModel: covariance must be positive semidefinite");
        }
    }
};

struct FidelityReport {
    double fidelity_n = 1.0;   ///< F_N
    double fidelity_avg = 1.0; ///< F_av = F_N^{1/N}
    int pixel_count = 1;
    std::optional<double> squeezing_r;

    bool beats_classical() const { return fidelity_avg > kClassicalBenchmark; }
    bool beats_cloning() const { return fidelity_avg > kCloningLimit; }
};

namespace detail {

struct QuadratureVariances {
    double x = 0.0;
    double p = 0.0;
};

inline QuadratureVariances noise_variances(const NoiseOperator& noise, const CovarianceSpec& spec)
{
    // With u = (R1 + i s R2)/sqrt(2):  F_X = sum c_r R1 - s c_i R2,  F_P = sum c_i R1 + s c_r R2.
    QuadratureVariances out;
    for (const auto& term : noise.terms) {
        const auto [q1, q2] = quadratures_of(term.mode);
        const double cr2 = term.coefficient.real() * term.coefficient.real();
        const double ci2 = term.coefficient.imag() * term.coefficient.imag();
        auto lookup = [&](const RealQuadrature& q) {
            const auto v = spec.variance(q);
            require(v.has_value(), "noise_covariance: no variance given for " + q.name());
            return *v;
        };
        const double v1 = lookup(q1);
        const double v2 = lookup(q2);
        out.x += cr2 * v1 + ci2 * v2;
        out.p += ci2 * v1 + cr2 * v2;
    }
    return out;
}

} // namespace detail

/// Noise covariance for independent pixels, one input assignment per pixel.
inline PixelNoiseModel noise_covariance(const NoiseOperator& noise, std::span<const CovarianceSpec> per_pixel)
{
    detail::require(!per_pixel.empty(), "noise_covariance: need at least one pixel");
    const auto n = static_cast<Eigen::Index>(per_pixel.size());
    PixelNoiseModel model{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto v = detail::noise_variances(noise, per_pixel[static_cast<std::size_t>(j)]);
        model.cov_x(j, j) = v.x;
        model.cov_p(j, j) = v.p;
    }
    return model;
}

/// Noise covariance for N identically prepared pixels.
inline PixelNoiseModel noise_covariance(const NoiseOperator& noise, const CovarianceSpec& spec, int pixel_count)
{
    detail::require(pixel_count >= 1, "noise_covariance: pixel_count must be at least 1");
    const std::vector<CovarianceSpec> pixels(static_cast<std::size_t>(pixel_count), spec);
    return noise_covariance(noise, pixels);
}

namespace detail {

inline double log_det_identity_plus(const Eigen::MatrixXd& cov)
{
    const Eigen::MatrixXd shifted = Eigen::MatrixXd::Identity(cov.rows(), cov.cols()) + cov;
    const Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    require(llt.info() == Eigen::Success, "fidelity: 1 + C is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

} // namespace detail

inline FidelityReport fidelity_from_covariance(const PixelNoiseModel& model)
{
    model.validate();
    const double log_f = -0.5 * (detail::log_det_identity_plus(model.cov_x) + detail::log_det_identity_plus(model.cov_p));
    FidelityReport report;
    report.pixel_count = model.pixel_count();
    report.fidelity_n = std::exp(log_f);
    report.fidelity_avg = std::exp(log_f / report.pixel_count);
    return report;
}

/// Vacuum inputs everywhere, with every real quadrature of the spin modes entering the
/// noise squeezed by r (their conjugates antisqueezed).
inline CovarianceSpec squeezed_noise_spec(const Register& inputs, const NoiseOperator& noise, double r)
{
    CovarianceSpec spec = CovarianceSpec::vacuum(inputs);
    for (const auto& term : noise.terms) {
        if (!term.mode.is_spin()) {
            continue;
        }
        detail::require(noise.coefficient(term.mode.spin_partner()) == 0.0,
                        "squeezed_noise_spec: " + term.mode.name() + " and its conjugate both enter the noise");
        for (const auto& q : quadratures_of(term.mode)) {
            spec.squeeze(q, r);
        }
    }
    return spec;
}

/// Memory fidelity at kappa~ = 1 for uniformly squeezed write-stage noise modes.
inline std::vector<FidelityReport> squeezing_sweep(std::span<const double> r_values, int pixel_count,
                                                   const ProtocolConfig& config = {})
{
    const LinearInOutMap cycle = full_cycle(config);
    const NoiseOperator noise = extract_noise(cycle);
    std::vector<FidelityReport> reports;
    reports.reserve(r_values.size());
    for (const double r : r_values) {
        detail::require(std::isfinite(r) && r >= 0.0, "squeezing_sweep: r must be finite and nonnegative");
        auto report = fidelity_from_covariance(
            noise_covariance(noise, squeezed_noise_spec(cycle.inputs(), noise, r), pixel_count));
        report.squeezing_r = r;
        reports.push_back(report);
    }
    return reports;
}

/// Fidelity of the full cycle with vacuum inputs, taking a[R(out)] - a[W(in)] as the
/// added noise. Coincides with the unit-gain fidelity at kappa~ = 1.
inline FidelityReport transfer_fidelity(const ProtocolConfig& config, int pixel_count)
{
    const LinearInOutMap cycle = full_cycle(config);
    return fidelity_from_covariance(
        noise_covariance(transfer_noise(cycle), CovarianceSpec::vacuum(cycle.inputs()), pixel_count));
}

} // namespace qvh
