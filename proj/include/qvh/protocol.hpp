#pragma once

// Analytic in-out maps of the double-pass volume hologram memory.
//
// Every multi-step map is assembled by composing the single-pass primitive with the
// interpass transformation and a storage relabelling; the closed-form relations for
// the composite maps serve as cross-checks in the test suite.

#include <cmath>
#include <cstdio>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qvh/error.hpp"
#include "qvh/legendre_basis.hpp"
#include "qvh/quadrature_algebra.hpp"

namespace qvh {

struct ProtocolConfig {
    /// Dimensionless coupling kappa~; kappa~^2 = 2 alpha0 eta.
    double kappa = 1.0;
    /// Highest Legendre order kept in the spin register.
    int order_max = 4;
    /// Grating phase Delta k_z L. Only the oracle and the validity warnings use it.
    double grating_phase = 200.0 * std::numbers::pi;

    /// Below this many 2pi layers the fast grating terms are not negligible.
    static constexpr double kMinGratingPeriods = 10.0;

    void validate() const
    {
        detail::require(std::isfinite(kappa) && kappa >= 0.0, "ProtocolConfig: kappa must be finite and nonnegative");
        detail::require(order_max >= 2, "ProtocolConfig: order_max must be at least 2");
        detail::require(std::isfinite(grating_phase) && grating_phase > 0.0,
                        "ProtocolConfig: grating phase must be positive");
    }

    std::vector<std::string> warnings() const
    {
        std::vector<std::string> out;
        if (grating_phase <= kMinGratingPeriods * 2.0 * std::numbers::pi) {
            char periods[32];
            std::snprintf(periods, sizeof periods, "%g", grating_phase / (2.0 * std::numbers::pi));
            out.push_back(std::string("grating phase spans ") + periods +
                          " periods, outside the many-layer regime (needs more than " +
                          std::to_string(static_cast<int>(kMinGratingPeriods)) + "); analytic maps lose accuracy");
        }
        return out;
    }
};

/// Resonant optical depth that yields kappa~ at spontaneous-emission probability eta.
inline double optical_depth_for(double kappa, double eta)
{
    detail::require(eta > 0.0 && eta < 1.0, "optical_depth_for: eta must lie in (0, 1)");
    return kappa * kappa / (2.0 * eta);
}

inline double coupling_from(double optical_depth, double eta)
{
    detail::require(optical_depth >= 0.0 && eta >= 0.0, "coupling_from: arguments must be nonnegative");
    return std::sqrt(2.0 * optical_depth * eta);
}

/// Single light pass. p is untouched; the signal reads out p_0 and writes onto x_n:
///   a'   = a + k p_0
///   x_0' = x_0 - i k a - i k^2/2 [p_0 + Q_{01} p_1]
///   x_n' = x_n - i k^2/2 [Q_{n,n-1} p_{n-1} + Q_{n,n+1} p_{n+1}]      (p_{N+1} := 0)
inline LinearInOutMap single_pass(const ProtocolConfig& config, Stage in = Stage::In, Stage out = Stage::Out)
{
    config.validate();
    const int order_max = config.order_max;
    const double k = config.kappa;
    const QMatrix q(order_max);
    const complex half_k2(0.0, -0.5 * k * k);

    Register inputs = Register::protocol(in, in, order_max);
    Register outputs = Register::protocol(out, out, order_max);
    const auto size = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Identity(size, size);

    const Eigen::Index light = 0;
    auto x = [](int n) { return static_cast<Eigen::Index>(1 + n); };
    auto p = [order_max](int n) { return static_cast<Eigen::Index>(2 + order_max + n); };

    c(light, p(0)) += k;
    c(x(0), light) += complex(0.0, -k);
    c(x(0), p(0)) += half_k2;
    for (int n = 0; n <= order_max; ++n) {
        if (n >= 1) {
            c(x(n), p(n - 1)) += half_k2 * q(n, n - 1);
        }
        if (n + 1 <= order_max) {
            c(x(n), p(n + 1)) += half_k2 * q(n, n + 1);
        }
    }
    return {std::move(inputs), std::move(outputs), std::move(c)};
}

/// pi/2 spin rotation about the mean spin: x_n -> -p_n, p_n -> x_n.
inline LinearInOutMap spin_rotation(int order_max, Stage in, Stage out)
{
    Register inputs = Register::spins(in, order_max);
    Register outputs = Register::spins(out, order_max);
    const auto n_modes = static_cast<Eigen::Index>(order_max + 1);
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(2 * n_modes, 2 * n_modes);
    c.topRightCorner(n_modes, n_modes) = -Eigen::MatrixXcd::Identity(n_modes, n_modes);
    c.bottomLeftCorner(n_modes, n_modes) = Eigen::MatrixXcd::Identity(n_modes, n_modes);
    return {std::move(inputs), std::move(outputs), std::move(c)};
}

/// Between passes: pi/2 optical phase shift a -> i a together with the spin rotation.
inline LinearInOutMap interpass_transform(int order_max, Stage in = Stage::Out, Stage out = Stage::In)
{
    detail::require(order_max >= 0, "interpass_transform: order_max must be nonnegative");
    const LinearInOutMap spins = spin_rotation(order_max, in, out);
    Register inputs = Register::protocol(in, in, order_max);
    Register outputs = Register::protocol(out, out, order_max);
    const auto size = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(size, size);
    c(0, 0) = complex(0.0, 1.0);
    c.bottomRightCorner(size - 1, size - 1) = spins.coefficients();
    return {std::move(inputs), std::move(outputs), std::move(c)};
}

/// Pass, interpass transformation, pass.
inline LinearInOutMap double_pass(const ProtocolConfig& config, Stage in, Stage first_out, Stage second_in, Stage out)
{
    return compose(single_pass(config, in, first_out), interpass_transform(config.order_max, first_out, second_in),
                   single_pass(config, second_in, out));
}

inline LinearInOutMap double_pass_write(const ProtocolConfig& config)
{
    return double_pass(config, Stage::WriteIn, Stage::WriteFirstOut, Stage::WriteSecondIn, Stage::WriteOut);
}

inline LinearInOutMap double_pass_read(const ProtocolConfig& config)
{
    return double_pass(config, Stage::ReadIn, Stage::ReadFirstOut, Stage::ReadSecondIn, Stage::ReadOut);
}

/// Ideal storage: the written spin state becomes the read-stage input unchanged.
inline LinearInOutMap storage(int order_max)
{
    return LinearInOutMap::relabel(Register::spins(Stage::WriteOut, order_max),
                                   Register::spins(Stage::ReadIn, order_max));
}

/// Double-pass write, storage, double-pass read. Inputs: a[W(in)], spins[W(in)], a[R(in)].
inline LinearInOutMap full_cycle(const ProtocolConfig& config)
{
    return compose(double_pass_write(config), storage(config.order_max), double_pass_read(config));
}

/// Single-pass write, spin rotation p^{R(in)} = x^{W(out)}, single-pass read.
inline LinearInOutMap classical_single_pass_cycle(const ProtocolConfig& config)
{
    return compose(single_pass(config, Stage::WriteIn, Stage::WriteOut),
                   spin_rotation(config.order_max, Stage::WriteOut, Stage::ReadIn),
                   single_pass(config, Stage::ReadIn, Stage::ReadOut));
}

inline const ModeLabel& signal_input()
{
    static const ModeLabel label = ModeLabel::light(Stage::WriteIn);
    return label;
}

inline const ModeLabel& retrieved_output()
{
    static const ModeLabel label = ModeLabel::light(Stage::ReadOut);
    return label;
}

/// Coefficient of a[W(in)] in a[R(out)].
inline complex signal_recovery(const LinearInOutMap& cycle)
{
    return cycle.coefficient(retrieved_output(), signal_input());
}

struct NoiseTerm {
    ModeLabel mode;
    complex coefficient;
};

/// Added-noise operator: a linear combination of input amplitudes.
struct NoiseOperator {
    std::vector<NoiseTerm> terms;

    /// Sum of |coefficient|^2.
    double power() const
    {
        double sum = 0.0;
        for (const auto& t : terms) {
            sum += std::norm(t.coefficient);
        }
        return sum;
    }

    complex coefficient(const ModeLabel& mode) const
    {
        for (const auto& t : terms) {
            if (t.mode == mode) {
                return t.coefficient;
            }
        }
        return 0.0;
    }
};

/// f in a[R(out)] = a[W(in)] + f. Defined only where the signal is recovered with unit
/// coefficient (kappa~ = 1); terms with |c| <= tolerance are dropped.
inline NoiseOperator extract_noise(const LinearInOutMap& cycle, double tolerance = 1e-12)
{
    const complex gain = signal_recovery(cycle);
    if (std::abs(gain - 1.0) > tolerance) {
        throw ValidationError("extract_noise: signal coefficient is (" + std::to_string(gain.real()) + ", " +
                              std::to_string(gain.imag()) +
                              "), not 1; the unit-gain decomposition holds only at kappa = 1, "
                              "use the full_cycle coefficients directly");
    }
    NoiseOperator noise;
    const Eigen::RowVectorXcd row = cycle.row(retrieved_output());
    for (std::size_t k = 0; k < cycle.inputs().size(); ++k) {
        const auto& mode = cycle.inputs()[k];
        const complex c = row(static_cast<Eigen::Index>(k));
        if (mode != signal_input() && std::abs(c) > tolerance) {
            noise.terms.push_back({mode, c});
        }
    }
    return noise;
}

/// a[R(out)] - a[W(in)] at any coupling; includes the (g - 1) a[W(in)] gain mismatch.
inline NoiseOperator transfer_noise(const LinearInOutMap& cycle)
{
    NoiseOperator noise;
    const Eigen::RowVectorXcd row = cycle.row(retrieved_output());
    for (std::size_t k = 0; k < cycle.inputs().size(); ++k) {
        const auto& mode = cycle.inputs()[k];
        complex c = row(static_cast<Eigen::Index>(k));
        if (mode == signal_input()) {
            c -= 1.0;
        }
        if (c != 0.0) {
            noise.terms.push_back({mode, c});
        }
    }
    return noise;
}

} // namespace qvh
