#pragma once

// Orthonormal Legendre modes along the cell axis, z in [-L/2, L/2].

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qvh/error.hpp"

namespace qvh {

/// P_n(x) via Bonnet's recurrence (n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}.
template <std::floating_point T>
constexpr T legendre_p(int n, T x)
{
    if (n == 0) {
        return T{1};
    }
    T prev = T{1};
    T curr = x;
    for (int k = 1; k < n; ++k) {
        const T next = (T(2 * k + 1) * x * curr - T(k) * prev) / T(k + 1);
        prev = curr;
        curr = next;
    }
    return curr;
}

/// Antiderivative of P_n anchored at -1: [P_{n+1}(x) - P_{n-1}(x)] / (2n+1), and x + 1 for n = 0.
template <std::floating_point T>
constexpr T legendre_p_integral(int n, T x)
{
    if (n == 0) {
        return x + T{1};
    }
    return (legendre_p(n + 1, x) - legendre_p(n - 1, x)) / T(2 * n + 1);
}

/// Normalization constant sqrt((2n+1)/2).
inline double legendre_normalization(int n)
{
    return std::sqrt((2.0 * n + 1.0) / 2.0);
}

/// theta_n(z) = N_n sqrt(2/L) P_n(2z/L) on [-L/2, L/2].
inline double theta(int n, double z, double length)
{
    detail::require(n >= 0, "theta: mode order must be nonnegative");
    detail::require(length > 0.0, "theta: cell length must be positive");
    const double half = 0.5 * length;
    detail::require(std::abs(z) <= half * (1.0 + 1e-12),
                    "theta: position " + std::to_string(z) + " lies outside [-L/2, L/2]");
    const double u = std::clamp(2.0 * z / length, -1.0, 1.0);
    return legendre_normalization(n) * std::sqrt(2.0 / length) * legendre_p(n, u);
}

/// Composite Simpson rule on uniformly spaced samples; needs an odd sample count >= 3.
inline double simpson(std::span<const double> f, double step)
{
    detail::require(f.size() >= 3 && f.size() % 2 == 1,
                    "simpson: need an odd number (>= 3) of uniformly spaced samples");
    double odd = 0.0;
    double even = 0.0;
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        (i % 2 == 1 ? odd : even) += f[i];
    }
    return step / 3.0 * (f.front() + f.back() + 4.0 * odd + 2.0 * even);
}

inline double trapezoid(std::span<const double> f, double step)
{
    detail::require(f.size() >= 2, "trapezoid: need at least two samples");
    double sum = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) {
        sum += f[i];
    }
    return step * sum;
}

/// Mode amplitudes of a sampled profile together with the quadrature error estimate
/// (largest Simpson-vs-trapezoid disagreement over the modes).
struct Projection {
    std::vector<double> amplitudes;
    double error_estimate = 0.0;
};

class LegendreBasis {
public:
    LegendreBasis(double length, int order_max)
        : length_(length), order_max_(order_max)
    {
        detail::require(length > 0.0, "LegendreBasis: cell length must be positive");
        detail::require(order_max >= 0, "LegendreBasis: order_max must be nonnegative");
    }

    double length() const { return length_; }
    int order_max() const { return order_max_; }
    int size() const { return order_max_ + 1; }

    double theta(int n, double z) const
    {
        detail::require(n <= order_max_, "LegendreBasis::theta: order exceeds order_max");
        return qvh::theta(n, z, length_);
    }

    /// Uniform grid over [-L/2, L/2] with the given number of intervals.
    std::vector<double> grid(std::size_t intervals) const
    {
        detail::require(intervals >= 1, "LegendreBasis::grid: need at least one interval");
        std::vector<double> z(intervals + 1);
        const double step = length_ / static_cast<double>(intervals);
        for (std::size_t i = 0; i <= intervals; ++i) {
            z[i] = -0.5 * length_ + step * static_cast<double>(i);
        }
        z.back() = 0.5 * length_;
        return z;
    }

    /// theta_n sampled on a grid; rows are orders 0..order_max.
    Eigen::MatrixXd sample(std::span<const double> z) const
    {
        Eigen::MatrixXd out(size(), static_cast<Eigen::Index>(z.size()));
        for (int n = 0; n <= order_max_; ++n) {
            for (std::size_t j = 0; j < z.size(); ++j) {
                out(n, static_cast<Eigen::Index>(j)) = qvh::theta(n, z[j], length_);
            }
        }
        return out;
    }

    /// Smallest number of grid intervals accepted by project_onto_basis.
    std::size_t min_intervals() const
    {
        return 4 * static_cast<std::size_t>(std::max(order_max_, 1));
    }

private:
    double length_;
    int order_max_;
};

/// Projects samples f(z_j) on the uniform grid over [-L/2, L/2] onto theta_0..theta_Nmax.
inline Projection project_onto_basis(std::span<const double> samples, const LegendreBasis& basis)
{
    detail::require(samples.size() >= 3 && samples.size() % 2 == 1,
                    "project_onto_basis: need an odd number of uniformly spaced samples");
    const std::size_t intervals = samples.size() - 1;
    detail::require(intervals >= basis.min_intervals(),
                    "project_onto_basis: grid too coarse for order " +
                        std::to_string(basis.order_max()) + " (" + std::to_string(intervals) +
                        " intervals, need " + std::to_string(basis.min_intervals()) + ")");
    const auto z = basis.grid(intervals);
    const double step = basis.length() / static_cast<double>(intervals);

    Projection result;
    result.amplitudes.resize(static_cast<std::size_t>(basis.size()));
    std::vector<double> product(samples.size());
    for (int n = 0; n <= basis.order_max(); ++n) {
        for (std::size_t j = 0; j < samples.size(); ++j) {
            product[j] = basis.theta(n, z[j]) * samples[j];
        }
        const double s = simpson(product, step);
        result.amplitudes[static_cast<std::size_t>(n)] = s;
        result.error_estimate = std::max(result.error_estimate, std::abs(s - trapezoid(product, step)));
    }
    return result;
}

/// Gram matrix of the basis under Simpson quadrature on the given number of intervals.
inline Eigen::MatrixXd gram_matrix(const LegendreBasis& basis, std::size_t intervals)
{
    const auto z = basis.grid(intervals);
    const Eigen::MatrixXd theta_samples = basis.sample(z);
    const double step = basis.length() / static_cast<double>(intervals);
    Eigen::MatrixXd gram(basis.size(), basis.size());
    std::vector<double> product(z.size());
    for (int n = 0; n < basis.size(); ++n) {
        for (int m = 0; m < basis.size(); ++m) {
            for (std::size_t j = 0; j < z.size(); ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                product[j] = theta_samples(n, jj) * theta_samples(m, jj);
            }
            gram(n, m) = simpson(product, step);
        }
    }
    return gram;
}

/// Nearest-neighbour coupling between Legendre orders produced by integrating along z.
/// Only the first off-diagonals are populated.
class QMatrix {
public:
    explicit QMatrix(int order_max)
        : order_max_(order_max), entries_(Eigen::MatrixXd::Zero(order_max + 1, order_max + 1))
    {
        detail::require(order_max >= 1, "q_matrix: order_max must be at least 1");
        for (int n = 0; n <= order_max; ++n) {
            if (n >= 1) {
                entries_(n, n - 1) = lower(n);
            }
            if (n + 1 <= order_max) {
                entries_(n, n + 1) = upper(n);
            }
        }
    }

    /// Q_{n,n-1} = 1/sqrt((2n-1)(2n+1)).
    static double lower(int n) { return 1.0 / std::sqrt((2.0 * n - 1.0) * (2.0 * n + 1.0)); }
    /// Q_{n,n+1} = -1/sqrt((2n+1)(2n+3)).
    static double upper(int n) { return -1.0 / std::sqrt((2.0 * n + 1.0) * (2.0 * n + 3.0)); }

    int order_max() const { return order_max_; }
    double operator()(int n, int m) const { return entries_(n, m); }
    const Eigen::MatrixXd& matrix() const { return entries_; }

private:
    int order_max_;
    Eigen::MatrixXd entries_;
};

inline QMatrix q_matrix(int order_max) { return QMatrix(order_max); }

} // namespace qvh
