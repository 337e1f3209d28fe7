#pragma once

// Independent references for the test suites. Closed-form in-out coefficients are
// written out by hand; Legendre checks use explicit low-order polynomials and brute-force
// midpoint quadrature. Nothing here calls into the map builders.

#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <vector>

#include "qvh/quadrature_algebra.hpp"

namespace qvh::reference {

using cd = std::complex<double>;
inline const cd I{0.0, 1.0};
inline const double kSqrt3 = std::sqrt(3.0);
inline const double kSqrt5 = std::sqrt(5.0);
inline const double kSqrt15 = std::sqrt(15.0);

struct Term {
    ModeLabel mode;
    cd value;
};

/// a[W(out)] of the double-pass write.
inline std::vector<Term> write_light(double k)
{
    const auto s = Stage::WriteIn;
    return {
        {ModeLabel::light(s), I * (1.0 - k * k)},
        {ModeLabel::spin_p(0, s), I * k * (1.0 - k * k / 2.0)},
        {ModeLabel::spin_x(0, s), k},
        {ModeLabel::spin_p(1, s), I * k * k * k / (2.0 * kSqrt3)},
    };
}

/// x_0[W(out)] of the double-pass write.
inline std::vector<Term> write_x0(double k)
{
    const auto s = Stage::WriteIn;
    const double k2 = k * k;
    return {
        {ModeLabel::light(s), k * (1.0 - k2 / 2.0)},
        {ModeLabel::spin_p(0, s), -(1.0 - k2 + k2 * k2 / 6.0)},
        {ModeLabel::spin_x(0, s), -I * k2 / 2.0},
        {ModeLabel::spin_x(1, s), I * k2 / (2.0 * kSqrt3)},
        {ModeLabel::spin_p(1, s), k2 * k2 / (4.0 * kSqrt3)},
        {ModeLabel::spin_p(2, s), -k2 * k2 / (4.0 * 3.0 * kSqrt5)},
    };
}

/// p_0[W(out)] of the double-pass write.
inline std::vector<Term> write_p0(double k)
{
    const auto s = Stage::WriteIn;
    return {
        {ModeLabel::spin_x(0, s), 1.0},
        {ModeLabel::light(s), -I * k},
        {ModeLabel::spin_p(0, s), -I * k * k / 2.0},
        {ModeLabel::spin_p(1, s), I * k * k / (2.0 * kSqrt3)},
    };
}

/// p_1[W(out)] of the double-pass write.
inline std::vector<Term> write_p1(double k)
{
    const auto s = Stage::WriteIn;
    return {
        {ModeLabel::spin_x(1, s), 1.0},
        {ModeLabel::spin_p(0, s), -I * k * k / (2.0 * kSqrt3)},
        {ModeLabel::spin_p(2, s), I * k * k / (2.0 * kSqrt15)},
    };
}

/// a[R(out)] of the full write-read cycle.
inline std::vector<Term> cycle_light(double k)
{
    const auto w = Stage::WriteIn;
    const double k2 = k * k;
    const double k3 = k2 * k;
    return {
        {ModeLabel::light(w), k2 * (2.0 - k2)},
        {ModeLabel::light(Stage::ReadIn), I * (1.0 - k2)},
        {ModeLabel::spin_p(0, w), -k * (1.0 - 1.5 * k2 + k2 * k2 / 3.0)},
        {ModeLabel::spin_x(0, w), I * k * (1.0 - k2)},
        {ModeLabel::spin_x(1, w), I * k3 / kSqrt3},
        {ModeLabel::spin_p(1, w), -(k3 / (2.0 * kSqrt3)) * (1.0 - k2)},
        {ModeLabel::spin_p(2, w), -k3 * k2 / (6.0 * kSqrt5)},
    };
}

/// a[R(out)] of the single-pass write + read cycle.
inline std::vector<Term> classical_cycle_light(double k)
{
    const auto w = Stage::WriteIn;
    return {
        {ModeLabel::light(w), -I * k * k},
        {ModeLabel::light(Stage::ReadIn), 1.0},
        {ModeLabel::spin_x(0, w), k},
        {ModeLabel::spin_p(0, w), -I * k * k * k / 2.0},
        {ModeLabel::spin_p(1, w), I * k * k * k / (2.0 * kSqrt3)},
    };
}

/// Max |map row - reference| over the whole input register (absent terms are zero).
inline double row_deviation(const LinearInOutMap& map, const ModeLabel& out, const std::vector<Term>& terms)
{
    double worst = 0.0;
    for (const auto& in : map.inputs()) {
        cd expected = 0.0;
        for (const auto& t : terms) {
            if (t.mode == in) {
                expected = t.value;
            }
        }
        worst = std::max(worst, std::abs(map.coefficient(out, in) - expected));
    }
    return worst;
}

/// Explicit Legendre polynomials up to order 4.
inline double legendre_explicit(int n, double x)
{
    switch (n) {
    case 0: return 1.0;
    case 1: return x;
    case 2: return 0.5 * (3.0 * x * x - 1.0);
    case 3: return 0.5 * (5.0 * x * x * x - 3.0 * x);
    case 4: return (35.0 * x * x * x * x - 30.0 * x * x + 3.0) / 8.0;
    default: return std::nan("");
    }
}

inline double theta_explicit(int n, double z, double length)
{
    return std::sqrt((2.0 * n + 1.0) / 2.0) * std::sqrt(2.0 / length) * legendre_explicit(n, 2.0 * z / length);
}

/// Composite midpoint rule.
inline double midpoint(const std::function<double(double)>& f, double lo, double hi, int nodes)
{
    const double h = (hi - lo) / nodes;
    double sum = 0.0;
    for (int i = 0; i < nodes; ++i) {
        sum += f(lo + (i + 0.5) * h);
    }
    return sum * h;
}

/// Fixed-seed kappa samples in [0, 2].
inline std::vector<double> kappa_samples(std::size_t count = 50, unsigned seed = 20240611u)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    std::vector<double> out(count);
    for (auto& k : out) {
        k = dist(rng);
    }
    return out;
}

} // namespace qvh::reference
