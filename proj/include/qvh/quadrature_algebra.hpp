#pragma once

// Mode registers and linear in-out maps over complex mode amplitudes, with the
// commutator and covariance bookkeeping they need.
//
// Conventions (hbar = 1):
//   light   a   = (X + iP) / sqrt(2),               vacuum <X^2> = <P^2> = 1/2
//   spin    x_n = (X_{n,c} - i X_{n,s}) / sqrt(2),   same for p_n with P_{n,c}, P_{n,s}
// where the c/s components are the real quadratures of the cos/sin grating modes.
// This gives [a, a^+] = 1 and [x_n, p_m^+] = i delta_nm, while [x_n, x_m^+] = [p_n, p_m^+] = 0.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qvh/error.hpp"

namespace qvh {

using complex = std::complex<double>;

enum class ModeKind { Light, SpinX, SpinP };

/// Where in the protocol an amplitude is observed.
enum class Stage {
    In,
    Out,
    WriteIn,
    WriteFirstOut,
    WriteSecondIn,
    WriteOut,
    ReadIn,
    ReadFirstOut,
    ReadSecondIn,
    ReadOut,
};

inline std::string_view stage_name(Stage stage)
{
    switch (stage) {
    case Stage::In: return "in";
    case Stage::Out: return "out";
    case Stage::WriteIn: return "W(in)";
    case Stage::WriteFirstOut: return "W(1,out)";
    case Stage::WriteSecondIn: return "W(2,in)";
    case Stage::WriteOut: return "W(out)";
    case Stage::ReadIn: return "R(in)";
    case Stage::ReadFirstOut: return "R(1,out)";
    case Stage::ReadSecondIn: return "R(2,in)";
    case Stage::ReadOut: return "R(out)";
    }
    return "?";
}

struct ModeLabel {
    ModeKind kind = ModeKind::Light;
    Stage stage = Stage::In;
    int order = 0;

    static ModeLabel light(Stage stage) { return {ModeKind::Light, stage, 0}; }
    static ModeLabel spin_x(int n, Stage stage) { return {ModeKind::SpinX, stage, n}; }
    static ModeLabel spin_p(int n, Stage stage) { return {ModeKind::SpinP, stage, n}; }

    bool is_spin() const { return kind != ModeKind::Light; }

    /// The x/p partner of a spin label at the same order and stage.
    ModeLabel spin_partner() const
    {
        detail::require(is_spin(), "spin_partner: light modes have no spin partner");
        return {kind == ModeKind::SpinX ? ModeKind::SpinP : ModeKind::SpinX, stage, order};
    }

    std::string name() const
    {
        std::string head = kind == ModeKind::Light ? "a"
                           : kind == ModeKind::SpinX ? "x" + std::to_string(order)
                                                     : "p" + std::to_string(order);
        return head + "[" + std::string(stage_name(stage)) + "]";
    }

    auto operator<=>(const ModeLabel&) const = default;
};

/// Ordered set of mode labels. Spin labels must come in x/p pairs.
class Register {
public:
    Register() = default;

    explicit Register(std::vector<ModeLabel> labels) : labels_(std::move(labels))
    {
        std::set<ModeLabel> seen;
        for (const auto& label : labels_) {
            detail::require(label.order >= 0, "Register: negative mode order in " + label.name());
            detail::require(seen.insert(label).second, "Register: duplicate label " + label.name());
        }
        for (const auto& label : labels_) {
            if (label.is_spin()) {
                detail::require(seen.contains(label.spin_partner()),
                                "Register: " + label.name() + " lacks its x/p partner");
            }
        }
    }

    /// {a, x_0..x_N, p_0..p_N} with the light and spin labels at the given stages.
    static Register protocol(Stage light_stage, Stage spin_stage, int order_max)
    {
        std::vector<ModeLabel> labels;
        labels.reserve(static_cast<std::size_t>(2 * order_max + 3));
        labels.push_back(ModeLabel::light(light_stage));
        for (int n = 0; n <= order_max; ++n) {
            labels.push_back(ModeLabel::spin_x(n, spin_stage));
        }
        for (int n = 0; n <= order_max; ++n) {
            labels.push_back(ModeLabel::spin_p(n, spin_stage));
        }
        return Register(std::move(labels));
    }

    static Register spins(Stage stage, int order_max)
    {
        auto full = protocol(stage, stage, order_max).labels_;
        full.erase(full.begin());
        return Register(std::move(full));
    }

    std::size_t size() const { return labels_.size(); }
    const ModeLabel& operator[](std::size_t i) const { return labels_[i]; }
    auto begin() const { return labels_.begin(); }
    auto end() const { return labels_.end(); }
    const std::vector<ModeLabel>& labels() const { return labels_; }

    std::optional<std::size_t> index_of(const ModeLabel& label) const
    {
        const auto it = std::find(labels_.begin(), labels_.end(), label);
        if (it == labels_.end()) {
            return std::nullopt;
        }
        return static_cast<std::size_t>(it - labels_.begin());
    }

    bool contains(const ModeLabel& label) const { return index_of(label).has_value(); }

    std::size_t require_index(const ModeLabel& label, std::string_view what) const
    {
        const auto index = index_of(label);
        detail::require(index.has_value(), std::string(what) + ": " + label.name() + " is not in the register");
        return *index;
    }

    bool operator==(const Register&) const = default;

private:
    std::vector<ModeLabel> labels_;
};

/// Each output amplitude as a linear combination of input amplitudes (rows = outputs).
class LinearInOutMap {
public:
    LinearInOutMap(Register inputs, Register outputs, Eigen::MatrixXcd coefficients)
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)), coefficients_(std::move(coefficients))
    {
        detail::require(coefficients_.rows() == static_cast<Eigen::Index>(outputs_.size()) &&
                            coefficients_.cols() == static_cast<Eigen::Index>(inputs_.size()),
                        "LinearInOutMap: coefficient shape does not match registers");
    }

    static LinearInOutMap identity(const Register& reg) { return relabel(reg, reg); }

    /// Identity coefficients with input label i renamed to output label i.
    static LinearInOutMap relabel(const Register& inputs, const Register& outputs)
    {
        detail::require(inputs.size() == outputs.size(), "relabel: registers differ in size");
        const auto n = static_cast<Eigen::Index>(inputs.size());
        return {inputs, outputs, Eigen::MatrixXcd::Identity(n, n)};
    }

    const Register& inputs() const { return inputs_; }
    const Register& outputs() const { return outputs_; }
    const Eigen::MatrixXcd& coefficients() const { return coefficients_; }

    complex coefficient(const ModeLabel& out, const ModeLabel& in) const
    {
        const auto row = outputs_.require_index(out, "coefficient");
        const auto col = inputs_.require_index(in, "coefficient");
        return coefficients_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
    }

    Eigen::RowVectorXcd row(const ModeLabel& out) const
    {
        return coefficients_.row(static_cast<Eigen::Index>(outputs_.require_index(out, "row")));
    }

private:
    Register inputs_;
    Register outputs_;
    Eigen::MatrixXcd coefficients_;
};

/// Applies `first`, then `second`. Inputs of `second` that `first` does not produce are
/// passed through from the overall input; outputs of `first` that `second` does not
/// consume are passed through to the overall output.
inline LinearInOutMap compose(const LinearInOutMap& first, const LinearInOutMap& second)
{
    const Register& mid = first.outputs();
    std::vector<ModeLabel> padded;
    bool overlap = false;
    for (const auto& label : second.inputs()) {
        if (mid.contains(label)) {
            overlap = true;
        } else {
            padded.push_back(label);
        }
    }
    detail::require(overlap, "compose: no output of the first map feeds the second map");

    std::vector<ModeLabel> in_labels = first.inputs().labels();
    in_labels.insert(in_labels.end(), padded.begin(), padded.end());
    std::vector<ModeLabel> passthrough;
    for (const auto& label : mid) {
        if (!second.inputs().contains(label)) {
            passthrough.push_back(label);
        }
    }
    std::vector<ModeLabel> out_labels = second.outputs().labels();
    out_labels.insert(out_labels.end(), passthrough.begin(), passthrough.end());

    // Register construction rejects labels that would appear twice.
    Register inputs(std::move(in_labels));
    Register outputs(std::move(out_labels));

    // Intermediate vector: first's outputs followed by padded pass-through inputs.
    const auto n_first_in = static_cast<Eigen::Index>(first.inputs().size());
    const auto n_mid = static_cast<Eigen::Index>(mid.size());
    const auto n_pad = static_cast<Eigen::Index>(padded.size());
    Eigen::MatrixXcd extended = Eigen::MatrixXcd::Zero(n_mid + n_pad, n_first_in + n_pad);
    extended.topLeftCorner(n_mid, n_first_in) = first.coefficients();
    extended.bottomRightCorner(n_pad, n_pad).setIdentity();

    auto intermediate_index = [&](const ModeLabel& label) -> Eigen::Index {
        if (const auto i = mid.index_of(label)) {
            return static_cast<Eigen::Index>(*i);
        }
        const auto it = std::find(padded.begin(), padded.end(), label);
        return n_mid + static_cast<Eigen::Index>(it - padded.begin());
    };

    Eigen::MatrixXcd gather = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(outputs.size()), n_mid + n_pad);
    for (std::size_t j = 0; j < second.inputs().size(); ++j) {
        gather.col(intermediate_index(second.inputs()[j])).head(second.coefficients().rows()) =
            second.coefficients().col(static_cast<Eigen::Index>(j));
    }
    for (std::size_t k = 0; k < passthrough.size(); ++k) {
        gather(second.coefficients().rows() + static_cast<Eigen::Index>(k), intermediate_index(passthrough[k])) = 1.0;
    }
    return {std::move(inputs), std::move(outputs), gather * extended};
}

template <typename... Rest>
LinearInOutMap compose(const LinearInOutMap& first, const LinearInOutMap& second, const Rest&... rest)
{
    return compose(compose(first, second), rest...);
}

/// Equal-time commutators [u, v^+] between register amplitudes.
struct CommutatorTable {
    double light = 1.0; ///< [a, a^+]
    double spin = 1.0;  ///< [x_n, p_n^+] = i * spin

    static CommutatorTable canonical() { return {}; }

    complex operator()(const ModeLabel& u, const ModeLabel& v) const
    {
        if (u.stage != v.stage || u.order != v.order) {
            return 0.0;
        }
        if (u.kind == ModeKind::Light && v.kind == ModeKind::Light) {
            return light;
        }
        if (u.kind == ModeKind::SpinX && v.kind == ModeKind::SpinP) {
            return complex(0.0, spin);
        }
        if (u.kind == ModeKind::SpinP && v.kind == ModeKind::SpinX) {
            return complex(0.0, -spin);
        }
        return 0.0;
    }
};

/// [O, O^+] for the output amplitude O = sum_k c_k u_k.
inline complex output_commutator(const LinearInOutMap& map, const CommutatorTable& table, const ModeLabel& out_label)
{
    const Eigen::RowVectorXcd c = map.row(out_label);
    complex total = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (c(k) == 0.0) {
            continue;
        }
        for (Eigen::Index l = 0; l < c.size(); ++l) {
            if (c(l) == 0.0) {
                continue;
            }
            total += c(k) * std::conj(c(l)) *
                     table(map.inputs()[static_cast<std::size_t>(k)], map.inputs()[static_cast<std::size_t>(l)]);
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Real quadratures

enum class Quadrature { X, P, Cos, Sin };

struct RealQuadrature {
    ModeLabel mode;
    Quadrature part = Quadrature::X;

    std::string name() const
    {
        static constexpr std::array<std::string_view, 4> suffix{"X", "P", "c", "s"};
        return mode.name() + "." + std::string(suffix[static_cast<std::size_t>(part)]);
    }

    auto operator<=>(const RealQuadrature&) const = default;
};

/// The two real quadratures carried by one complex mode amplitude.
inline std::array<RealQuadrature, 2> quadratures_of(const ModeLabel& mode)
{
    if (mode.is_spin()) {
        return {RealQuadrature{mode, Quadrature::Cos}, RealQuadrature{mode, Quadrature::Sin}};
    }
    return {RealQuadrature{mode, Quadrature::X}, RealQuadrature{mode, Quadrature::P}};
}

/// Canonically conjugate partner: X <-> P for light, x_n.c <-> p_n.c and x_n.s <-> p_n.s for spins.
inline RealQuadrature conjugate(const RealQuadrature& q)
{
    if (!q.mode.is_spin()) {
        return {q.mode, q.part == Quadrature::X ? Quadrature::P : Quadrature::X};
    }
    return {q.mode.spin_partner(), q.part};
}

/// +1 when [q, conjugate(q)] = +i (q is position-like), -1 otherwise.
inline int canonical_sign(const RealQuadrature& q)
{
    if (!q.mode.is_spin()) {
        return q.part == Quadrature::X ? 1 : -1;
    }
    return q.mode.kind == ModeKind::SpinX ? 1 : -1;
}

inline std::vector<RealQuadrature> quadrature_register(const Register& reg)
{
    std::vector<RealQuadrature> out;
    out.reserve(2 * reg.size());
    for (const auto& mode : reg) {
        const auto pair = quadratures_of(mode);
        out.insert(out.end(), pair.begin(), pair.end());
    }
    return out;
}

/// Real-linear map between real quadratures (rows = outputs).
class QuadratureMap {
public:
    QuadratureMap(std::vector<RealQuadrature> inputs, std::vector<RealQuadrature> outputs, Eigen::MatrixXd coefficients)
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)), coefficients_(std::move(coefficients))
    {
        detail::require(coefficients_.rows() == static_cast<Eigen::Index>(outputs_.size()) &&
                            coefficients_.cols() == static_cast<Eigen::Index>(inputs_.size()),
                        "QuadratureMap: coefficient shape does not match registers");
    }

    const std::vector<RealQuadrature>& inputs() const { return inputs_; }
    const std::vector<RealQuadrature>& outputs() const { return outputs_; }
    const Eigen::MatrixXd& coefficients() const { return coefficients_; }

    static std::optional<Eigen::Index> index_in(const std::vector<RealQuadrature>& labels, const RealQuadrature& q)
    {
        const auto it = std::find(labels.begin(), labels.end(), q);
        if (it == labels.end()) {
            return std::nullopt;
        }
        return static_cast<Eigen::Index>(it - labels.begin());
    }

    double coefficient(const RealQuadrature& out, const RealQuadrature& in) const
    {
        const auto r = index_in(outputs_, out);
        const auto c = index_in(inputs_, in);
        detail::require(r && c, "QuadratureMap::coefficient: unknown quadrature " + (r ? in.name() : out.name()));
        return coefficients_(*r, *c);
    }

    /// Imaginary part c of [O1, O2] = i c for two outputs, from the canonical input commutators.
    double commutator(const RealQuadrature& out1, const RealQuadrature& out2) const
    {
        const auto r1 = index_in(outputs_, out1);
        const auto r2 = index_in(outputs_, out2);
        detail::require(r1 && r2, "QuadratureMap::commutator: unknown output quadrature");
        double total = 0.0;
        for (std::size_t k = 0; k < inputs_.size(); ++k) {
            const auto l = index_in(inputs_, conjugate(inputs_[k]));
            if (!l) {
                continue;
            }
            total += canonical_sign(inputs_[k]) * coefficients_(*r1, static_cast<Eigen::Index>(k)) *
                     coefficients_(*r2, *l);
        }
        return total;
    }

private:
    std::vector<RealQuadrature> inputs_;
    std::vector<RealQuadrature> outputs_;
    Eigen::MatrixXd coefficients_;
};

/// Expands a complex-linear map into its action on real quadratures.
inline QuadratureMap to_quadrature_map(const LinearInOutMap& map)
{
    const auto& in = map.inputs();
    const auto& out = map.outputs();
    Eigen::MatrixXd real = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(2 * out.size()),
                                                 static_cast<Eigen::Index>(2 * in.size()));
    // u = (R1 + i s R2)/sqrt(2): s = +1 for light, -1 for spin modes.
    auto sign = [](const ModeLabel& m) { return m.is_spin() ? -1.0 : 1.0; };
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double so = sign(out[i]);
        const auto o1 = static_cast<Eigen::Index>(2 * i);
        for (std::size_t j = 0; j < in.size(); ++j) {
            const complex c = map.coefficients()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            const double si = sign(in[j]);
            const auto i1 = static_cast<Eigen::Index>(2 * j);
            real(o1, i1) = c.real();
            real(o1, i1 + 1) = -c.imag() * si;
            real(o1 + 1, i1) = so * c.imag();
            real(o1 + 1, i1 + 1) = so * si * c.real();
        }
    }
    return {quadrature_register(in), quadrature_register(out), std::move(real)};
}

/// Largest deviation of the output commutators from the canonical ones, over output
/// pairs accepted by `keep` (called with each quadrature of the pair).
template <typename Filter>
double symplectic_deviation(const QuadratureMap& map, Filter&& keep)
{
    double worst = 0.0;
    for (const auto& o1 : map.outputs()) {
        if (!keep(o1)) {
            continue;
        }
        for (const auto& o2 : map.outputs()) {
            if (!keep(o2)) {
                continue;
            }
            const double expected = (o2 == conjugate(o1)) ? canonical_sign(o1) : 0.0;
            worst = std::max(worst, std::abs(map.commutator(o1, o2) - expected));
        }
    }
    return worst;
}

inline double symplectic_deviation(const QuadratureMap& map)
{
    return symplectic_deviation(map, [](const RealQuadrature&) { return true; });
}

// ---------------------------------------------------------------------------
// Covariance

/// Variances of independent input quadratures. Zero variances are accepted as a
/// degenerate (noise-free) assignment; is_physical() checks the uncertainty relation.
class CovarianceSpec {
public:
    static constexpr double kVacuumVariance = 0.5;

    static CovarianceSpec vacuum(const Register& reg)
    {
        CovarianceSpec spec;
        for (const auto& q : quadrature_register(reg)) {
            spec.set_variance(q, kVacuumVariance);
        }
        return spec;
    }

    void set_variance(const RealQuadrature& q, double variance)
    {
        detail::require(std::isfinite(variance) && variance >= 0.0,
                        "CovarianceSpec: variance of " + q.name() + " must be finite and nonnegative");
        variances_[q] = variance;
    }

    /// Squeezes q to (1/2) e^{-2r} and antisqueezes its conjugate to (1/2) e^{2r}.
    void squeeze(const RealQuadrature& q, double r)
    {
        detail::require(std::isfinite(r) && r >= 0.0, "CovarianceSpec::squeeze: r must be finite and nonnegative");
        set_variance(q, kVacuumVariance * std::exp(-2.0 * r));
        set_variance(conjugate(q), kVacuumVariance * std::exp(2.0 * r));
    }

    std::optional<double> variance(const RealQuadrature& q) const
    {
        const auto it = variances_.find(q);
        if (it == variances_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    bool covers(const RealQuadrature& q) const { return variances_.contains(q); }

    bool is_physical() const
    {
        for (const auto& [q, v] : variances_) {
            if (v <= 0.0) {
                return false;
            }
            if (const auto partner = variance(conjugate(q)); partner && v * *partner < 0.25 * (1.0 - 1e-12)) {
                return false;
            }
        }
        return true;
    }

    const std::map<RealQuadrature, double>& entries() const { return variances_; }

private:
    std::map<RealQuadrature, double> variances_;
};

/// Covariance of selected output quadratures for independent input quadratures.
inline Eigen::MatrixXd propagate_covariance(const LinearInOutMap& map, const CovarianceSpec& spec,
                                            std::span<const RealQuadrature> outputs)
{
    const QuadratureMap real = to_quadrature_map(map);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(outputs.size()), real.coefficients().cols());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        const auto r = QuadratureMap::index_in(real.outputs(), outputs[i]);
        detail::require(r.has_value(), "propagate_covariance: " + outputs[i].name() + " is not a map output");
        rows.row(static_cast<Eigen::Index>(i)) = real.coefficients().row(*r);
    }
    Eigen::VectorXd variances = Eigen::VectorXd::Zero(rows.cols());
    for (Eigen::Index k = 0; k < rows.cols(); ++k) {
        if (rows.col(k).isZero(0.0)) {
            continue;
        }
        const auto& q = real.inputs()[static_cast<std::size_t>(k)];
        const auto v = spec.variance(q);
        detail::require(v.has_value(), "propagate_covariance: no variance given for input " + q.name());
        variances(k) = *v;
    }
    Eigen::MatrixXd cov = rows * variances.asDiagonal() * rows.transpose();
    return 0.5 * (cov + cov.transpose());
}

} // namespace qvh
