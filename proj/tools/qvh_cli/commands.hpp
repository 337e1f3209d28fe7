#pragma once

// Command layer of qvh_cli. Each command writes its data table to `out` (or to
// --out plus a <out>.meta.json sidecar) and diagnostics to `err`, and returns the
// process exit code.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qvh/qvh.hpp"

namespace qvh::cli {

using json = nlohmann::ordered_json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitToleranceBreach = 2;
inline constexpr const char* kToolVersion = "0.1.0";

inline constexpr const char* kConvention =
    "kappa_tilde = dimensionless coupling with kappa_tilde^2 = 2 alpha0 eta; "
    "light a = (X + iP)/sqrt(2); spin x_n = (X_n.c - i X_n.s)/sqrt(2)";

struct RunConfig {
    double kappa = 1.0;
    int order_max = 4;
    int pixels = 1;
    std::optional<double> squeeze_r;
    double grating_periods = 100.0;
    int z_per_period = 40;
    int t_steps = 200;
    double tolerance = 0.01;
    std::string out;
    std::string format = "csv";
    double from = 0.0;
    double to = 1.4;
    int points = 141;
    double r_max = 10.0;
    int r_points = 101;
    bool convergence = true;

    ProtocolConfig protocol() const { return {kappa, order_max, 2.0 * std::numbers::pi * grating_periods}; }

    void validate() const
    {
        protocol().validate();
        detail::require(pixels >= 1, "--pixels must be at least 1");
        detail::require(!squeeze_r || (std::isfinite(*squeeze_r) && *squeeze_r >= 0.0),
                        "--squeeze-r must be finite and nonnegative");
        detail::require(std::isfinite(grating_periods) && grating_periods > 0.0, "--grating-periods must be positive");
        detail::require(z_per_period >= static_cast<int>(OracleGrid::kMinPointsPerPeriod),
                        "--z-per-period must be at least 20");
        detail::require(t_steps >= static_cast<int>(OracleGrid::kMinTimeSteps), "--t-steps must be at least 100");
        detail::require(std::isfinite(tolerance) && tolerance >= 0.0, "--tolerance must be nonnegative");
        detail::require(format == "csv" || format == "json", "--format must be csv or json");
        detail::require(std::isfinite(from) && std::isfinite(to) && from >= 0.0 && from < to,
                        "sweep range needs 0 <= --from < --to");
        detail::require(points >= 2, "--points must be at least 2");
        detail::require(std::isfinite(r_max) && r_max > 0.0, "--r-max must be finite and positive");
        detail::require(r_points >= 2, "squeeze-sweep --points must be at least 2");
    }

    json to_json() const
    {
        json j;
        j["kappa"] = kappa;
        j["order-max"] = order_max;
        j["pixels"] = pixels;
        j["squeeze-r"] = squeeze_r ? json(*squeeze_r) : json(nullptr);
        j["grating-periods"] = grating_periods;
        j["z-per-period"] = z_per_period;
        j["t-steps"] = t_steps;
        j["tolerance"] = tolerance;
        j["format"] = format;
        j["from"] = from;
        j["to"] = to;
        j["points"] = points;
        j["r-max"] = r_max;
        j["r-points"] = r_points;
        j["convergence"] = convergence;
        return j;
    }
};

// ---------------------------------------------------------------------------
// Formatting

/// Shortest round-trip decimal; negative zero prints as 0.
inline std::string format_number(double value)
{
    if (value == 0.0) {
        value = 0.0;
    }
    char buffer[64];
    const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
    return ec == std::errc{} ? std::string(buffer, end) : std::string("nan");
}

inline std::string csv_field(const std::string& text)
{
    if (text.find_first_of(",\"\n") == std::string::npos) {
        return text;
    }
    std::string quoted = "\"";
    for (const char c : text) {
        quoted += c;
        if (c == '"') {
            quoted += '"';
        }
    }
    return quoted + "\"";
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::string> row)
    {
        detail::require(row.size() == columns_.size(), "CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    void write(std::ostream& os) const
    {
        os << "# " << kConvention << "\n";
        write_row(os, columns_);
        for (const auto& row : rows_) {
            write_row(os, row);
        }
    }

private:
    static void write_row(std::ostream& os, const std::vector<std::string>& row)
    {
        for (std::size_t i = 0; i < row.size(); ++i) {
            os << (i ? "," : "") << csv_field(row[i]);
        }
        os << "\n";
    }

    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Destination of one command's data file.
class Output {
public:
    Output(const RunConfig& config, std::string command, std::ostream& fallback)
        : config_(config), command_(std::move(command)), fallback_(fallback)
    {
    }

    /// Writes `data` to --out (with sidecar) or to the fallback stream.
    void emit(const std::string& data, json extra = json::object()) const
    {
        if (config_.out.empty()) {
            fallback_ << data;
            return;
        }
        write_file(config_.out, data);
        json meta;
        meta["tool"] = "qvh_cli";
        meta["version"] = kToolVersion;
        meta["command"] = command_;
        meta["data_file"] = config_.out;
        meta["generated_at"] = utc_timestamp();
        meta["convention"] = kConvention;
        meta["config"] = config_.to_json();
        meta["results"] = std::move(extra);
        write_file(config_.out + ".meta.json", meta.dump(2) + "\n");
    }

private:
    static void write_file(const std::string& path, const std::string& data)
    {
        std::ofstream file(path, std::ios::binary);
        detail::require(static_cast<bool>(file), "cannot open output file " + path);
        file << data;
        detail::require(static_cast<bool>(file), "failed writing output file " + path);
    }

    const RunConfig& config_;
    std::string command_;
    std::ostream& fallback_;
};

inline void warn_all(const std::vector<std::string>& warnings, std::ostream& err)
{
    for (const auto& w : warnings) {
        err << "warning: " << w << "\n";
    }
}

// ---------------------------------------------------------------------------
// Commands

inline int cmd_maps(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    config.validate();
    const ProtocolConfig protocol = config.protocol();
    warn_all(protocol.warnings(), err);
    CsvTable table({"kappa_tilde", "map", "output", "input", "re", "im"});
    const std::vector<std::pair<std::string, LinearInOutMap>> maps{
        {"single_pass", single_pass(protocol)},
        {"double_pass_write", double_pass_write(protocol)},
        {"full_cycle", full_cycle(protocol)},
    };
    for (const auto& [name, map] : maps) {
        for (std::size_t i = 0; i < map.outputs().size(); ++i) {
            for (std::size_t j = 0; j < map.inputs().size(); ++j) {
                const complex c = map.coefficients()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                table.add({format_number(config.kappa), name, map.outputs()[i].name(), map.inputs()[j].name(),
                           format_number(c.real()), format_number(c.imag())});
            }
        }
    }
    std::ostringstream os;
    table.write(os);
    Output(config, "maps", out).emit(os.str());
    return kExitOk;
}

namespace detail {

inline const std::vector<std::string>& fidelity_columns()
{
    static const std::vector<std::string> columns{"kappa_tilde", "r",      "N",
                                                  "F_N",         "F_av",   "beats_classical",
                                                  "beats_cloning"};
    return columns;
}

inline std::vector<std::string> fidelity_row(double kappa, const FidelityReport& report)
{
    return {format_number(kappa),
            format_number(report.squeezing_r.value_or(0.0)),
            std::to_string(report.pixel_count),
            format_number(report.fidelity_n),
            format_number(report.fidelity_avg),
            report.beats_classical() ? "true" : "false",
            report.beats_cloning() ? "true" : "false"};
}

inline json fidelity_json(double kappa, const FidelityReport& report)
{
    json j;
    j["kappa_tilde"] = kappa;
    j["r"] = report.squeezing_r.value_or(0.0);
    j["N"] = report.pixel_count;
    j["F_N"] = report.fidelity_n;
    j["F_av"] = report.fidelity_avg;
    j["beats_classical"] = report.beats_classical();
    j["beats_cloning"] = report.beats_cloning();
    return j;
}

inline void require_unit_gain_for_squeezing(const RunConfig& config)
{
    qvh::detail::require(config.kappa == 1.0,
                         "squeezed fidelity is defined at the unit-gain point kappa_tilde = 1 only");
}

inline FidelityReport fidelity_for(const RunConfig& config)
{
    if (config.squeeze_r) {
        require_unit_gain_for_squeezing(config);
        const double r = *config.squeeze_r;
        return squeezing_sweep(std::span<const double>(&r, 1), config.pixels, config.protocol()).front();
    }
    return transfer_fidelity(config.protocol(), config.pixels);
}

} // namespace detail

inline int cmd_fidelity(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    config.validate();
    warn_all(config.protocol().warnings(), err);
    const FidelityReport report = detail::fidelity_for(config);
    std::string data;
    if (config.format == "json") {
        json j;
        j["convention"] = kConvention;
        j["columns"] = detail::fidelity_columns();
        j["rows"] = json::array({detail::fidelity_json(config.kappa, report)});
        data = j.dump(2) + "\n";
    } else {
        CsvTable table(detail::fidelity_columns());
        table.add(detail::fidelity_row(config.kappa, report));
        std::ostringstream os;
        table.write(os);
        data = os.str();
    }
    Output(config, "fidelity", out).emit(data, detail::fidelity_json(config.kappa, report));
    return kExitOk;
}

/// Uniform grid [from, to] with `points` entries; strictly increasing or rejected.
inline std::vector<double> linear_grid(double from, double to, int points)
{
    qvh::detail::require(points >= 2, "sweep needs at least 2 points");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        grid[static_cast<std::size_t>(i)] = from + (to - from) * i / (points - 1);
    }
    grid.back() = to;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        qvh::detail::require(grid[i] > grid[i - 1], "sweep grid is not strictly increasing");
    }
    return grid;
}

struct KappaSweepPoint {
    double kappa = 0.0;
    complex recovery;
    double fidelity_avg = 0.0;
};

inline std::vector<KappaSweepPoint> sweep_kappa(const RunConfig& config)
{
    const auto grid = linear_grid(config.from, config.to, config.points);
    std::vector<KappaSweepPoint> points(grid.size());
    qvh::detail::parallel_for(grid.size(), [&](std::size_t i) {
        ProtocolConfig protocol = config.protocol();
        protocol.kappa = grid[i];
        points[i].kappa = grid[i];
        points[i].recovery = signal_recovery(full_cycle(protocol));
        points[i].fidelity_avg = transfer_fidelity(protocol, config.pixels).fidelity_avg;
    });
    return points;
}

inline int cmd_sweep_kappa(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    config.validate();
    const auto points = sweep_kappa(config);
    CsvTable table({"kappa_tilde", "recovery_re", "recovery_im", "recovery_power", "F_av"});
    std::size_t best = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        table.add({format_number(p.kappa), format_number(p.recovery.real()), format_number(p.recovery.imag()),
                   format_number(std::norm(p.recovery)), format_number(p.fidelity_avg)});
        if (std::norm(p.recovery) > std::norm(points[best].recovery)) {
            best = i;
        }
    }
    const auto& argmax = points[best];
    err << "argmax kappa_tilde=" << format_number(argmax.kappa)
        << " recovery_power=" << format_number(std::norm(argmax.recovery)) << "\n";
    std::ostringstream os;
    table.write(os);
    json extra;
    extra["argmax_kappa_tilde"] = argmax.kappa;
    extra["argmax_recovery_re"] = argmax.recovery.real();
    extra["argmax_recovery_im"] = argmax.recovery.imag();
    extra["argmax_recovery_power"] = std::norm(argmax.recovery);
    extra["grid_step"] = (config.to - config.from) / (config.points - 1);
    Output(config, "sweep-kappa", out).emit(os.str(), extra);
    return kExitOk;
}

inline int cmd_squeeze_sweep(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    config.validate();
    detail::require_unit_gain_for_squeezing(config);
    warn_all(config.protocol().warnings(), err);
    const auto r_values = linear_grid(0.0, config.r_max, config.r_points);
    const auto reports = squeezing_sweep(r_values, config.pixels, config.protocol());
    CsvTable table(detail::fidelity_columns());
    bool increasing = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        table.add(detail::fidelity_row(config.kappa, reports[i]));
        increasing = increasing && (i == 0 || reports[i].fidelity_avg > reports[i - 1].fidelity_avg);
    }
    std::ostringstream os;
    table.write(os);
    json extra;
    extra["strictly_increasing"] = increasing;
    extra["F_av_at_r_max"] = reports.back().fidelity_avg;
    Output(config, "squeeze-sweep", out).emit(os.str(), extra);
    return kExitOk;
}

struct OracleVerification {
    OracleResult oracle;
    ComparisonReport comparison;
    /// |[a, a^+] - 1| of the oracle light output.
    double light_commutator_error = 0.0;
    /// Largest commutator deviation among the spin outputs.
    double spin_symplectic_error = 0.0;
    std::vector<std::string> warnings;
};

inline OracleVerification verify_oracle(const RunConfig& config)
{
    config.validate();
    const OracleGrid grid = OracleGrid::from_periods(config.kappa, config.order_max, config.grating_periods,
                                                     config.z_per_period, static_cast<std::size_t>(config.t_steps));
    grid.validate();
    OracleVerification v{extract_map(grid, config.convergence), {}, 0.0, 0.0, grid.protocol().warnings()};
    v.comparison = compare(v.oracle, single_pass(grid.protocol()), config.tolerance);
    const RealQuadrature ax{ModeLabel::light(Stage::Out), Quadrature::X};
    v.light_commutator_error = std::abs(v.oracle.map.commutator(ax, conjugate(ax)) - 1.0);
    v.spin_symplectic_error =
        symplectic_deviation(v.oracle.map, [](const RealQuadrature& q) { return q.mode.is_spin(); });
    return v;
}

inline json to_json(const OracleVerification& v, const RunConfig& config)
{
    json j;
    j["convention"] = kConvention;
    j["kappa_tilde"] = config.kappa;
    j["order_max"] = config.order_max;
    j["grating_phase"] = v.oracle.grid.grating_phase;
    j["grating_periods"] = v.oracle.grid.periods();
    j["z_points"] = v.oracle.grid.z_points;
    j["t_steps"] = v.oracle.grid.t_steps;
    j["tolerance"] = v.comparison.tolerance;
    j["passed"] = v.comparison.passed;
    j["max_rel_error"] = v.comparison.max_rel_error;
    j["max_abs_error"] = v.comparison.max_abs_error;
    j["leakage"] = v.comparison.leakage;
    j["light_commutator_error"] = v.light_commutator_error;
    j["spin_symplectic_error"] = v.spin_symplectic_error;
    if (v.oracle.convergence) {
        const auto& c = *v.oracle.convergence;
        json conv;
        conv["change_first"] = c.change_first;
        conv["change_second"] = c.change_second;
        conv["estimated_order"] = std::isfinite(c.estimated_order) ? json(c.estimated_order) : json(nullptr);
        conv["discretization_tolerance"] = c.tolerance;
        j["convergence"] = conv;
    } else {
        j["convergence"] = nullptr;
    }
    json worst = json::array();
    for (const auto& d : v.comparison.worst) {
        json e;
        e["output"] = d.output.name();
        e["input"] = d.input.name();
        e["analytic"] = d.analytic;
        e["numeric"] = d.numeric;
        e["rel_error"] = d.rel_error;
        worst.push_back(e);
    }
    j["worst"] = worst;
    j["warnings"] = v.warnings;
    return j;
}

inline int cmd_oracle_verify(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    const OracleVerification v = verify_oracle(config);
    warn_all(v.warnings, err);
    const auto& c = v.comparison;
    std::ostringstream text;
    text << "oracle-verify kappa_tilde=" << format_number(config.kappa) << " N=" << config.order_max
         << " periods=" << format_number(v.oracle.grid.periods()) << " z_points=" << v.oracle.grid.z_points
         << " t_steps=" << v.oracle.grid.t_steps << "\n";
    text << "  max relative error  " << format_number(c.max_rel_error) << " (tolerance "
         << format_number(c.tolerance) << ")\n";
    text << "  max absolute error  " << format_number(c.max_abs_error) << "\n";
    text << "  leakage             " << format_number(c.leakage) << "\n";
    text << "  light [a,a+] - 1    " << format_number(v.light_commutator_error) << "\n";
    text << "  spin symplectic dev " << format_number(v.spin_symplectic_error) << "\n";
    if (v.oracle.convergence) {
        text << "  refinement change   " << format_number(v.oracle.convergence->change_first) << ", "
             << format_number(v.oracle.convergence->change_second) << " (discretization tolerance "
             << format_number(v.oracle.convergence->tolerance) << ")\n";
    }
    for (const auto& d : c.worst) {
        text << "  worst " << d.output.name() << " <- " << d.input.name() << ": analytic "
             << format_number(d.analytic) << " numeric " << format_number(d.numeric) << "\n";
    }
    text << (c.passed ? "PASS" : "FAIL") << "\n";
    if (config.out.empty()) {
        out << text.str();
    } else {
        err << text.str();
        Output(config, "oracle-verify", out).emit(to_json(v, config).dump(2) + "\n", json{{"passed", c.passed}});
    }
    return c.passed ? kExitOk : kExitToleranceBreach;
}

// ---------------------------------------------------------------------------
// Argument parsing

namespace detail {

/// Flat key-value JSON config file; every value must be a scalar.
inline json load_config_file(const std::string& path)
{
    std::ifstream file(path);
    qvh::detail::require(static_cast<bool>(file), "cannot open config file " + path);
    json j;
    try {
        j = json::parse(file);
    } catch (const json::parse_error& e) {
        throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
    }
    qvh::detail::require(j.is_object(), "config file must hold a flat JSON object");
    for (const auto& [key, value] : j.items()) {
        qvh::detail::require(value.is_primitive(), "config key '" + key + "' must map to a scalar");
    }
    return j;
}

struct Binding {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> assign;
};

template <typename T>
std::function<void(const json&)> assign_to(T& target, const std::string& key)
{
    return [&target, key](const json& value) {
        try {
            target = value.get<T>();
        } catch (const json::exception&) {
            throw ValidationError("config key '" + key + "' has the wrong type");
        }
    };
}

} // namespace detail

/// Parses arguments and dispatches. Returns the process exit code.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig config;
    double squeeze_r = 0.0;
    std::string config_path;
    std::vector<detail::Binding> bindings;

    CLI::App app{"Double-pass quantum volume hologram: in-out maps, fidelity and oracle checks"};
    app.name("qvh_cli");
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kToolVersion);

    auto bind = [&](CLI::App& target, const std::string& flag, auto& field, const std::string& help) {
        const std::string key = flag.substr(2);
        auto* option = target.add_option(flag, field, help);
        bindings.push_back({key, option, detail::assign_to(field, key)});
        return option;
    };

    app.add_option("--config", config_path, "flat JSON file of flag values; flags override it");
    bind(app, "--kappa", config.kappa, "dimensionless coupling kappa_tilde");
    bind(app, "--order-max", config.order_max, "highest Legendre order of the spin register");
    bind(app, "--pixels", config.pixels, "number of transverse pixels N");
    bind(app, "--grating-periods", config.grating_periods, "grating phase in units of 2 pi");
    bind(app, "--z-per-period", config.z_per_period, "oracle z intervals per grating period");
    bind(app, "--t-steps", config.t_steps, "oracle time steps");
    bind(app, "--tolerance", config.tolerance, "oracle relative tolerance");
    bind(app, "--out", config.out, "data file; a <out>.meta.json sidecar is written next to it");
    auto* squeeze = app.add_option("--squeeze-r", squeeze_r, "squeezing parameter r of the spin noise modes");
    bindings.push_back({"squeeze-r", squeeze, [&config](const json& value) {
                            if (value.is_null()) {
                                config.squeeze_r.reset();
                                return;
                            }
                            qvh::detail::require(value.is_number(), "config key 'squeeze-r' must be a number");
                            config.squeeze_r = value.get<double>();
                        }});

    auto* maps = app.add_subcommand("maps", "single-pass, double-pass write and full-cycle coefficients (CSV)");
    auto* fidelity = app.add_subcommand("fidelity", "memory fidelity for N pixels (CSV or JSON)");
    bind(*fidelity, "--format", config.format, "csv or json");
    auto* sweep = app.add_subcommand("sweep-kappa", "signal recovery and fidelity versus kappa_tilde (CSV)");
    bind(*sweep, "--from", config.from, "first kappa_tilde");
    bind(*sweep, "--to", config.to, "last kappa_tilde");
    bind(*sweep, "--points", config.points, "number of grid points");
    auto* squeeze_sweep = app.add_subcommand("squeeze-sweep", "fidelity versus squeezing r at kappa_tilde = 1 (CSV)");
    bind(*squeeze_sweep, "--r-max", config.r_max, "largest r");
    bind(*squeeze_sweep, "--points", config.r_points, "number of grid points");
    auto* oracle = app.add_subcommand("oracle-verify", "integrate one pass numerically and compare (text + JSON)");
    bind(*oracle, "--convergence", config.convergence, "run the 2x/4x refinement study");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (!config_path.empty()) {
            const json file = detail::load_config_file(config_path);
            for (const auto& [key, value] : file.items()) {
                bool known = false;
                bool overridden = false;
                for (const auto& b : bindings) {
                    if (b.key == key) {
                        known = true;
                        overridden = overridden || b.option->count() > 0;
                    }
                }
                qvh::detail::require(known, "unknown config key '" + key + "'");
                if (overridden) {
                    continue;
                }
                for (const auto& b : bindings) {
                    if (b.key == key) {
                        b.assign(value);
                    }
                }
            }
        }
        if (squeeze->count() > 0) {
            config.squeeze_r = squeeze_r;
        }
        if (maps->parsed()) {
            return cmd_maps(config, out, err);
        }
        if (fidelity->parsed()) {
            return cmd_fidelity(config, out, err);
        }
        if (sweep->parsed()) {
            return cmd_sweep_kappa(config, out, err);
        }
        if (squeeze_sweep->parsed()) {
            return cmd_squeeze_sweep(config, out, err);
        }
        return cmd_oracle_verify(config, out, err);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err)
{
    return run(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace qvh::cli
