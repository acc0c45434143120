#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nldecay/bounds.hpp"
#include "nldecay/config.hpp"
#include "nldecay/dispersal.hpp"
#include "nldecay/evolution.hpp"
#include "nldecay/kernels.hpp"
#include "nldecay/verify.hpp"

namespace nldecay {

using Json = nlohmann::ordered_json;

struct CheckResult {
    std::string name;
    bool passed = false;
    Json detail = Json::object();
};

struct RunSummary {
    RunSummary() = default;
    RunSummary(std::string n, std::string m) : name(std::move(n)), mode(std::move(m)) {}

    std::string name;
    std::string mode;
    std::vector<CheckResult> checks;
    std::vector<std::string> artifacts;
    Json info = Json::object();

    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
    }

    Json to_json() const {
        Json j;
        j["name"] = name;
        j["mode"] = mode;
        j["passed"] = passed();
        j["checks"] = Json::array();
        for (const auto& c : checks) {
            Json e;
            e["name"] = c.name;
            e["passed"] = c.passed;
            e["detail"] = c.detail;
            j["checks"].push_back(e);
        }
        j["info"] = info;
        j["artifacts"] = artifacts;
        return j;
    }
};

struct RunContext {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

/// Numbers that JSON cannot hold (inf, nan) are written as strings.
inline Json json_number(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

inline Json to_json(const ConstantLedger& c) {
    auto entry = [](double v, const char* note) {
        Json e;
        e["value"] = json_number(v);
        e["note"] = note;
        return e;
    };
    Json j;
    j["N"] = c.N;
    j["p"] = c.p;
    j["k"] = c.k;
    j["omega_N"] = entry(c.omega_N, "volume of the unit ball");
    j["C1"] = entry(c.C1, "max over nonzero grid frequencies of min{1,|xi|^2}/(1 - J^(xi)), unit-ball kernel");
    j["C2"] = entry(c.C2, "omega_N^{-2/N} C1^{-1} (1 + N/2)^{-(N+2)/N} (N/2): low-frequency case");
    j["C3"] = entry(c.C3, "C1^{-1} (1 + 2/N)^{-1}: high-frequency case");
    j["C4"] = entry(c.C4, "min{C2, C3}");
    j["c_p"] = entry(c.c_p, "numerical best constant of (a-b)(a^{p-1}-b^{p-1}) >= c (a^{p/2}-b^{p/2})^2");
    j["mu_k"] = entry(c.mu_k, "2/(N+2+2k)");
    j["C_cor"] = entry(c.C_cor, "omega_N C4: L^2 energy inequality constant");
    j["C_main"] = entry(c.C_main, "c_p C_cor: L^p energy inequality constant");
    j["gamma_p"] = entry(c.gamma_p, "2/(N(p-1))");
    j["gamma_k"] = entry(c.gamma_k, "2/(N+2k)");
    j["C_of_J"] = entry(c.C_of_J, "heat normalization (1/2 integral J z_N^2)^{-1}");
    j["C2_k"] = entry(c.C2_k, "low-frequency case of the derivative chain, a = N+2k");
    j["C3_k"] = entry(c.C3_k, "high-frequency case of the derivative chain");
    j["C4_k"] = entry(c.C4_k, "min{C2_k, C3_k}");
    j["C_deriv"] = entry(c.C_deriv, "omega_N C4_k: derivative and gradient inequality constant");
    return j;
}

inline Json to_json(const InequalityReport& r) {
    Json j;
    j["label"] = r.label;
    j["trials"] = r.trials;
    j["skipped"] = r.skipped;
    j["min_margin"] = json_number(r.min_margin);
    j["min_ratio"] = json_number(r.min_ratio);
    j["violations"] = r.violations;
    j["worst_seed"] = r.worst_seed;
    return j;
}

inline Json to_json(const DecayEnvelope& e) {
    Json j;
    j["t0"] = json_number(e.t0);
    j["gamma"] = json_number(e.gamma);
    j["plateau"] = json_number(e.plateau);
    j["rate_constant"] = json_number(e.rate_constant);
    return j;
}

/// Least-squares slope of log(value) against log(t) over t in [T/10, T],
/// T the last sample time.
inline double loglog_slope_last_decade(const std::vector<double>& t, const std::vector<double>& v) {
    require(!t.empty() && t.size() == v.size(), ErrorKind::insufficient_data, "empty series");
    const double T = t.back();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long n = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= 0.0 || t[i] < T / 10.0 || v[i] <= 0.0) continue;
        const double x = std::log(t[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    require(n >= 3, ErrorKind::insufficient_data, "need three samples in the last decade");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace detail {

inline std::string lp_column(double p) { return "lp" + param_label(p); }

/// Config values that the library rejects are configuration errors.
template <class Fn>
auto as_config_error(const Config& cfg, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        throw ConfigError(cfg.file(), 0, e.what());
    }
}

struct Setup {
    std::string name;
    GridSpec grid{1, 1.0, 8};
    std::optional<ConvKernel> J;
    double R_test = 1.0;
    std::uint64_t seed = 1;
};

inline GridSpec grid_from(const Config& cfg) {
    const long dim = cfg.get_long("grid.dim", 1);
    const double L = cfg.get_double("grid.L");
    const long n = cfg.get_long("grid.n");
    if (dim < 1 || dim > 3) cfg.invalid("grid.dim", "must be 1, 2 or 3");
    if (!(L > 0.0)) cfg.invalid("grid.L", "must be positive");
    if (n < 8 || (n & (n - 1)) != 0) cfg.invalid("grid.n", "must be a power of two >= 8");
    return GridSpec(static_cast<int>(dim), L, static_cast<std::size_t>(n));
}

inline ConvKernel kernel_from(const Config& cfg, const GridSpec& grid) {
    const std::string kind_s = cfg.get_string("kernel.kind", "box");
    KernelKind kind;
    try {
        kind = kernel_kind_from_string(kind_s);
    } catch (const Error&) {
        cfg.invalid("kernel.kind", "must be box, bump or truncated_gaussian");
    }
    const double R = cfg.get_double("kernel.support_radius", 1.0);
    const double param = cfg.get_double("kernel.parameter", kind == KernelKind::truncated_gaussian ? 0.5 : 1.0);
    if (!(R > 0.0 && R < grid.half_width())) cfg.invalid("kernel.support_radius", "must lie in (0, L)");
    if (!(param > 0.0)) cfg.invalid("kernel.parameter", "must be positive");
    ConvKernel J = make_standard_kernel(kind, R, param, grid);
    if (cfg.get_bool("kernel.normalize", false)) J = normalized(J);
    return J;
}

inline Setup setup_from(const Config& cfg, const RunContext& ctx, bool need_kernel = true) {
    Setup s;
    s.name = cfg.get_string("name", std::filesystem::path(cfg.file()).stem().string());
    const long cfg_seed = cfg.get_long("seed", 1);
    s.seed = ctx.seed ? *ctx.seed : static_cast<std::uint64_t>(cfg_seed);
    s.grid = as_config_error(cfg, [&] { return grid_from(cfg); });
    if (need_kernel) {
        s.J = as_config_error(cfg, [&] { return kernel_from(cfg, s.grid); });
        const bool box = s.J->shape && s.J->shape->kind == KernelKind::box;
        const double def = box ? s.J->support_radius : 0.5 * s.J->support_radius;
        s.R_test = cfg.get_double("kernel.R_test", def);
        if (!(s.R_test > 0.0 && s.R_test <= s.J->support_radius))
            cfg.invalid("kernel.R_test", "must lie in (0, support_radius]");
    }
    return s;
}

inline Field initial_from(const Config& cfg, const GridSpec& grid, std::uint64_t seed) {
    const std::string kind = cfg.get_string("initial.kind", "gaussian");
    const double amp = cfg.get_double("initial.amplitude", 1.0);
    std::vector<double> center = cfg.get_doubles("initial.center", std::vector<double>(grid.dim(), 0.0));
    if (static_cast<int>(center.size()) != grid.dim()) cfg.invalid("initial.center", "needs one value per axis");
    auto dist2 = [&](const Point& x) {
        double r2 = 0.0;
        for (int a = 0; a < grid.dim(); ++a) r2 += (x[a] - center[a]) * (x[a] - center[a]);
        return r2;
    };
    if (kind == "gaussian") {
        const double w = cfg.get_double("initial.width", 1.0);
        if (!(w > 0.0)) cfg.invalid("initial.width", "must be positive");
        return Field::sample(grid, [&](const Point& x) { return amp * std::exp(-dist2(x) / (2.0 * w * w)); });
    }
    if (kind == "bump") {
        const double r = cfg.get_double("initial.width", 1.0);
        if (!(r > 0.0)) cfg.invalid("initial.width", "must be positive");
        return Field::sample(grid, [&](const Point& x) {
            const double s2 = dist2(x) / (r * r);
            return s2 < 1.0 ? amp * std::exp(1.0 - 1.0 / (1.0 - s2)) : 0.0;
        });
    }
    if (kind == "indicator_sum") {
        FieldGenerator gen;
        gen.kind = FieldFamily::indicator_sum;
        gen.components_min = gen.components_max = static_cast<int>(cfg.get_long("initial.count", 3));
        gen.width_min = gen.width_max = cfg.get_double("initial.width", 1.0);
        gen.amplitude_min = gen.amplitude_max = amp;
        gen.margin = cfg.get_double("initial.margin", 0.25 * grid.half_width());
        gen.seed = seed;
        return as_config_error(cfg, [&] { return gen.generate(grid, 0); });
    }
    if (kind == "file") {
        const std::string path = cfg.get_string("initial.path");
        Field u = as_config_error(cfg, [&] { return load_snapshot(path); });
        if (!(u.grid() == grid)) cfg.invalid("initial.path", "snapshot grid differs from the configured grid");
        return u;
    }
    cfg.invalid("initial.kind", "must be gaussian, bump, indicator_sum or file");
}

inline RunOptions options_from(const Config& cfg, const GridSpec& grid) {
    RunOptions o;
    o.horizon = cfg.get_double("horizon", 1.0);
    o.sample_dt = cfg.get_double("sample_dt", 0.1);
    o.p_list = cfg.get_doubles("p_list", {2.0});
    o.k_list = cfg.get_doubles("k_list", {});
    o.boundary_margin = cfg.get_double("boundary_margin", 0.25 * grid.half_width());
    o.dt = cfg.get_double("dt", 0.0);
    if (!(o.horizon >= 0.0)) cfg.invalid("horizon", "must be >= 0");
    if (!(o.sample_dt > 0.0)) cfg.invalid("sample_dt", "must be positive");
    for (double p : o.p_list)
        if (!(p >= 2.0)) cfg.invalid("p_list", "entries must be >= 2");
    for (double k : o.k_list)
        if (!(k >= 0.0)) cfg.invalid("k_list", "entries must be >= 0");
    if (!(o.boundary_margin > 0.0 && o.boundary_margin < grid.half_width()))
        cfg.invalid("boundary_margin", "must lie in (0, L)");
    return o;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), ErrorKind::io, "cannot write " + path.string());
    os << text;
    require(static_cast<bool>(os), ErrorKind::io, "write failed for " + path.string());
}

inline std::string artifact(RunSummary& summary, const RunContext& ctx, const std::string& file,
                            const std::string& text) {
    std::filesystem::create_directories(ctx.out_dir);
    write_text(std::filesystem::path(ctx.out_dir) / file, text);
    summary.artifacts.push_back(file);
    return file;
}

inline std::string csv_text(const TimeSeries& s) {
    std::ostringstream os;
    s.write_csv(os);
    return os.str();
}

/// Every row of value lies at or below bound; returns {passed, min bound/value, first failing row}.
inline CheckResult dominated(const std::string& name, const TimeSeries& s, const std::string& value,
                             const std::string& bound) {
    const auto& v = s.column(value);
    const auto& b = s.column(bound);
    CheckResult c{name, true};
    double worst = INFINITY;
    long first = -1;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] > 0.0) worst = std::min(worst, b[i] / v[i]);
        if (!(v[i] <= b[i]) && first < 0) first = static_cast<long>(i);
    }
    c.passed = first < 0 && !v.empty();
    c.detail["rows"] = v.size();
    c.detail["min_bound_over_value"] = json_number(worst);
    c.detail["first_failing_row"] = first;
    return c;
}

} // namespace detail

inline RunSummary run_simulate(const Config& cfg, const RunContext& ctx) {
    const auto s = detail::setup_from(cfg, ctx);
    const Field u0 = detail::initial_from(cfg, s.grid, s.seed);
    RunOptions opts = detail::options_from(cfg, s.grid);
    const Equation eq = detail::as_config_error(cfg, [&] { return equation_from_string(cfg.get_string("equation", "convolution")); });
    if (eq == Equation::dispersal) cfg.invalid("equation", "dispersal runs use the dispersal subcommand");
    const std::string source_kind = cfg.get_string("source.kind", "none");
    if (source_kind == "cubic") {
        const double c = cfg.get_double("source.coefficient", 1.0);
        if (!(c >= 0.0)) cfg.invalid("source.coefficient", "must be >= 0");
        opts.source = SourceSpec::absorption(c, 3.0);
        if (eq != Equation::general) cfg.invalid("source.kind", "sources need equation = general");
    } else if (source_kind != "none") {
        cfg.invalid("source.kind", "must be none or cubic");
    }
    const bool check_env = cfg.get_bool("check.envelope", true);
    const bool check_slope = cfg.get_bool("check.slope", false);
    const std::string slope_col = cfg.get_string("slope.column", "lp2");
    const double slope_max = cfg.get_double("slope.max", -0.4);
    const bool check_h = cfg.get_bool("check.h_theorem", false);
    const double h_tol = cfg.get_double("h_theorem.tol", 1e-4);
    const bool check_mass = cfg.get_bool("check.mass", !opts.source.has_value());
    const double mass_tol = cfg.get_double("mass.tol", 1e-10);
    cfg.reject_unused();

    RunSummary summary{s.name, "simulate"};
    const KernelBounds b = verify_hypothesis_J(*s.J, s.R_test);
    const ExperimentKernel kernel = *s.J;
    TimeSeries series = run_experiment(eq, kernel, u0, opts);
    const int N = s.grid.dim();
    const double n1 = lp_norm(u0, 1.0);
    Json envs = Json::object();
    for (double p : opts.p_list) {
        const ConstantLedger c = constants_for(N, p, 0.0);
        const DecayEnvelope e = lp_envelope_from_power(n1, lp_norm_pow(u0, p), b, c);
        series.attach("env_p" + param_label(p), [&](double t) { return e(t); });
        envs["p" + param_label(p)] = to_json(e);
    }
    const Spectrum s0 = forward(u0);
    for (double k : opts.k_list) {
        const ConstantLedger c = constants_for(N, 2.0, k);
        const DecayEnvelope e = dk_envelope_from_energy(n1, derivative_energy(s0, k), b, c, k);
        series.attach("env_dk" + param_label(k), [&](double t) { return e(t); });
        envs["dk" + param_label(k)] = to_json(e);
    }
    summary.info["equation"] = to_string(eq);
    summary.info["kernel"] = s.J->shape ? to_string(s.J->shape->kind) : "profile";
    summary.info["r"] = b.r;
    summary.info["R"] = b.R;
    summary.info["samples"] = series.size();
    summary.info["truncated"] = series.truncated;
    summary.info["truncation_time"] = series.truncation_time;
    summary.info["envelopes"] = envs;

    if (check_env) {
        for (double p : opts.p_list)
            summary.checks.push_back(detail::dominated("envelope_p" + param_label(p), series, detail::lp_column(p),
                                                       "env_p" + param_label(p)));
        for (double k : opts.k_list)
            summary.checks.push_back(detail::dominated("envelope_dk" + param_label(k), series, "dk" + param_label(k),
                                                       "env_dk" + param_label(k)));
    }
    if (check_slope) {
        CheckResult c{"slope_" + slope_col};
        const double slope = loglog_slope_last_decade(series.times, series.column(slope_col));
        c.passed = slope <= slope_max;
        c.detail["slope"] = slope;
        c.detail["max"] = slope_max;
        summary.checks.push_back(c);
    }
    if (check_h)
        for (double p : opts.p_list) {
            CheckResult c{"h_theorem_p" + param_label(p)};
            const double r = h_theorem_residual(series, p);
            c.passed = r <= h_tol;
            c.detail["residual"] = r;
            c.detail["tol"] = h_tol;
            summary.checks.push_back(c);
        }
    if (check_mass) {
        CheckResult c{"mass_conservation"};
        const auto& m = series.column("mass");
        double drift = 0.0;
        for (double v : m) drift = std::max(drift, std::abs(v - m.front()));
        const double rel = drift / std::max(std::abs(m.front()), 1e-300);
        c.passed = rel <= mass_tol * std::max(1.0, series.times.back());
        c.detail["relative_drift"] = rel;
        summary.checks.push_back(c);
    }
    if (opts.source) {
        RunOptions free = opts;
        free.source.reset();
        const TimeSeries ref = run_experiment(eq, kernel, u0, free);
        const auto& a = series.column("lp2");
        const auto& r = ref.column("lp2");
        CheckResult c{"source_below_free"};
        long first = -1;
        const std::size_t rows = std::min(a.size(), r.size());
        for (std::size_t i = 0; i < rows; ++i)
            if (!(a[i] <= r[i]) && first < 0) first = static_cast<long>(i);
        c.passed = first < 0;
        c.detail["rows"] = rows;
        c.detail["first_failing_row"] = first;
        summary.checks.push_back(c);
        auto& col = series.add_column("lp2_free");
        for (std::size_t i = 0; i < series.size(); ++i) col.push_back(i < r.size() ? r[i] : NAN);
    }
    detail::artifact(summary, ctx, s.name + ".csv", detail::csv_text(series));
    return summary;
}

inline RunSummary run_verify(const Config& cfg, const RunContext& ctx) {
    const auto s = detail::setup_from(cfg, ctx);
    const auto checks = cfg.get_strings("verify.checks", {"main"});
    const auto families = cfg.get_strings("verify.families", {"gaussian_mixture"});
    const long trials = cfg.get_long("verify.trials", 1000);
    const std::vector<double> p_list = cfg.get_doubles("p_list", {2.0});
    const std::vector<double> k_list = cfg.get_doubles("k_list", {0.0});
    const std::string combination = cfg.get_string("verify.combination", "min");
    const long refine = cfg.get_long("verify.refine_steps", 8);
    if (trials <= 0) cfg.invalid("verify.trials", "must be positive");
    if (combination != "min" && combination != "max") cfg.invalid("verify.combination", "must be min or max");
    std::vector<FieldFamily> fams;
    for (const auto& f : families)
        fams.push_back(detail::as_config_error(cfg, [&] { return field_family_from_string(f); }));
    for (const auto& c : checks)
        if (c != "main" && c != "l2" && c != "dk" && c != "gradient" && c != "interpolation" && c != "best_constant")
            cfg.invalid("verify.checks", "unknown check '" + c + "'");
    cfg.reject_unused();

    RunSummary summary{s.name, "verify-inequality"};
    const KernelBounds b = verify_hypothesis_J(*s.J, s.R_test);
    const int N = s.grid.dim();
    auto ledger = [&](double p, double k) {
        const ConstantLedger c = constants_for(N, p, k);
        return combination == "max" ? with_max_combination(c) : c;
    };
    summary.info["combination"] = combination;
    summary.info["r"] = b.r;
    summary.info["R"] = b.R;
    Json reports = Json::array();
    auto record = [&](const std::string& name, const InequalityReport& r) {
        CheckResult c{name, r.passed(), to_json(r)};
        summary.checks.push_back(c);
        reports.push_back(to_json(r));
    };
    for (FieldFamily fam : fams) {
        FieldGenerator gen;
        gen.kind = fam;
        gen.seed = s.seed;
        const std::string tag = std::string("_") + to_string(fam);
        for (const auto& chk : checks) {
            if (chk == "main")
                for (double p : p_list)
                    record("main_p" + param_label(p) + tag,
                           check_main_inequality(*s.J, b, ledger(p, 0.0), p, gen, trials, ctx.threads));
            if (chk == "l2")
                record("l2" + tag, check_l2_inequality(*s.J, b, ledger(2.0, 0.0), gen, trials, ctx.threads));
            if (chk == "dk")
                for (double k : k_list)
                    record("dk" + param_label(k) + tag,
                           check_dk_inequality(*s.J, b, ledger(2.0, k), k, gen, trials, ctx.threads));
            if (chk == "gradient")
                record("gradient" + tag,
                       check_gradient_inequality(*s.J, b, ledger(2.0, 1.0), gen, trials, ctx.threads));
            if (chk == "interpolation")
                for (double p : p_list)
                    record("interpolation_p" + param_label(p) + tag,
                           check_interpolation_chain(gen, s.grid, trials, p, ctx.threads));
            if (chk == "best_constant")
                for (double p : p_list) {
                    const double best = estimate_best_constant(*s.J, b, p, gen, std::max(trials, 100L),
                                                               static_cast<int>(refine), ctx.threads);
                    const ConstantLedger c = ledger(p, 0.0);
                    CheckResult r{"best_constant_p" + param_label(p) + tag, best >= c.C_main};
                    r.detail["estimate"] = best;
                    r.detail["C_main"] = c.C_main;
                    r.detail["gap"] = best / c.C_main;
                    summary.checks.push_back(r);
                }
        }
    }
    Json doc;
    doc["reports"] = reports;
    detail::artifact(summary, ctx, s.name + "_reports.json", doc.dump(2) + "\n");
    return summary;
}

inline RunSummary run_envelope(const Config& cfg, const RunContext& ctx) {
    const auto s = detail::setup_from(cfg, ctx);
    const Field u0 = detail::initial_from(cfg, s.grid, s.seed);
    RunOptions opts = detail::options_from(cfg, s.grid);
    const std::vector<double> eps_list = cfg.get_doubles("envelope.epsilons", {1.0, 0.5, 0.25, 0.125});
    const double heat_time = cfg.get_double("envelope.heat_time", 1.0);
    const double heat_tol = cfg.get_double("envelope.heat_tol", 0.05);
    for (double e : eps_list)
        if (!(e > 0.0 && e <= 1.0)) cfg.invalid("envelope.epsilons", "entries must lie in (0, 1]");
    if (!s.J->shape) cfg.invalid("kernel.kind", "rescaling needs an analytic kernel");
    cfg.reject_unused();

    RunSummary summary{s.name, "envelope"};
    const KernelBounds b = verify_hypothesis_J(*s.J, s.R_test);
    const int N = s.grid.dim();
    const double CJ = heat_normalization(*s.J);
    const double n1 = lp_norm(u0, 1.0);
    summary.info["C_of_J"] = CJ;
    Json per_eps = Json::array();
    for (double eps : eps_list) {
        const RescaledKernel rk = rescale_kernel(*s.J, eps);
        TimeSeries series = run_convolution(rk.kernel, u0, opts);
        Json info;
        info["epsilon"] = eps;
        for (double p : opts.p_list) {
            const ConstantLedger c = constants_for(N, p, 0.0, CJ);
            const double np = lp_norm(u0, p);
            const DecayEnvelope e = rescaled_envelope_from_power(eps, n1, lp_norm_pow(u0, p), b, c);
            const double eps0 = rescaled_epsilon0(n1, np, b, c);
            series.attach("env_p" + param_label(p), [&](double t) { return e(t); });
            const double C_heat = default_heat_constant(b, c);
            series.attach("heat_p" + param_label(p),
                          [&](double t) { return heat_reference_decay(n1, np, C_heat, N, p, t); });
            summary.checks.push_back(detail::dominated("envelope_eps" + param_label(eps) + "_p" + param_label(p),
                                                       series, detail::lp_column(p), "env_p" + param_label(p)));
            CheckResult t0c{"t0_vanishes_eps" + param_label(eps) + "_p" + param_label(p)};
            t0c.passed = !(eps < eps0) || e.t0 == 0.0;
            t0c.detail["t0"] = e.t0;
            t0c.detail["epsilon0"] = eps0;
            summary.checks.push_back(t0c);
            Json ej = to_json(e);
            ej["epsilon0"] = eps0;
            info["p" + param_label(p)] = ej;
        }
        per_eps.push_back(info);
        detail::artifact(summary, ctx, s.name + "_eps" + param_label(eps) + ".csv", detail::csv_text(series));
    }
    summary.info["runs"] = per_eps;

    const double eps_min = *std::min_element(eps_list.begin(), eps_list.end());
    const RescaledKernel rk = rescale_kernel(*s.J, eps_min);
    const Field u_eps = step_spectral_exact(rk.kernel, u0, heat_time);
    const Field u_heat = inverse(forward(u0).multiplied(
        [&](std::size_t i) { return Complex(std::exp(-heat_time * frequency_norm_sq(s.grid, i)), 0.0); }));
    const double err = lp_norm(u_eps - u_heat, 2.0) / lp_norm(u_heat, 2.0);
    CheckResult hc{"heat_limit_eps" + param_label(eps_min)};
    hc.passed = err <= heat_tol;
    hc.detail["relative_l2_error"] = err;
    hc.detail["time"] = heat_time;
    hc.detail["tol"] = heat_tol;
    summary.checks.push_back(hc);
    return summary;
}

inline RunSummary run_dispersal(const Config& cfg, const RunContext& ctx) {
    const auto s = detail::setup_from(cfg, ctx);
    if (s.grid.dim() != 1) cfg.invalid("grid.dim", "dispersal runs are one-dimensional");
    const Field u0 = detail::initial_from(cfg, s.grid, s.seed);
    const double amp = cfg.get_double("dispersal.amplitude", 0.3);
    const double tol = cfg.get_double("dispersal.tol", 1e-10);
    const double residual_tol = cfg.get_double("dispersal.residual_tol", 1e-8);
    const double control = cfg.get_double("dispersal.control_m_factor", 0.5);
    const double p = cfg.get_double("p", 2.0);
    const double horizon = cfg.get_double("horizon", 50.0);
    const double sample_dt = cfg.get_double("sample_dt", 0.5);
    if (!(std::abs(amp) < 1.0)) cfg.invalid("dispersal.amplitude", "must satisfy |a| < 1");
    if (!(p >= 2.0)) cfg.invalid("p", "must be >= 2");
    if (!(control > 0.0 && control < 1.0)) cfg.invalid("dispersal.control_m_factor", "must lie in (0, 1)");
    if (!(horizon >= 0.0 && sample_dt > 0.0)) cfg.invalid("sample_dt", "horizon must be >= 0 and sample_dt > 0");
    cfg.reject_unused();

    RunSummary summary{s.name, "dispersal"};
    const Field g = sinusoidal_dispersal_profile(s.grid, amp);
    DispersalRun run = run_dispersal_decay(*s.J, g, u0, p, horizon, sample_dt, tol);
    const auto& eq = run.equilibrium;
    const double R = 0.999 * g.min_value() * s.J->support_radius;
    const KernelBounds b = verify_hypothesis_K(run.kernel, R);
    const ConstantLedger c = constants_for(1, p, 0.0);
    const GeneralDecayReport rep = check_general_decay(run.kernel, eq.u_inf, eq.m, b, c, run.series);
    const GeneralDecayReport ctl = check_general_decay(run.kernel, eq.u_inf, eq.m * control, b, c, run.series);

    Json ej;
    ej["residual"] = eq.residual;
    ej["m"] = eq.m;
    ej["iterations"] = eq.iterations;
    ej["raw_column_defect"] = run.kernel.raw_column_defect;
    ej["min_u_inf"] = eq.u_inf.min_value();
    ej["max_u_inf"] = eq.u_inf.max_value();
    summary.info["equilibrium"] = ej;
    summary.info["r"] = b.r;
    summary.info["R"] = b.R;
    summary.info["envelope"] = to_json(rep.envelope_used);
    summary.info["truncated"] = run.series.truncated;
    summary.info["samples"] = run.series.size();

    auto add = [&](const std::string& name, bool ok, Json d) { summary.checks.push_back({name, ok, std::move(d)}); };
    add("equilibrium_residual", eq.residual <= residual_tol, Json{{"residual", eq.residual}, {"tol", residual_tol}});
    add("x_nonincreasing", run.x_monotone, Json::object());
    add("kernel_domination", rep.kernel_domination, Json{{"min_ratio", json_number(rep.kernel_domination_ratio)}});
    add("entropy_dissipation_bound", rep.dissipation,
        Json{{"min_ratio", json_number(rep.dissipation_min_ratio)}, {"first_fail", rep.dissipation_fail_index}});
    add("x_envelope", rep.envelope,
        Json{{"min_ratio", json_number(rep.envelope_min_ratio)}, {"first_fail", rep.envelope_fail_index}});
    add("lp_below_m_pow_X", rep.lp_bound && run.lp_bound, Json{{"first_fail", rep.lp_fail_index}});
    add("control_small_m_detected", !ctl.passed(),
        Json{{"factor", control}, {"kernel_domination_ratio", json_number(ctl.kernel_domination_ratio)}});

    // Every catalog entropy is a Lyapunov functional.
    Json ent = Json::object();
    bool all_monotone = true;
    for (const EntropySpec& spec : {EntropySpec::square(), EntropySpec::power(p), EntropySpec::quartic()}) {
        std::vector<double> H;
        for (const Field& u : run.series.snapshots) {
            std::vector<double> f(u.size());
            for (std::size_t i = 0; i < f.size(); ++i) f[i] = u[i] / eq.u_inf[i];
            H.push_back(relative_entropy(eq.u_inf, Field(u.grid(), std::move(f)), spec));
        }
        bool mono = true;
        for (std::size_t i = 1; i < H.size(); ++i)
            if (H[i] > H[i - 1]) mono = false;
        ent[spec.label] = mono;
        all_monotone = all_monotone && mono;
    }
    add("entropies_nonincreasing", all_monotone, ent);
    const auto& mass_col = run.series.column("mass");
    double drift = 0.0;
    for (double v : mass_col) drift = std::max(drift, std::abs(v - mass_col.front()));
    add("mass_conservation", drift <= 1e-10 * std::abs(mass_col.front()),
        Json{{"relative_drift", drift / std::abs(mass_col.front())}});

    std::ostringstream snap;
    write_snapshot(snap, eq.u_inf);
    detail::artifact(summary, ctx, s.name + "_u_inf.txt", snap.str());
    detail::artifact(summary, ctx, s.name + ".csv", detail::csv_text(run.series));
    return summary;
}

inline RunSummary run_constants(const Config& cfg, const RunContext& ctx) {
    const std::string name = cfg.get_string("name", std::filesystem::path(cfg.file()).stem().string());
    const long dim = cfg.get_long("grid.dim", 1);
    const auto p_list = cfg.get_doubles("p_list", {2.0});
    const auto k_list = cfg.get_doubles("k_list", {0.0});
    if (dim < 1 || dim > 3) cfg.invalid("grid.dim", "must be 1, 2 or 3");
    cfg.reject_unused();
    RunSummary summary{name, "constants"};
    Json ledgers = Json::array();
    bool ok = true;
    for (double p : p_list)
        for (double k : k_list) {
            const ConstantLedger c = constants_for(static_cast<int>(dim), p, k);
            for (double v : {c.omega_N, c.C1, c.C2, c.C3, c.C4, c.c_p, c.mu_k, c.C_cor, c.C_main, c.gamma_p,
                             c.gamma_k, c.C_of_J, c.C_deriv})
                ok = ok && std::isfinite(v) && v > 0.0;
            ledgers.push_back(to_json(c));
        }
    summary.checks.push_back({"ledger_positive_finite", ok, Json::object()});
    Json doc;
    doc["ledgers"] = ledgers;
    detail::artifact(summary, ctx, name + "_ledger.json", doc.dump(2) + "\n");
    summary.info["ledgers"] = ledgers;
    return summary;
}

/// Runs one config for the given subcommand and writes <name>.json.
inline RunSummary run_config(const Config& cfg, const std::string& subcommand, const RunContext& ctx) {
    const std::string mode = cfg.get_string("mode", subcommand);
    if (mode != subcommand)
        throw ConfigError(cfg.file(), cfg.line_of("mode"),
                          "config is for '" + mode + "', not '" + subcommand + "'");
    RunSummary summary;
    if (mode == "simulate")
        summary = run_simulate(cfg, ctx);
    else if (mode == "verify-inequality")
        summary = run_verify(cfg, ctx);
    else if (mode == "envelope")
        summary = run_envelope(cfg, ctx);
    else if (mode == "dispersal")
        summary = run_dispersal(cfg, ctx);
    else if (mode == "constants")
        summary = run_constants(cfg, ctx);
    else
        throw ConfigError(cfg.file(), cfg.line_of("mode"), "unknown mode '" + mode + "'");
    Json j = summary.to_json();
    j["artifacts"].push_back(summary.name + ".json");
    detail::write_text(std::filesystem::path(ctx.out_dir) / (summary.name + ".json"), j.dump(2) + "\n");
    summary.artifacts.push_back(summary.name + ".json");
    return summary;
}

/// Configs (*.conf) of a catalog directory in name order.
inline std::vector<std::filesystem::path> catalog_entries(const std::filesystem::path& dir) {
    require(std::filesystem::is_directory(dir), ErrorKind::io, "catalog directory not found: " + dir.string());
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".conf") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace nldecay
