#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "nldecay/dissipation.hpp"
#include "nldecay/error.hpp"
#include "nldecay/grid.hpp"
#include "nldecay/kernels.hpp"
#include "nldecay/spectral.hpp"

namespace nldecay {

/// Sampled history of a run. Columns are named and kept in insertion order;
/// "lp{p}" holds ||u||_p^p, "dk{k}" holds ||D^k u||_2^2, "diss_*" the matching
/// rate -d/dt, "env_*" comparison envelopes.
struct TimeSeries {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::vector<double> p_list;
    std::vector<double> k_list;
    /// Set when the run stopped because boundary mass crossed the threshold.
    bool truncated = false;
    double truncation_time = 0.0;
    /// Norms of the initial datum, needed by the envelopes.
    double norm1_0 = 0.0;
    /// Sampled fields, kept only when RunOptions::keep_snapshots is set.
    std::vector<Field> snapshots;

    bool has(const std::string& name) const {
        return std::find(names.begin(), names.end(), name) != names.end();
    }

    std::vector<double>& column(const std::string& name) {
        const auto it = std::find(names.begin(), names.end(), name);
        require(it != names.end(), ErrorKind::invalid_parameter, "series has no column '" + name + "'");
        return columns[static_cast<std::size_t>(it - names.begin())];
    }

    const std::vector<double>& column(const std::string& name) const {
        return const_cast<TimeSeries*>(this)->column(name);
    }

    std::vector<double>& add_column(const std::string& name) {
        require(!has(name), ErrorKind::invalid_parameter, "duplicate column '" + name + "'");
        names.push_back(name);
        columns.emplace_back();
        columns.back().reserve(times.capacity());
        return columns.back();
    }

    /// Fills a new column by evaluating fn at every recorded time.
    template <class Fn>
    void attach(const std::string& name, Fn&& fn) {
        auto& c = add_column(name);
        for (double t : times) c.push_back(fn(t));
    }

    std::size_t size() const noexcept { return times.size(); }

    void write_csv(std::ostream& os) const {
        os << 't';
        for (const auto& n : names) os << ',' << n;
        os << '\n';
        for (std::size_t r = 0; r < times.size(); ++r) {
            os << format_double(times[r]);
            for (const auto& c : columns) os << ',' << format_double(c[r]);
            os << '\n';
        }
    }
};

/// Nonlinear source f with the sign condition f(s) s <= 0 checked on samples.
struct SourceSpec {
    std::function<double(double)> f;
    bool sign_checked = false;
    std::string label;

    static SourceSpec checked(std::function<double(double)> fn, std::string name) {
        std::mt19937_64 rng(0xf5);
        std::uniform_real_distribution<double> dist(-10.0, 10.0);
        for (int i = 0; i < 1000; ++i) {
            const double s = i < 2 ? (i == 0 ? -10.0 : 10.0) : dist(rng);
            const double v = fn(s);
            require(std::isfinite(v), ErrorKind::invalid_parameter, "source '" + name + "' is not finite");
            require(v * s <= 0.0, ErrorKind::hypothesis_violated,
                    "source '" + name + "' violates f(s) s <= 0 at s = " + format_double(s));
        }
        return SourceSpec{std::move(fn), true, std::move(name)};
    }

    /// f(s) = -c |s|^{q-1} s, q > 1.
    static SourceSpec absorption(double c, double q) {
        require(c >= 0.0 && q > 1.0, ErrorKind::invalid_parameter, "absorption needs c >= 0 and q > 1");
        return checked([c, q](double s) { return -c * phi_power(s, q); },
                       "-" + param_label(c) + "|s|^" + param_label(q - 1.0) + "s");
    }
};

/// Exact solution of du/dt = J * u - (integral J) u over time dt on the torus.
inline Field step_spectral_exact(const KernelSymbol& symbol, const Field& u, double dt) {
    require(dt > 0.0, ErrorKind::invalid_parameter, "dt must be positive");
    require(symbol.grid == u.grid(), ErrorKind::invalid_parameter, "kernel and field grids differ");
    return inverse(forward(u).multiplied(
        [&](std::size_t i) { return Complex(i == 0 ? 1.0 : std::exp(dt * (symbol[i] - symbol.mass)), 0.0); }));
}

inline Field step_spectral_exact(const ConvKernel& J, const Field& u, double dt) {
    require(J.is_even, ErrorKind::unsupported, "the spectral propagator needs an even kernel");
    return step_spectral_exact(kernel_symbol(J), u, dt);
}

/// Largest dt accepted by step_rk4_general.
inline double rk4_stability_limit(const GeneralKernel& K) {
    const double scale = std::max(K.sigma().max_abs(), K.integral_bound());
    require(scale > 0.0, ErrorKind::invalid_parameter, "kernel has no rate scale");
    return 1.0 / (2.0 * scale);
}

namespace detail {

/// h^N K u - sigma u + f(u).
inline std::vector<double> general_rhs(const GeneralKernel& K, std::span<const double> u, const SourceSpec* source) {
    auto out = K.apply(u);
    const auto& sigma = K.sigma();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] -= sigma[i] * u[i];
        if (source) out[i] += source->f(u[i]);
    }
    return out;
}

/// Largest secant slope of f on [-M, M]; the sign condition keeps |u| <= max |u0|.
inline double source_slope_bound(const SourceSpec& src, double M) {
    if (M <= 0.0) return 0.0;
    constexpr int n = 512;
    double best = 0.0, prev = src.f(-M);
    for (int i = 1; i <= n; ++i) {
        const double s = -M + 2.0 * M * i / n, v = src.f(s);
        best = std::max(best, std::abs(v - prev) / (2.0 * M / n));
        prev = v;
    }
    return best;
}

} // namespace detail

inline Field step_rk4_general(const GeneralKernel& K, const Field& u, double dt,
                              const SourceSpec* source = nullptr) {
    require(K.grid() == u.grid(), ErrorKind::invalid_parameter, "kernel and field grids differ");
    require(dt > 0.0, ErrorKind::invalid_parameter, "dt must be positive");
    require(dt <= rk4_stability_limit(K) * (1.0 + 1e-12), ErrorKind::step_rejected,
            "dt exceeds the stability limit 1/(2 max(|sigma|, C_K))");
    if (source) require(source->sign_checked, ErrorKind::invalid_parameter, "source has not been sign-checked");
    const std::size_t M = u.size();
    std::vector<double> y(u.values().begin(), u.values().end()), tmp(M);
    const auto k1 = detail::general_rhs(K, y, source);
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    const auto k2 = detail::general_rhs(K, tmp, source);
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    const auto k3 = detail::general_rhs(K, tmp, source);
    for (std::size_t i = 0; i < M; ++i) tmp[i] = y[i] + dt * k3[i];
    const auto k4 = detail::general_rhs(K, tmp, source);
    for (std::size_t i = 0; i < M; ++i) y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return Field(u.grid(), std::move(y));
}

enum class Equation { convolution, general, dispersal };

inline const char* to_string(Equation e) {
    switch (e) {
    case Equation::convolution: return "convolution";
    case Equation::general: return "general";
    case Equation::dispersal: return "dispersal";
    }
    return "unknown";
}

inline Equation equation_from_string(const std::string& s) {
    if (s == "convolution") return Equation::convolution;
    if (s == "general") return Equation::general;
    if (s == "dispersal") return Equation::dispersal;
    fail(ErrorKind::invalid_parameter, "unknown equation '" + s + "'");
}

struct RunOptions {
    double horizon = 1.0;
    double sample_dt = 0.1;
    std::vector<double> p_list{2.0};
    std::vector<double> k_list{};
    /// Width of the shell used for boundary_mass; 0 picks L/4.
    double boundary_margin = 0.0;
    /// Early halt once boundary_mass > threshold * |mass(u0)|.
    double truncation_threshold = 1e-6;
    bool halt_on_truncation = true;
    /// RK4 step for general kernels; 0 picks the stability limit.
    double dt = 0.0;
    std::optional<SourceSpec> source;
    /// Equilibrium for dispersal runs; adds X{p} and diss_X{p} columns.
    std::optional<Field> u_inf;
    bool keep_snapshots = false;
};

namespace detail {

inline std::size_t sample_count(const RunOptions& o) {
    require(o.horizon >= 0.0 && o.sample_dt > 0.0, ErrorKind::invalid_parameter,
            "horizon must be >= 0 and sample_dt > 0");
    return static_cast<std::size_t>(std::floor(o.horizon / o.sample_dt + 1e-9)) + 1;
}

/// -p h^N sum phi(v_i) rate_i: minus the time derivative of h^N sum |v|^p.
inline double lp_rate(std::span<const double> v, std::span<const double> rate, double p, double hN) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += phi_power(v[i], p - 1.0) * rate[i];
    return -p * hN * s;
}

struct Recorder {
    TimeSeries& series;
    const RunOptions& opts;
    double margin;
    double threshold;

    void setup() {
        series.p_list = opts.p_list;
        series.k_list = opts.k_list;
        series.add_column("mass");
        series.add_column("boundary_mass");
        series.add_column("lp2");
        for (double p : opts.p_list)
            if (p != 2.0) series.add_column("lp" + param_label(p));
        for (double k : opts.k_list) series.add_column("dk" + param_label(k));
        for (double p : opts.p_list) series.add_column("diss_p" + param_label(p));
        for (double k : opts.k_list) series.add_column("diss_dk" + param_label(k));
        if (opts.u_inf)
            for (double p : opts.p_list) {
                series.add_column("X" + param_label(p));
                series.add_column("diss_X" + param_label(p));
            }
    }

    /// Returns false (and records nothing) once the truncation threshold is crossed.
    template <class RateFn, class DkRateFn>
    bool record(double t, const Field& u, RateFn&& rate_of, DkRateFn&& dk_rate_of) {
        const double bm = boundary_mass(u, margin);
        if (opts.halt_on_truncation && bm > threshold) {
            series.truncated = true;
            series.truncation_time = t;
            return false;
        }
        series.times.push_back(t);
        if (opts.keep_snapshots) series.snapshots.push_back(u);
        series.column("mass").push_back(mass(u));
        series.column("boundary_mass").push_back(bm);
        series.column("lp2").push_back(lp_norm_pow(u, 2.0));
        for (double p : opts.p_list)
            if (p != 2.0) series.column("lp" + param_label(p)).push_back(lp_norm_pow(u, p));
        if (!opts.k_list.empty()) {
            const Spectrum s = forward(u);
            for (double k : opts.k_list) series.column("dk" + param_label(k)).push_back(derivative_energy(s, k));
        }
        for (double p : opts.p_list) series.column("diss_p" + param_label(p)).push_back(rate_of(u, p));
        for (double k : opts.k_list) series.column("diss_dk" + param_label(k)).push_back(dk_rate_of(u, k));
        if (opts.u_inf) {
            const Field& ui = *opts.u_inf;
            const Field f = Field(u.grid(), [&] {
                std::vector<double> v(u.size());
                for (std::size_t i = 0; i < v.size(); ++i) v[i] = u[i] / ui[i];
                return v;
            }());
            for (double p : opts.p_list) {
                series.column("X" + param_label(p)).push_back(relative_entropy(ui, f, EntropySpec::power(p)));
                series.column("diss_X" + param_label(p)).push_back(rate_of(f, -p));
            }
        }
        return true;
    }
};

} // namespace detail

/// Convolution equation sampled with the exact propagator from u0 (no
/// accumulation across samples).
inline TimeSeries run_convolution(const ConvKernel& J, const Field& u0, const RunOptions& opts) {
    require(J.grid() == u0.grid(), ErrorKind::invalid_parameter, "kernel and initial datum grids differ");
    require(!opts.u_inf.has_value(), ErrorKind::unsupported, "relative entropy columns need a general kernel");
    const KernelSymbol symbol = kernel_symbol(J);
    const auto& g = u0.grid();
    TimeSeries series;
    series.norm1_0 = lp_norm(u0, 1.0);
    const double margin = opts.boundary_margin > 0.0 ? opts.boundary_margin : 0.25 * g.half_width();
    detail::Recorder rec{series, opts, margin, opts.truncation_threshold * std::abs(mass(u0))};
    rec.setup();
    const Spectrum s0 = forward(u0);
    auto rate = [&](const Field& u, double p) { return dissipation_fast(symbol, u, p); };
    auto dk_rate = [&](const Field& u, double k) { return dissipation_Dk(symbol, u, k); };
    const std::size_t count = detail::sample_count(opts);
    for (std::size_t j = 0; j < count; ++j) {
        const double t = static_cast<double>(j) * opts.sample_dt;
        const Field u = j == 0 ? u0 : inverse(s0.multiplied([&](std::size_t i) {
            return Complex(i == 0 ? 1.0 : std::exp(t * (symbol[i] - symbol.mass)), 0.0);
        }));
        if (!rec.record(t, u, rate, dk_rate)) break;
    }
    return series;
}

/// General-kernel equation (optionally with a source) integrated by RK4 with
/// a fixed number of substeps per sample.
inline TimeSeries run_general(const GeneralKernel& K, const Field& u0, const RunOptions& opts) {
    require(K.grid() == u0.grid(), ErrorKind::invalid_parameter, "kernel and initial datum grids differ");
    if (opts.u_inf)
        require(opts.u_inf->grid() == K.grid() && opts.u_inf->min_value() > 0.0, ErrorKind::invalid_parameter,
                "u_inf must be positive and live on the kernel grid");
    const auto& g = u0.grid();
    const SourceSpec* source = opts.source ? &*opts.source : nullptr;
    double dt_max = opts.dt > 0.0 ? opts.dt : rk4_stability_limit(K);
    if (source && opts.dt <= 0.0) {
        const double lip = detail::source_slope_bound(*source, u0.max_abs());
        if (lip > 0.0) dt_max = std::min(dt_max, 1.0 / (2.0 * lip));
    }
    const std::size_t substeps = static_cast<std::size_t>(std::ceil(opts.sample_dt / dt_max - 1e-12));
    const double dt = opts.sample_dt / static_cast<double>(std::max<std::size_t>(substeps, 1));

    TimeSeries series;
    series.norm1_0 = lp_norm(u0, 1.0);
    const double margin = opts.boundary_margin > 0.0 ? opts.boundary_margin : 0.25 * g.half_width();
    detail::Recorder rec{series, opts, margin, opts.truncation_threshold * std::abs(mass(u0))};
    rec.setup();
    const double hN = g.cell_volume();
    // For the relative-entropy columns rate_of receives f = u / u_inf and -p.
    Field current = u0;
    auto rate = [&](const Field& v, double p) {
        const auto r = detail::general_rhs(K, current.values(), source);
        if (p > 0.0) return detail::lp_rate(v.values(), r, p, hN);
        return detail::lp_rate(v.values(), r, -p, hN);
    };
    auto dk_rate = [&](const Field& v, double k) {
        // -d/dt ||D^k u||^2 = -2 <D^k u, D^k rhs>.
        const Field r(g, detail::general_rhs(K, v.values(), source));
        const Spectrum a = forward(v), b = forward(r);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double w = k == 0.0 ? 1.0 : std::pow(frequency_norm_sq(g, i), k);
            s += w * (std::conj(a[i]) * b[i]).real();
        }
        return -2.0 * s;
    };
    const std::size_t count = detail::sample_count(opts);
    for (std::size_t j = 0; j < count; ++j) {
        if (j > 0)
            for (std::size_t s = 0; s < std::max<std::size_t>(substeps, 1); ++s)
                current = step_rk4_general(K, current, dt, source);
        const double t = static_cast<double>(j) * opts.sample_dt;
        if (!rec.record(t, current, rate, dk_rate)) break;
    }
    return series;
}

using ExperimentKernel = std::variant<ConvKernel, GeneralKernel>;

inline TimeSeries run_experiment(Equation equation, const ExperimentKernel& kernel, const Field& u0,
                                 const RunOptions& opts) {
    switch (equation) {
    case Equation::convolution:
        require(std::holds_alternative<ConvKernel>(kernel), ErrorKind::invalid_parameter,
                "convolution runs need a convolution kernel");
        require(!opts.source.has_value(), ErrorKind::unsupported,
                "sources are integrated with the general-kernel stepper");
        return run_convolution(std::get<ConvKernel>(kernel), u0, opts);
    case Equation::general:
    case Equation::dispersal: {
        if (equation == Equation::dispersal)
            require(opts.u_inf.has_value(), ErrorKind::invalid_parameter, "dispersal runs need an equilibrium");
        if (const auto* J = std::get_if<ConvKernel>(&kernel)) return run_general(general_from_convolution(*J), u0, opts);
        return run_general(std::get<GeneralKernel>(kernel), u0, opts);
    }
    }
    fail(ErrorKind::invalid_parameter, "unknown equation");
}

/// max over interior samples of |centered d/dt value + rate|, divided by
/// max |rate|. value and rate name columns of the series.
inline double h_theorem_residual(const TimeSeries& series, const std::string& value, const std::string& rate) {
    const auto& t = series.times;
    require(t.size() >= 3, ErrorKind::insufficient_data, "need at least three samples");
    const auto& v = series.column(value);
    const auto& d = series.column(rate);
    const double dt = t[1] - t[0];
    for (std::size_t j = 1; j < t.size(); ++j)
        require(std::abs((t[j] - t[j - 1]) - dt) <= 1e-9 * dt, ErrorKind::invalid_parameter,
                "series is not uniformly sampled");
    double scale = 0.0;
    for (double x : d) scale = std::max(scale, std::abs(x));
    if (scale == 0.0) return 0.0;
    double worst = 0.0;
    for (std::size_t j = 1; j + 1 < t.size(); ++j) {
        const double derivative = (v[j + 1] - v[j - 1]) / (t[j + 1] - t[j - 1]);
        worst = std::max(worst, std::abs(derivative + d[j]));
    }
    return worst / scale;
}

/// Residual for d/dt ||u||_p^p = -diss_p.
inline double h_theorem_residual(const TimeSeries& series, double p) {
    return h_theorem_residual(series, "lp" + param_label(p), "diss_p" + param_label(p));
}

/// Residual for the relative entropy X_p of a dispersal run.
inline double h_theorem_residual_entropy(const TimeSeries& series, double p) {
    return h_theorem_residual(series, "X" + param_label(p), "diss_X" + param_label(p));
}

} // namespace nldecay
