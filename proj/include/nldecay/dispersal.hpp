#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nldecay/bounds.hpp"
#include "nldecay/dissipation.hpp"
#include "nldecay/error.hpp"
#include "nldecay/evolution.hpp"
#include "nldecay/grid.hpp"
#include "nldecay/kernels.hpp"

namespace nldecay {

struct EquilibriumResult {
    Field u_inf;
    /// sup |T u - u| / sup |u| at the returned iterate.
    double residual = 0.0;
    /// max(max u_inf, 1 / min u_inf).
    double m = 0.0;
    long iterations = 0;
};

/// g(x) = 1 + amplitude sin(pi x / L), the standard heterogeneous profile.
inline Field sinusoidal_dispersal_profile(const GridSpec& grid, double amplitude) {
    require(std::abs(amplitude) < 1.0, ErrorKind::invalid_parameter, "profile amplitude must satisfy |a| < 1");
    const double L = grid.half_width();
    return Field::sample(grid, [&](const Point& x) { return 1.0 + amplitude * std::sin(std::numbers::pi * x[0] / L); });
}

/// Power iteration u <- K u on the column-corrected dispersal kernel with
/// unit-mass renormalization after every sweep.
inline EquilibriumResult solve_equilibrium(const GeneralKernel& K, double tol, long max_iter) {
    require(tol > 0.0 && max_iter > 0, ErrorKind::invalid_parameter, "tol and max_iter must be positive");
    const auto& grid = K.grid();
    const double hN = grid.cell_volume();
    const double total = hN * static_cast<double>(grid.size());
    std::vector<double> u(grid.size(), 1.0 / total);
    double residual = INFINITY;
    long it = 0;
    while (it < max_iter) {
        ++it;
        auto next = K.apply(u);
        double m = 0.0;
        for (double v : next) m += v;
        m *= hN;
        require(m > 0.0, ErrorKind::positivity_lost, "iterate lost its mass");
        double diff = 0.0, sup = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            next[i] /= m;
            require(next[i] > 0.0, ErrorKind::positivity_lost, "iterate is not positive");
            diff = std::max(diff, std::abs(next[i] - u[i]));
            sup = std::max(sup, std::abs(next[i]));
        }
        u.swap(next);
        residual = diff / sup;
        if (residual <= tol) break;
    }
    if (residual > tol)
        fail(ErrorKind::no_convergence,
             "equilibrium iteration did not converge; last residual " + format_double(residual));
    Field ui(grid, std::move(u));
    // Report the defect of the returned iterate itself.
    const auto Tu = K.apply(ui.values());
    double diff = 0.0;
    for (std::size_t i = 0; i < Tu.size(); ++i) diff = std::max(diff, std::abs(Tu[i] - ui[i]));
    const double m = std::max(ui.max_value(), 1.0 / ui.min_value());
    return EquilibriumResult{ui, diff / ui.max_abs(), m, it};
}

/// g must satisfy 1/M <= g <= M.
inline EquilibriumResult solve_equilibrium(const ConvKernel& J, const Field& g, double tol = 1e-10,
                                           long max_iter = 100000, double M = 10.0) {
    require(J.grid().dim() == 1, ErrorKind::invalid_parameter, "dispersal equilibria are one-dimensional");
    require(g.min_value() > 0.0, ErrorKind::invalid_parameter, "dispersal distance g must be positive");
    require(g.min_value() >= 1.0 / M && g.max_value() <= M, ErrorKind::invalid_parameter,
            "g must satisfy 1/M <= g <= M");
    return solve_equilibrium(dispersal_kernel(J, g), tol, max_iter);
}

struct DispersalRun {
    GeneralKernel kernel;
    EquilibriumResult equilibrium;
    TimeSeries series;
    double p = 2.0;
    /// X(t) never increased between consecutive samples.
    bool x_monotone = true;
    /// ||u||_p^p <= m^{p-1} X(t) at every sample.
    bool lp_bound = true;
};

inline DispersalRun run_dispersal_decay(const ConvKernel& J, const Field& g, const Field& u0, double p,
                                        double horizon, double sample_dt, double tol = 1e-10) {
    require(u0.min_value() >= 0.0, ErrorKind::invalid_parameter, "initial datum must be nonnegative");
    GeneralKernel K = dispersal_kernel(J, g);
    EquilibriumResult eq = solve_equilibrium(K, tol, 100000);
    RunOptions opts;
    opts.horizon = horizon;
    opts.sample_dt = sample_dt;
    opts.p_list = {p};
    opts.u_inf = eq.u_inf;
    opts.keep_snapshots = true;
    TimeSeries series = run_general(K, u0, opts);
    DispersalRun run{std::move(K), std::move(eq), std::move(series), p};
    const auto& X = run.series.column("X" + param_label(p));
    const auto& lp = run.series.column(p == 2.0 ? "lp2" : "lp" + param_label(p));
    const double mp = std::pow(run.equilibrium.m, p - 1.0);
    for (std::size_t j = 0; j < X.size(); ++j) {
        if (j > 0 && X[j] > X[j - 1]) run.x_monotone = false;
        if (lp[j] > mp * X[j]) run.lp_bound = false;
    }
    return run;
}

struct GeneralDecayReport {
    /// (i-a): K(x,y) u_inf(y) >= r / m wherever |x - y| < R.
    bool kernel_domination = true;
    double kernel_domination_ratio = INFINITY;
    /// (i-b): E_p^K(f) >= D_p^{J~}(f) / m at every sample.
    bool dissipation = true;
    double dissipation_min_ratio = INFINITY;
    long dissipation_fail_index = -1;
    /// (ii): X(t) below the comparison envelope.
    bool envelope = true;
    double envelope_min_ratio = INFINITY;
    long envelope_fail_index = -1;
    /// (iii): ||u||_p^p <= m^{p-1} X(t).
    bool lp_bound = true;
    long lp_fail_index = -1;
    DecayEnvelope envelope_used;

    bool passed() const noexcept { return kernel_domination && dissipation && envelope && lp_bound; }
};

/// Envelope for X(t) = integral (u/u_inf)^p u_inf: the convolution envelope
/// with r replaced by r/m and the extra powers of m that come from
/// comparing weighted and unweighted norms.
inline DecayEnvelope general_kernel_envelope(double X0, double norm1_0, double m, const KernelBounds& b,
                                             const ConstantLedger& c) {
    const double g = c.gamma_p, N = c.N, p = c.p;
    const double C1 = c.C_main * b.r * std::pow(b.R, N + 2.0) * std::pow(norm1_0, -p * g) *
                      std::pow(m, -(2.0 + g + p * g));
    const double C2 = c.C_main * b.r * std::pow(b.R, N) * std::pow(m, -2.0);
    DecayEnvelope e = ode_decay_envelope(X0, C1, C2, g, EnvelopeKind::general_kernel);
    return e;
}

/// Checks (i)-(iii) along a series recorded with u_inf and snapshots.
inline GeneralDecayReport check_general_decay(const GeneralKernel& K, const Field& u_inf, double m,
                                              const KernelBounds& b, const ConstantLedger& c,
                                              const TimeSeries& series) {
    require(u_inf.grid() == K.grid() && u_inf.min_value() > 0.0, ErrorKind::invalid_parameter,
            "u_inf must be positive and live on the kernel grid");
    require(m >= 1.0 && std::isfinite(m), ErrorKind::invalid_parameter, "m must be >= 1");
    require(series.snapshots.size() == series.size() && series.size() > 0, ErrorKind::insufficient_data,
            "series must carry one snapshot per sample");
    const double p = c.p;
    const auto& grid = K.grid();
    const std::size_t M = K.points();
    GeneralDecayReport rep;

    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = 0; j < M; ++j)
            if (euclidean_norm(lattice_offset(grid, i, j), grid.dim()) < b.R)
                rep.kernel_domination_ratio = std::min(rep.kernel_domination_ratio, K(i, j) * u_inf[j] * m / b.r);
    rep.kernel_domination = rep.kernel_domination_ratio >= 1.0;

    const ConvKernel box = make_standard_kernel(KernelKind::box, b.R, b.r, grid);
    const EntropySpec entropy = EntropySpec::power(p);
    const auto& X = series.column("X" + param_label(p));
    const auto& lp = series.column(p == 2.0 ? "lp2" : "lp" + param_label(p));
    const double X0 = X.front();
    rep.envelope_used = general_kernel_envelope(X0, series.norm1_0, m, b, c);
    const double mp = std::pow(m, p - 1.0);
    for (std::size_t s = 0; s < series.size(); ++s) {
        const Field& u = series.snapshots[s];
        std::vector<double> fv(M);
        for (std::size_t i = 0; i < M; ++i) fv[i] = u[i] / u_inf[i];
        const Field f(grid, std::move(fv));
        const double E = relative_entropy_dissipation(K, u_inf, f, entropy);
        const double D = dissipation_direct(box, f, p) / m;
        if (D > 0.0) {
            const double ratio = E / D;
            if (ratio < rep.dissipation_min_ratio) rep.dissipation_min_ratio = ratio;
            if (!(E >= D) && rep.dissipation) {
                rep.dissipation = false;
                rep.dissipation_fail_index = static_cast<long>(s);
            }
        }
        const double env = rep.envelope_used(series.times[s]);
        rep.envelope_min_ratio = std::min(rep.envelope_min_ratio, env / X[s]);
        if (X[s] > env && rep.envelope) {
            rep.envelope = false;
            rep.envelope_fail_index = static_cast<long>(s);
        }
        if (lp[s] > mp * X[s] && rep.lp_bound) {
            rep.lp_bound = false;
            rep.lp_fail_index = static_cast<long>(s);
        }
    }
    return rep;
}

} // namespace nldecay
