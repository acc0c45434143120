#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "nldecay/bounds.hpp"
#include "nldecay/dissipation.hpp"
#include "nldecay/error.hpp"
#include "nldecay/grid.hpp"
#include "nldecay/kernels.hpp"
#include "nldecay/parallel.hpp"
#include "nldecay/spectral.hpp"

namespace nldecay {

enum class FieldFamily { gaussian_mixture, random_fourier, indicator_sum, signed_mixture };

inline const char* to_string(FieldFamily f) {
    switch (f) {
    case FieldFamily::gaussian_mixture: return "gaussian_mixture";
    case FieldFamily::random_fourier: return "random_fourier";
    case FieldFamily::indicator_sum: return "indicator_sum";
    case FieldFamily::signed_mixture: return "signed_mixture";
    }
    return "unknown";
}

inline FieldFamily field_family_from_string(const std::string& s) {
    if (s == "gaussian_mixture") return FieldFamily::gaussian_mixture;
    if (s == "random_fourier") return FieldFamily::random_fourier;
    if (s == "indicator_sum") return FieldFamily::indicator_sum;
    if (s == "signed_mixture") return FieldFamily::signed_mixture;
    fail(ErrorKind::invalid_parameter, "unknown field family '" + s + "'");
}

/// Seeded random test fields. Every field vanishes outside
/// ||x||_inf <= L - margin. The stream for trial t depends only on
/// (seed, family, t).
struct FieldGenerator {
    FieldFamily kind = FieldFamily::gaussian_mixture;
    int components_min = 1;
    int components_max = 4;
    double width_min = 0.25;
    double width_max = 4.0;
    double amplitude_min = 0.1;
    double amplitude_max = 2.0;
    double margin = 0.0;
    /// Multiplies every sampled width; used by local refinement.
    double width_scale = 1.0;
    std::uint64_t seed = 1;

    /// Margin R_sup + 4h required for a kernel of support radius R_sup.
    static double required_margin(const GridSpec& g, double support_radius) {
        return support_radius + 4.0 * g.spacing();
    }

    FieldGenerator with_margin_at_least(double m) const {
        FieldGenerator out = *this;
        out.margin = std::max(margin, m);
        return out;
    }

    void validate(const GridSpec& g) const {
        require(components_min >= 1 && components_max >= components_min, ErrorKind::invalid_parameter,
                "component range must satisfy 1 <= min <= max");
        require(width_min > 0.0 && width_max >= width_min && width_scale > 0.0, ErrorKind::invalid_parameter,
                "width range must be positive");
        require(amplitude_min > 0.0 && amplitude_max >= amplitude_min, ErrorKind::invalid_parameter,
                "amplitude range must be positive");
        require(margin >= 0.0 && margin < g.half_width(), ErrorKind::invalid_parameter,
                "support margin must lie in [0, L)");
    }

    Field generate(const GridSpec& g, std::uint64_t trial) const {
        validate(g);
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32),
                          static_cast<std::uint32_t>(kind)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const int N = g.dim();
        const double inner = g.half_width() - margin;
        const double h = g.spacing();
        auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
        auto log_uniform = [&](double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); };
        const int count = std::uniform_int_distribution<int>(components_min, components_max)(rng);

        std::vector<double> v(g.size(), 0.0);
        auto add_each = [&](auto&& value_at) {
            for (std::size_t i = 0; i < v.size(); ++i) v[i] += value_at(g.point(i));
        };

        switch (kind) {
        case FieldFamily::gaussian_mixture:
        case FieldFamily::signed_mixture:
            for (int c = 0; c < count; ++c) {
                // 8.2 widths: exp(-x^2/2) < 1e-14 beyond.
                double w = width_scale * log_uniform(width_min, width_max);
                w = std::clamp(w, 2.0 * h, inner / 10.0);
                const double reach = std::max(0.0, inner - 8.2 * w);
                Point ctr{0.0, 0.0, 0.0};
                for (int a = 0; a < N; ++a) ctr[a] = uniform(-reach, reach);
                double amp = uniform(amplitude_min, amplitude_max);
                if (kind == FieldFamily::signed_mixture && unit(rng) < 0.5) amp = -amp;
                add_each([&](const Point& x) {
                    double r2 = 0.0;
                    for (int a = 0; a < N; ++a) r2 += (x[a] - ctr[a]) * (x[a] - ctr[a]);
                    return amp * std::exp(-r2 / (2.0 * w * w));
                });
            }
            break;
        case FieldFamily::random_fourier: {
            const double offset = uniform(0.0, amplitude_max);
            std::vector<Point> freq(count);
            std::vector<double> amp(count), phase(count);
            for (int c = 0; c < count; ++c) {
                const double w = std::max(2.0 * h, width_scale * log_uniform(width_min, width_max));
                for (int a = 0; a < N; ++a) freq[c][a] = uniform(-1.0, 1.0) * std::numbers::pi / w;
                amp[c] = uniform(amplitude_min, amplitude_max);
                phase[c] = uniform(0.0, 2.0 * std::numbers::pi);
            }
            add_each([&](const Point& x) {
                double window = 1.0;
                for (int a = 0; a < N; ++a) {
                    const double c = std::cos(0.5 * std::numbers::pi * x[a] / inner);
                    window *= std::abs(x[a]) < inner ? c * c : 0.0;
                }
                double s = offset;
                for (int c = 0; c < count; ++c) {
                    double arg = phase[c];
                    for (int a = 0; a < N; ++a) arg += freq[c][a] * x[a];
                    s += amp[c] * std::cos(arg);
                }
                return window * s;
            });
            break;
        }
        case FieldFamily::indicator_sum:
            for (int c = 0; c < count; ++c) {
                const double s = std::clamp(width_scale * log_uniform(width_min, width_max), 2.0 * h, inner / 2.0);
                Point ctr{0.0, 0.0, 0.0};
                for (int a = 0; a < N; ++a) ctr[a] = uniform(-(inner - s), inner - s);
                const double amp = uniform(amplitude_min, amplitude_max);
                add_each([&](const Point& x) {
                    for (int a = 0; a < N; ++a)
                        if (std::abs(x[a] - ctr[a]) >= s) return 0.0;
                    return amp;
                });
            }
            break;
        }
        for (std::size_t i = 0; i < v.size(); ++i)
            if (sup_norm(g.point(i), N) > inner) v[i] = 0.0;
        return Field(g, std::move(v));
    }
};

struct InequalityReport {
    std::string label;
    long trials = 0;
    long skipped = 0;
    double min_margin = INFINITY;
    double min_ratio = INFINITY;
    long violations = 0;
    /// Trial index of the worst ratio.
    std::uint64_t worst_seed = 0;

    bool passed() const noexcept { return violations == 0 && trials > 0; }
};

/// One evaluated trial: lhs >= rhs is the claim.
struct InequalitySides {
    double lhs = 0.0;
    double rhs = 0.0;
    bool degenerate = false;
};

namespace detail {

/// Draws fields until a nondegenerate one appears, then reduces sequentially.
template <class Eval>
InequalityReport run_trials(const std::string& label, const FieldGenerator& gen, const GridSpec& grid, long trials,
                            unsigned threads, Eval&& eval, double tolerance = 0.0) {
    require(trials > 0, ErrorKind::invalid_parameter, "trials must be positive");
    std::vector<InequalitySides> sides(trials);
    std::vector<long> skips(trials, 0);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            require(attempt < 64, ErrorKind::insufficient_data, "generator keeps producing degenerate fields");
            const std::uint64_t stream = t + attempt * static_cast<std::uint64_t>(trials);
            const Field u = gen.generate(grid, stream);
            InequalitySides s = u.max_abs() == 0.0 ? InequalitySides{0.0, 0.0, true} : eval(u);
            if (!s.degenerate) {
                sides[t] = s;
                return;
            }
            ++skips[t];
        }
    });
    InequalityReport rep;
    rep.label = label;
    rep.trials = trials;
    for (long t = 0; t < trials; ++t) {
        rep.skipped += skips[t];
        const auto& s = sides[t];
        const double ratio = s.lhs / s.rhs;
        rep.min_margin = std::min(rep.min_margin, s.lhs - s.rhs);
        if (ratio < rep.min_ratio) {
            rep.min_ratio = ratio;
            rep.worst_seed = static_cast<std::uint64_t>(t);
        }
        if (!(ratio >= 1.0 - tolerance)) ++rep.violations;
    }
    return rep;
}

inline void require_ledger(const ConstantLedger& c, const GridSpec& g, double p, double k) {
    require(c.N == g.dim(), ErrorKind::invalid_parameter, "ledger dimension differs from the grid");
    require(c.p == p, ErrorKind::invalid_parameter, "ledger was built for a different p");
    require(c.k == k, ErrorKind::invalid_parameter, "ledger was built for a different k");
}

} // namespace detail

/// Both sides of the main energy inequality for one field:
///   D_p(u) >= C_main r min{R^{N+2} ||u||_1^{-p gamma} ||u||_p^{p(1+gamma)}, R^N ||u||_p^p}.
inline InequalitySides main_inequality_sides(const KernelSymbol& symbol, const KernelBounds& b,
                                             const ConstantLedger& c, const Field& u) {
    const double N = c.N, p = c.p, g = c.gamma_p;
    const double n1 = lp_norm(u, 1.0), Xp = lp_norm_pow(u, p);
    if (n1 == 0.0 || Xp == 0.0) return {0.0, 0.0, true};
    const double lhs = dissipation_fast(symbol, u, p);
    const double a = std::pow(b.R, N + 2.0) * std::pow(n1, -p * g) * std::pow(Xp, 1.0 + g);
    const double bb = std::pow(b.R, N) * Xp;
    return {lhs, c.C_main * b.r * std::min(a, bb), false};
}

inline InequalityReport check_main_inequality(const ConvKernel& J, const KernelBounds& b, const ConstantLedger& c,
                                              double p, const FieldGenerator& gen, long trials,
                                              unsigned threads = 1) {
    require(p >= 2.0, ErrorKind::invalid_parameter, "main inequality needs p >= 2");
    detail::require_ledger(c, J.grid(), p, c.k);
    const KernelSymbol symbol = kernel_symbol(J);
    const auto g2 = gen.with_margin_at_least(FieldGenerator::required_margin(J.grid(), J.support_radius));
    return detail::run_trials("main_p" + param_label(p), g2, J.grid(), trials, threads,
                              [&](const Field& u) { return main_inequality_sides(symbol, b, c, u); });
}

/// p = 2 form with the correction constant C_cor (no c(p) factor).
inline InequalitySides l2_inequality_sides(const KernelSymbol& symbol, const KernelBounds& b,
                                           const ConstantLedger& c, const Field& u) {
    const double N = c.N;
    const double n1 = lp_norm(u, 1.0), X = lp_norm_pow(u, 2.0);
    if (n1 == 0.0 || X == 0.0) return {0.0, 0.0, true};
    const double lhs = dissipation_fast(symbol, u, 2.0);
    const double a = std::pow(b.R, N + 2.0) * std::pow(n1, -4.0 / N) * std::pow(X, 1.0 + 2.0 / N);
    return {lhs, c.C_cor * b.r * std::min(a, std::pow(b.R, N) * X), false};
}

inline InequalityReport check_l2_inequality(const ConvKernel& J, const KernelBounds& b, const ConstantLedger& c,
                                            const FieldGenerator& gen, long trials, unsigned threads = 1) {
    require(c.N == J.grid().dim(), ErrorKind::invalid_parameter, "ledger dimension differs from the grid");
    const KernelSymbol symbol = kernel_symbol(J);
    const auto g2 = gen.with_margin_at_least(FieldGenerator::required_margin(J.grid(), J.support_radius));
    return detail::run_trials("l2", g2, J.grid(), trials, threads,
                              [&](const Field& u) { return l2_inequality_sides(symbol, b, c, u); });
}

/// Derivative form with X = ||D^k u||_2^2 and the derivative chain constant.
inline InequalitySides dk_inequality_sides(const KernelSymbol& symbol, const KernelBounds& b,
                                           const ConstantLedger& c, double k, const Field& u) {
    const double N = c.N, a = N + 2.0 * k;
    const double n1 = lp_norm(u, 1.0);
    const Spectrum s = forward(u);
    const double X = derivative_energy(s, k);
    if (n1 == 0.0 || X == 0.0) return {0.0, 0.0, true};
    const double lhs = dissipation_Dk(symbol, u, k);
    const double A = std::pow(b.R, k + N + 2.0) * std::pow(n1, -4.0 / a) * std::pow(X, 1.0 + 2.0 / a);
    const double B = std::pow(b.R, k + N) * X;
    return {lhs, c.C_deriv * b.r * std::min(A, B), false};
}

inline InequalityReport check_dk_inequality(const ConvKernel& J, const KernelBounds& b, const ConstantLedger& c,
                                            double k, const FieldGenerator& gen, long trials,
                                            unsigned threads = 1) {
    require(k >= 0.0, ErrorKind::invalid_parameter, "derivative order must be >= 0");
    require(c.k == k && c.N == J.grid().dim(), ErrorKind::invalid_parameter, "ledger does not match k or N");
    const KernelSymbol symbol = kernel_symbol(J);
    const auto g2 = gen.with_margin_at_least(FieldGenerator::required_margin(J.grid(), J.support_radius));
    return detail::run_trials("dk" + param_label(k), g2, J.grid(), trials, threads,
                              [&](const Field& u) { return dk_inequality_sides(symbol, b, c, k, u); });
}

/// ||grad u||_2^2 with the same Nyquist convention as gradient().
inline double gradient_energy(const Field& u) {
    double e = 0.0;
    for (const auto& component : gradient(u)) e += lp_norm_pow(component, 2.0);
    return e;
}

inline InequalitySides gradient_inequality_sides(const KernelSymbol& symbol, const KernelBounds& b,
                                                 const ConstantLedger& c, const Field& u) {
    const double N = c.N;
    const double n1 = lp_norm(u, 1.0);
    const double X = gradient_energy(u);
    if (n1 == 0.0 || X == 0.0) return {0.0, 0.0, true};
    const double lhs = dissipation_gradient(symbol, u);
    const double A = std::pow(b.R, N + 3.0) * std::pow(n1, -4.0 / (N + 2.0)) * std::pow(X, 1.0 + 2.0 / (N + 2.0));
    const double B = std::pow(b.R, N + 1.0) * X;
    return {lhs, c.C_deriv * b.r * std::min(A, B), false};
}

/// The ledger must be the k = 1 ledger; the gradient chain shares its constant.
inline InequalityReport check_gradient_inequality(const ConvKernel& J, const KernelBounds& b,
                                                  const ConstantLedger& c, const FieldGenerator& gen, long trials,
                                                  unsigned threads = 1) {
    require(c.k == 1.0 && c.N == J.grid().dim(), ErrorKind::invalid_parameter,
            "gradient check needs the k = 1 ledger for this dimension");
    const KernelSymbol symbol = kernel_symbol(J);
    const auto g2 = gen.with_margin_at_least(FieldGenerator::required_margin(J.grid(), J.support_radius));
    return detail::run_trials("gradient", g2, J.grid(), trials, threads,
                              [&](const Field& u) { return gradient_inequality_sides(symbol, b, c, u); });
}

/// inf of D_p(u) / (r min{...}) over trials, then a multiplicative search on
/// the generator's width scale around the worst trial.
inline double estimate_best_constant(const ConvKernel& J, const KernelBounds& b, double p,
                                     const FieldGenerator& gen, long trials, int refine_steps,
                                     unsigned threads = 1) {
    require(trials >= 100, ErrorKind::invalid_parameter, "best-constant estimate needs at least 100 trials");
    const int N = J.grid().dim();
    const double gamma = 2.0 / (N * (p - 1.0));
    const KernelSymbol symbol = kernel_symbol(J);
    auto normalized_ratio = [&](const Field& u) -> InequalitySides {
        const double n1 = lp_norm(u, 1.0), Xp = lp_norm_pow(u, p);
        if (n1 == 0.0 || Xp == 0.0) return {0.0, 0.0, true};
        const double a = std::pow(b.R, N + 2.0) * std::pow(n1, -p * gamma) * std::pow(Xp, 1.0 + gamma);
        return {dissipation_fast(symbol, u, p), b.r * std::min(a, std::pow(b.R, N) * Xp), false};
    };
    FieldGenerator g2 = gen.with_margin_at_least(FieldGenerator::required_margin(J.grid(), J.support_radius));
    const auto rep = detail::run_trials("best", g2, J.grid(), trials, threads, normalized_ratio);
    double best = rep.min_ratio;
    const std::uint64_t worst = rep.worst_seed;
    double step = 1.5;
    for (int s = 0; s < refine_steps; ++s) {
        bool improved = false;
        for (double f : {step, 1.0 / step}) {
            FieldGenerator trial = g2;
            trial.width_scale = g2.width_scale * f;
            const Field u = trial.generate(J.grid(), worst);
            const auto sides = normalized_ratio(u);
            if (sides.degenerate) continue;
            const double r = sides.lhs / sides.rhs;
            if (r < best) {
                best = r;
                g2 = trial;
                improved = true;
                break;
            }
        }
        if (!improved) step = std::sqrt(step);
    }
    return best;
}

/// ||u||_{p/2} <= ||u||_1^{1/(p-1)} ||u||_p^{(p-2)/(p-1)} and, for q in
/// {1.25, 1.5, 1.75}, ||u||_q^q <= ||u||_1^{2-q} ||u||_2^{2(q-1)}. The ratio is
/// RHS / LHS; fields with |u| constant on its support give equality, so a
/// relative slack of 1e-12 absorbs rounding.
inline InequalityReport check_interpolation_chain(const FieldGenerator& gen, const GridSpec& grid, long trials,
                                                  double p, unsigned threads = 1) {
    require(p >= 2.0, ErrorKind::invalid_parameter, "interpolation chain needs p >= 2");
    auto eval = [&](const Field& u) -> InequalitySides {
        const double n1 = lp_norm(u, 1.0);
        if (n1 == 0.0) return {0.0, 0.0, true};
        const double np = lp_norm(u, p), nhalf = lp_norm(u, 0.5 * p), n2 = lp_norm(u, 2.0);
        double worst_ratio = std::pow(n1, 1.0 / (p - 1.0)) * std::pow(np, (p - 2.0) / (p - 1.0)) / nhalf;
        InequalitySides s{worst_ratio, 1.0, false};
        for (double q : {1.25, 1.5, 1.75}) {
            const double r = std::pow(n1, 2.0 - q) * std::pow(n2, 2.0 * (q - 1.0)) / lp_norm_pow(u, q);
            if (r < s.lhs) s.lhs = r;
        }
        return s;
    };
    return detail::run_trials("interpolation", gen, grid, trials, threads, eval, 1e-12);
}

} // namespace nldecay
