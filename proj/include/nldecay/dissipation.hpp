#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "nldecay/error.hpp"
#include "nldecay/grid.hpp"
#include "nldecay/kernels.hpp"
#include "nldecay/spectral.hpp"

namespace nldecay {

/// Antisymmetric power |s|^q sign(s).
inline double phi_power(double s, double q) {
    if (s == 0.0) return 0.0;
    const double a = q == 1.0 ? std::abs(s) : std::pow(std::abs(s), q);
    return s > 0.0 ? a : -a;
}

namespace detail {

inline std::vector<double> phi_values(const Field& u, double q) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = phi_power(u[i], q);
    return out;
}

inline void require_p_at_least_two(double p) {
    require(std::isfinite(p) && p >= 2.0, ErrorKind::invalid_parameter, "dissipation needs p >= 2");
}

} // namespace detail

/// L^p dissipation as the literal double sum
///   (p/2) h^{2N} sum_i sum_j J(x_i - x_j) (u_i - u_j)(phi(u_i) - phi(u_j)),
/// phi = phi_power(., p - 1), with minimal-image offsets. Pairs where J
/// vanishes are skipped.
inline double dissipation_direct(const ConvKernel& J, const Field& u, double p) {
    detail::require_p_at_least_two(p);
    require_same_grid(J.profile, u);
    const auto& g = u.grid();
    const std::size_t n = g.points_per_axis();
    const auto phi = detail::phi_values(u, p - 1.0);

    struct Tap {
        std::array<std::size_t, 3> shift;
        double weight;
    };
    std::vector<Tap> taps;
    for (std::size_t s = 0; s < J.profile.size(); ++s) {
        if (J.profile[s] == 0.0) continue;
        const auto idx = g.unflatten(s);
        std::array<std::size_t, 3> shift{0, 0, 0};
        // j = i - (idx - n/2)  (mod n)
        for (int a = 0; a < g.dim(); ++a) shift[a] = (n + n / 2 - idx[a]) % n;
        taps.push_back({shift, J.profile[s]});
    }

    double total = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const auto ii = g.unflatten(i);
        double row = 0.0;
        for (const auto& t : taps) {
            std::array<std::size_t, 3> jj{0, 0, 0};
            for (int a = 0; a < g.dim(); ++a) jj[a] = (ii[a] + t.shift[a]) % n;
            const std::size_t j = g.flatten(jj);
            row += t.weight * (u[i] - u[j]) * (phi[i] - phi[j]);
        }
        total += row;
    }
    const double hN = g.cell_volume();
    return 0.5 * p * hN * hN * total;
}

/// Same double sum with K(x_i, x_j) read from a dense general kernel.
inline double dissipation_direct(const GeneralKernel& K, const Field& u, double p) {
    detail::require_p_at_least_two(p);
    require(K.grid() == u.grid(), ErrorKind::invalid_parameter, "kernel and field grids differ");
    const auto phi = detail::phi_values(u, p - 1.0);
    const std::size_t M = u.size();
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < M; ++j) row += K(i, j) * (u[i] - u[j]) * (phi[i] - phi[j]);
        total += row;
    }
    const double hN = u.grid().cell_volume();
    return 0.5 * p * hN * hN * total;
}

/// p h^N sum_i phi(u_i) ((integral J) u_i - (J * u)_i), with J * u computed
/// spectrally. Equals the double sum for even kernels.
inline double dissipation_fast(const KernelSymbol& symbol, const Field& u, double p) {
    detail::require_p_at_least_two(p);
    const Field conv = convolve(symbol, u);
    double s = 0.0;
    if (p == 2.0)
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * (symbol.mass * u[i] - conv[i]);
    else
        for (std::size_t i = 0; i < u.size(); ++i) s += phi_power(u[i], p - 1.0) * (symbol.mass * u[i] - conv[i]);
    return p * u.grid().cell_volume() * s;
}

inline double dissipation_fast(const ConvKernel& J, const Field& u, double p) {
    require(J.is_even, ErrorKind::unsupported, "fast dissipation needs an even kernel");
    return dissipation_fast(kernel_symbol(J), u, p);
}

/// 2 sum_xi (J^(0) - J^(xi)) |xi|^{2k} |u^(xi)|^2, the L^2 dissipation of D^k u.
inline double dissipation_Dk(const KernelSymbol& symbol, const Field& u, double k) {
    require(std::isfinite(k) && k >= 0.0, ErrorKind::invalid_parameter, "derivative order must be >= 0");
    require(symbol.grid == u.grid(), ErrorKind::invalid_parameter, "kernel and field grids differ");
    const Spectrum s = forward(u);
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double w = k == 0.0 ? 1.0 : std::pow(frequency_norm_sq(u.grid(), i), k);
        total += (symbol.mass - symbol[i]) * w * std::norm(s[i]);
    }
    return 2.0 * total;
}

inline double dissipation_Dk(const ConvKernel& J, const Field& u, double k) {
    return dissipation_Dk(kernel_symbol(J), u, k);
}

/// Sum over components of the L^2 dissipation of the partial derivatives.
inline double dissipation_gradient(const KernelSymbol& symbol, const Field& u) {
    double total = 0.0;
    for (const auto& component : gradient(u)) total += dissipation_fast(symbol, component, 2.0);
    return total;
}

inline double dissipation_gradient(const ConvKernel& J, const Field& u) {
    require(J.is_even, ErrorKind::unsupported, "gradient dissipation needs an even kernel");
    return dissipation_gradient(kernel_symbol(J), u);
}

/// Convex Phi with its derivative.
struct EntropySpec {
    std::function<double(double)> phi;
    std::function<double(double)> phi_prime;
    std::string label;

    EntropySpec(std::function<double(double)> f, std::function<double(double)> df, std::string name)
        : phi(std::move(f)), phi_prime(std::move(df)), label(std::move(name)) {
        // Sampled convexity: phi(b) below the chord through (a, phi(a)), (c, phi(c)).
        std::mt19937_64 rng(0x5eed);
        std::uniform_real_distribution<double> dist(-10.0, 10.0);
        for (int t = 0; t < 100; ++t) {
            double xs[3] = {dist(rng), dist(rng), dist(rng)};
            std::sort(xs, xs + 3);
            const double a = xs[0], b = xs[1], c = xs[2];
            if (c - a <= 0.0) continue;
            const double w = (b - a) / (c - a);
            const double chord = (1.0 - w) * phi(a) + w * phi(c);
            require(phi(b) <= chord + 1e-12 * (1.0 + std::abs(chord)), ErrorKind::invalid_parameter,
                    "entropy '" + label + "' is not convex");
        }
    }

    static EntropySpec square() {
        return {[](double s) { return s * s; }, [](double s) { return 2.0 * s; }, "s^2"};
    }

    static EntropySpec quartic() {
        return {[](double s) { return s * s * s * s; }, [](double s) { return 4.0 * s * s * s; }, "s^4"};
    }

    /// |s|^p, p > 1.
    static EntropySpec power(double p) {
        require(p > 1.0, ErrorKind::invalid_parameter, "power entropy needs p > 1");
        return {[p](double s) { return std::pow(std::abs(s), p); },
                [p](double s) { return p * phi_power(s, p - 1.0); }, "|s|^" + format_double(p)};
    }
};

/// h^N sum_i Phi(f_i) u_inf_i.
inline double relative_entropy(const Field& u_inf, const Field& f, const EntropySpec& spec) {
    require_same_grid(u_inf, f);
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += spec.phi(f[i]) * u_inf[i];
    return u_inf.grid().cell_volume() * s;
}

/// h^{2N} sum_ij K_ij u_inf_j [Phi'(f_i)(f_i - f_j) - Phi(f_i) + Phi(f_j)].
inline double relative_entropy_dissipation(const GeneralKernel& K, const Field& u_inf, const Field& f,
                                           const EntropySpec& spec) {
    require(u_inf.grid() == K.grid() && f.grid() == K.grid(), ErrorKind::invalid_parameter,
            "kernel and fields live on different grids");
    require(u_inf.min_value() > 0.0, ErrorKind::invalid_parameter, "u_inf must be positive");
    require(K.mass_conservation_defect() <= 1e-10 * std::max(1.0, K.sigma().max_abs()),
            ErrorKind::invalid_parameter, "relative entropy dissipation needs a mass-conserving kernel");
    const std::size_t M = f.size();
    std::vector<double> phi(M), dphi(M);
    for (std::size_t i = 0; i < M; ++i) {
        phi[i] = spec.phi(f[i]);
        dphi[i] = spec.phi_prime(f[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < M; ++j)
            row += K(i, j) * u_inf[j] * (dphi[i] * (f[i] - f[j]) - phi[i] + phi[j]);
        total += row;
    }
    const double hN = K.grid().cell_volume();
    return hN * hN * total;
}

} // namespace nldecay
