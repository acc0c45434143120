#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "nldecay/error.hpp"
#include "nldecay/fft.hpp"
#include "nldecay/grid.hpp"

namespace nldecay {

using Complex = std::complex<double>;

/// Integer frequency of storage slot k along an axis: m in [-n/2, n/2).
inline long wavenumber(std::size_t k, std::size_t n) {
    return k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

/// Physical frequency vector xi = pi m / L of the flat storage slot.
inline Point frequency(const GridSpec& grid, std::size_t flat) {
    const auto idx = grid.unflatten(flat);
    const double scale = std::numbers::pi / grid.half_width();
    Point xi{0.0, 0.0, 0.0};
    for (int a = 0; a < grid.dim(); ++a)
        xi[a] = scale * static_cast<double>(wavenumber(idx[a], grid.points_per_axis()));
    return xi;
}

inline double frequency_norm_sq(const GridSpec& grid, std::size_t flat) {
    const Point xi = frequency(grid, flat);
    return xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
}

/// (-1)^{m_1 + ... + m_N}: the phase picked up because grid points start at -L.
inline double origin_phase(const GridSpec& grid, std::size_t flat) {
    const auto idx = grid.unflatten(flat);
    long s = 0;
    for (int a = 0; a < grid.dim(); ++a) s += wavenumber(idx[a], grid.points_per_axis());
    return (s % 2 == 0) ? 1.0 : -1.0;
}

/// Isometric discrete transform of a field. Coefficients are stored in FFT
/// order (slot k along an axis holds m = wavenumber(k, n)); normalization is
/// fixed so that sum |coeff|^2 = h^N sum |u|^2.
class Spectrum {
public:
    Spectrum(GridSpec grid, std::vector<Complex> coefficients)
        : grid_(grid), coefficients_(std::move(coefficients)) {
        require(coefficients_.size() == grid_.size(), ErrorKind::invalid_parameter,
                "spectrum length must equal n^N");
    }

    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const Complex> coefficients() const noexcept { return coefficients_; }
    Complex operator[](std::size_t i) const noexcept { return coefficients_[i]; }
    std::size_t size() const noexcept { return coefficients_.size(); }

    double energy() const {
        double s = 0.0;
        for (const auto& c : coefficients_) s += std::norm(c);
        return s;
    }

    template <class Multiplier>
    Spectrum multiplied(Multiplier&& fn) const {
        std::vector<Complex> c(coefficients_.size());
        for (std::size_t i = 0; i < c.size(); ++i) c[i] = fn(i) * coefficients_[i];
        return Spectrum(grid_, std::move(c));
    }

private:
    GridSpec grid_;
    std::vector<Complex> coefficients_;
};

inline double field_transform_scale(const GridSpec& g) {
    return g.cell_volume() / std::pow(2.0 * g.half_width(), 0.5 * g.dim());
}

inline Spectrum forward(const Field& u) {
    const auto& g = u.grid();
    std::vector<Complex> c(u.values().begin(), u.values().end());
    detail::fft_in_place(c, g.dim(), g.points_per_axis(), FFTW_FORWARD);
    const double scale = field_transform_scale(g);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= scale * origin_phase(g, i);
    return Spectrum(g, std::move(c));
}

/// Inverse of forward; the imaginary residue of a non-Hermitian input is dropped.
inline Field inverse(const Spectrum& s) {
    const auto& g = s.grid();
    std::vector<Complex> c(s.coefficients().begin(), s.coefficients().end());
    const double scale = 1.0 / (field_transform_scale(g) * static_cast<double>(g.size()));
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= scale * origin_phase(g, i);
    detail::fft_in_place(c, g.dim(), g.points_per_axis(), FFTW_BACKWARD);
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = c[i].real();
    return Field(g, std::move(v));
}

/// max |c(-m) - conj(c(m))|, zero for the spectrum of a real field.
inline double hermitian_defect(const Spectrum& s) {
    const auto& g = s.grid();
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        d = std::max(d, std::abs(s[g.mirror(i)] - std::conj(s[i])));
    return d;
}

/// Fourier symbol of a convolution kernel with the mass-normalized
/// convention: J^(xi) = h^N sum_z J(z) exp(-i xi.z), so J^(0) = integral of J.
struct KernelSymbol {
    GridSpec grid;
    std::vector<double> values;
    double mass = 0.0;

    double operator[](std::size_t i) const noexcept { return values[i]; }
};

/// Symbol of a profile sampled at offsets z in [-L, L)^N (centered order).
/// The profile must be even; otherwise the symbol is complex.
inline KernelSymbol symbol_of_profile(const Field& profile) {
    const auto& g = profile.grid();
    for (std::size_t i = 0; i < profile.size(); ++i)
        require(profile[g.mirror(i)] == profile[i], ErrorKind::unsupported,
                "kernel symbol requires an even kernel");
    std::vector<Complex> c(profile.values().begin(), profile.values().end());
    detail::fft_in_place(c, g.dim(), g.points_per_axis(), FFTW_FORWARD);
    const double hN = g.cell_volume();
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = hN * origin_phase(g, i) * c[i].real();
    const double m = v[0];
    return KernelSymbol{g, std::move(v), m};
}

/// C1 = max over nonzero grid frequencies of min{1, |xi|^2} / (1 - J^(xi)).
inline double symbol_lower_bound_constant(const KernelSymbol& symbol) {
    require(std::abs(symbol.mass - 1.0) <= 1e-9, ErrorKind::invalid_parameter,
            "symbol must be normalized to unit mass");
    double c1 = 0.0;
    for (std::size_t i = 1; i < symbol.values.size(); ++i) {
        const double gap = 1.0 - symbol.values[i];
        require(gap > 1e-14, ErrorKind::degenerate_kernel,
                "1 - J^(xi) vanishes at a nonzero frequency");
        const double xi2 = frequency_norm_sq(symbol.grid, i);
        c1 = std::max(c1, std::min(1.0, xi2) / gap);
    }
    return c1;
}

/// Spectral multiplier -|xi|^k; D^0 is taken to be the identity.
inline Field fractional_derivative(const Field& u, double k) {
    require(std::isfinite(k) && k >= 0.0, ErrorKind::invalid_parameter, "derivative order must be >= 0");
    if (k == 0.0) return u;
    const auto& g = u.grid();
    return inverse(forward(u).multiplied([&](std::size_t i) {
        return Complex(-std::pow(frequency_norm_sq(g, i), 0.5 * k), 0.0);
    }));
}

/// ||D^k u||_2^2 = sum |xi|^{2k} |u^|^2, evaluated directly on the spectrum.
inline double derivative_energy(const Spectrum& s, double k) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double w = k == 0.0 ? 1.0 : std::pow(frequency_norm_sq(s.grid(), i), k);
        e += w * std::norm(s[i]);
    }
    return e;
}

/// Components i xi_j u^, with the Nyquist slot of axis j zeroed.
inline std::vector<Field> gradient(const Field& u) {
    const auto& g = u.grid();
    const Spectrum s = forward(u);
    const std::size_t n = g.points_per_axis();
    std::vector<Field> out;
    out.reserve(g.dim());
    for (int axis = 0; axis < g.dim(); ++axis) {
        out.push_back(inverse(s.multiplied([&](std::size_t i) {
            const auto idx = g.unflatten(i);
            if (idx[axis] == n / 2) return Complex(0.0, 0.0);
            return Complex(0.0, frequency(g, i)[axis]);
        })));
    }
    return out;
}

/// Periodic convolution (J * u)_i = h^N sum_j J(x_i - x_j) u_j via the symbol.
inline Field convolve(const KernelSymbol& symbol, const Field& u) {
    require(symbol.grid == u.grid(), ErrorKind::invalid_parameter, "kernel and field grids differ");
    return inverse(forward(u).multiplied([&](std::size_t i) { return Complex(symbol[i], 0.0); }));
}

} // namespace nldecay
