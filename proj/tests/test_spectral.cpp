#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nldecay/kernels.hpp"
#include "nldecay/spectral.hpp"
#include "oracles.hpp"

using namespace nldecay;

namespace {

Field random_field(const GridSpec& g, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    std::vector<double> v(g.size());
    for (double& x : v) x = d(rng);
    return Field(g, std::move(v));
}

} // namespace

TEST(Spectral, ForwardMatchesContinuousFrequencySum1D) {
    const GridSpec g(1, 3.0, 32);
    const Field u = random_field(g, 1);
    const Spectrum s = forward(u);
    std::vector<double> raw(u.values().begin(), u.values().end());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double xi = std::numbers::pi * static_cast<double>(wavenumber(k, 32)) / 3.0;
        const auto ref = oracle::continuous_transform_1d(raw, 3.0, xi) / std::sqrt(6.0);
        EXPECT_NEAR(s[k].real(), ref.real(), 1e-12);
        EXPECT_NEAR(s[k].imag(), ref.imag(), 1e-12);
    }
}

TEST(Spectral, ForwardMatchesNaiveDft2D) {
    // Separable check: 2-D transform of a product field is the product of 1-D sums.
    const GridSpec g(2, 2.0, 8);
    const GridSpec g1(1, 2.0, 8);
    const Field a = random_field(g1, 2), b = random_field(g1, 3);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) v[i * 8 + j] = a[i] * b[j];
    const Spectrum s = forward(Field(g, v));
    const Spectrum sa = forward(a), sb = forward(b);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) EXPECT_LT(std::abs(s[i * 8 + j] - sa[i] * sb[j]), 1e-12);
    // And the 1-D transform against a textbook DFT with the origin phase applied.
    std::vector<oracle::cd> ca(a.values().begin(), a.values().end());
    const auto d = oracle::dft(ca);
    const double scale = g1.spacing() / std::sqrt(4.0);
    for (std::size_t k = 0; k < 8; ++k) {
        const double sign = wavenumber(k, 8) % 2 == 0 ? 1.0 : -1.0;
        EXPECT_LT(std::abs(sa[k] - scale * sign * d[k]), 1e-12);
    }
}

TEST(Spectral, ParsevalAndRoundTrip) {
    for (int dim = 1; dim <= 3; ++dim) {
        const GridSpec g(dim, 1.5, dim == 3 ? 8 : 32);
        const Field u = random_field(g, 10 + dim);
        const Spectrum s = forward(u);
        EXPECT_NEAR(s.energy(), lp_norm_pow(u, 2.0), 1e-12 * lp_norm_pow(u, 2.0));
        const Field w = inverse(s);
        for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(w[i], u[i], 1e-13);
        EXPECT_LT(hermitian_defect(s), 1e-13);
    }
}

TEST(Spectral, NormalizedKernelSymbolHasUnitMassAndIsBounded) {
    const GridSpec g(1, 8.0, 256);
    for (auto kind : {KernelKind::box, KernelKind::bump, KernelKind::truncated_gaussian}) {
        const auto J = normalized(make_standard_kernel(kind, 1.0, 0.5, g));
        const auto sym = kernel_symbol(J);
        EXPECT_NEAR(sym.mass, 1.0, 1e-14);
        for (double v : sym.values) EXPECT_LE(v, 1.0 + 1e-14);
    }
}

TEST(Spectral, BoxSymbolMatchesDiscreteSum) {
    const GridSpec g(1, 8.0, 128);
    const auto J = normalized(make_standard_kernel(KernelKind::box, 1.0, 1.0, g));
    const auto sym = kernel_symbol(J);
    for (std::size_t k : {1u, 5u, 17u, 64u, 100u}) {
        const double xi = std::numbers::pi * static_cast<double>(wavenumber(k, 128)) / 8.0;
        double ref = 0.0;
        for (std::size_t s = 0; s < g.size(); ++s) ref += J.profile[s] * std::cos(xi * kernel_offset(g, s)[0]);
        EXPECT_NEAR(sym[k], g.spacing() * ref, 1e-13);
    }
}

TEST(Spectral, OddProfileIsUnsupported) {
    const GridSpec g(1, 4.0, 16);
    std::vector<double> v(16, 0.0);
    v[9] = 1.0;
    try {
        symbol_of_profile(Field(g, v));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::unsupported);
    }
}

TEST(Spectral, UnitBallConstantMatchesAnalyticScan) {
    const GridSpec g(1, 16.0, 4096);
    const double c1 = symbol_lower_bound_constant(kernel_symbol(unit_ball_kernel(g)));
    const double ref = oracle::sinc_symbol_constant();
    EXPECT_NEAR(c1 / ref, 1.0, 0.01);
}

TEST(Spectral, DeltaKernelIsDegenerate) {
    const GridSpec g(1, 4.0, 16);
    std::vector<double> v(16, 0.0);
    v[8] = 1.0 / g.spacing();
    try {
        symbol_lower_bound_constant(symbol_of_profile(Field(g, v)));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::degenerate_kernel);
    }
}

TEST(Spectral, DerivativesOfASineMode) {
    const double L = 4.0;
    const GridSpec g(1, L, 64);
    const int m = 3;
    const double xi = std::numbers::pi * m / L;
    const Field u = Field::sample(g, [&](const Point& x) { return std::sin(xi * x[0]); });
    const Field d0 = fractional_derivative(u, 0.0);
    const Field d2 = fractional_derivative(u, 2.0);
    const Field d1 = fractional_derivative(u, 1.0);
    const auto grad = gradient(u);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.coordinate(i);
        EXPECT_EQ(d0[i], u[i]);
        EXPECT_NEAR(d2[i], -xi * xi * std::sin(xi * x), 1e-12);
        EXPECT_NEAR(d1[i], -xi * std::sin(xi * x), 1e-12);
        EXPECT_NEAR(grad[0][i], xi * std::cos(xi * x), 1e-12);
    }
    EXPECT_NEAR(derivative_energy(forward(u), 1.0), xi * xi * L, 1e-10);
    EXPECT_THROW(fractional_derivative(u, -1.0), Error);
}

TEST(Spectral, ConvolutionMatchesDirectSum) {
    const GridSpec g(2, 3.0, 16);
    const auto J = normalized(make_standard_kernel(KernelKind::bump, 1.2, 1.0, g));
    const Field u = random_field(g, 7);
    const Field c = convolve(kernel_symbol(J), u);
    const double hN = g.cell_volume();
    for (std::size_t i = 0; i < g.size(); i += 13) {
        double ref = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) ref += J.profile[offset_slot(g, i, j)] * u[j];
        EXPECT_NEAR(c[i], hN * ref, 1e-12);
    }
}
