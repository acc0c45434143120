#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "nldecay/bounds.hpp"
#include "oracles.hpp"

using namespace nldecay;

TEST(CpEstimate, ClosedFormValues) {
    EXPECT_NEAR(estimate_cp(2.0), 1.0, 1e-9);
    for (double p : {2.5, 3.0, 4.0, 6.0}) EXPECT_NEAR(estimate_cp(p), 4.0 * (p - 1.0) / (p * p), 1e-9) << p;
}

TEST(CpEstimate, AgreesWithIndependentReducedScan) {
    for (double p : {2.5, 3.0, 5.0}) {
        const double scan = oracle::cp_reduced_scan(p);
        // The scan only samples; the estimate is an infimum, so it is not larger.
        EXPECT_LE(estimate_cp(p), scan + 1e-12);
        EXPECT_NEAR(estimate_cp(p), scan, 1e-4);
    }
}

TEST(CpEstimate, NoViolationsOnRandomPairs) {
    for (double p : {2.0, 3.0, 4.0}) EXPECT_EQ(validate_cp(p, estimate_cp(p), 200000, 42), 0);
    // Raising the constant past the infimum must produce violations.
    EXPECT_GT(validate_cp(3.0, estimate_cp(3.0) * 1.05, 200000, 42), 0);
}

TEST(CpEstimate, RejectsExponentBelowTwo) {
    try {
        estimate_cp(1.5);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::out_of_range);
    }
}

TEST(Ledger, OneDimensionalValues) {
    const auto c = constants_for(1, 2.0, 1.0);
    EXPECT_DOUBLE_EQ(c.omega_N, 2.0);
    EXPECT_DOUBLE_EQ(c.C3, 1.0 / (3.0 * c.C1));
    EXPECT_NEAR(c.C2, 0.25 / c.C1 * std::pow(1.5, -3.0) * 0.5, 1e-15);
    EXPECT_EQ(c.C4, std::min(c.C2, c.C3));
    EXPECT_DOUBLE_EQ(c.gamma_p, 2.0);
    EXPECT_DOUBLE_EQ(c.gamma_k, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(c.mu_k, 0.4);
    EXPECT_DOUBLE_EQ(c.C_of_J, 6.0);
    EXPECT_NEAR(c.C1, oracle::sinc_symbol_constant(), 0.01 * c.C1);
}

TEST(Ledger, AllConstantsPositiveAndFinite) {
    for (int N : {1, 2, 3})
        for (double p : {2.0, 3.0})
            for (double k : {0.0, 1.0}) {
                const auto c = constants_for(N, p, k);
                for (double v : {c.C1, c.C2, c.C3, c.C4, c.c_p, c.C_cor, c.C_main, c.C2_k, c.C3_k, c.C_deriv}) {
                    EXPECT_TRUE(std::isfinite(v));
                    EXPECT_GT(v, 0.0);
                }
                EXPECT_LE(c.C_main, c.C_cor);
            }
}

TEST(Ledger, DerivativeChainReducesAtKZero) {
    for (int N : {1, 2}) {
        const auto c = constants_for(N, 2.0, 0.0);
        EXPECT_NEAR(c.C2_k, c.C2, 1e-14 * c.C2);
        EXPECT_NEAR(c.C3_k, c.C3, 1e-14 * c.C3);
        EXPECT_NEAR(c.C_deriv, c.C_cor, 1e-14 * c.C_cor);
    }
}

TEST(Ledger, C4NonincreasingInC1) {
    for (double a : {1.0, 2.0, 3.0}) {
        const auto [c2a, c3a] = splitting_constants(2.0, 2.0, a);
        const auto [c2b, c3b] = splitting_constants(4.0, 2.0, a);
        EXPECT_LE(std::min(c2b, c3b), std::min(c2a, c3a));
    }
}

TEST(Ledger, MaxCombinationDominatesMin) {
    const auto c = constants_for(1, 3.0, 1.0);
    const auto m = with_max_combination(c);
    EXPECT_GE(m.C_main, c.C_main);
    EXPECT_GE(m.C_deriv, c.C_deriv);
    EXPECT_EQ(m.C1, c.C1);
}

TEST(Envelope, SimpleClosedForms) {
    // C1 = C2 = gamma = X0 = 1: t0 = 0 and X = 1/(1+t).
    for (double t : {0.0, 0.5, 3.0, 100.0}) EXPECT_NEAR(ode_envelope(1.0, 1.0, 1.0, 1.0, t), 1.0 / (1.0 + t), 1e-15);
    // X0 = e: plateau until t0 = 1.
    const auto e = ode_decay_envelope(std::exp(1.0), 1.0, 1.0, 1.0);
    EXPECT_NEAR(e.t0, 1.0, 1e-15);
    EXPECT_EQ(e(0.5), std::exp(1.0));
    EXPECT_NEAR(e(2.0), 1.0 / (std::exp(-1.0) + 1.0), 1e-15);
    EXPECT_THROW(ode_decay_envelope(0.0, 1.0, 1.0, 1.0), Error);
}

TEST(Envelope, ContinuousAndNonincreasing) {
    const auto e = ode_decay_envelope(50.0, 0.3, 2.0, 0.7);
    double prev = e(0.0);
    for (int i = 1; i <= 1000; ++i) {
        const double v = e(0.01 * i);
        EXPECT_LE(v, prev);
        prev = v;
    }
    EXPECT_NEAR(e(e.t0 + 1e-12), e(e.t0), 1e-9 * e(e.t0));
}

TEST(Envelope, LargeTimeAsymptotics) {
    const double C1 = 0.4, gamma = 1.5;
    const auto e = ode_decay_envelope(3.0, C1, 0.9, gamma);
    const double t = 1e8;
    EXPECT_NEAR(e(t) * std::pow(gamma * C1 * t, 1.0 / gamma), 1.0, 0.01);
}

TEST(Envelope, BoundsTheComparisonOdeSolution) {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> lg(-1.0, 1.0);
    for (int draw = 0; draw < 10; ++draw) {
        const double X0 = std::pow(10.0, 2.0 * lg(rng)), C1 = std::pow(10.0, lg(rng)), C2 = std::pow(10.0, lg(rng));
        const double gamma = 0.5 + 1.5 * (0.5 + 0.5 * lg(rng));
        const double dt = 1e-3;
        const long steps = 200000, every = 100;
        const auto sol = oracle::rk4_scalar(
            [&](double X) { return -std::min(C1 * std::pow(X, 1.0 + gamma), C2 * X); }, X0, dt, steps, every);
        const auto env = ode_decay_envelope(X0, C1, C2, gamma);
        for (std::size_t i = 0; i < sol.size(); ++i) {
            const double t = static_cast<double>(i) * dt * every;
            EXPECT_LE(sol[i], env(t) * (1.0 + 1e-9)) << "draw " << draw << " t " << t;
        }
    }
}

TEST(Envelope, LpEnvelopeUsesLedgerConstants) {
    const auto c = constants_for(1, 3.0, 0.0);
    const KernelBounds b{0.5, 0.8, 1.0};
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.2, 5.0);
    for (int d = 0; d < 20; ++d) {
        const double n1 = u(rng), np = u(rng);
        const double X0 = std::pow(np, 3.0);
        const double C1 = c.C_main * b.r * std::pow(b.R, 3.0) * std::pow(n1, -3.0 * c.gamma_p);
        const double C2 = c.C_main * b.r * b.R;
        for (double t : {0.0, 0.1, 1.0, 10.0, 1e3})
            EXPECT_NEAR(lp_decay_envelope(n1, np, b, c, t), ode_envelope(X0, C1, C2, c.gamma_p, t),
                        1e-12 * X0);
    }
}

TEST(Envelope, DerivativeEnvelopeAtKZeroMatchesL2Envelope) {
    const auto c = constants_for(1, 2.0, 0.0);
    const KernelBounds b{0.5, 1.0, 1.0};
    const auto a = dk_envelope(2.0, 1.3, b, c, 0.0);
    const auto l = lp_envelope(2.0, 1.3, b, c);
    for (double t : {0.0, 1.0, 50.0, 1e4}) EXPECT_NEAR(a(t), l(t), 1e-10 * l(t));
    EXPECT_THROW(dk_envelope(2.0, 1.3, b, c, 1.0), Error);
}

TEST(Envelope, RescaledEnvelopeLimits) {
    const auto c = constants_for(1, 2.0, 0.0);
    const KernelBounds b{0.5, 1.0, 1.0};
    const double n1 = 1.0, np = 0.8;
    const double eps0 = rescaled_epsilon0(n1, np, b, c);
    EXPECT_EQ(rescaled_envelope(0.5 * std::min(1.0, eps0), n1, np, b, c).t0, 0.0);
    const auto e1 = rescaled_envelope(1.0, n1, np, b, c), e2 = rescaled_envelope(0.25, n1, np, b, c);
    EXPECT_EQ(e1.rate_constant, e2.rate_constant);
    // eps -> 0 approaches the heat-type envelope with the default constant.
    const auto h = heat_envelope(n1, np, default_heat_constant(b, c), 1, 2.0);
    const auto small = rescaled_envelope(1e-3, n1, np, b, c);
    for (double t : {0.0, 1.0, 100.0}) EXPECT_NEAR(small(t), h(t), 1e-6 * h(t));
    EXPECT_EQ(heat_reference_decay(n1, np, 1.0, 1, 2.0, 0.0), np * np);
}

TEST(Envelope, SimpleConstant) {
    const std::vector<double> t{0.0, 1.0, 3.0}, v{1.0, 0.5, 0.25};
    EXPECT_DOUBLE_EQ(simple_envelope_constant(t, v, 1.0), 1.0);
    const std::vector<double> v2{1.0, 0.9, 0.25};
    EXPECT_DOUBLE_EQ(simple_envelope_constant(t, v2, 1.0), 1.8);
    EXPECT_THROW(simple_envelope_constant(std::span<const double>{}, std::span<const double>{}, 1.0), Error);
}
