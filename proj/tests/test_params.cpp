#include <gtest/gtest.h>

#include <cmath>

#include "sixv/dynamics.hpp"
#include "sixv/params.hpp"
#include "sixv/walk.hpp"

using namespace sixv;

namespace {

// independent series oracles, geometric tails cut at 1e-16 relative term size
double lambda_series(double b1, double b2, double rho) {
    const double tau = b2 / b1;
    double e = 0.0;
    for (int n = 0;; ++n) {
        double w;
        if (n == 0) w = b1;
        else w = (1.0 - b1) * (1.0 - b2) * std::pow(b2, n - 1);
        const double term = w * std::pow(tau, -rho * n);
        e += term;
        if (n > 0 && term < 1e-16 * e) break;
    }
    return 1.0 / e;
}

double mu_series(double b1, double b2, double rho) {
    const double tau = b2 / b1;
    const double lam = lambda_series(b1, b2, rho);
    double m = 0.0;
    for (int n = 1;; ++n) {
        const double term = lam * n * (1.0 - b1) * (1.0 - b2) * std::pow(b2, n - 1) *
                            std::pow(tau, -rho * n);
        m += term;
        if (term < 1e-16 * m) break;
    }
    return m;
}

} // namespace

TEST(Params, ClosedFormMatchesSeriesOracle) {
    const auto lm = ModelParams::derive_lambda_mu(0.6, 0.3, 0.5);
    EXPECT_NEAR(lm[0], 0.77654, 2e-5);
    EXPECT_NEAR(lm[1], 0.92766, 2e-5);
    for (auto [b1, b2, rho] : {std::array{0.6, 0.3, 0.5}, std::array{0.5, 0.45, 0.2},
                               std::array{0.8, 0.1, 0.9}, std::array{0.3, 0.2, 0.35}}) {
        const auto v = ModelParams::derive_lambda_mu(b1, b2, rho);
        EXPECT_NEAR(v[0], lambda_series(b1, b2, rho), 1e-12 * v[0]);
        EXPECT_NEAR(v[1], mu_series(b1, b2, rho), 1e-12 * v[1]);
    }
}

TEST(Params, SymmetricPointCollapsesToOne) {
    // tau -> 1: both formulas collapse to 1
    const auto lm = ModelParams::derive_lambda_mu(0.6, 0.6 * (1.0 - 1e-10), 0.37);
    EXPECT_NEAR(lm[0], 1.0, 1e-9);
    EXPECT_NEAR(lm[1], 1.0, 1e-9);
}

TEST(Params, DomainValidation) {
    EXPECT_THROW(ModelParams::general(0.6, 0.7, 0.5), std::invalid_argument);  // b2 > b1
    EXPECT_THROW(ModelParams::general(0.6, 0.3, 0.0), std::invalid_argument);  // rho closed end
    EXPECT_THROW(ModelParams::general(0.6, 0.3, 1.0), std::invalid_argument);
    EXPECT_THROW(ModelParams::general(1.2, 0.3, 0.5), std::invalid_argument);
    EXPECT_THROW(ModelParams::weak(0.6, 0.0, 0.5), std::invalid_argument);
}

TEST(Params, WeakAsymmetryConstruction) {
    const auto p = ModelParams::weak(0.6, 0.04, 0.5);
    EXPECT_DOUBLE_EQ(p.b2, 0.6 * std::exp(-0.2));
    EXPECT_DOUBLE_EQ(p.tau, p.b2 / p.b1);
    EXPECT_TRUE(p.weak_asymmetry);
    EXPECT_LT(p.tilt_ratio(), 1.0);
}

TEST(Params, ExpansionResidualsAreOrderEps) {
    // lambda_eps - (1 - rho sqrt(eps)) and the mu analogue are O(eps):
    // residual/eps stays bounded across the grid (constant frozen from the
    // eps = 1e-2 value with slack)
    const std::vector<double> grid = {1e-2, 1e-3, 1e-4};
    for (double b1 : {0.3, 0.6}) {
        for (double rho : {0.25, 0.5, 0.75}) {
            const auto rows = expansion_check(b1, rho, grid);
            const double c_lambda = std::fabs(rows[0].lambda_residual) / grid[0];
            const double c_mu = std::fabs(rows[0].mu_residual) / grid[0];
            for (const auto& r : rows) {
                EXPECT_LE(std::fabs(r.lambda_residual) / r.eps, 1.5 * c_lambda + 1e-9);
                EXPECT_LE(std::fabs(r.mu_residual) / r.eps, 1.5 * c_mu + 1e-9);
            }
        }
    }
    // eps = 0 entry is exactly zero
    const auto z = expansion_check(0.6, 0.5, {0.0});
    EXPECT_EQ(z[0].lambda_residual, 0.0);
    EXPECT_EQ(z[0].mu_residual, 0.0);
}

TEST(Params, MuFirstOrderCoefficientVanishesAtHalfDensity) {
    // (b1 - 2 b1 rho)/(b1 - 1) = 0 at rho = 1/2, so mu_eps - 1 = O(eps)
    for (double e : {1e-2, 1e-3, 1e-4}) {
        const auto p = ModelParams::weak(0.5, e, 0.5);
        EXPECT_LE(std::fabs(p.mu - 1.0), 0.8 * e);
    }
}

TEST(Params, TiltTermsOfOrderEpsMinus32Cancel) {
    // -sqrt(eps) rho mu_eps e^-2 t - e^-2 t log(lambda_eps) = O(e^-1) t
    for (double e : {1e-2, 1e-3, 1e-4}) {
        const auto p = ModelParams::weak(0.6, e, 0.5);
        const double per_t = -std::sqrt(e) * p.rho * p.mu / (e * e) - std::log(p.lambda) / (e * e);
        EXPECT_LE(std::fabs(per_t), 2.0 / e);
    }
}

TEST(VertexWeightsTest, StochasticRowsSumToOne) {
    const auto w = VertexWeights::stochastic(0.6, 0.3);
    for (int vi = 0; vi <= 1; ++vi) {
        for (int hi = 0; hi <= 1; ++hi) {
            double s = 0.0;
            for (int vo = 0; vo <= 1; ++vo)
                for (int ho = 0; ho <= 1; ++ho) s += w.output_weight(vi, hi, vo, ho);
            EXPECT_DOUBLE_EQ(s, 1.0);
        }
    }
    // conservation: unbalanced patterns carry no weight
    EXPECT_EQ(VertexWeights::type_of(1, 1, 0, 0), -1);
    EXPECT_EQ(VertexWeights::type_of(1, 0, 1, 1), -1);
    EXPECT_DOUBLE_EQ(w.output_weight(1, 0, 1, 0), 0.6);
    EXPECT_DOUBLE_EQ(w.output_weight(0, 1, 0, 1), 0.3);
    EXPECT_DOUBLE_EQ(w.output_weight(1, 0, 0, 1), 0.4);
    EXPECT_DOUBLE_EQ(w.output_weight(0, 1, 1, 0), 0.7);
}

TEST(SymmetricMapTest, FigureTwoPoint) {
    const auto m = map_symmetric_to_stochastic(0.201, 0.1, 0.1);
    EXPECT_NEAR(m.Delta, 1.005, 1e-3);
    EXPECT_GT(m.b1, m.b2);
    EXPECT_NEAR(m.b1 * m.b2, (0.1 / 0.201) * (0.1 / 0.201), 1e-12);
}

TEST(SymmetricMapTest, RoundTrip) {
    for (auto [b1, b2] : {std::pair{0.6, 0.3}, std::pair{0.8, 0.15}, std::pair{0.45, 0.4}}) {
        const auto abc = stochastic_to_symmetric(b1, b2);
        const auto m = map_symmetric_to_stochastic(abc[0], abc[1], abc[2]);
        EXPECT_NEAR(m.b1, b1, 1e-12);
        EXPECT_NEAR(m.b2, b2, 1e-12);
        EXPECT_NEAR(m.Delta, (b1 + b2) / (2.0 * std::sqrt(b1 * b2)), 1e-12);
    }
}

TEST(SymmetricMapTest, PhaseErrors) {
    EXPECT_THROW(map_symmetric_to_stochastic(1.0, 1.0, 1.0), std::domain_error);   // Delta <= 1
    EXPECT_THROW(map_symmetric_to_stochastic(0.15, 0.1, 0.1), std::domain_error);  // a <= b+c
}

TEST(BaxterTest, ProjectiveParametrization) {
    const auto b = baxter_weights(0.1, 0.05);
    EXPECT_DOUBLE_EQ(b.a, std::sinh(0.15));
    EXPECT_DOUBLE_EQ(b.b, std::sinh(0.1));
    EXPECT_DOUBLE_EQ(b.c, std::sinh(0.05));
    EXPECT_DOUBLE_EQ(b.Delta, std::cosh(0.05));
    EXPECT_NEAR(b.Delta, 1.00125, 1e-4);
    // addition formula: a - b cosh(eta) = cosh(u) sinh(eta) > 0
    EXPECT_NEAR(b.a - b.b * std::cosh(0.05), std::cosh(0.1) * std::sinh(0.05), 1e-14);
    // eta -> 0+ gives Delta -> 1+
    EXPECT_NEAR(baxter_weights(0.1, 1e-8).Delta, 1.0, 1e-15);
}

TEST(ConicalDensityTest, EndpointsAndDirectValue) {
    EXPECT_DOUBLE_EQ(conical_density(0.0, 0.1, 0.05, -1), 0.0);
    EXPECT_DOUBLE_EQ(conical_density(1.0, 0.1, 0.05, -1), 1.0);
    EXPECT_NEAR(conical_density(0.5, 0.1, 0.05, -1), 0.5 * (1.0 - std::tanh(0.15)), 1e-15);
}

TEST(ConicalDensityTest, MatchesStationaryFluxAsEtaVanishes) {
    // With (b1,b2) from the Baxter point, the - branch meets the
    // stationarity relation of the dynamics and the + branch its diagonal
    // reflection (densities swapped), both to O(eta).
    const double u = 0.1, eta = 1e-4;
    const auto bx = baxter_weights(u, eta);
    const auto m = map_symmetric_to_stochastic(bx.a, bx.b, bx.c);
    const auto p = ModelParams::general(m.b1, m.b2, 0.5);
    ModelParams swapped = p;
    std::swap(swapped.b1, swapped.b2);  // diagonally reflected relation; tilt unused
    for (double v : {0.2, 0.5, 0.8}) {
        EXPECT_NEAR(conical_density(v, u, eta, -1), stationary_h(v, p), 20.0 * eta);
        EXPECT_NEAR(conical_density(v, u, eta, +1), stationary_h(v, swapped), 20.0 * eta);
    }
}
