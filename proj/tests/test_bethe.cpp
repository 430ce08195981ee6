#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sixv/bethe.hpp"
#include "sixv/enumerate.hpp"
#include "sixv/walk.hpp"

using namespace sixv;

namespace {
const ModelParams kP = ModelParams::general(0.6, 0.3, 0.5);
}

TEST(Bethe, OneParticleOneStepIsTheWalkLaw) {
    for (int64_t d = 0; d <= 10; ++d) {
        KernelQuery q{{0}, {d}, 1};
        const auto kv = transition_prob(kP, q);
        EXPECT_NEAR(kv.value, walk_pmf(kP, d), 1e-12);
        EXPECT_TRUE(kv.accepted());
    }
}

TEST(Bethe, ZeroStepKernelIsTheIdentity) {
    for (auto& [src, tgt, expect] :
         std::vector<std::tuple<std::vector<int64_t>, std::vector<int64_t>, double>>{
             {{0}, {0}, 1.0}, {{0}, {3}, 0.0}, {{0, 1}, {0, 1}, 1.0}, {{0, 1}, {0, 2}, 0.0}}) {
        KernelQuery q{src, tgt, 0};
        EXPECT_NEAR(transition_prob(kP, q).value, expect, 1e-12);
    }
}

TEST(Bethe, TwoParticleMatchesEnumeration) {
    ParticleEnumerator en(kP, {0, 1}, 1e-18);
    en.run(2);
    double worst = 0.0;
    for (const auto& [cfg, pr] : en.distribution()) {
        if (pr < 1e-11) continue;
        KernelQuery q{{0, 1}, cfg, 2};
        worst = std::max(worst, std::fabs(transition_prob(kP, q).value - pr));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Bethe, SeriesFastPathAgreesWithDirectLoop) {
    ContourSpec c = default_kernel_contour(kP, 2);
    for (auto [x1, x2] : {std::pair{0LL, 1LL}, std::pair{2LL, 5LL}, std::pair{1LL, 9LL}}) {
        KernelQuery q{{0, 1}, {x1, x2}, 2};
        const double fast = transition_prob(kP, q, c, {false}).value;
        const double direct = transition_prob(kP, q, c, {true}).value;
        EXPECT_NEAR(fast, direct, 1e-12);
    }
}

TEST(Bethe, RadiusIndependence) {
    ContourSpec c = default_kernel_contour(kP, 2);
    ContourSpec c2 = c;
    c2.radius = 1.6 * c.radius;
    for (auto [x1, x2] : {std::pair{0LL, 2LL}, std::pair{1LL, 4LL}}) {
        KernelQuery q{{0, 1}, {x1, x2}, 2};
        EXPECT_NEAR(transition_prob(kP, q, c).value, transition_prob(kP, q, c2).value, 1e-9);
    }
}

TEST(Bethe, NormalizationOverAWideWindow) {
    // total mass over all reachable targets is 1 for k in {1,2}, t <= 4.
    // Values whose honest quadrature error bar exceeds the working
    // tolerance are far outside the support and enter as zero (their
    // true mass is below it).
    for (int64_t t = 1; t <= 4; ++t) {
        double total1 = 0.0;
        for (int64_t x = 0; x <= 25 + 10 * t; ++x) {
            KernelQuery q{{0}, {x}, t};
            const auto kv = transition_prob(kP, q);
            if (kv.est_error <= 3e-9) total1 += kv.value;
        }
        EXPECT_NEAR(total1, 1.0, 1e-8) << "k=1 t=" << t;
    }
    for (int64_t t : {2, 3}) {
        double total = 0.0;
        for (int64_t x1 = 0; x1 <= 28; ++x1)
            for (int64_t x2 = x1 + 1; x2 <= 29; ++x2) {
                KernelQuery q{{0, 1}, {x1, x2}, t};
                const auto kv = transition_prob(kP, q);
                if (kv.est_error <= 3e-9) total += kv.value;
            }
        EXPECT_NEAR(total, 1.0, 1e-8) << "k=2 t=" << t;
    }
}

TEST(Bethe, ReversalIdentity) {
    // Pbar(y -> y'; t) = P(y' -> y; t), checked between the reflected
    // contour evaluation and the forward one
    for (int64_t t : {1, 2}) {
        for (auto [y1p, y2p] : {std::pair{-2LL, 0LL}, std::pair{-3LL, 1LL}, std::pair{0LL, 1LL}}) {
            KernelQuery rev{{0, 2}, {y1p, y2p}, t};     // reversed chain from (0,2)
            KernelQuery fwd{{y1p, y2p}, {0, 2}, t};     // forward chain back
            const double lhs = reversed_transition_prob(kP, rev).value;
            const double rhs = transition_prob(kP, fwd).value;
            EXPECT_NEAR(lhs, rhs, 1e-10);
        }
    }
}

TEST(Bethe, ReversedKernelMatchesReflectedEnumeration) {
    const auto rev = ParticleEnumerator::reversed_distribution(kP, {0, 2}, 2);
    double worst = 0.0;
    for (const auto& [cfg, pr] : rev) {
        if (pr < 1e-10) continue;
        KernelQuery q{{0, 2}, cfg, 2};
        worst = std::max(worst, std::fabs(reversed_transition_prob(kP, q).value - pr));
    }
    EXPECT_LT(worst, 1e-9);
}

TEST(Bethe, PoleInventoryAndGuards) {
    const auto inv1 = kernel_pole_inventory(kP, 1);
    EXPECT_GT(inv1.radius, kP.b2);
    const auto inv2 = kernel_pole_inventory(kP, 2);
    EXPECT_GT(inv2.radius, 1.0 + kP.tau);
    EXPECT_LT(inv2.interaction, inv2.radius);
    // overflow guard rejects absurd exponents instead of returning junk
    KernelQuery q{{0, 1}, {4000, 4001}, 1};
    EXPECT_THROW(transition_prob(kP, q), std::domain_error);
    // malformed queries
    KernelQuery bad{{1, 0}, {0, 1}, 1};
    EXPECT_THROW(transition_prob(kP, bad), std::invalid_argument);
}

TEST(Bethe, ThreeParticleSmokeAgainstEnumeration) {
    ParticleEnumerator en(kP, {0, 1, 3}, 1e-16);
    en.step();
    ContourSpec c = default_kernel_contour(kP, 3);
    c.adaptive = false;
    c.start_nodes = 180;
    double worst = 0.0;
    for (const auto& [cfg, pr] : en.distribution()) {
        if (pr < 1e-3) continue;  // a handful of leading outcomes
        KernelQuery q{{0, 1, 3}, cfg, 1};
        worst = std::max(worst, std::fabs(transition_prob(kP, q, c).value - pr));
    }
    EXPECT_LT(worst, 1e-6);
}
