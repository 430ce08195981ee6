#include <gtest/gtest.h>

#include <map>

#include "sixv/enumerate.hpp"
#include "sixv/walk.hpp"

using namespace sixv;

TEST(ParticleEnum, SingleParticleOneStepIsTheWalkLaw) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    ParticleEnumerator en(p, {0});
    en.step();
    for (int64_t d = 0; d <= 20; ++d)
        EXPECT_NEAR(en.probability_of({d}), walk_pmf(p, d), 1e-15);
    double total = 0.0;
    for (const auto& [cfg, pr] : en.distribution()) total += pr;
    EXPECT_NEAR(total + en.dropped_mass(), 1.0, 1e-14);
}

TEST(ParticleEnum, TwoParticleHandCases) {
    // rule (a)/(b) enumeration: P((0,1)->(0,2)) = 0.6*0.28 and
    // P((0,1)->(1,2)) = 0.4*0.7 (collision then forced move)
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    ParticleEnumerator en(p, {0, 1});
    en.step();
    EXPECT_NEAR(en.probability_of({0, 2}), 0.168, 1e-15);
    EXPECT_NEAR(en.probability_of({1, 2}), 0.28, 1e-15);
    EXPECT_NEAR(en.probability_of({0, 1}), 0.6 * 0.6, 1e-15);
}

TEST(ParticleEnum, ReversedDistributionIsReflection) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    const auto rev = ParticleEnumerator::reversed_distribution(p, {0, 2}, 1);
    ParticleEnumerator fwd(p, ParticleEnumerator::reflect({0, 2}));
    fwd.step();
    for (const auto& [cfg, pr] : rev) {
        EXPECT_NEAR(pr, fwd.probability_of(ParticleEnumerator::reflect(cfg)), 1e-15);
        // reversed particles only move left
        EXPECT_LE(cfg[1], 2);
    }
}

TEST(DriverEnum, EmptyWindowIsFrozen) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    DriverEnumerator en(p, 0, std::vector<uint8_t>(5, 0));
    en.run(3);
    const auto outs = en.outcomes();
    ASSERT_EQ(outs.size(), 1u);
    EXPECT_DOUBLE_EQ(outs[0].prob, 1.0);
    for (auto c : outs[0].crossings) EXPECT_EQ(c, 0);
}

TEST(DriverEnum, TotalProbabilityIsExactlyOne) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    for (int cfg = 0; cfg < 16; ++cfg) {
        std::vector<uint8_t> occ;
        for (int i = 0; i < 4; ++i) occ.push_back(static_cast<uint8_t>((cfg >> i) & 1));
        DriverEnumerator en(p, 0, occ);
        en.run(3);
        double total = 0.0;
        for (const auto& o : en.outcomes()) total += o.prob;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(DriverEnum, MatchesSequentialEnumerationInLaw) {
    // one-step distributions of the two update descriptions coincide:
    // total variation < 1e-12 on every window of <= 4 sites
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    const int ext = 40;  // extension so no flight escapes above the tail cut
    double worst_tv = 0.0;
    for (int cfg = 0; cfg < 16; ++cfg) {
        std::vector<uint8_t> occ(static_cast<std::size_t>(4 + ext), 0);
        ParticleConfig parts;
        for (int i = 0; i < 4; ++i) {
            occ[static_cast<std::size_t>(i)] = static_cast<uint8_t>((cfg >> i) & 1);
            if (occ[static_cast<std::size_t>(i)]) parts.push_back(i);
        }
        DriverEnumerator de(p, 0, occ);
        de.step();
        std::map<ParticleConfig, double> parallel_law;
        for (const auto& o : de.outcomes()) {
            ParticleConfig ps;
            for (std::size_t i = 0; i < o.occ.size(); ++i)
                if (o.occ[i]) ps.push_back(static_cast<int64_t>(i));
            parallel_law[ps] += o.prob;
        }
        std::map<ParticleConfig, double> sequential_law;
        if (parts.empty()) {
            sequential_law[{}] = 1.0;
        } else {
            ParticleEnumerator pe(p, parts);
            pe.step();
            sequential_law = pe.distribution();
        }
        double tv = 0.0;
        for (const auto& [c, pr] : sequential_law) {
            auto it = parallel_law.find(c);
            tv += std::fabs(pr - (it == parallel_law.end() ? 0.0 : it->second));
        }
        for (const auto& [c, pr] : parallel_law)
            if (!sequential_law.count(c)) tv += pr;
        worst_tv = std::max(worst_tv, 0.5 * tv);
    }
    EXPECT_LT(worst_tv, 1e-12);
}

TEST(DriverEnum, HeightsDecrementsAndOccupancyStayConsistent) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    std::vector<uint8_t> occ = {1, 1, 0, 1, 0, 0, 0};
    DriverEnumerator en(p, 0, occ);
    en.run(2);
    const auto n0 = en.initial_heights();
    for (const auto& o : en.outcomes()) {
        // every crossing count within [0, t]
        for (auto c : o.crossings) {
            EXPECT_GE(c, 0);
            EXPECT_LE(c, 2);
        }
        // spatial increments of the terminal height equal the occupancy
        for (std::size_t i = 1; i < o.occ.size(); ++i) {
            const int left = n0[i - 1] - o.crossings[i - 1];
            const int right = n0[i] - o.crossings[i];
            EXPECT_EQ(right - left, static_cast<int>(o.occ[i]));
        }
    }
}

TEST(DriverEnum, CapsAreEnforced) {
    const auto p = ModelParams::general(0.6, 0.3, 0.5);
    EXPECT_THROW(DriverEnumerator(p, 0, std::vector<uint8_t>(64, 0)), std::invalid_argument);
    DriverEnumerator en(p, 0, std::vector<uint8_t>(3, 1));
    EXPECT_THROW(en.run(DriverEnumerator::kMaxSteps + 1), std::runtime_error);
}
