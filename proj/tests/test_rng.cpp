#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "svfar/rng.hpp"

using svfar::Rng;

// Known-answer vectors from the Random123 distribution (philox4x32, 10 rounds).
TEST(Rng, PhiloxKnownAnswers) {
    EXPECT_EQ(Rng::philox({0, 0, 0, 0}, {0, 0}), (Rng::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
    EXPECT_EQ(Rng::philox({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
              (Rng::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
    EXPECT_EQ(Rng::philox({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
              (Rng::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Rng, SameSeedSameStream) {
    Rng a(42, 3), b(42, 3);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
    Rng c(42, 4);
    Rng d(42, 3);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += c.next_u32() == d.next_u32();
    EXPECT_LT(same, 3);
}

TEST(Rng, UniformAndNormalMoments) {
    Rng rng(7);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Rng, BelowIsInRangeAndPermutationIsBijective) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.below(7), 7u);
    auto perm = svfar::permutation(50, rng);
    std::sort(perm.begin(), perm.end());
    std::vector<std::size_t> iota(50);
    std::iota(iota.begin(), iota.end(), 0);
    EXPECT_EQ(perm, iota);
}

TEST(Rng, SplitStreamsDiffer) {
    const Rng root(9);
    Rng a = root.split(0), b = root.split(1);
    EXPECT_NE(a.next_u64(), b.next_u64());
    Rng a2 = root.split(0);
    Rng a3 = root.split(0);
    EXPECT_EQ(a2.next_u64(), a3.next_u64());
}
