#include "lrmc/rng.hpp"

#include <gtest/gtest.h>

#include <set>

using lrmc::Philox4x32;

// Known-answer vectors of Philox4x32-10 from the Random123 distribution.
TEST(Philox, KnownAnswerZero) {
    const auto out = Philox4x32::encrypt({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (Philox4x32::Block{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
}

TEST(Philox, KnownAnswerOnes) {
    const auto out = Philox4x32::encrypt({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff});
    EXPECT_EQ(out, (Philox4x32::Block{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
}

TEST(Philox, KnownAnswerPi) {
    const auto out =
        Philox4x32::encrypt({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0});
    EXPECT_EQ(out, (Philox4x32::Block{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, SameSeedSameSequence) {
    Philox4x32 a(42, 3), b(42, 3);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(Philox, StreamsDiffer) {
    Philox4x32 a(42, 0), b(42, 1);
    int same = 0;
    for (int i = 0; i < 1000; ++i) same += a() == b();
    EXPECT_LT(same, 3);
}

TEST(Philox, DiscardMatchesStepping) {
    for (std::uint64_t skip : {0u, 1u, 3u, 4u, 5u, 17u, 1000u}) {
        Philox4x32 a(7), b(7);
        for (std::uint64_t i = 0; i < skip; ++i) a();
        b.discard(skip);
        for (int i = 0; i < 10; ++i) ASSERT_EQ(a(), b()) << "skip " << skip;
    }
}

TEST(Philox, FirstBlockIsEncryptedCounter) {
    Philox4x32 g(0, 0);
    const auto expected = Philox4x32::encrypt({0, 0, 0, 0}, {0, 0});
    for (int i = 0; i < 4; ++i) EXPECT_EQ(g(), expected[i]);
}

TEST(Philox, DeriveSeedIsInjectiveOnSmallRange) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t base : {0ull, 1ull, 99ull})
        for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(lrmc::derive_seed(base, i));
    EXPECT_EQ(seen.size(), 3000u);
    EXPECT_EQ(lrmc::derive_seed(5, 6), lrmc::derive_seed(5, 6));
}

TEST(Philox, UniformBitsLookBalanced) {
    Philox4x32 g(2024);
    int ones = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) ones += __builtin_popcount(g());
    EXPECT_NEAR(static_cast<double>(ones) / (32.0 * draws), 0.5, 0.002);
}
