#include "muse/random.hpp"
#include "stats_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

using muse::PhiloxBlock;
using muse::Stream;

// Known-answer vectors from the Random123 distribution (kat_vectors).
TEST(Philox, KnownAnswerZero) {
    const PhiloxBlock out = muse::philox4x32_10({0, 0, 0, 0}, {0, 0});
    EXPECT_EQ(out, (PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerAllOnes) {
    const PhiloxBlock out =
        muse::philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    EXPECT_EQ(out, (PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
    const PhiloxBlock out =
        muse::philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    EXPECT_EQ(out, (PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(Stream, SamePathSameDraws) {
    Stream a = muse::derive_substream(42, {3, 1, 4});
    Stream b = muse::derive_substream(42, {3, 1, 4});
    for (int i = 0; i < 100; ++i) ASSERT_EQ(a(), b());
}

TEST(Stream, NestedDerivationEqualsPath) {
    const Stream root = Stream::root(9);
    EXPECT_EQ(root.child(5).child(7).key(), muse::derive_substream(9, {5, 7}).key());
    const std::uint64_t path[] = {1, 2, 3};
    EXPECT_EQ(root.child(path).key(), root.child(1).child(2).child(3).key());
    EXPECT_EQ(muse::SeedSpec{9}.root().key(), root.key());
}

TEST(Stream, DistinctChildrenAndSeeds) {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (std::uint64_t seed = 0; seed < 4; ++seed)
        for (std::uint64_t i = 0; i < 256; ++i) {
            const auto k = Stream::root(seed).child(i).key();
            seen.insert({(std::uint64_t{k.key[0]} << 32) | k.key[1], k.id});
        }
    EXPECT_EQ(seen.size(), 4u * 256u);
}

TEST(Stream, SiblingStreamsLookIndependent) {
    Stream a = muse::derive_substream(1, {0});
    Stream b = muse::derive_substream(1, {1});
    std::vector<double> xa(10000), xb(10000);
    for (auto& x : xa) x = a.uniform();
    for (auto& x : xb) x = b.uniform();
    EXPECT_GT(muse_test::ks_two_sample_p(xa, xb), 0.001);
}

TEST(Stream, UniformRanges) {
    Stream s = Stream::root(3);
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        const double v = s.uniform_pos();
        ASSERT_GT(v, 0.0);
        ASSERT_LE(v, 1.0);
        ASSERT_LT(s.bounded(7), 7u);
    }
}

TEST(Stream, NormalMoments) {
    Stream s = Stream::root(5);
    double sum = 0.0, sq = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.005);
    EXPECT_NEAR(sq / n, 1.0, 0.01);
}

TEST(Stream, BoundedIsUniform) {
    Stream s = Stream::root(6);
    std::vector<double> counts(10, 0.0), probs(10, 0.1);
    for (int i = 0; i < 100000; ++i) counts[s.bounded(10)] += 1.0;
    EXPECT_GT(muse_test::chi_square_p(counts, probs), 0.001);
}
