#include "muse/process.hpp"
#include "stats_helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace muse;

namespace {

Gbm reference_gbm(std::vector<double> times, double sigma = 0.2) {
    GbmParams p;
    p.dimension = 1;
    p.gamma = 0.05;
    p.div_yield = 0.0;
    p.sigma = sigma;
    p.spot = 100.0;
    p.times = std::move(times);
    return Gbm(p);
}

} // namespace

TEST(History, PushPopAndSlots) {
    TrajectoryHistory h(2);
    EXPECT_TRUE(h.empty());
    const double a[] = {1.0, 2.0};
    h.push(a);
    auto slot = h.next_slot();
    slot[0] = 3.0;
    slot[1] = 4.0;
    EXPECT_EQ(h.stage(), 1u);
    h.commit();
    EXPECT_EQ(h.stage(), 2u);
    EXPECT_EQ(h.state(1)[1], 2.0);
    EXPECT_EQ(h.last()[0], 3.0);
    h.pop();
    EXPECT_EQ(h.stage(), 1u);
    EXPECT_EQ(h.last()[0], 1.0);
}

TEST(Gbm, ZeroVolatilityStep) {
    const Gbm g = reference_gbm({0.0, 1.0}, 0.0);
    TrajectoryHistory h(1);
    Stream s = Stream::root(1);
    double x[1];
    g.draw_next(h, s, x);
    EXPECT_DOUBLE_EQ(x[0], 100.0);
    h.push(x);
    g.draw_next(h, s, x);
    EXPECT_DOUBLE_EQ(x[0], 100.0 * std::exp(0.05));
}

TEST(Gbm, LognormalMeanAfterOneYear) {
    const Gbm g = reference_gbm({1.0});
    TrajectoryHistory h(1);
    Stream s = Stream::root(2);
    const int n = 1000000;
    double sum = 0.0, x[1];
    for (int i = 0; i < n; ++i) {
        g.draw_next(h, s, x);
        sum += x[0];
    }
    EXPECT_NEAR(sum / n, 100.0 * std::exp(0.05), 0.1);
}

TEST(Gbm, DiscountedPricesAreMartingale) {
    const Gbm g = reference_gbm({0.0, 1.0, 2.0, 3.0});
    Stream s = Stream::root(3);
    const int n = 1000000;
    std::vector<double> sum(4, 0.0), sq(4, 0.0);
    TrajectoryHistory h(1);
    h.reserve(4);
    for (int i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            auto slot = h.next_slot();
            g.draw_next(h, s, slot);
            h.commit();
            const double v = std::exp(-0.05 * static_cast<double>(k)) * slot[0];
            sum[k] += v;
            sq[k] += v * v;
        }
        for (int k = 0; k < 4; ++k) h.pop();
    }
    for (std::size_t k = 0; k < 4; ++k) {
        const double mean = sum[k] / n;
        const double se = std::sqrt(std::max(0.0, sq[k] / n - mean * mean) / n);
        EXPECT_LE(std::abs(mean - 100.0), 5.0 * se + 1e-9) << "stage " << k + 1;
    }
}

TEST(Gbm, SuccessorDependsOnlyOnLastState) {
    const Gbm g = reference_gbm({0.0, 1.0, 2.0});
    TrajectoryHistory h1(1), h2(1);
    const double first_a[] = {80.0}, first_b[] = {130.0}, last[] = {100.0};
    h1.push(first_a);
    h1.push(last);
    h2.push(first_b);
    h2.push(last);
    Stream s1 = Stream::root(4), s2 = Stream::root(5);
    const auto a = sample_next(g, h1, 100000, s1);
    const auto b = sample_next(g, h2, 100000, s2);
    std::vector<double> xa, xb;
    for (const auto& v : a) xa.push_back(v[0]);
    for (const auto& v : b) xb.push_back(v[0]);
    EXPECT_GT(muse_test::ks_two_sample_p(xa, xb), 0.001);
}

TEST(Gbm, RejectsBadParameters) {
    EXPECT_THROW(reference_gbm({0.0, 1.0}, -0.1), ConfigError);
    EXPECT_THROW(reference_gbm({1.0, 1.0}), ConfigError);
    EXPECT_THROW(reference_gbm({0.0, NAN}), ConfigError);
    GbmParams p;
    p.spot = 0.0;
    EXPECT_THROW(Gbm{p}, ConfigError);
}

TEST(GaussianIid, DrawsAreStandardNormal) {
    const GaussianIid g(1, 3);
    TrajectoryHistory h(1);
    Stream s = Stream::root(6);
    EXPECT_EQ(sample_next(g, h, 3, s).size(), 3u);
    const auto draws = sample_next(g, h, 1000000, s);
    double sum = 0.0;
    for (const auto& x : draws) sum += x[0];
    EXPECT_NEAR(sum / 1e6, 0.0, 0.005);
}

TEST(GaussianIid, CannotSamplePastHorizon) {
    const GaussianIid g(1, 1);
    TrajectoryHistory h(1);
    const double x[] = {0.0};
    h.push(x);
    Stream s = Stream::root(7);
    EXPECT_THROW(sample_next(g, h, 1, s), ContractViolation);
    EXPECT_THROW(sample_next(g, TrajectoryHistory(1), 0, s), ContractViolation);
}

TEST(UserDiscrete, ExactConditionalMean) {
    const UserDiscrete sym({0.0, 2.0}, {{{0.5, 0.5}}});
    const UserDiscrete point({0.0, 7.0}, {{{0.0, 1.0}}});
    const UserDiscrete weighted({10.0, 20.0}, {{{0.3, 0.7}}});
    const TrajectoryHistory h(1);
    const double id2[] = {0.0, 2.0};
    const double pt[] = {0.0, 7.0};
    const double w[] = {10.0, 20.0};
    EXPECT_DOUBLE_EQ(sym.exact_conditional_mean(h, id2), 1.0);
    EXPECT_DOUBLE_EQ(point.exact_conditional_mean(h, pt), 7.0);
    EXPECT_NEAR(weighted.exact_conditional_mean(h, w), 17.0, 1e-12);
    EXPECT_NEAR(ProcessSpec(weighted).exact_conditional_mean(h, w), 17.0, 1e-12);
}

TEST(UserDiscrete, ConditionalMeanUnsupportedElsewhere) {
    const ProcessSpec spec(GaussianIid(1, 2));
    const double p[] = {1.0};
    EXPECT_THROW(static_cast<void>(spec.exact_conditional_mean(TrajectoryHistory(1), p)), UnsupportedError);
}

TEST(UserDiscrete, TransitionFrequenciesMatchRows) {
    const UserDiscrete d({0.0, 1.0, 4.0},
                         {{{0.2, 0.3, 0.5}}, {{0.6, 0.4, 0.0}, {0.1, 0.1, 0.8}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}});
    Stream s = Stream::root(8);
    for (std::size_t from = 0; from < 3; ++from) {
        TrajectoryHistory h(1);
        const double x[] = {d.support()[from]};
        h.push(x);
        std::vector<double> counts(3, 0.0);
        for (const auto& v : sample_next(d, h, 100000, s)) counts[d.index_of(v[0])] += 1.0;
        EXPECT_GT(muse_test::chi_square_p(counts, d.transitions()[1][from]), 0.001) << "row " << from;
    }
    std::vector<double> counts(3, 0.0);
    for (const auto& v : sample_next(d, TrajectoryHistory(1), 100000, s)) counts[d.index_of(v[0])] += 1.0;
    EXPECT_GT(muse_test::chi_square_p(counts, d.transitions()[0][0]), 0.001);
}

TEST(UserDiscrete, RejectsMalformedRows) {
    EXPECT_THROW(UserDiscrete({0.0, 1.0}, {{{0.5, 0.6}}}), ConfigError);
    EXPECT_THROW(UserDiscrete({0.0, 1.0}, {{{0.5, 0.5}}, {{1.0, 0.0}}}), ConfigError);
    EXPECT_THROW(UserDiscrete({0.0, 0.0}, {{{0.5, 0.5}}}), ConfigError);
    EXPECT_THROW(UserDiscrete({0.0, 1.0}, {{{1.5, -0.5}}}), ConfigError);
    EXPECT_NO_THROW(UserDiscrete({0.0, 1.0}, {{{0.5, 0.5 + 5e-13}}}));
}
