#include "muse/baselines.hpp"
#include "muse/config.hpp"
#include "muse/stopping.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

using namespace muse;

namespace {

ExperimentConfig fixture(const char* name) {
    return experiment_from_json(load_json_file(std::string(MUSE_CONFIG_DIR) + "/" + name));
}

PolicyConfig policy(std::size_t n, Tolerance tol, std::size_t T) {
    PolicyConfig c;
    c.inner_replicates = n;
    c.tolerance = tol;
    c.schedule = RateSchedule::constant(0.6, T);
    return c;
}

} // namespace

TEST(Tolerance, Validation) {
    EXPECT_THROW(Tolerance::fixed(-0.1), ConfigError);
    EXPECT_THROW(Tolerance::adaptive(0.0), DomainError);
    BatchSummary b;
    b.n = 100;
    b.std_error = 0.1;
    EXPECT_NEAR(Tolerance::adaptive(0.05).resolve(b), 0.1959963984540054, 1e-12);
    EXPECT_EQ(Tolerance::fixed(0.3).resolve(b), 0.3);
    b.n = 1;
    EXPECT_EQ(Tolerance::adaptive(0.05).resolve(b), 0.0);
}

TEST(Policy, InfiniteToleranceStopsAtOnce) {
    const GaussianIid g(1, 3);
    const auto cfg = policy(10, Tolerance::fixed(std::numeric_limits<double>::infinity()), 3);
    const auto run = run_stopping_policy(g, IdentityReward{}, cfg, 200, 1, Stream::root(1));
    for (const auto& o : run.outcomes) {
        ASSERT_EQ(o.tau, 1u);
        ASSERT_EQ(o.diagnostics.size(), 1u);
        ASSERT_EQ(o.diagnostics[0].action, StageAction::Stop);
    }
}

TEST(Policy, DominantRewardStops) {
    const auto fx = fixture("discrete_t3_skewed.json");
    const auto cfg = policy(50, Tolerance::fixed(0.0), 3);
    const auto& support = std::get<UserDiscrete>(fx.process.variant()).support();
    for (double x1 : support) {
        TrajectoryHistory h(1);
        const double x[] = {x1};
        h.push(x);
        const auto d = decide_stop(fx.process, fx.reward, h, 1, 9.0 + 1.0, cfg, Stream::root(2));
        EXPECT_EQ(d.action, StageAction::Stop) << x1;
        EXPECT_EQ(h.stage(), 1u);
    }
}

TEST(Policy, ContinuesWhenContinuationClearlyHigher) {
    const auto fx = fixture("continue_fixture.json");
    // Continuation value 10, successor sd 1, so n = 100 gives std error 0.1.
    EXPECT_DOUBLE_EQ(discrete_dp_oracle(fx.process, fx.reward), 10.0);
    const auto cfg = policy(100, Tolerance::fixed(0.5), 2);
    int continued = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        TrajectoryHistory h(1);
        const double x[] = {0.0};
        h.push(x);
        const auto d = decide_stop(fx.process, fx.reward, h, 1, 0.0, cfg, Stream::root(seed));
        EXPECT_NEAR(d.std_error, 0.1, 0.02);
        continued += d.action == StageAction::Continue;
    }
    EXPECT_GE(continued, 99);
}

TEST(Policy, SingleStageAlwaysStopsAtOne) {
    const GaussianIid g(1, 1);
    const auto run = run_stopping_policy(g, IdentityReward{}, policy(10, Tolerance::adaptive(0.05), 1), 100, 1,
                                         Stream::root(3));
    for (const auto& o : run.outcomes) {
        ASSERT_EQ(o.tau, 1u);
        ASSERT_EQ(o.diagnostics.size(), 1u);
        ASSERT_EQ(o.diagnostics[0].action, StageAction::Forced);
    }
}

TEST(Policy, DeterministicChainStopsImmediately) {
    const auto fx = fixture("chain_5_1.json");
    for (std::size_t n : {1u, 10u})
        for (const Tolerance& tol : {Tolerance::fixed(0.0), Tolerance::fixed(0.5), Tolerance::adaptive(0.05)}) {
            PolicyConfig cfg = policy(n, tol, 2);
            const auto run = run_stopping_policy(fx.process, fx.reward, cfg, 50, 1, Stream::root(4));
            for (const auto& o : run.outcomes) {
                ASSERT_EQ(o.tau, 1u);
                ASSERT_EQ(o.realized_reward, 5.0);
            }
        }
}

TEST(Policy, LargerToleranceNeverStopsLater) {
    const GaussianIid g(1, 4);
    std::vector<std::vector<std::size_t>> taus;
    for (double eps : {0.0, 0.1, 0.3, 1.0}) {
        const auto run =
            run_stopping_policy(g, IdentityReward{}, policy(50, Tolerance::fixed(eps), 4), 200, 1, Stream::root(5));
        std::vector<std::size_t> t;
        for (const auto& o : run.outcomes) t.push_back(o.tau);
        taus.push_back(t);
    }
    for (std::size_t j = 1; j < taus.size(); ++j)
        for (std::size_t e = 0; e < taus[j].size(); ++e) ASSERT_LE(taus[j][e], taus[j - 1][e]) << "episode " << e;
}

TEST(Policy, DiagnosticsShape) {
    const GaussianIid g(1, 4);
    const auto run =
        run_stopping_policy(g, IdentityReward{}, policy(30, Tolerance::adaptive(0.05), 4), 300, 2, Stream::root(6));
    std::size_t forced = 0;
    for (const auto& o : run.outcomes) {
        ASSERT_GE(o.tau, 1u);
        ASSERT_LE(o.tau, 4u);
        ASSERT_EQ(o.diagnostics.size(), o.tau);
        for (std::size_t k = 0; k + 1 < o.tau; ++k) ASSERT_EQ(o.diagnostics[k].action, StageAction::Continue);
        ASSERT_EQ(o.realized_reward, o.diagnostics.back().fx);
        if (o.tau == 4) {
            ASSERT_EQ(o.diagnostics.back().action, StageAction::Forced);
            ++forced;
        } else {
            ASSERT_EQ(o.diagnostics.back().action, StageAction::Stop);
        }
    }
    EXPECT_GT(forced, 0u);
}

TEST(Policy, WorkerCountInvariant) {
    const GaussianIid g(1, 3);
    const auto cfg = policy(40, Tolerance::adaptive(0.05), 3);
    const auto a = run_stopping_policy(g, IdentityReward{}, cfg, 97, 1, Stream::root(7));
    const auto b = run_stopping_policy(g, IdentityReward{}, cfg, 97, 3, Stream::root(7));
    ASSERT_EQ(a.outcomes.size(), b.outcomes.size());
    for (std::size_t e = 0; e < a.outcomes.size(); ++e) {
        ASSERT_EQ(a.outcomes[e].tau, b.outcomes[e].tau);
        ASSERT_EQ(a.outcomes[e].realized_reward, b.outcomes[e].realized_reward);
        ASSERT_EQ(a.outcomes[e].cost, b.outcomes[e].cost);
    }
    EXPECT_EQ(a.summary.mean, b.summary.mean);
}

TEST(Policy, DecisionStageBounds) {
    const GaussianIid g(1, 3);
    const auto cfg = policy(5, Tolerance::fixed(0.0), 3);
    TrajectoryHistory h(1);
    EXPECT_THROW(decide_stop(g, IdentityReward{}, h, 0, 0.0, cfg, Stream::root(8)), ContractViolation);
    const double x[] = {0.0};
    h.push(x);
    h.push(x);
    h.push(x);
    EXPECT_THROW(decide_stop(g, IdentityReward{}, h, 3, 0.0, cfg, Stream::root(8)), ContractViolation);
    EXPECT_THROW(run_stopping_policy(g, IdentityReward{}, cfg, 0, 1, Stream::root(8)), ContractViolation);
}
