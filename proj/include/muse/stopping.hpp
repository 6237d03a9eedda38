#pragma once
//
// Online stopping rule driven by batches of estimator replicates.
//
// At stage k < T the rule estimates the continuation value U_{T-k}(x_1..x_k)
// from n replicates and stops iff f(k, x_k) > Ybar - eps. It stops before
// drawing x_{k+1}. Stage T is a forced stop.
//
// Randomness for episode e (stream E): the path uses E.child(0), the inner
// batch at stage k uses E.child(k) with replicate i on E.child(k).child(i).
// Decisions therefore never share draws with the path, and the path does not
// depend on when the episode stops.

#include "muse/estimator.hpp"
#include "muse/harness.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/random.hpp"
#include "muse/reward.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace muse {

class Tolerance {
public:
    static Tolerance fixed(double eps) {
        if (std::isnan(eps) || eps < 0.0) throw ConfigError("tolerance must be >= 0");
        Tolerance t;
        t.eps_ = eps;
        return t;
    }
    // eps = z_{alpha/2} * s / sqrt(n), the CLT half-width of the inner batch.
    static Tolerance adaptive(double alpha) {
        if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
        Tolerance t;
        t.alpha_ = alpha;
        return t;
    }

    [[nodiscard]] bool is_adaptive() const noexcept { return alpha_.has_value(); }
    [[nodiscard]] double alpha() const { return alpha_.value(); }
    [[nodiscard]] double fixed_value() const noexcept { return eps_; }

    [[nodiscard]] double resolve(const BatchSummary& batch) const {
        if (!alpha_) return eps_;
        if (batch.n < 2) return 0.0;
        return normal_critical_value(*alpha_) * batch.std_error;
    }

private:
    double eps_ = 0.0;
    std::optional<double> alpha_;
};

struct PolicyConfig {
    std::size_t inner_replicates = 1000;
    Tolerance tolerance = Tolerance::adaptive(0.05);
    RateSchedule schedule;
    LevelPolicy level_policy = LevelPolicy::untruncated();
};

enum class StageAction { Stop, Continue, Forced };

inline const char* to_string(StageAction a) {
    switch (a) {
        case StageAction::Stop: return "stop";
        case StageAction::Continue: return "continue";
        case StageAction::Forced: return "forced";
    }
    return "?";
}

struct StageDiagnostics {
    std::size_t stage = 0;
    double fx = 0.0;
    double y_bar = std::numeric_limits<double>::quiet_NaN();  // NaN for the forced final stage
    double std_error = std::numeric_limits<double>::quiet_NaN();
    double epsilon = std::numeric_limits<double>::quiet_NaN();
    StageAction action = StageAction::Forced;
    std::uint64_t cost = 0;  // inner-batch state draws
};

struct PolicyOutcome {
    std::size_t tau = 0;
    double realized_reward = 0.0;
    std::uint64_t cost = 0;  // path draws plus all inner-batch draws
    std::vector<StageDiagnostics> diagnostics;  // one entry per stage 1..tau
};

template <Process P, Reward R>
StageDiagnostics decide_stop(const P& process, const R& reward, TrajectoryHistory& history, std::size_t k,
                             double fx, const PolicyConfig& config, const Stream& stream) {
    const std::size_t T = process.horizon();
    if (k < 1 || k >= T) throw ContractViolation("decisions exist only at stages 1..T-1");
    if (history.stage() != k) throw ContractViolation("history length must equal the stage");
    if (config.inner_replicates == 0) throw ConfigError("inner batch needs at least one replicate");

    RunningStats stats;
    std::uint64_t cost = 0;
    for (std::size_t i = 0; i < config.inner_replicates; ++i) {
        Stream s = stream.child(i);
        const EstimatorSample y =
            multi_stage_muse(k, history, process, reward, config.schedule, config.level_policy, s);
        stats.add(y.value);
        cost += y.cost;
    }
    BatchSummary batch;
    batch.n = stats.count();
    batch.mean = stats.mean();
    batch.variance = stats.variance();
    batch.std_error = std::sqrt(batch.variance / static_cast<double>(batch.n));

    StageDiagnostics d;
    d.stage = k;
    d.fx = fx;
    d.y_bar = batch.mean;
    d.std_error = batch.std_error;
    d.epsilon = config.tolerance.resolve(batch);
    d.action = fx > batch.mean - d.epsilon ? StageAction::Stop : StageAction::Continue;
    d.cost = cost;
    return d;
}

template <Process P, Reward R>
PolicyOutcome run_episode(const P& process, const R& reward, const PolicyConfig& config, const Stream& episode) {
    const std::size_t T = process.horizon();
    if (config.schedule.size() != T - 1) throw ConfigError("rate schedule must have horizon - 1 entries");
    TrajectoryHistory history(process.dimension());
    history.reserve(T);
    Stream path = episode.child(0);
    PolicyOutcome out;

    for (std::size_t k = 1;; ++k) {
        const auto slot = history.next_slot();
        process.draw_next(history, path, slot);
        history.commit();
        ++out.cost;
        const double fx = reward(k, history.last());
        if (k == T) {
            StageDiagnostics forced;
            forced.stage = k;
            forced.fx = fx;
            out.diagnostics.push_back(forced);
            out.tau = T;
            out.realized_reward = fx;
            return out;
        }
        const StageDiagnostics d = decide_stop(process, reward, history, k, fx, config, episode.child(k));
        out.cost += d.cost;
        out.diagnostics.push_back(d);
        if (d.action == StageAction::Stop) {
            out.tau = k;
            out.realized_reward = fx;
            return out;
        }
    }
}

struct PolicyRun {
    std::vector<PolicyOutcome> outcomes;
    BatchSummary summary;  // of realized rewards
    RunManifest manifest;
};

// Episode e runs on base.child(e).
template <Process P, Reward R>
PolicyRun run_stopping_policy(const P& process, const R& reward, const PolicyConfig& config, std::size_t episodes,
                              std::size_t workers, const Stream& base, std::uint64_t master_seed = 0) {
    if (episodes == 0) throw ContractViolation("need at least one episode");
    auto run = run_replicated(
        [&](std::size_t, Stream& s) { return run_episode(process, reward, config, s); }, episodes, workers, base,
        master_seed);
    PolicyRun out;
    std::vector<double> rewards;
    std::vector<std::uint64_t> costs;
    rewards.reserve(episodes);
    costs.reserve(episodes);
    for (const auto& o : run.results) {
        rewards.push_back(o.realized_reward);
        costs.push_back(o.cost);
    }
    out.summary = summarize(rewards, costs);
    out.summary.wall_time = run.manifest.wall_time;
    out.outcomes = std::move(run.results);
    out.manifest = std::move(run.manifest);
    return out;
}

} // namespace muse
