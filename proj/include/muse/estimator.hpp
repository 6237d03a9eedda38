#pragma once
//
// Multilevel unbiased stopping estimator.
//
// For a stage-k history the estimator returns an unbiased sample of the
// conditional utility
//
//     U_{T-k}(x_1..x_k) = E[ max{ f(k+1, X_{k+1}), U_{T-k-1}(x_1..x_{k+1}) } | x_1..x_k ],
//     U_1 = E[ f(T, X_T) | x_1..x_{T-1} ].
//
// It draws x_{k+1}, a level N ~ Geo(r_{k+1}), and 2^N independent child
// estimates of U_{T-k-1}; the antithetic difference of max{anchor, average}
// across the full / odd / even halves, divided by P(N), is unbiased because
// the level probabilities telescope the sequence of plug-in estimates.
//
// Children are reduced into running sums, so memory is O(T) regardless of N.
// Child j of a node runs on node_stream.child(j).

#include "muse/errors.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/random.hpp"
#include "muse/reward.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

namespace muse {

// r = 1 - 2^{-(2 + 9d/(80 + 40d)) / (2 + d/10)} for moment surplus d in (0, 1/4).
inline double theoretical_rate(double delta_mom) {
    if (!(delta_mom > 0.0 && delta_mom < 0.25)) throw DomainError("moment surplus must lie in (0, 1/4)");
    const double exponent = (2.0 + 9.0 * delta_mom / (80.0 + 40.0 * delta_mom)) / (2.0 + delta_mom / 10.0);
    // exponent - 1 is O(delta), so form 1 - 2^{-e} as 1/2 - (2^{-e} - 1/2) without cancellation.
    return 0.5 - 0.5 * std::expm1(-(exponent - 1.0) * std::numbers::ln2);
}

class RateSchedule {
public:
    enum class Source { Theoretical, Manual };

    RateSchedule() = default;

    static RateSchedule manual(std::vector<double> rates) {
        RateSchedule s;
        s.rates_ = std::move(rates);
        s.source_ = Source::Manual;
        s.validate();
        return s;
    }

    // Same r at every stage of a horizon-T problem.
    static RateSchedule constant(double r, std::size_t horizon) {
        if (horizon == 0) throw ConfigError("horizon must be positive");
        return manual(std::vector<double>(horizon - 1, r));
    }

    // r_i from delta_i = delta * 10^{i+1-T}, i = 1..T-1; later stages get the
    // larger surplus.
    static RateSchedule theoretical(double delta_mom, std::size_t horizon) {
        if (!(delta_mom > 0.0 && delta_mom < 0.25)) throw DomainError("moment surplus must lie in (0, 1/4)");
        if (horizon < 2) throw DomainError("theoretical schedule needs horizon >= 2");
        RateSchedule s;
        s.source_ = Source::Theoretical;
        s.delta_mom_ = delta_mom;
        const auto T = static_cast<int>(horizon);
        for (int i = 1; i <= T - 1; ++i) s.rates_.push_back(theoretical_rate(delta_mom * std::pow(10.0, i + 1 - T)));
        s.validate();
        return s;
    }

    [[nodiscard]] const std::vector<double>& rates() const noexcept { return rates_; }
    [[nodiscard]] std::size_t size() const noexcept { return rates_.size(); }
    // Rate used when drawing N_{stage}, stage in 1..T-1.
    [[nodiscard]] double at_stage(std::size_t stage) const { return rates_.at(stage - 1); }
    [[nodiscard]] Source source() const noexcept { return source_; }
    [[nodiscard]] double delta_mom() const noexcept { return delta_mom_; }

private:
    void validate() const {
        for (double r : rates_)
            if (!(r > 0.5 && r < 1.0)) throw DomainError("every rate must lie in (1/2, 1), got " + std::to_string(r));
    }

    std::vector<double> rates_;
    Source source_ = Source::Manual;
    double delta_mom_ = 0.0;
};

class LevelPolicy {
public:
    enum class Mode { Untruncated, TruncatedBiased };

    static LevelPolicy untruncated() { return LevelPolicy{}; }
    // Renormalizes Geo(r) onto {0..max_level}. Biased; samples are flagged.
    static LevelPolicy truncated(unsigned max_level) {
        LevelPolicy p;
        p.mode_ = Mode::TruncatedBiased;
        p.max_level_ = max_level;
        return p;
    }

    [[nodiscard]] Mode mode() const noexcept { return mode_; }
    [[nodiscard]] bool biased() const noexcept { return mode_ == Mode::TruncatedBiased; }
    [[nodiscard]] unsigned max_level() const noexcept { return max_level_; }

private:
    Mode mode_ = Mode::Untruncated;
    unsigned max_level_ = 0;
};

// Deepest level we will expand; 2^62 draws is far beyond any real budget.
inline constexpr unsigned kMaxLevel = 62;

namespace detail {

inline void check_rate(double r) {
    if (!(r > 0.5 && r < 1.0)) throw DomainError("geometric rate must lie in (1/2, 1)");
}

// log P(N = n) under the (possibly truncated) level law.
inline double level_log_pmf(double r, unsigned n, const LevelPolicy& policy) {
    double lp = std::log(r) + static_cast<double>(n) * std::log1p(-r);
    if (policy.biased()) lp -= std::log1p(-std::pow(1.0 - r, policy.max_level() + 1.0));
    return lp;
}

// Inversion, so N is nonincreasing in r for a fixed uniform.
inline unsigned sample_level(double r, const LevelPolicy& policy, Stream& stream) {
    double u = stream.uniform_pos();
    const double log_q = std::log1p(-r);
    unsigned cap = kMaxLevel;
    if (policy.biased()) {
        const double tail = std::pow(1.0 - r, policy.max_level() + 1.0);
        u = tail + u * (1.0 - tail);
        cap = std::min(cap, policy.max_level());
    }
    const double n = std::floor(std::log(u) / log_q);
    if (n > static_cast<double>(cap)) {
        if (policy.biased()) return cap;
        throw std::runtime_error("geometric level exceeds the supported depth of 2^" + std::to_string(kMaxLevel));
    }
    return static_cast<unsigned>(n);
}

} // namespace detail

inline unsigned sample_geometric_level(double r, Stream& stream) {
    detail::check_rate(r);
    return detail::sample_level(r, LevelPolicy::untruncated(), stream);
}

// Delta from the odd-index and even-index sums of 2^n values (1-based
// indexing, so odd = positions 1, 3, ...). For n = 0 only `odd_sum` is used
// and the result is max{anchor, value}. The full sum is formed as odd + even
// so same-side inputs cancel to exactly 0.
inline double antithetic_delta_from_sums(double anchor, unsigned n, double odd_sum, double even_sum) {
    if (n == 0) return std::max(anchor, odd_sum);
    const int half = static_cast<int>(n) - 1;
    const double full = std::ldexp(odd_sum + even_sum, -static_cast<int>(n));
    const double odd_avg = std::ldexp(odd_sum, -half);
    const double even_avg = std::ldexp(even_sum, -half);
    return std::max(anchor, full) - 0.5 * (std::max(anchor, odd_avg) + std::max(anchor, even_avg));
}

inline double antithetic_delta(double anchor, std::span<const double> values) {
    const std::size_t m = values.size();
    if (m == 0 || (m & (m - 1)) != 0) throw ContractViolation("antithetic delta needs 2^n values");
    unsigned n = 0;
    while ((std::size_t{1} << n) < m) ++n;
    double odd = 0.0, even = 0.0;
    for (std::size_t i = 0; i < m; i += 2) odd += values[i];
    for (std::size_t i = 1; i < m; i += 2) even += values[i];
    return antithetic_delta_from_sums(anchor, n, odd, even);
}

struct EstimatorSample {
    double value = 0.0;
    unsigned top_level = 0;    // N_{k+1} at the call's own stage (0 at the leaf)
    std::uint64_t cost = 0;    // base-process state draws, including x_{k+1}
    bool biased = false;       // produced under a truncated level law
};

namespace detail {

template <Process P, Reward R>
void check_shapes(const P& process, const R& /*reward*/, const RateSchedule& schedule) {
    const std::size_t T = process.horizon();
    if (schedule.size() != T - 1)
        throw ConfigError("rate schedule has " + std::to_string(schedule.size()) + " entries; horizon " +
                          std::to_string(T) + " needs " + std::to_string(T - 1));
}

template <Process P, Reward R>
EstimatorSample muse_node(std::size_t k, TrajectoryHistory& history, const P& process, const R& reward,
                          const RateSchedule& schedule, const LevelPolicy& policy, Stream& stream) {
    const std::size_t T = process.horizon();
    const std::span<double> slot = history.next_slot();
    process.draw_next(history, stream, slot);
    const double anchor = reward(k + 1, std::span<const double>(slot));
    if (k + 1 == T) return {anchor, 0, 1, policy.biased()};
    history.commit();

    const double r = schedule.at_stage(k + 1);
    const unsigned n = sample_level(r, policy, stream);
    const std::uint64_t count = std::uint64_t{1} << n;

    double odd = 0.0, even = 0.0;
    std::uint64_t cost = 1;
    for (std::uint64_t j = 0; j < count; ++j) {
        Stream child = stream.child(j);
        const EstimatorSample y = muse_node(k + 1, history, process, reward, schedule, policy, child);
        ((j & 1u) == 0 ? odd : even) += y.value;
        cost += y.cost;
    }
    history.pop();

    const double delta = antithetic_delta_from_sums(anchor, n, odd, even);
    return {delta * std::exp(-level_log_pmf(r, n, policy)), n, cost, policy.biased()};
}

} // namespace detail

// Sample of U_{T-k}(history). `history` must hold exactly k states; it is
// restored on return.
template <Process P, Reward R>
EstimatorSample multi_stage_muse(std::size_t k, TrajectoryHistory& history, const P& process, const R& reward,
                                 const RateSchedule& schedule, const LevelPolicy& policy, Stream& stream) {
    const std::size_t T = process.horizon();
    if (k >= T) throw ContractViolation("stage must satisfy k <= T-1");
    if (history.stage() != k) throw ContractViolation("history length must equal the stage");
    if (history.dimension() != process.dimension()) throw ConfigError("history dimension does not match process");
    detail::check_shapes(process, reward, schedule);
    history.reserve(T);
    return detail::muse_node(k, history, process, reward, schedule, policy, stream);
}

template <Process P, Reward R>
EstimatorSample multi_stage_muse(const P& process, const R& reward, const RateSchedule& schedule,
                                 const LevelPolicy& policy, Stream& stream) {
    TrajectoryHistory history(process.dimension());
    return multi_stage_muse(0, history, process, reward, schedule, policy, stream);
}

// Two-stage estimator written out flat: X_1, then N, then 2^N draws of X_2,
// all from one sequential stream. Same law as multi_stage_muse at T = 2, but
// an independent code path.
template <Process P, Reward R>
EstimatorSample two_stage_muse(const P& process, const R& reward, double r, Stream& stream) {
    if (process.horizon() != 2) throw ConfigError("two-stage estimator needs horizon 2");
    detail::check_rate(r);
    TrajectoryHistory history(process.dimension());
    std::vector<double> x(process.dimension());
    process.draw_next(history, stream, x);
    const double anchor = reward(1, std::span<const double>(x));
    history.push(x);

    const unsigned n = sample_geometric_level(r, stream);
    const std::uint64_t count = std::uint64_t{1} << n;
    double odd = 0.0, even = 0.0;
    for (std::uint64_t j = 0; j < count; ++j) {
        process.draw_next(history, stream, x);
        ((j & 1u) == 0 ? odd : even) += reward(2, std::span<const double>(x));
    }
    const double delta = antithetic_delta_from_sums(anchor, n, odd, even);
    const double pmf = r * std::pow(1.0 - r, static_cast<double>(n));
    return {delta / pmf, n, 1 + count, false};
}

// Average of n i.i.d. replicates; replicate i runs on base.child(i). This is
// the sequential reference; the parallel harness produces identical values.
template <Process P, Reward R>
BatchSummary estimate_utility(const P& process, const R& reward, const RateSchedule& schedule,
                              const LevelPolicy& policy, std::size_t replicates, const Stream& base,
                              std::vector<EstimatorSample>* samples_out = nullptr) {
    if (replicates == 0) throw ContractViolation("need at least one replicate");
    const auto start = std::chrono::steady_clock::now();
    std::vector<double> values(replicates);
    std::vector<std::uint64_t> costs(replicates);
    if (samples_out != nullptr) samples_out->resize(replicates);
    TrajectoryHistory history(process.dimension());
    for (std::size_t i = 0; i < replicates; ++i) {
        Stream s = base.child(i);
        const EstimatorSample y = multi_stage_muse(0, history, process, reward, schedule, policy, s);
        values[i] = y.value;
        costs[i] = y.cost;
        if (samples_out != nullptr) (*samples_out)[i] = y;
    }
    BatchSummary summary = summarize(values, costs);
    summary.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return summary;
}

} // namespace muse
