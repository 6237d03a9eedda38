#pragma once
//
// Experiment drivers shared by the command-line tool and the acceptance
// suite, plus their CSV writers. Every driver takes a master seed and a
// worker count, and its CSV output depends only on the seed.

#include "muse/baselines.hpp"
#include "muse/config.hpp"
#include "muse/estimator.hpp"
#include "muse/harness.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/random.hpp"
#include "muse/reward.hpp"
#include "muse/stopping.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace muse {

// Children at or above this index never collide with replicate indices.
inline constexpr std::uint64_t kAuxStreamBase = std::uint64_t{1} << 63;

// Shortest round-trip decimal, '.' separator, independent of locale.
// Non-finite values print as an empty field.
inline std::string format_double(double v) {
    if (!std::isfinite(v)) return {};
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// estimate / bermudan

struct EstimateRun {
    std::vector<EstimatorSample> samples;
    BatchSummary summary;
    ConfidenceInterval ci;
    RunManifest manifest;
    bool biased = false;
};

template <Process P, Reward R>
EstimateRun run_estimate(const P& process, const R& reward, const RateSchedule& schedule, const LevelPolicy& policy,
                         std::size_t replicates, std::size_t workers, std::uint64_t seed, double alpha = 0.05,
                         CiMethod ci_method = CiMethod::Clt, std::size_t bootstrap = kDefaultBootstrapResamples,
                         nlohmann::ordered_json config_snapshot = {}) {
    if (schedule.size() + 1 != process.horizon()) throw ConfigError("rate schedule does not match the horizon");
    const Stream base = Stream::root(seed);
    auto run = run_replicated(
        [&](std::size_t, Stream& s) {
            TrajectoryHistory history(process.dimension());
            return multi_stage_muse(0, history, process, reward, schedule, policy, s);
        },
        replicates, workers, base, seed, std::move(config_snapshot));

    EstimateRun out;
    std::vector<double> values(replicates);
    std::vector<std::uint64_t> costs(replicates);
    for (std::size_t i = 0; i < replicates; ++i) {
        values[i] = run.results[i].value;
        costs[i] = run.results[i].cost;
    }
    out.summary = summarize(values, costs);
    out.summary.wall_time = run.manifest.wall_time;
    out.ci = ci_method == CiMethod::Clt || replicates < 2
                 ? clt_ci(out.summary, alpha)
                 : bootstrap_ci(values, alpha, bootstrap, base.child(kAuxStreamBase));
    out.biased = policy.biased();
    out.samples = std::move(run.results);
    out.manifest = std::move(run.manifest);
    return out;
}

inline void write_replicates_csv(std::ostream& os, const std::vector<EstimatorSample>& samples) {
    os << "replicate_id,value,top_level,cost\n";
    for (std::size_t i = 0; i < samples.size(); ++i)
        os << i << ',' << format_double(samples[i].value) << ',' << samples[i].top_level << ',' << samples[i].cost
           << '\n';
}

inline nlohmann::ordered_json summary_json(const EstimateRun& run) {
    auto j = to_json(run.summary, run.ci);
    if (run.biased) j["biased"] = true;
    return j;
}

inline std::string summary_line(const BatchSummary& s, const ConfidenceInterval& ci) {
    std::ostringstream os;
    os << "n=" << s.n << " mean=" << format_double(s.mean) << " se=" << format_double(s.std_error) << " ci["
       << to_string(ci.method) << ',' << format_double(ci.level) << "]=[" << format_double(ci.lo) << ", "
       << format_double(ci.hi) << "] total_cost=" << s.total_cost;
    return os.str();
}

struct BermudanParams {
    std::size_t dimension = 5;
    double strike = 100.0;
    double spot = 100.0;
    double sigma = 0.2;
    double rate = 0.05;
    double div_yield = 0.0;
    std::vector<double> dates{0.0, 1.0, 2.0, 3.0};
    double r = 0.6;
};

inline Gbm bermudan_process(const BermudanParams& p) {
    GbmParams g;
    g.dimension = p.dimension;
    g.gamma = p.rate;
    g.div_yield = p.div_yield;
    g.sigma = p.sigma;
    g.spot = p.spot;
    g.times = p.dates;
    return Gbm(std::move(g));
}

inline BasketPut bermudan_reward(const BermudanParams& p) { return BasketPut(p.strike, p.rate, p.dates); }

inline EstimateRun run_bermudan(const BermudanParams& p, std::size_t replicates, std::size_t workers,
                                std::uint64_t seed, double alpha = 0.05) {
    const Gbm process = bermudan_process(p);
    const BasketPut reward = bermudan_reward(p);
    nlohmann::ordered_json snap{{"experiment", "bermudan"}, {"dimension", p.dimension}, {"strike", p.strike},
                                {"spot", p.spot},           {"sigma", p.sigma},         {"rate", p.rate},
                                {"div_yield", p.div_yield}, {"dates", p.dates},         {"r", p.r},
                                {"replicates", replicates}};
    return run_estimate(process, reward, RateSchedule::constant(p.r, p.dates.size()), LevelPolicy::untruncated(),
                        replicates, workers, seed, alpha, CiMethod::Clt, kDefaultBootstrapResamples, std::move(snap));
}

// ---------------------------------------------------------------------------
// tune-rate

struct TuneRow {
    double r = 0.0;
    double mean_cost = 0.0;
    double variance = 0.0;
    double self_normalized_variance = 0.0;
};

struct TuneResult {
    std::vector<TuneRow> rows;
    std::size_t argmin = 0;
};

// r_i = r_min + i * step for i = 0..round((r_max - r_min) / step).
inline std::vector<double> rate_grid(double r_min, double r_max, double step) {
    if (!(r_min > 0.5 && r_max < 1.0 && r_min <= r_max)) throw DomainError("rate grid must lie inside (1/2, 1)");
    if (r_min == r_max) return {r_min};
    if (!(step > 0.0)) throw DomainError("grid step must be positive");
    const auto count = static_cast<std::size_t>(std::llround((r_max - r_min) / step)) + 1;
    std::vector<double> grid;
    for (std::size_t i = 0; i < count; ++i) {
        const double r = r_min + static_cast<double>(i) * step;
        if (r >= 1.0) break;
        grid.push_back(r);
    }
    return grid;
}

// Every grid point reuses the same replicate streams (common random numbers):
// levels are drawn by inversion, so pathwise cost is nonincreasing in r.
template <Process P, Reward R>
TuneResult tune_rate(const P& process, const R& reward, const std::vector<double>& grid, std::size_t replicates,
                     std::size_t workers, std::uint64_t seed) {
    if (grid.empty()) throw ContractViolation("empty rate grid");
    TuneResult out;
    for (double r : grid) {
        const auto schedule = RateSchedule::constant(r, process.horizon());
        auto run = run_estimate(process, reward, schedule, LevelPolicy::untruncated(), replicates, workers, seed);
        TuneRow row;
        row.r = r;
        row.mean_cost = static_cast<double>(run.summary.total_cost) / static_cast<double>(run.summary.n);
        row.variance = run.summary.variance;
        row.self_normalized_variance = row.mean_cost * row.variance;
        out.rows.push_back(row);
    }
    for (std::size_t i = 1; i < out.rows.size(); ++i)
        if (out.rows[i].self_normalized_variance < out.rows[out.argmin].self_normalized_variance) out.argmin = i;
    return out;
}

inline void write_tune_csv(std::ostream& os, const TuneResult& t) {
    os << "r,mean_cost,variance,self_normalized_variance\n";
    for (const auto& row : t.rows)
        os << format_double(row.r) << ',' << format_double(row.mean_cost) << ',' << format_double(row.variance) << ','
           << format_double(row.self_normalized_variance) << '\n';
}

// ---------------------------------------------------------------------------
// gaussian-suite

struct SuiteRow {
    std::size_t horizon = 0;
    double muse_mean = 0.0;
    double muse_se = 0.0;
    BaselineEstimate mc1;
    BaselineEstimate mc2;
    double oracle = 0.0;
};

struct SuiteOptions {
    std::vector<std::size_t> horizons{2, 3, 4, 5, 6, 7};
    std::size_t replicates = 100000;
    std::size_t mc1_paths = 100000;
    std::size_t mc2_trees = 1000;
    std::size_t mc2_arity = 5;
    double r = 0.6;
};

struct SuiteResult {
    std::vector<SuiteRow> rows;
    std::vector<std::vector<EstimatorSample>> samples;  // per horizon, MUSE replicates
};

// Horizon T uses root(seed).child(T); MUSE / MC1 / MC2 take its children 0 / 1 / 2.
inline SuiteResult gaussian_suite(const SuiteOptions& opt, std::size_t workers, std::uint64_t seed) {
    SuiteResult out;
    const Stream root = Stream::root(seed);
    for (std::size_t T : opt.horizons) {
        if (T < 2 || T > 7) throw ConfigError("gaussian suite horizons must lie in 2..7");
        const GaussianIid process(1, T);
        const IdentityReward reward;
        const Stream branch = root.child(T);
        const auto schedule = RateSchedule::constant(opt.r, T);
        const Stream muse_base = branch.child(0);
        auto run = run_replicated(
            [&](std::size_t, Stream& s) {
                TrajectoryHistory history(1);
                return multi_stage_muse(0, history, process, reward, schedule, LevelPolicy::untruncated(), s);
            },
            opt.replicates, workers, muse_base, seed);
        std::vector<double> values;
        std::vector<std::uint64_t> costs;
        for (const auto& y : run.results) {
            values.push_back(y.value);
            costs.push_back(y.cost);
        }
        const BatchSummary s = summarize(values, costs);

        SuiteRow row;
        row.horizon = T;
        row.muse_mean = s.mean;
        row.muse_se = s.std_error;
        row.mc1 = mc1_estimate(process, reward, opt.mc1_paths, branch.child(1));
        row.mc2 = mc2_estimate(process, reward, TreeSpec{opt.mc2_arity, T, opt.mc2_trees}, branch.child(2));
        row.oracle = gaussian_dp_oracle(T);
        out.rows.push_back(row);
        out.samples.push_back(std::move(run.results));
    }
    return out;
}

inline void write_suite_csv(std::ostream& os, const SuiteResult& s) {
    os << "T,muse_mean,muse_se,mc1,mc2,oracle,muse_error,mc1_error,mc2_error\n";
    for (const auto& r : s.rows)
        os << r.horizon << ',' << format_double(r.muse_mean) << ',' << format_double(r.muse_se) << ','
           << format_double(r.mc1.estimate) << ',' << format_double(r.mc2.estimate) << ',' << format_double(r.oracle)
           << ',' << format_double(r.muse_mean - r.oracle) << ',' << format_double(r.mc1.estimate - r.oracle) << ','
           << format_double(r.mc2.estimate - r.oracle) << '\n';
}

// ---------------------------------------------------------------------------
// stop

inline void write_episodes_csv(std::ostream& os, const std::vector<PolicyOutcome>& outcomes, std::size_t horizon) {
    os << "episode_id,tau,realized_reward";
    for (std::size_t k = 1; k <= horizon; ++k)
        os << ",stage_" << k << ",fx_" << k << ",y_bar_" << k << ",se_" << k << ",decision_" << k;
    os << '\n';
    for (std::size_t e = 0; e < outcomes.size(); ++e) {
        const auto& o = outcomes[e];
        os << e << ',' << o.tau << ',' << format_double(o.realized_reward);
        for (std::size_t k = 1; k <= horizon; ++k) {
            if (k <= o.diagnostics.size()) {
                const auto& d = o.diagnostics[k - 1];
                os << ',' << d.stage << ',' << format_double(d.fx) << ',' << format_double(d.y_bar) << ','
                   << format_double(d.std_error) << ',' << to_string(d.action);
            } else {
                os << ",,,,,";
            }
        }
        os << '\n';
    }
}

} // namespace muse
