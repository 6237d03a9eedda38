#pragma once
//
// Batch statistics and confidence intervals for i.i.d. replicates.

#include "muse/errors.hpp"
#include "muse/random.hpp"

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace muse {

struct BatchSummary {
    std::size_t n = 0;
    double mean = 0.0;
    double variance = 0.0;  // unbiased; 0 for a single value
    double std_error = 0.0;
    std::uint64_t total_cost = 0;
    double wall_time = 0.0;  // seconds
    bool degenerate = false;  // n == 1
};

enum class CiMethod { Clt, BootstrapPercentile };

inline const char* to_string(CiMethod m) { return m == CiMethod::Clt ? "clt" : "bootstrap"; }

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    double level = 0.95;
    CiMethod method = CiMethod::Clt;
    bool degenerate = false;  // zero width because the batch could not support an interval
};

// Welford one-pass accumulation.
class RunningStats {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    [[nodiscard]] std::size_t count() const noexcept { return n_; }
    [[nodiscard]] double mean() const noexcept { return mean_; }
    [[nodiscard]] double variance() const noexcept {
        return n_ < 2 ? 0.0 : std::max(0.0, m2_ / static_cast<double>(n_ - 1));
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

inline BatchSummary summarize(std::span<const double> values, std::span<const std::uint64_t> costs) {
    if (values.empty()) throw ContractViolation("cannot summarize an empty batch");
    if (values.size() != costs.size()) throw ContractViolation("values and costs differ in length");
    RunningStats stats;
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        stats.add(values[i]);
        total += costs[i];
    }
    BatchSummary s;
    s.n = values.size();
    s.mean = stats.mean();
    s.variance = stats.variance();
    s.std_error = std::sqrt(s.variance / static_cast<double>(s.n));
    s.total_cost = total;
    s.degenerate = s.n == 1;
    return s;
}

inline BatchSummary summarize(std::span<const double> values) {
    const std::vector<std::uint64_t> zeros(values.size(), 0);
    return summarize(values, zeros);
}

// Upper alpha/2 standard normal quantile; 0 at alpha = 1.
inline double normal_critical_value(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
    if (alpha == 1.0) return 0.0;
    return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), 1.0 - alpha / 2.0);
}

inline ConfidenceInterval clt_ci(const BatchSummary& s, double alpha) {
    const double z = normal_critical_value(alpha);
    ConfidenceInterval ci;
    ci.level = 1.0 - alpha;
    ci.method = CiMethod::Clt;
    if (s.n < 2) {
        ci.lo = ci.hi = s.mean;
        ci.degenerate = true;
        return ci;
    }
    const double half = z * s.std_error;
    ci.lo = s.mean - half;
    ci.hi = s.mean + half;
    return ci;
}

// Type-1 empirical quantile of sorted data: the ceil(q * m)-th order
// statistic (1-based), clamped to [1, m].
inline double empirical_quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ContractViolation("quantile of empty data");
    const double m = static_cast<double>(sorted.size());
    // Guard against q * m landing a hair above an integer (0.025 * 1000).
    auto k = static_cast<std::size_t>(std::ceil(q * m - 1e-9));
    k = std::clamp<std::size_t>(k, 1, sorted.size());
    return sorted[k - 1];
}

inline constexpr std::size_t kDefaultBootstrapResamples = 1000;

// Percentile bootstrap. Resample b draws its indices from stream.child(b),
// indexing into the sorted values, so the interval depends only on the
// multiset of inputs and on the stream.
inline ConfidenceInterval bootstrap_ci(std::span<const double> values, double alpha, std::size_t resamples,
                                       const Stream& stream) {
    if (values.empty()) throw ContractViolation("bootstrap of an empty batch");
    if (resamples < 100) throw ContractViolation("bootstrap needs at least 100 resamples");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    std::vector<double> means(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        Stream s = stream.child(b);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum += sorted[s.bounded(n)];
        means[b] = sum / static_cast<double>(n);
    }
    std::sort(means.begin(), means.end());

    ConfidenceInterval ci;
    ci.level = 1.0 - alpha;
    ci.method = CiMethod::BootstrapPercentile;
    ci.lo = empirical_quantile_sorted(means, alpha / 2.0);
    ci.hi = empirical_quantile_sorted(means, 1.0 - alpha / 2.0);
    ci.degenerate = sorted.front() == sorted.back();
    return ci;
}

// Mean cost times variance: the efficiency figure minimized when tuning r.
inline double self_normalized_variance(std::span<const double> values, std::span<const std::uint64_t> costs) {
    const BatchSummary s = summarize(values, costs);
    return (static_cast<double>(s.total_cost) / static_cast<double>(s.n)) * s.variance;
}

inline nlohmann::ordered_json to_json(const BatchSummary& s, const ConfidenceInterval& ci) {
    nlohmann::ordered_json j;
    j["n"] = s.n;
    j["mean"] = s.mean;
    j["variance"] = s.variance;
    j["std_error"] = s.std_error;
    j["ci_lo"] = ci.lo;
    j["ci_hi"] = ci.hi;
    j["ci_method"] = to_string(ci.method);
    j["level"] = ci.level;
    j["total_cost"] = s.total_cost;
    j["wall_time_s"] = s.wall_time;
    return j;
}

} // namespace muse
