#pragma once
//
// Conditional path simulators.
//
// A process produces X_{k+1} given the realized prefix x_1..x_k. Built-ins:
//
//   GaussianIid   i.i.d. standard normal coordinates, independent of history
//   Gbm           independent geometric Brownian motions, exact log-normal step
//   UserDiscrete  scalar Markov chain on a finite support (exact oracles)
//
// Simulators are immutable after construction; all randomness comes from the
// Stream passed in, so one instance can be shared by many threads.

#include "muse/errors.hpp"
#include "muse/random.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

namespace muse {

using StateValue = std::vector<double>;

// Realized prefix x_1..x_k stored contiguously (k * dimension doubles).
// The estimator pushes and pops states as it walks the recursion, so one
// history buffer serves a whole replicate.
class TrajectoryHistory {
public:
    explicit TrajectoryHistory(std::size_t dimension) : dim_(dimension) {
        if (dimension == 0) throw ConfigError("history dimension must be positive");
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    [[nodiscard]] std::size_t stage() const noexcept { return stage_; }
    [[nodiscard]] bool empty() const noexcept { return stage_ == 0; }

    // 1-based, matching x_1..x_k.
    [[nodiscard]] std::span<const double> state(std::size_t stage_index) const {
        assert(stage_index >= 1 && stage_index <= stage_);
        return {data_.data() + (stage_index - 1) * dim_, dim_};
    }
    [[nodiscard]] std::span<const double> last() const { return state(stage_); }

    void push(std::span<const double> x) {
        if (x.size() != dim_) throw ConfigError("state dimension does not match history");
        const std::span<double> slot = next_slot();
        std::copy(x.begin(), x.end(), slot.begin());
        commit();
    }

    // Storage for x_{k+1}, not yet part of the history. Fill it, then commit().
    // Valid until the next call that grows the buffer (see reserve()).
    std::span<double> next_slot() {
        if (data_.size() < (stage_ + 1) * dim_) data_.resize((stage_ + 1) * dim_);
        return {data_.data() + stage_ * dim_, dim_};
    }

    void commit() { ++stage_; }

    void pop() {
        assert(stage_ > 0);
        --stage_;
    }

    void reserve(std::size_t stages) {
        if (data_.size() < stages * dim_) data_.resize(stages * dim_);
    }

private:
    std::size_t dim_;
    std::size_t stage_ = 0;
    std::vector<double> data_;
};

// Anything the estimator can drive.
template <class P>
concept Process = requires(const P& p, const TrajectoryHistory& h, Stream& s, std::span<double> out) {
    { p.dimension() } -> std::convertible_to<std::size_t>;
    { p.horizon() } -> std::convertible_to<std::size_t>;
    p.draw_next(h, s, out);
};

namespace detail {

inline void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw ConfigError(std::string("non-finite parameter: ") + name);
}

template <class P>
void check_draw_precondition(const P& p, const TrajectoryHistory& h, std::span<double> out) {
    if (h.stage() >= p.horizon())
        throw ContractViolation("cannot sample past the horizon (stage " + std::to_string(h.stage()) +
                                ", horizon " + std::to_string(p.horizon()) + ")");
    if (out.size() != p.dimension()) throw ConfigError("output slot has wrong dimension");
}

} // namespace detail

class GaussianIid {
public:
    GaussianIid(std::size_t dimension, std::size_t horizon) : dim_(dimension), horizon_(horizon) {
        if (dimension == 0) throw ConfigError("dimension must be positive");
        if (horizon == 0) throw ConfigError("horizon must be positive");
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }
    [[nodiscard]] std::size_t horizon() const noexcept { return horizon_; }

    void draw_next(const TrajectoryHistory& h, Stream& s, std::span<double> out) const {
        detail::check_draw_precondition(*this, h, out);
        for (double& v : out) v = s.normal();
    }

private:
    std::size_t dim_;
    std::size_t horizon_;
};

struct GbmParams {
    std::size_t dimension = 1;
    double gamma = 0.05;     // drift / discount rate, per year
    double div_yield = 0.0;  // per year
    double sigma = 0.2;      // per sqrt(year)
    double spot = 100.0;     // initial price of every asset
    std::vector<double> times{0.0, 1.0, 2.0, 3.0};  // t_1..t_T in years
};

// d independent GBMs observed at t_1 < ... < t_T. The step into stage 1
// starts from `spot` at t = 0, so t_1 = 0 makes X_1 deterministic.
class Gbm {
public:
    explicit Gbm(GbmParams params) : p_(std::move(params)) {
        if (p_.dimension == 0) throw ConfigError("dimension must be positive");
        if (p_.times.empty()) throw ConfigError("GBM needs at least one observation time");
        detail::require_finite(p_.gamma, "gamma");
        detail::require_finite(p_.div_yield, "div_yield");
        detail::require_finite(p_.sigma, "sigma");
        detail::require_finite(p_.spot, "spot");
        if (p_.sigma < 0.0) throw ConfigError("sigma must be nonnegative");
        if (p_.spot <= 0.0) throw ConfigError("spot must be positive");
        double prev = 0.0;
        for (std::size_t i = 0; i < p_.times.size(); ++i) {
            const double t = p_.times[i];
            detail::require_finite(t, "times");
            if (i == 0 ? t < 0.0 : t <= prev) throw ConfigError("observation times must be increasing from t >= 0");
            const double dt = t - prev;
            log_drift_.push_back((p_.gamma - p_.div_yield - 0.5 * p_.sigma * p_.sigma) * dt);
            vol_.push_back(p_.sigma * std::sqrt(dt));
            prev = t;
        }
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return p_.dimension; }
    [[nodiscard]] std::size_t horizon() const noexcept { return p_.times.size(); }
    [[nodiscard]] const GbmParams& params() const noexcept { return p_; }

    void draw_next(const TrajectoryHistory& h, Stream& s, std::span<double> out) const {
        detail::check_draw_precondition(*this, h, out);
        const std::size_t k = h.stage();
        const double drift = log_drift_[k];
        const double vol = vol_[k];
        if (k == 0) {
            std::fill(out.begin(), out.end(), p_.spot);
        } else {
            const auto prev = h.last();
            std::copy(prev.begin(), prev.end(), out.begin());
        }
        if (vol == 0.0) {
            const double growth = std::exp(drift);
            for (double& v : out) v *= growth;
            return;
        }
        for (double& v : out) v *= std::exp(drift + vol * s.normal());
    }

private:
    GbmParams p_;
    std::vector<double> log_drift_;
    std::vector<double> vol_;
};

// Scalar Markov chain on `support`. transitions[0] holds one row (the law of
// X_1); transitions[k] for k >= 1 is |support| x |support| and gives the law
// of X_{k+1} given X_k = support[i] in row i.
class UserDiscrete {
public:
    using Matrix = std::vector<std::vector<double>>;

    UserDiscrete(std::vector<double> support, std::vector<Matrix> transitions)
        : support_(std::move(support)), transitions_(std::move(transitions)) {
        if (support_.empty()) throw ConfigError("discrete support is empty");
        if (transitions_.empty()) throw ConfigError("discrete process needs at least one stage");
        for (double v : support_) detail::require_finite(v, "support");
        for (std::size_t i = 0; i < support_.size(); ++i)
            for (std::size_t j = i + 1; j < support_.size(); ++j)
                if (support_[i] == support_[j]) throw ConfigError("discrete support values must be distinct");
        const std::size_t m = support_.size();
        cdf_.resize(transitions_.size());
        for (std::size_t k = 0; k < transitions_.size(); ++k) {
            const Matrix& rows = transitions_[k];
            const std::size_t want_rows = (k == 0) ? 1 : m;
            if (rows.size() != want_rows)
                throw ConfigError("transition stage " + std::to_string(k) + " needs " + std::to_string(want_rows) +
                                  " rows");
            for (const auto& row : rows) {
                if (row.size() != m) throw ConfigError("transition row length must equal support size");
                double sum = 0.0;
                std::vector<double> cdf;
                cdf.reserve(m);
                for (double p : row) {
                    detail::require_finite(p, "transitions");
                    if (p < 0.0) throw ConfigError("negative transition probability");
                    sum += p;
                    cdf.push_back(sum);
                }
                if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("transition row does not sum to 1");
                cdf.back() = 1.0;
                cdf_[k].push_back(std::move(cdf));
            }
        }
    }

    [[nodiscard]] std::size_t dimension() const noexcept { return 1; }
    [[nodiscard]] std::size_t horizon() const noexcept { return transitions_.size(); }
    [[nodiscard]] const std::vector<double>& support() const noexcept { return support_; }
    [[nodiscard]] const std::vector<Matrix>& transitions() const noexcept { return transitions_; }

    [[nodiscard]] std::size_t index_of(double value) const {
        const auto it = std::find(support_.begin(), support_.end(), value);
        if (it == support_.end()) throw ContractViolation("state is not a support point");
        return static_cast<std::size_t>(it - support_.begin());
    }

    // Law of X_{k+1} given the history.
    [[nodiscard]] const std::vector<double>& row(const TrajectoryHistory& h) const {
        const std::size_t k = h.stage();
        if (k >= horizon()) throw ContractViolation("cannot condition past the horizon");
        return k == 0 ? transitions_[0][0] : transitions_[k][index_of(h.last()[0])];
    }

    void draw_next(const TrajectoryHistory& h, Stream& s, std::span<double> out) const {
        detail::check_draw_precondition(*this, h, out);
        const std::size_t k = h.stage();
        const auto& cdf = k == 0 ? cdf_[0][0] : cdf_[k][index_of(h.last()[0])];
        const double u = s.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        out[0] = support_[std::min<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), support_.size() - 1)];
    }

    // E[payoff(X_{k+1}) | history] with payoff given per support point.
    [[nodiscard]] double exact_conditional_mean(const TrajectoryHistory& h, std::span<const double> payoff) const {
        if (payoff.size() != support_.size()) throw ConfigError("payoff vector must match support size");
        const auto& r = row(h);
        return std::inner_product(r.begin(), r.end(), payoff.begin(), 0.0);
    }

private:
    std::vector<double> support_;
    std::vector<Matrix> transitions_;
    std::vector<std::vector<std::vector<double>>> cdf_;
};

enum class ProcessKind { GaussianIid, Gbm, UserDiscrete };

// Runtime-selected process, as loaded from a config file.
class ProcessSpec {
public:
    using Variant = std::variant<GaussianIid, Gbm, UserDiscrete>;

    ProcessSpec(GaussianIid p) : v_(std::move(p)) {}
    ProcessSpec(Gbm p) : v_(std::move(p)) {}
    ProcessSpec(UserDiscrete p) : v_(std::move(p)) {}

    [[nodiscard]] ProcessKind kind() const noexcept { return static_cast<ProcessKind>(v_.index()); }
    [[nodiscard]] const Variant& variant() const noexcept { return v_; }

    [[nodiscard]] std::size_t dimension() const {
        return std::visit([](const auto& p) { return p.dimension(); }, v_);
    }
    [[nodiscard]] std::size_t horizon() const {
        return std::visit([](const auto& p) { return p.horizon(); }, v_);
    }

    void draw_next(const TrajectoryHistory& h, Stream& s, std::span<double> out) const {
        std::visit([&](const auto& p) { p.draw_next(h, s, out); }, v_);
    }

    [[nodiscard]] double exact_conditional_mean(const TrajectoryHistory& h, std::span<const double> payoff) const {
        const auto* d = std::get_if<UserDiscrete>(&v_);
        if (d == nullptr) throw UnsupportedError("exact conditional mean needs a discrete process");
        return d->exact_conditional_mean(h, payoff);
    }

private:
    Variant v_;
};

// `count` independent draws of X_{k+1} given the history.
template <Process P>
std::vector<StateValue> sample_next(const P& process, const TrajectoryHistory& history, std::size_t count,
                                    Stream& stream) {
    if (count == 0) throw ContractViolation("sample_next needs count >= 1");
    if (history.dimension() != process.dimension()) throw ConfigError("history dimension does not match process");
    std::vector<StateValue> out(count, StateValue(process.dimension()));
    for (auto& x : out) process.draw_next(history, stream, x);
    return out;
}

} // namespace muse
