#pragma once
//
// Stage-indexed rewards f(stage, x). Discounting lives here, not in the
// estimator, so the estimator core is the same for every example.

#include "muse/errors.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace muse {

template <class R>
concept Reward = requires(const R& r, std::size_t stage, std::span<const double> x) {
    { r(stage, x) } -> std::convertible_to<double>;
};

// f(x) = x for scalar processes.
struct IdentityReward {
    double operator()(std::size_t /*stage*/, std::span<const double> x) const {
        if (x.size() != 1) throw ConfigError("identity reward needs a one-dimensional state");
        return x[0];
    }
};

// e^{-discount * t} max(0, strike - mean(x)), t = times[stage - 1].
class BasketPut {
public:
    BasketPut(double strike, double discount, std::vector<double> times)
        : strike_(strike), discount_(discount), times_(std::move(times)) {
        if (!std::isfinite(strike) || strike <= 0.0) throw ConfigError("strike must be positive");
        if (!std::isfinite(discount) || discount < 0.0) throw ConfigError("discount rate must be nonnegative");
        if (times_.empty()) throw ConfigError("basket put needs exercise times");
        for (double t : times_) {
            if (!std::isfinite(t)) throw ConfigError("non-finite exercise time");
            factors_.push_back(std::exp(-discount_ * t));
        }
    }

    double operator()(std::size_t stage, std::span<const double> x) const {
        if (stage < 1 || stage > times_.size())
            throw ConfigError("stage " + std::to_string(stage) + " has no exercise time");
        if (x.empty()) throw ConfigError("empty basket");
        const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
        return factors_[stage - 1] * std::max(0.0, strike_ - mean);
    }

    [[nodiscard]] double strike() const noexcept { return strike_; }
    [[nodiscard]] double discount() const noexcept { return discount_; }
    [[nodiscard]] const std::vector<double>& times() const noexcept { return times_; }

private:
    double strike_;
    double discount_;
    std::vector<double> times_;
    std::vector<double> factors_;
};

enum class RewardKind { Identity, BasketPut };

class RewardSpec {
public:
    using Variant = std::variant<IdentityReward, BasketPut>;

    RewardSpec(IdentityReward r) : v_(r) {}
    RewardSpec(BasketPut r) : v_(std::move(r)) {}

    [[nodiscard]] RewardKind kind() const noexcept { return static_cast<RewardKind>(v_.index()); }
    [[nodiscard]] const Variant& variant() const noexcept { return v_; }

    double operator()(std::size_t stage, std::span<const double> x) const {
        return std::visit([&](const auto& r) { return r(stage, x); }, v_);
    }

    // Throws ConfigError if this reward cannot be evaluated on the given shape.
    void check_compatible(std::size_t dimension, std::size_t horizon) const {
        if (const auto* b = std::get_if<BasketPut>(&v_)) {
            if (b->times().size() != horizon)
                throw ConfigError("reward has " + std::to_string(b->times().size()) +
                                  " exercise times but the process horizon is " + std::to_string(horizon));
        } else if (dimension != 1) {
            throw ConfigError("identity reward requires dimension 1");
        }
    }

private:
    Variant v_;
};

template <Reward R>
double reward(const R& r, std::size_t stage, std::span<const double> x) {
    return r(stage, x);
}

} // namespace muse
