#pragma once
//
// JSON configuration for processes, rewards and whole experiments.
//
//   {
//     "process": {"kind": "gbm", "dimension": 5, "gamma": 0.05, "div_yield": 0,
//                 "sigma": 0.2, "spot": 100, "times": [0, 1, 2, 3]},
//     "reward":  {"kind": "basket-put", "strike": 100, "discount": 0.05,
//                 "times": [0, 1, 2, 3]},
//     "rates": 0.6,            // or [r_1, ..., r_{T-1}], or "theoretical_delta": 0.1
//     "truncate": 20,          // optional, biased mode
//     "replicates": 100000, "alpha": 0.05, "bootstrap": 1000,
//     "ci_method": "clt", "seed": 7, "workers": 4
//   }
//
// Discrete chains use "support" and "transitions" (first entry is the single
// row giving the law of X_1).

#include "muse/errors.hpp"
#include "muse/estimator.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/reward.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace muse {

using Json = nlohmann::json;

namespace detail {

template <class T>
T json_get(const Json& j, const char* key, const T& fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

template <class T>
T json_require(const Json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
    return json_get<T>(j, key, T{});
}

inline std::string normalize_kind(std::string s) {
    for (char& c : s) {
        if (c == '_') c = '-';
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return s;
}

} // namespace detail

inline ProcessKind parse_process_kind(const std::string& raw) {
    const std::string s = detail::normalize_kind(raw);
    if (s == "gaussian-iid" || s == "gaussianiid" || s == "gaussian") return ProcessKind::GaussianIid;
    if (s == "gbm") return ProcessKind::Gbm;
    if (s == "discrete" || s == "user-discrete" || s == "userdiscrete") return ProcessKind::UserDiscrete;
    throw ConfigError("unknown process kind '" + raw + "'");
}

inline RewardKind parse_reward_kind(const std::string& raw) {
    const std::string s = detail::normalize_kind(raw);
    if (s == "identity") return RewardKind::Identity;
    if (s == "basket-put" || s == "basketput") return RewardKind::BasketPut;
    throw ConfigError("unknown reward kind '" + raw + "'");
}

inline ProcessSpec process_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("process must be a JSON object");
    switch (parse_process_kind(detail::json_require<std::string>(j, "kind"))) {
        case ProcessKind::GaussianIid:
            return GaussianIid(detail::json_get<std::size_t>(j, "dimension", 1),
                               detail::json_require<std::size_t>(j, "horizon"));
        case ProcessKind::Gbm: {
            GbmParams p;
            p.dimension = detail::json_get<std::size_t>(j, "dimension", p.dimension);
            p.gamma = detail::json_get<double>(j, "gamma", p.gamma);
            p.div_yield = detail::json_get<double>(j, "div_yield", p.div_yield);
            p.sigma = detail::json_get<double>(j, "sigma", p.sigma);
            p.spot = detail::json_get<double>(j, "spot", p.spot);
            p.times = detail::json_get<std::vector<double>>(j, "times", p.times);
            if (j.contains("horizon") && detail::json_get<std::size_t>(j, "horizon", 0) != p.times.size())
                throw ConfigError("GBM horizon disagrees with the number of observation times");
            return Gbm(std::move(p));
        }
        case ProcessKind::UserDiscrete: {
            auto support = detail::json_require<std::vector<double>>(j, "support");
            auto transitions = detail::json_require<std::vector<UserDiscrete::Matrix>>(j, "transitions");
            if (j.contains("dimension") && detail::json_get<std::size_t>(j, "dimension", 1) != 1)
                throw ConfigError("discrete processes are one-dimensional");
            UserDiscrete d(std::move(support), std::move(transitions));
            if (j.contains("horizon") && detail::json_get<std::size_t>(j, "horizon", 0) != d.horizon())
                throw ConfigError("discrete horizon disagrees with the number of transition stages");
            return d;
        }
    }
    throw ConfigError("unreachable process kind");
}

// Without a "reward" object: identity for scalar processes, an at-the-money
// basket put for GBM.
inline RewardSpec reward_from_json(const Json* j, const ProcessSpec& process) {
    if (j == nullptr || j->is_null()) {
        if (const auto* g = std::get_if<Gbm>(&process.variant()))
            return BasketPut(g->params().spot, g->params().gamma, g->params().times);
        return IdentityReward{};
    }
    switch (parse_reward_kind(detail::json_require<std::string>(*j, "kind"))) {
        case RewardKind::Identity:
            return IdentityReward{};
        case RewardKind::BasketPut: {
            std::vector<double> times;
            if (const auto* g = std::get_if<Gbm>(&process.variant())) times = g->params().times;
            times = detail::json_get<std::vector<double>>(*j, "times", times);
            return BasketPut(detail::json_require<double>(*j, "strike"), detail::json_get<double>(*j, "discount", 0.0),
                             std::move(times));
        }
    }
    throw ConfigError("unreachable reward kind");
}

inline RateSchedule schedule_from_json(const Json& j, std::size_t horizon) {
    if (j.contains("theoretical_delta")) {
        if (j.contains("rates")) throw ConfigError("give either 'rates' or 'theoretical_delta', not both");
        return RateSchedule::theoretical(detail::json_get<double>(j, "theoretical_delta", 0.0), horizon);
    }
    if (!j.contains("rates")) return RateSchedule::constant(0.6, horizon);
    const Json& r = j.at("rates");
    if (r.is_number()) return RateSchedule::constant(r.get<double>(), horizon);
    auto rates = detail::json_get<std::vector<double>>(j, "rates", {});
    if (rates.size() == 1 && horizon > 2) rates.assign(horizon - 1, rates[0]);
    if (rates.size() != horizon - 1)
        throw ConfigError("'rates' has " + std::to_string(rates.size()) + " entries but horizon " +
                          std::to_string(horizon) + " needs " + std::to_string(horizon - 1));
    return RateSchedule::manual(std::move(rates));
}

struct ExperimentConfig {
    ProcessSpec process = GaussianIid(1, 2);
    RewardSpec reward = IdentityReward{};
    RateSchedule schedule = RateSchedule::constant(0.6, 2);
    LevelPolicy level_policy = LevelPolicy::untruncated();
    std::size_t replicates = 100000;
    double alpha = 0.05;
    std::size_t bootstrap = kDefaultBootstrapResamples;
    CiMethod ci_method = CiMethod::Clt;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    Json raw;  // the parsed document, echoed into run manifests

    // Horizon agreement between process, reward and schedule.
    void validate() const {
        const std::size_t T = process.horizon();
        reward.check_compatible(process.dimension(), T);
        if (schedule.size() != T - 1)
            throw ConfigError("rate schedule has " + std::to_string(schedule.size()) + " entries but horizon " +
                              std::to_string(T) + " needs " + std::to_string(T - 1));
    }
};

inline CiMethod parse_ci_method(const std::string& raw) {
    const std::string s = detail::normalize_kind(raw);
    if (s == "clt") return CiMethod::Clt;
    if (s == "bootstrap" || s == "bootstrap-percentile") return CiMethod::BootstrapPercentile;
    throw ConfigError("unknown ci method '" + raw + "'");
}

inline ExperimentConfig experiment_from_json(const Json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    ExperimentConfig c;
    c.raw = j;
    c.process = process_from_json(j.contains("process") ? j.at("process") : Json{{"kind", "gaussian-iid"}, {"horizon", 2}});
    c.reward = reward_from_json(j.contains("reward") ? &j.at("reward") : nullptr, c.process);
    c.schedule = schedule_from_json(j, c.process.horizon());
    if (j.contains("truncate") && !j.at("truncate").is_null())
        c.level_policy = LevelPolicy::truncated(detail::json_get<unsigned>(j, "truncate", 0));
    c.replicates = detail::json_get<std::size_t>(j, "replicates", c.replicates);
    c.alpha = detail::json_get<double>(j, "alpha", c.alpha);
    c.bootstrap = detail::json_get<std::size_t>(j, "bootstrap", c.bootstrap);
    c.ci_method = parse_ci_method(detail::json_get<std::string>(j, "ci_method", "clt"));
    c.seed = detail::json_get<std::uint64_t>(j, "seed", c.seed);
    c.workers = detail::json_get<std::size_t>(j, "workers", c.workers);
    c.validate();
    return c;
}

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
        return Json::parse(in, nullptr, true, true);
    } catch (const Json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
}

} // namespace muse
