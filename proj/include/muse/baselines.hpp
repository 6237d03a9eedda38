#pragma once
//
// Biased comparison estimators and exact oracles.
//
//   mc1   mean over paths of max_k f(k, x_k)  (perfect foresight, biased high)
//   mc2   forest of complete a-ary trees, backward induction per tree
//         (Broadie-Glasserman high estimator)
//   gaussian_dp_oracle  closed-form Snell recursion for i.i.d. N(0,1), f(x) = x
//   discrete_dp_oracle  exhaustive backward induction on a UserDiscrete chain

#include "muse/errors.hpp"
#include "muse/inference.hpp"
#include "muse/process.hpp"
#include "muse/random.hpp"
#include "muse/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

namespace muse {

struct BaselineEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double variance = 0.0;   // per path (MC1) or per tree (MC2)
    std::size_t samples = 0;  // paths or trees
    std::uint64_t cost = 0;   // state draws
};

// Path p is drawn from stream.child(p).
template <Process P, Reward R>
BaselineEstimate mc1_estimate(const P& process, const R& reward, std::size_t n_paths, const Stream& stream) {
    if (n_paths == 0) throw ContractViolation("MC1 needs at least one path");
    const std::size_t T = process.horizon();
    TrajectoryHistory history(process.dimension());
    history.reserve(T);
    RunningStats stats;
    for (std::size_t p = 0; p < n_paths; ++p) {
        Stream s = stream.child(p);
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 1; k <= T; ++k) {
            const auto slot = history.next_slot();
            process.draw_next(history, s, slot);
            best = std::max(best, reward(k, std::span<const double>(slot)));
            history.commit();
        }
        for (std::size_t k = 0; k < T; ++k) history.pop();
        stats.add(best);
    }
    BaselineEstimate out;
    out.estimate = stats.mean();
    out.variance = stats.variance();
    out.std_error = std::sqrt(out.variance / static_cast<double>(n_paths));
    out.samples = n_paths;
    out.cost = static_cast<std::uint64_t>(n_paths) * T;
    return out;
}

struct TreeSpec {
    std::size_t arity = 5;
    std::size_t depth = 1;
    std::size_t forest_size = 1000;

    // State draws per tree: 1 + a + ... + a^{depth-1}.
    [[nodiscard]] std::uint64_t nodes_per_tree() const {
        std::uint64_t total = 0, layer = 1;
        for (std::size_t k = 0; k < depth; ++k) {
            total += layer;
            layer *= arity;
        }
        return total;
    }
};

namespace detail {

// Value of the node whose state was just committed as x_k.
template <Process P, Reward R>
double mc2_node(std::size_t k, TrajectoryHistory& history, const P& process, const R& reward, std::size_t arity,
                Stream& s) {
    const double here = reward(k, history.last());
    if (k == process.horizon()) return here;
    double sum = 0.0;
    for (std::size_t j = 0; j < arity; ++j) {
        const auto slot = history.next_slot();
        process.draw_next(history, s, slot);
        history.commit();
        sum += mc2_node(k + 1, history, process, reward, arity, s);
        history.pop();
    }
    return std::max(here, sum / static_cast<double>(arity));
}

} // namespace detail

// Tree i is drawn depth-first from stream.child(i); children are fresh i.i.d.
// conditional draws at every node. With arity 1 a tree is one path and the
// value equals MC1's path maximum on the same stream.
template <Process P, Reward R>
BaselineEstimate mc2_estimate(const P& process, const R& reward, const TreeSpec& tree, const Stream& stream) {
    if (tree.arity == 0 || tree.forest_size == 0) throw ContractViolation("MC2 needs arity >= 1 and trees >= 1");
    if (tree.depth != process.horizon()) throw ConfigError("tree depth must equal the horizon");
    TrajectoryHistory history(process.dimension());
    history.reserve(tree.depth);
    RunningStats stats;
    for (std::size_t i = 0; i < tree.forest_size; ++i) {
        Stream s = stream.child(i);
        const auto slot = history.next_slot();
        process.draw_next(history, s, slot);
        history.commit();
        stats.add(detail::mc2_node(1, history, process, reward, tree.arity, s));
        history.pop();
    }
    BaselineEstimate out;
    out.estimate = stats.mean();
    out.variance = stats.variance();
    out.std_error = std::sqrt(out.variance / static_cast<double>(tree.forest_size));
    out.samples = tree.forest_size;
    out.cost = tree.nodes_per_tree() * tree.forest_size;
    return out;
}

inline double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double standard_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// U_1 = 0, U_k = E[max(Z, U_{k-1})] = c Phi(c) + phi(c) with c = U_{k-1}.
inline double gaussian_dp_oracle(std::size_t horizon) {
    if (horizon == 0) throw ContractViolation("horizon must be positive");
    double u = 0.0;
    for (std::size_t k = 2; k <= horizon; ++k) u = u * standard_normal_cdf(u) + standard_normal_pdf(u);
    return u;
}

inline constexpr double kDiscreteOracleMaxPaths = 1e7;

// Number of positive-probability paths of the chain.
inline double discrete_path_count(const UserDiscrete& process) {
    const std::size_t m = process.support().size();
    const auto& tr = process.transitions();
    std::vector<double> count(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) count[j] = tr[0][0][j] > 0.0 ? 1.0 : 0.0;
    for (std::size_t k = 1; k < tr.size(); ++k) {
        std::vector<double> next(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (count[i] > 0.0)
                for (std::size_t j = 0; j < m; ++j)
                    if (tr[k][i][j] > 0.0) next[j] += count[i];
        count = std::move(next);
    }
    double total = 0.0;
    for (double c : count) total += c;
    return total;
}

namespace detail {

template <Reward R>
double discrete_value(const UserDiscrete& process, const R& reward, TrajectoryHistory& history) {
    const std::size_t k = history.stage();
    const std::size_t T = process.horizon();
    const auto& row = process.row(history);
    const auto& support = process.support();
    double total = 0.0;
    for (std::size_t j = 0; j < support.size(); ++j) {
        if (row[j] <= 0.0) continue;
        const double x[1] = {support[j]};
        const double f = reward(k + 1, std::span<const double>(x, 1));
        double v = f;
        if (k + 1 < T) {
            history.push(std::span<const double>(x, 1));
            v = std::max(f, discrete_value(process, reward, history));
            history.pop();
        }
        total += row[j] * v;
    }
    return total;
}

} // namespace detail

// Exact U_T by backward induction over every positive-probability path.
template <Reward R>
double discrete_dp_oracle(const UserDiscrete& process, const R& reward) {
    const double paths = discrete_path_count(process);
    if (paths > kDiscreteOracleMaxPaths)
        throw BudgetExceeded("discrete oracle refused: " + std::to_string(paths) + " paths exceeds the 1e7 budget");
    TrajectoryHistory history(1);
    return detail::discrete_value(process, reward, history);
}

template <Reward R>
double discrete_dp_oracle(const ProcessSpec& spec, const R& reward) {
    const auto* d = std::get_if<UserDiscrete>(&spec.variant());
    if (d == nullptr) throw UnsupportedError("discrete oracle needs a discrete process");
    return discrete_dp_oracle(*d, reward);
}

} // namespace muse
