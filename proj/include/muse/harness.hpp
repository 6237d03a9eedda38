#pragma once
//
// Deterministic parallel replication.
//
// Replicate i always runs on base.child(i) and its result lands in slot i, so
// the output is bit-identical for any worker count. Work is handed out in
// chunks from a shared counter; per-replicate cost is heavy-tailed, so static
// partitioning would leave workers idle behind a few deep replicates.

#include "muse/errors.hpp"
#include "muse/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace muse {

struct RunManifest {
    nlohmann::ordered_json config;  // snapshot supplied by the caller
    std::uint64_t master_seed = 0;
    std::size_t workers = 1;
    std::size_t total_replicates = 0;
    std::size_t chunk_size = 1;
    double wall_time = 0.0;
    std::vector<double> worker_wall_times;
    std::vector<std::size_t> worker_replicates;

    [[nodiscard]] nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["config"] = config;
        j["master_seed"] = master_seed;
        j["workers"] = workers;
        j["total_replicates"] = total_replicates;
        j["chunk_size"] = chunk_size;
        j["wall_time_s"] = wall_time;
        j["worker_wall_times_s"] = worker_wall_times;
        j["worker_replicates"] = worker_replicates;
        return j;
    }
};

template <class R>
struct ReplicatedRun {
    std::vector<R> results;  // ordered by replicate index
    RunManifest manifest;
};

// Worker count after the MUSE_WORKERS override; at least 1.
inline std::size_t resolve_workers(std::size_t requested) {
    if (const char* env = std::getenv("MUSE_WORKERS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end != nullptr && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
        throw ConfigError(std::string("MUSE_WORKERS must be a positive integer, got '") + env + "'");
    }
    return std::max<std::size_t>(requested, 1);
}

inline std::size_t default_chunk_size(std::size_t n, std::size_t workers) {
    return std::clamp<std::size_t>(n / (4 * workers), 1, 64);
}

// task(index, stream) -> R. Any exception aborts the run and is rethrown as a
// ReplicateFailure naming the smallest failing index seen.
template <class Task>
auto run_replicated(Task&& task, std::size_t n, std::size_t workers, const Stream& base,
                    std::uint64_t master_seed = 0, nlohmann::ordered_json config = {})
    -> ReplicatedRun<std::invoke_result_t<Task&, std::size_t, Stream&>> {
    using R = std::invoke_result_t<Task&, std::size_t, Stream&>;
    static_assert(std::is_default_constructible_v<R>, "replicate results must be default constructible");
    static_assert(!std::is_same_v<R, bool>, "vector<bool> slots are not independently writable");
    if (n == 0) throw ContractViolation("need at least one replicate");
    if (workers == 0) throw ContractViolation("need at least one worker");
    workers = std::min(workers, n);

    ReplicatedRun<R> run;
    run.results.resize(n);
    auto& m = run.manifest;
    m.config = std::move(config);
    m.master_seed = master_seed;
    m.workers = workers;
    m.total_replicates = n;
    m.chunk_size = default_chunk_size(n, workers);
    m.worker_wall_times.assign(workers, 0.0);
    m.worker_replicates.assign(workers, 0);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::mutex failure_mutex;
    std::optional<std::size_t> failed_index;
    std::string failure_message;

    const std::size_t chunk = m.chunk_size;
    auto worker = [&](std::size_t w) {
        const auto start = std::chrono::steady_clock::now();
        std::size_t done = 0;
        while (!abort.load(std::memory_order_relaxed)) {
            const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
            if (begin >= n) break;
            const std::size_t end = std::min(n, begin + chunk);
            for (std::size_t i = begin; i < end; ++i) {
                try {
                    Stream s = base.child(i);
                    run.results[i] = task(i, s);
                    ++done;
                } catch (const std::exception& e) {
                    std::lock_guard lock(failure_mutex);
                    if (!failed_index || i < *failed_index) {
                        failed_index = i;
                        failure_message = e.what();
                    }
                    abort.store(true, std::memory_order_relaxed);
                    break;
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failed_index || i < *failed_index) {
                        failed_index = i;
                        failure_message = "unknown exception";
                    }
                    abort.store(true, std::memory_order_relaxed);
                    break;
                }
            }
        }
        m.worker_wall_times[w] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        m.worker_replicates[w] = done;
    };

    const auto start = std::chrono::steady_clock::now();
    if (workers == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
    }
    m.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (failed_index) throw ReplicateFailure(*failed_index, failure_message);
    return run;
}

template <class Task>
auto run_replicated(Task&& task, std::size_t n, std::size_t workers, const SeedSpec& seed,
                    nlohmann::ordered_json config = {}) {
    return run_replicated(std::forward<Task>(task), n, workers, seed.root(), seed.master_seed, std::move(config));
}

} // namespace muse
