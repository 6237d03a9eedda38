// muse: command-line front end for the unbiased optimal-stopping estimator.
//
//   muse estimate       generic estimation from flags or --config
//   muse tune-rate      cost / variance sweep over the geometric rate
//   muse gaussian-suite estimator vs MC1 / MC2 vs exact value, i.i.d. N(0,1)
//   muse bermudan       Bermudan basket put under multi-asset GBM
//   muse stop           online stopping rule episodes

#include "muse/muse.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using muse::Json;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string out_dir = ".";
    std::string config_path;
};

// Flags that were actually given on the command line, overlaid on --config.
struct ModelFlags {
    std::optional<std::string> process;
    std::optional<std::size_t> horizon;
    std::optional<std::size_t> dimension;
    std::vector<double> rates;
    std::optional<double> theoretical_delta;
    std::optional<unsigned> truncate;
    std::optional<std::string> reward;
    std::optional<double> strike;
    std::optional<double> discount;
    std::optional<double> gamma;
    std::optional<double> div_yield;
    std::optional<double> sigma;
    std::optional<double> spot;
    std::vector<double> times;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--process", process, "gaussian-iid | gbm | discrete (discrete needs --config)");
        cmd->add_option("--horizon", horizon, "Number of stages T");
        cmd->add_option("--dimension", dimension, "State dimension d");
        cmd->add_option("--rates", rates, "Geometric rates r_1..r_{T-1}; one value is used for every stage")
            ->delimiter(',');
        cmd->add_option("--theoretical-delta", theoretical_delta, "Use the moment-based rate schedule with this delta");
        cmd->add_option("--truncate", truncate, "Truncate levels at M (biased)");
        cmd->add_option("--reward", reward, "identity | basket-put");
        cmd->add_option("--strike", strike, "Basket put strike");
        cmd->add_option("--discount", discount, "Basket put discount rate");
        cmd->add_option("--gamma", gamma, "GBM drift");
        cmd->add_option("--div-yield", div_yield, "GBM dividend yield");
        cmd->add_option("--sigma", sigma, "GBM volatility");
        cmd->add_option("--spot", spot, "GBM initial price");
        cmd->add_option("--times", times, "GBM observation times")->delimiter(',');
    }

    void overlay(Json& doc) const {
        Json& p = doc["process"];
        if (p.is_null()) p = Json::object();
        if (process) {
            const std::string old = p.value("kind", std::string{});
            if (!old.empty() && muse::parse_process_kind(old) != muse::parse_process_kind(*process))
                p = Json::object();
            p["kind"] = *process;
        }
        if (!p.contains("kind")) p["kind"] = "gaussian-iid";
        if (horizon) p["horizon"] = *horizon;
        if (dimension) p["dimension"] = *dimension;
        if (gamma) p["gamma"] = *gamma;
        if (div_yield) p["div_yield"] = *div_yield;
        if (sigma) p["sigma"] = *sigma;
        if (spot) p["spot"] = *spot;
        if (!times.empty()) p["times"] = times;
        if (muse::parse_process_kind(p["kind"].get<std::string>()) == muse::ProcessKind::GaussianIid &&
            !p.contains("horizon"))
            p["horizon"] = 2;

        if (reward || strike || discount) {
            Json& r = doc["reward"];
            if (r.is_null()) r = Json::object();
            if (reward) r["kind"] = *reward;
            if (strike) r["strike"] = *strike;
            if (discount) r["discount"] = *discount;
        }
        if (!rates.empty()) {
            doc.erase("theoretical_delta");
            doc["rates"] = rates;
        }
        if (theoretical_delta) {
            doc.erase("rates");
            doc["theoretical_delta"] = *theoretical_delta;
        }
        if (truncate) doc["truncate"] = *truncate;
    }
};

Json base_document(const GlobalOptions& g) {
    return g.config_path.empty() ? Json::object() : muse::load_json_file(g.config_path);
}

fs::path prepare_out_dir(const GlobalOptions& g) {
    fs::path dir(g.out_dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

template <class Fn>
void write_stream(const fs::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    fn(out);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

// Seed / workers precedence: explicit flag, then config file, then default.
void apply_run_settings(Json& doc, const GlobalOptions& g, const CLI::App& app) {
    if (app.count("--seed") > 0 || !doc.contains("seed")) doc["seed"] = g.seed;
    if (app.count("--workers") > 0 || !doc.contains("workers")) doc["workers"] = g.workers;
}

int cmd_estimate(const GlobalOptions& g, const CLI::App& app, const CLI::App& sub, const ModelFlags& flags,
                 std::optional<std::size_t> replicates, std::optional<double> alpha,
                 std::optional<std::size_t> bootstrap, std::optional<std::string> ci) {
    Json doc = base_document(g);
    flags.overlay(doc);
    apply_run_settings(doc, g, app);
    if (replicates) doc["replicates"] = *replicates;
    if (alpha) doc["alpha"] = *alpha;
    if (bootstrap) doc["bootstrap"] = *bootstrap;
    if (ci) doc["ci_method"] = *ci;
    (void)sub;

    const muse::ExperimentConfig cfg = muse::experiment_from_json(doc);
    const std::size_t workers = muse::resolve_workers(cfg.workers);
    const auto run = muse::run_estimate(cfg.process, cfg.reward, cfg.schedule, cfg.level_policy, cfg.replicates,
                                        workers, cfg.seed, cfg.alpha, cfg.ci_method, cfg.bootstrap,
                                        nlohmann::ordered_json(doc));
    const fs::path dir = prepare_out_dir(g);
    write_stream(dir / "replicates.csv", [&](std::ostream& os) { muse::write_replicates_csv(os, run.samples); });
    write_file(dir / "summary.json", muse::summary_json(run).dump(2) + "\n");
    write_file(dir / "manifest.json", run.manifest.to_json().dump(2) + "\n");
    std::cout << muse::summary_line(run.summary, run.ci) << (run.biased ? " [biased: truncated levels]" : "")
              << "\n";
    return 0;
}

int cmd_tune_rate(const GlobalOptions& g, const CLI::App& app, double r_min, double r_max, double step,
                  std::size_t horizon, std::size_t replicates) {
    if (!(r_min > 0.5 && r_max < 1.0 && r_min <= r_max))
        throw muse::ConfigError("rate grid must satisfy 1/2 < r-min <= r-max < 1");
    Json doc = base_document(g);
    apply_run_settings(doc, g, app);
    const muse::GaussianIid process(1, horizon);
    const auto grid = muse::rate_grid(r_min, r_max, step);
    const auto result = muse::tune_rate(process, muse::IdentityReward{}, grid, replicates,
                                        muse::resolve_workers(doc["workers"].get<std::size_t>()),
                                        doc["seed"].get<std::uint64_t>());
    const fs::path dir = prepare_out_dir(g);
    write_stream(dir / "tune_rate.csv", [&](std::ostream& os) { muse::write_tune_csv(os, result); });
    const auto& best = result.rows[result.argmin];
    std::cout << "minimizer r=" << muse::format_double(best.r)
              << " self_normalized_variance=" << muse::format_double(best.self_normalized_variance) << "\n";
    return 0;
}

int cmd_gaussian_suite(const GlobalOptions& g, const CLI::App& app, const muse::SuiteOptions& opt) {
    Json doc = base_document(g);
    apply_run_settings(doc, g, app);
    const auto result = muse::gaussian_suite(opt, muse::resolve_workers(doc["workers"].get<std::size_t>()),
                                             doc["seed"].get<std::uint64_t>());
    const fs::path dir = prepare_out_dir(g);
    write_stream(dir / "gaussian_suite.csv", [&](std::ostream& os) { muse::write_suite_csv(os, result); });
    for (std::size_t i = 0; i < result.rows.size(); ++i)
        write_stream(dir / ("replicates_T" + std::to_string(result.rows[i].horizon) + ".csv"),
                     [&](std::ostream& os) { muse::write_replicates_csv(os, result.samples[i]); });
    muse::write_suite_csv(std::cout, result);
    return 0;
}

int cmd_bermudan(const GlobalOptions& g, const CLI::App& app, const muse::BermudanParams& p, std::size_t replicates,
                 double alpha) {
    Json doc = base_document(g);
    apply_run_settings(doc, g, app);
    const auto run = muse::run_bermudan(p, replicates, muse::resolve_workers(doc["workers"].get<std::size_t>()),
                                        doc["seed"].get<std::uint64_t>(), alpha);
    const fs::path dir = prepare_out_dir(g);
    write_stream(dir / "replicates.csv", [&](std::ostream& os) { muse::write_replicates_csv(os, run.samples); });
    write_file(dir / "summary.json", muse::summary_json(run).dump(2) + "\n");
    write_file(dir / "manifest.json", run.manifest.to_json().dump(2) + "\n");
    std::cout << muse::summary_line(run.summary, run.ci) << "\n";
    return 0;
}

int cmd_stop(const GlobalOptions& g, const CLI::App& app, const ModelFlags& flags, std::size_t inner,
             std::optional<double> epsilon, double adaptive_alpha, std::size_t episodes) {
    Json doc = base_document(g);
    flags.overlay(doc);
    apply_run_settings(doc, g, app);
    const muse::ExperimentConfig cfg = muse::experiment_from_json(doc);

    muse::PolicyConfig pc;
    pc.inner_replicates = inner;
    pc.tolerance = epsilon ? muse::Tolerance::fixed(*epsilon) : muse::Tolerance::adaptive(adaptive_alpha);
    pc.schedule = cfg.schedule;
    pc.level_policy = cfg.level_policy;

    const auto run = muse::run_stopping_policy(cfg.process, cfg.reward, pc, episodes,
                                               muse::resolve_workers(cfg.workers), muse::Stream::root(cfg.seed),
                                               cfg.seed);
    const fs::path dir = prepare_out_dir(g);
    write_stream(dir / "episodes.csv",
                 [&](std::ostream& os) { muse::write_episodes_csv(os, run.outcomes, cfg.process.horizon()); });
    nlohmann::ordered_json summary;
    summary["episodes"] = run.summary.n;
    summary["mean_reward"] = run.summary.mean;
    summary["std_error"] = run.summary.std_error;
    summary["total_cost"] = run.summary.total_cost;
    summary["wall_time_s"] = run.summary.wall_time;
    write_file(dir / "stop_summary.json", summary.dump(2) + "\n");
    std::cout << "episodes=" << run.summary.n << " mean_reward=" << muse::format_double(run.summary.mean)
              << " se=" << muse::format_double(run.summary.std_error) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unbiased Monte Carlo estimates for finite-horizon optimal stopping"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
    app.add_option("--workers", g.workers, "Worker threads (MUSE_WORKERS overrides)")->capture_default_str();
    app.add_option("--out-dir", g.out_dir, "Directory for CSV / JSON outputs")->capture_default_str();
    app.add_option("--config", g.config_path, "JSON experiment config");

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate the optimal stopping utility");
    ModelFlags est_flags;
    est_flags.add_to(est);
    std::optional<std::size_t> est_replicates;
    std::optional<double> est_alpha;
    std::optional<std::size_t> est_bootstrap;
    std::optional<std::string> est_ci;
    est->add_option("--replicates", est_replicates, "Number of replicates");
    est->add_option("--alpha", est_alpha, "CI level is 1 - alpha");
    est->add_option("--bootstrap", est_bootstrap, "Bootstrap resamples");
    est->add_option("--ci", est_ci, "clt | bootstrap");

    // tune-rate
    auto* tune = app.add_subcommand("tune-rate", "Sweep the geometric rate on the Gaussian example");
    double r_min = 0.51, r_max = 0.70, step = 0.01;
    std::size_t tune_horizon = 3, tune_replicates = 100000;
    tune->add_option("--r-min", r_min)->capture_default_str();
    tune->add_option("--r-max", r_max)->capture_default_str();
    tune->add_option("--step", step)->capture_default_str();
    tune->add_option("--horizon", tune_horizon)->capture_default_str()->check(CLI::Range(2, 64));
    tune->add_option("--replicates", tune_replicates)->capture_default_str()->check(CLI::PositiveNumber);

    // gaussian-suite
    auto* suite = app.add_subcommand("gaussian-suite", "Estimator vs MC1 / MC2 vs exact value");
    muse::SuiteOptions suite_opt;
    suite->add_option("--horizons", suite_opt.horizons)->delimiter(',')->capture_default_str();
    suite->add_option("--replicates", suite_opt.replicates)->capture_default_str()->check(CLI::PositiveNumber);
    suite->add_option("--mc1-paths", suite_opt.mc1_paths)->capture_default_str()->check(CLI::PositiveNumber);
    suite->add_option("--mc2-trees", suite_opt.mc2_trees)->capture_default_str()->check(CLI::PositiveNumber);
    suite->add_option("--mc2-arity", suite_opt.mc2_arity)->capture_default_str()->check(CLI::PositiveNumber);
    suite->add_option("--r", suite_opt.r)->capture_default_str();

    // bermudan
    auto* berm = app.add_subcommand("bermudan", "Price a Bermudan basket put");
    muse::BermudanParams bp;
    std::size_t berm_replicates = 100000;
    double berm_alpha = 0.05;
    berm->add_option("--dim", bp.dimension)->capture_default_str()->check(CLI::PositiveNumber);
    berm->add_option("--strike", bp.strike)->capture_default_str();
    berm->add_option("--spot", bp.spot)->capture_default_str();
    berm->add_option("--sigma", bp.sigma)->capture_default_str();
    berm->add_option("--rate", bp.rate)->capture_default_str();
    berm->add_option("--div", bp.div_yield)->capture_default_str();
    berm->add_option("--dates", bp.dates)->delimiter(',')->capture_default_str();
    berm->add_option("--r", bp.r, "Geometric rate at every stage")->capture_default_str();
    berm->add_option("--replicates", berm_replicates)->capture_default_str()->check(CLI::PositiveNumber);
    berm->add_option("--alpha", berm_alpha)->capture_default_str();

    // stop
    auto* stop = app.add_subcommand("stop", "Run the online stopping rule");
    ModelFlags stop_flags;
    stop_flags.add_to(stop);
    std::size_t inner = 2000, episodes = 1000;
    std::optional<double> epsilon;
    double adaptive_alpha = 0.05;
    stop->add_option("--inner", inner, "Replicates per continuation estimate")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    auto* eps_opt = stop->add_option("--epsilon", epsilon, "Fixed tolerance (default: adaptive)");
    stop->add_option("--adaptive-alpha", adaptive_alpha, "Adaptive tolerance = CLT half-width at this alpha")
        ->capture_default_str()
        ->excludes(eps_opt);
    stop->add_option("--episodes", episodes)->capture_default_str()->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*est) return cmd_estimate(g, app, *est, est_flags, est_replicates, est_alpha, est_bootstrap, est_ci);
        if (*tune) return cmd_tune_rate(g, app, r_min, r_max, step, tune_horizon, tune_replicates);
        if (*suite) return cmd_gaussian_suite(g, app, suite_opt);
        if (*berm) return cmd_bermudan(g, app, bp, berm_replicates, berm_alpha);
        if (*stop) return cmd_stop(g, app, stop_flags, inner, epsilon, adaptive_alpha, episodes);
    } catch (const muse::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const muse::DomainError& e) {
        // Only user-supplied parameters reach a domain check from here.
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
