#pragma once

#include "smmergo/config.hpp"
#include "smmergo/harness.hpp"
#include "smmergo/models.hpp"
#include "smmergo/moments.hpp"
#include "smmergo/report.hpp"
#include "smmergo/smm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <sstream>
#include <optional>
#include <string>
#include <vector>

namespace smmergo {

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_runtime = 2 };

inline const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"simulate", "true-moments", "sensitivity", "converge",
                                                "surface",  "estimate",     "robustness",  "wiener-demo"};
    return names;
}

namespace detail {

/// Plot-ready panels for one simulated series: price trace, density, Hill curve, ACF.
[[nodiscard]] inline std::vector<std::pair<std::string, Table>> series_panels(std::span<const double> r) {
    std::vector<std::pair<std::string, Table>> panels;

    Table trace({"t", "return", "log_price"});
    double p = 0.0;
    for (std::size_t t = 0; t < r.size(); ++t) {
        p += r[t];
        trace.add({t, r[t], p});
    }
    panels.emplace_back("panel_trace.csv", std::move(trace));

    Table density({"z", "count", "log_density", "log_normal_density"});
    const double m = mean(r);
    const double sd = stddev(r);
    constexpr int bins = 100;
    constexpr double zmax = 10.0;
    std::vector<std::size_t> counts(bins, 0);
    const double width = 2.0 * zmax / bins;
    for (double v : r) {
        const double z = (v - m) / sd;
        const auto b = static_cast<long>(std::floor((z + zmax) / width));
        if (b >= 0 && b < bins) ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
        const double z = -zmax + (b + 0.5) * width;
        const double dens = static_cast<double>(counts[static_cast<std::size_t>(b)]) /
                            (static_cast<double>(r.size()) * width);
        const double lnorm = -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
        density.add({z, counts[static_cast<std::size_t>(b)], std::log(dens), lnorm});
    }
    panels.emplace_back("panel_density.csv", std::move(density));

    Table hill({"k", "fraction", "hill"});
    std::vector<double> tail;
    collect_positive_abs(r, tail);
    const std::size_t kmax = std::min(tail.size() - 1, std::max<std::size_t>(10, r.size() / 10));
    select_top_descending(tail, kmax + 1);
    std::size_t last = 0;
    for (int i = 0; i <= 100; ++i) {
        const auto k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(kmax), i / 100.0)));
        if (k < 2 || k == last || k > kmax) continue;
        last = k;
        double h = nan();
        try {
            h = hill_from_sorted(tail, k);
        } catch (const StatisticError&) {
        }
        hill.add({k, static_cast<double>(k) / static_cast<double>(r.size()), h});
    }
    panels.emplace_back("panel_hill.csv", std::move(hill));

    Table acf({"lag", "acf_raw", "acf_abs", "acf_square"});
    const std::size_t max_lag = std::min<std::size_t>(100, r.size() - 1);
    for (std::size_t lag = 1; lag <= max_lag; ++lag)
        acf.add({lag, autocorr(r, lag, Transform::raw), autocorr(r, lag, Transform::abs),
                 autocorr(r, lag, Transform::square)});
    panels.emplace_back("panel_acf.csv", std::move(acf));
    return panels;
}

inline void append(Table& dst, const Table& src) {
    if (dst.columns.empty()) dst.columns = src.columns;
    for (const auto& row : src.rows) dst.add_row(row);
}

[[nodiscard]] inline RunOptions run_options(const ExperimentConfig& c) { return {c.seed, c.workers, c.boundary}; }

[[nodiscard]] inline ExperimentReport run_simulate(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    SimConfig sc{c.simulate_t, 500, c.seed, c.boundary};
    const ReturnSeries s = simulate(c.truth, sc);
    ExperimentReport rep;
    rep.experiment = "simulate";
    rep.raw = Table({"t", "return", "seed"});
    for (std::size_t t = 0; t < s.values.size(); ++t) rep.raw.add({t, s.values[t], s.seed});
    rep.report = Table({"model", "t_len", "seed", "moment", "value"});
    const MomentSet set = c.moment_set();
    std::vector<double> mv(set.size(), nan());
    try {
        mv = moment_vector(s.values, set).values;
    } catch (const StatisticError&) {
        // series too short for some moments; panels are still useful
        for (std::size_t j = 0; j < set.size(); ++j) {
            try {
                mv[j] = moment_vector(s.values, MomentSet({set[j]})).values[0];
            } catch (const StatisticError&) {
            }
        }
    }
    for (std::size_t j = 0; j < set.size(); ++j)
        rep.report.add({to_string(c.model), c.simulate_t, s.seed, label_of(set[j]), mv[j]});
    rep.extra = series_panels(s.values);
    rep.wall_time = seconds_since(t0);
    rep.timing = timing_table();
    rep.timing.add({"simulate", "all", rep.wall_time});
    rep.cells = rep.report.size();
    return rep;
}

[[nodiscard]] inline ExperimentReport run_true_moments(const ExperimentConfig& c) {
    TrueMomentsConfig tc{c.truth, c.true_t_list, c.true_runs, c.moment_set()};
    return true_moments_experiment(tc, run_options(c)).report();
}

[[nodiscard]] inline ExperimentReport run_sensitivity(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    ExperimentReport all;
    all.experiment = "sensitivity";
    all.timing = timing_table();
    for (std::size_t idx : c.sensitivity_indices()) {
        const Range range = c.sensitivity_range(idx);
        SensitivityConfig sc{c.truth, idx, range.lo, range.hi, c.sensitivity_points,
                             c.sensitivity_t, c.sensitivity_n, c.sensitivity_r, c.moment_set()};
        const ExperimentReport one = sensitivity_sweep(sc, run_options(c)).report();
        append(all.report, one.report);
        append(all.raw, one.raw);
        append(all.timing, one.timing);
    }
    all.cells = all.report.size();
    all.wall_time = seconds_since(t0);
    return all;
}

[[nodiscard]] inline ExperimentReport run_converge(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    const MomentSet set = c.moment_set();
    TrueMomentsConfig tc{c.truth, {c.converge_true_t}, c.converge_true_r, set};
    const TrueMomentsResult truth = true_moments_experiment(tc, run_options(c));
    ConvergenceConfig cc;
    cc.theta = c.truth;
    cc.scenarios = c.converge_scenarios;
    cc.set = set;
    cc.true_values = truth.cells.front().mean;
    ExperimentReport rep = convergence_traces(cc, run_options(c)).report();
    rep.timing.add({"true-moments", std::to_string(c.converge_true_t), truth.wall_time});
    rep.wall_time = seconds_since(t0);
    return rep;
}

[[nodiscard]] inline WeightingMatrix weighting_for(const ExperimentConfig& c, const MomentSet& set) {
    return estimate_weighting_matrix(c.truth, c.weighting_t, c.weighting_r, set, c.seed, c.workers);
}

[[nodiscard]] inline ExperimentReport run_surface(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    const WeightingMatrix w = weighting_for(c, c.moment_set());
    ScenarioConfig sc{"surface", c.surface_t, c.surface_n, 1};
    ExperimentReport rep = surface_experiment(c.surface_spec(), c.truth, sc, w, c.surface_crn, run_options(c)).report();
    rep.wall_time = seconds_since(t0);
    return rep;
}

[[nodiscard]] inline EstimationResult estimation_for(const ExperimentConfig& c, const MomentSet& set) {
    const WeightingMatrix w = weighting_for(c, set);
    EstimationConfig ec;
    ec.truth = c.truth;
    ec.space = ParameterSpace::around(c.truth, 0.25);
    ec.scenarios = c.scenarios;
    ec.candidates = c.candidates;
    ec.runs = c.runs;
    ec.emp_t = c.emp_t;
    return estimation_exercise(ec, w, run_options(c));
}

[[nodiscard]] inline ExperimentReport run_estimate(const ExperimentConfig& c) {
    const auto t0 = Clock::now();
    ExperimentReport rep = estimation_for(c, c.moment_set()).report();
    rep.wall_time = seconds_since(t0);
    return rep;
}

[[nodiscard]] inline ExperimentReport run_robustness(const ExperimentConfig& c,
                                                     std::optional<ExperimentReport>& estimation_out) {
    if (c.exclude_m6) throw ConfigError("exclude-m6", "robustness compares sets with and without m6 itself");
    const auto t0 = Clock::now();
    const EstimationResult est = estimation_for(c, MomentSet::all());
    estimation_out = est.report();
    RobustnessConfig rc;
    rc.sets_per_size = c.sets_per_size;
    rc.fitness = c.fitness;
    rc.fitness_scenarios = c.fitness_scenarios;
    rc.comparison_scenarios.clear();
    for (const auto& s : c.scenarios) rc.comparison_scenarios.push_back(s.label);
    ExperimentReport rep = robustness_experiment(est, rc, run_options(c)).report();
    rep.timing.add({"estimate", "all", est.wall_time});
    rep.wall_time = seconds_since(t0);
    return rep;
}

[[nodiscard]] inline ExperimentReport run_wiener(const ExperimentConfig& c) {
    WienerConfig wc;
    wc.t_len = c.wiener_t;
    wc.paths = c.wiener_paths;
    return wiener_ergodicity_demo(wc, run_options(c)).report();
}

}  // namespace detail

/// Runs one experiment for an already resolved configuration and writes its files into `out_dir`.
[[nodiscard]] inline ExperimentReport run_experiment(const std::string& subcommand, const ExperimentConfig& c,
                                                     const std::filesystem::path& out_dir) {
    ExperimentReport rep;
    std::optional<ExperimentReport> nested;
    if (subcommand == "simulate") rep = detail::run_simulate(c);
    else if (subcommand == "true-moments") rep = detail::run_true_moments(c);
    else if (subcommand == "sensitivity") rep = detail::run_sensitivity(c);
    else if (subcommand == "converge") rep = detail::run_converge(c);
    else if (subcommand == "surface") rep = detail::run_surface(c);
    else if (subcommand == "estimate") rep = detail::run_estimate(c);
    else if (subcommand == "robustness") rep = detail::run_robustness(c, nested);
    else if (subcommand == "wiener-demo") rep = detail::run_wiener(c);
    else throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");

    const Provenance prov{subcommand, c.hash(), c.seed, std::string(to_string(c.scale))};
    rep.write(out_dir, prov);
    if (nested) nested->write(out_dir / "estimate", Provenance{"estimate", c.hash(), c.seed, prov.scale});
    Table echo({"setting"});
    std::istringstream lines(c.canonical());
    for (std::string line; std::getline(lines, line);) echo.add({line});
    write_csv(out_dir / "config_effective.csv", echo, prov);
    return rep;
}

/**
 * @brief Command-line entry point.
 *
 * Returns 0 on success, 1 for usage or configuration errors, 2 for runtime
 * failures, and prints a one-line summary on success.
 */
[[nodiscard]] inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                                 std::ostream& err = std::cerr) {
    CLI::App app{"Monte Carlo SMM experiments for agent-based market models", "smmergo"};
    app.require_subcommand(1, 1);
    std::string config_path;
    std::string out_dir;
    ConfigOverrides ov;
    std::string model, scale, free;
    std::uint64_t seed = 0;
    std::size_t workers = 0, t = 0, n = 0, r = 0, grid = 0, candidates = 0;
    bool exclude_m6 = false;

    std::vector<CLI::App*> subs;
    for (const auto& name : subcommands()) {
        CLI::App* s = app.add_subcommand(name);
        s->add_option("--model", model, "model id: alw or fw");
        s->add_option("--config", config_path, "experiment config file (key = value with [sections])");
        s->add_option("--out", out_dir, "output directory");
        s->add_option("--scale", scale, "desk or paper");
        s->add_option("--workers", workers, "worker threads (numeric output does not depend on it)");
        s->add_option("--seed", seed, "master seed override");
        s->add_option("--t", t, "series length");
        s->add_option("--n", n, "ensemble size (wiener-demo: paths)");
        s->add_option("--r", r, "Monte Carlo runs");
        s->add_option("--grid", grid, "grid points per axis");
        s->add_option("--free", free, "comma-separated free parameters");
        s->add_option("--candidates", candidates, "Sobol candidates per run");
        s->add_flag("--exclude-m6", exclude_m6, "drop m6 from the moment set");
        subs.push_back(s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return exit_config;
    }

    std::string sub;
    CLI::App* chosen = nullptr;
    for (auto* s : subs)
        if (s->parsed()) {
            sub = s->get_name();
            chosen = s;
        }
    auto given = [&](const char* flag) { return chosen->count(flag) > 0; };
    if (given("--model")) ov.model = model;
    if (given("--scale")) ov.scale = scale;
    if (given("--seed")) ov.seed = seed;
    if (given("--workers")) ov.workers = workers;
    if (given("--t")) ov.t = t;
    if (given("--n")) ov.n = n;
    if (given("--r")) ov.r = r;
    if (given("--grid")) ov.grid = grid;
    if (given("--free")) ov.free = free;
    if (given("--candidates")) ov.candidates = candidates;
    ov.exclude_m6 = exclude_m6;

    try {
        const std::string text = config_path.empty() ? std::string{} : read_text_file(config_path);
        const ExperimentConfig cfg = resolve_config(sub, text, ov);
        const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path("out") / sub : std::filesystem::path(out_dir);
        const ExperimentReport rep = run_experiment(sub, cfg, dir);
        out << "experiment=" << sub << " model=" << to_string(cfg.model) << " cells=" << rep.cells
            << " wall_time_s=" << format_double(std::round(rep.wall_time * 1000.0) / 1000.0) << " out=" << dir.string()
            << "\n";
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const ParameterDomainError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << "\n";
        return exit_runtime;
    }
}

}  // namespace smmergo
