#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/models.hpp"
#include "smmergo/moments.hpp"
#include "smmergo/parallel.hpp"
#include "smmergo/params.hpp"
#include "smmergo/report.hpp"
#include "smmergo/seed_plan.hpp"
#include "smmergo/smm.hpp"
#include "smmergo/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smmergo {

/// Seeds and worker count shared by every experiment driver.
struct RunOptions {
    std::uint64_t master_seed = 42;
    std::size_t workers = 1;
    BoundaryMode boundary = BoundaryMode::clamp;
};

namespace detail {

using Clock = std::chrono::steady_clock;

[[nodiscard]] inline double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

[[nodiscard]] inline Table timing_table() { return Table({"experiment", "cell", "wall_time_s"}); }

[[nodiscard]] inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

[[nodiscard]] inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

[[nodiscard]] inline double safe_variance(std::span<const double> x) {
    return x.size() >= 2 ? variance(x) : nan();
}

[[nodiscard]] inline TestResult safe_ks(std::span<const double> x) {
    try {
        return ks_normal(x);
    } catch (const StatisticError&) {
        return {nan(), nan(), x.size()};
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// True moments

struct TrueMomentsConfig {
    ParamVector theta = ParamVector::truth(ModelId::alw);
    std::vector<std::size_t> t_list{10'000, 100'000, 1'000'000};
    std::size_t runs = 500;
    MomentSet set = MomentSet::all();
};

struct TrueMomentsCell {
    std::size_t t_len = 0;
    std::vector<std::uint64_t> seeds;
    std::vector<std::vector<double>> values;   ///< per run; empty when the run failed
    std::vector<std::string> failures;
    std::vector<double> mean, var, ks_stat, ks_p;
    std::size_t ok = 0;

    /// Successful replications of moment j, in run order.
    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> c;
        for (const auto& v : values)
            if (!v.empty()) c.push_back(v[j]);
        return c;
    }
};

struct TrueMomentsResult {
    TrueMomentsConfig config;
    std::vector<TrueMomentsCell> cells;
    double wall_time = 0.0;

    [[nodiscard]] const TrueMomentsCell& at(std::size_t t_len) const {
        for (const auto& c : cells)
            if (c.t_len == t_len) return c;
        throw ParameterDomainError("no cell for T = " + std::to_string(t_len));
    }

    [[nodiscard]] ExperimentReport report() const;
};

/**
 * @brief Long-run moment distribution at theta: for each T, `runs` independent
 * single series, then per-moment mean, variance and KS normality p-value.
 *
 * Run r at the i-th length uses seed (truth, r, i). Failed replications are
 * excluded from the aggregates and counted.
 */
[[nodiscard]] inline TrueMomentsResult true_moments_experiment(const TrueMomentsConfig& cfg,
                                                               const RunOptions& opt) {
    if (cfg.runs < 2) throw ParameterDomainError("true moments need at least two runs");
    if (cfg.t_list.empty()) throw ParameterDomainError("true moments need at least one T");
    cfg.theta.validate();
    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    TrueMomentsResult res{cfg, {}, 0.0};
    res.cells.resize(cfg.t_list.size());
    for (std::size_t i = 0; i < cfg.t_list.size(); ++i) {
        auto& c = res.cells[i];
        c.t_len = cfg.t_list[i];
        c.seeds.resize(cfg.runs);
        c.values.assign(cfg.runs, {});
        c.failures.assign(cfg.runs, {});
        for (std::size_t r = 0; r < cfg.runs; ++r)
            c.seeds[r] = plan.seed(SeedDomain::truth, static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(i));
    }
    // Longest series first so the pool stays busy at the end.
    std::vector<std::size_t> order(cfg.t_list.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return cfg.t_list[a] > cfg.t_list[b]; });
    std::vector<EnsembleEvaluator> evals;
    for (std::size_t w = 0; w < resolve_workers(opt.workers); ++w) evals.emplace_back(opt.boundary);
    const std::size_t total = cfg.t_list.size() * cfg.runs;
    parallel_for(total, opt.workers, [&](std::size_t k, std::size_t w) {
        auto& c = res.cells[order[k / cfg.runs]];
        const std::size_t r = k % cfg.runs;
        std::vector<double> m(cfg.set.size());
        try {
            evals[w].evaluate(cfg.theta, c.t_len, std::span<const std::uint64_t>(&c.seeds[r], 1), cfg.set, m);
            c.values[r] = std::move(m);
        } catch (const DivergenceError& e) {
            c.failures[r] = e.what();
        } catch (const StatisticError& e) {
            c.failures[r] = e.what();
        }
    });
    for (auto& c : res.cells) {
        c.ok = static_cast<std::size_t>(
            std::count_if(c.values.begin(), c.values.end(), [](const auto& v) { return !v.empty(); }));
        for (std::size_t j = 0; j < cfg.set.size(); ++j) {
            const auto col = c.column(j);
            c.mean.push_back(col.empty() ? detail::nan() : mean(col));
            c.var.push_back(detail::safe_variance(col));
            const TestResult ks = detail::safe_ks(col);
            c.ks_stat.push_back(ks.statistic);
            c.ks_p.push_back(ks.p_value);
        }
    }
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport TrueMomentsResult::report() const {
    ExperimentReport rep;
    rep.experiment = "true-moments";
    rep.report = Table({"model", "t_len", "moment", "mean", "variance", "ks_stat", "ks_p", "n_ok", "n_failed"});
    rep.raw = Table({"model", "t_len", "run", "replication", "seed", "moment", "value", "status"});
    rep.timing = detail::timing_table();
    const std::string model(to_string(config.theta.model));
    for (const auto& c : cells) {
        for (std::size_t j = 0; j < config.set.size(); ++j)
            rep.report.add({model, c.t_len, label_of(config.set[j]), c.mean[j], c.var[j], c.ks_stat[j], c.ks_p[j],
                            c.ok, config.runs - c.ok});
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            if (c.values[r].empty()) {
                rep.raw.add({model, c.t_len, r, 0, c.seeds[r], "", detail::nan(), c.failures[r]});
                continue;
            }
            for (std::size_t j = 0; j < config.set.size(); ++j)
                rep.raw.add({model, c.t_len, r, 0, c.seeds[r], label_of(config.set[j]), c.values[r][j], "ok"});
        }
    }
    rep.timing.add({"true-moments", "all", wall_time});
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

// ---------------------------------------------------------------------------
// Sensitivity

struct SensitivityConfig {
    ParamVector theta = ParamVector::truth(ModelId::alw);
    std::size_t param = 0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t points = 151;
    std::size_t t_len = 20'000;
    std::size_t ensemble = 10;
    std::size_t runs = 10;
    MomentSet set = MomentSet::all();
};

struct SensitivityResult {
    SensitivityConfig config;
    std::vector<double> grid;                              ///< natural units
    std::vector<std::vector<std::vector<double>>> values;  ///< point x run x moment (empty if failed)
    std::vector<std::vector<double>> mean;                 ///< point x moment, over successful runs
    std::vector<double> reference;                         ///< at theta, same seeds
    std::vector<std::vector<double>> response;             ///< mean / reference
    std::vector<std::size_t> failed;                       ///< failed runs per point
    std::uint64_t master_seed = 0;
    double wall_time = 0.0;

    /// Sum over the grid of |response[p+1][j] - response[p][j]|.
    [[nodiscard]] double total_variation(std::size_t j) const {
        double tv = 0.0;
        for (std::size_t p = 1; p < response.size(); ++p) tv += std::fabs(response[p][j] - response[p - 1][j]);
        return tv;
    }

    /// Largest |finite-difference slope| of the response per unit of relative parameter change.
    [[nodiscard]] double max_slope(std::size_t j) const {
        const double center = config.theta.values[config.param];
        double best = 0.0;
        for (std::size_t p = 1; p < response.size(); ++p) {
            const double dx = (grid[p] - grid[p - 1]) / std::fabs(center);
            if (dx > 0.0) best = std::max(best, std::fabs(response[p][j] - response[p - 1][j]) / dx);
        }
        return best;
    }

    [[nodiscard]] ExperimentReport report() const;
};

/**
 * @brief Moment response to one parameter over an equidistant grid.
 *
 * Every grid point and the reference at theta reuse the same seeds
 * (sensitivity, run, replication), so curves differ only through the parameter.
 */
[[nodiscard]] inline SensitivityResult sensitivity_sweep(const SensitivityConfig& cfg, const RunOptions& opt) {
    cfg.theta.validate();
    if (cfg.param >= cfg.theta.values.size()) throw ParameterDomainError("sensitivity parameter index out of range");
    if (cfg.points < 2) throw ParameterDomainError("sensitivity grid needs at least two points");
    if (!(cfg.lo < cfg.hi)) throw ParameterDomainError("sensitivity range needs lo < hi");
    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    SensitivityResult res;
    res.config = cfg;
    res.master_seed = opt.master_seed;
    const std::size_t m = cfg.set.size();
    for (std::size_t p = 0; p < cfg.points; ++p)
        res.grid.push_back(SurfaceSpec::node(cfg.lo, cfg.hi, p, cfg.points));
    std::vector<std::vector<std::uint64_t>> seeds(cfg.runs);
    for (std::size_t r = 0; r < cfg.runs; ++r)
        seeds[r] = replication_seeds(plan, SeedDomain::sensitivity, r, cfg.ensemble);

    // Point index == cfg.points is the reference at theta.
    std::vector<std::vector<std::vector<double>>> values(cfg.points + 1,
                                                         std::vector<std::vector<double>>(cfg.runs));
    std::vector<EnsembleEvaluator> evals;
    for (std::size_t w = 0; w < resolve_workers(opt.workers); ++w) evals.emplace_back(opt.boundary);
    // Common random numbers: one run's noise is shared by every grid point.
    for (std::size_t r = 0; r < cfg.runs; ++r) {
        const auto bank = NoiseBank::maybe(seeds[r], cfg.t_len, evals.front().burn_in(), opt.workers);
        parallel_for(cfg.points + 1, opt.workers, [&](std::size_t p, std::size_t w) {
            ParamVector theta = cfg.theta;
            if (p < cfg.points) theta.values[cfg.param] = res.grid[p];
            std::vector<double> out(m);
            try {
                if (bank) evals[w].evaluate(theta, cfg.t_len, *bank, cfg.set, out);
                else evals[w].evaluate(theta, cfg.t_len, seeds[r], cfg.set, out);
                values[p][r] = std::move(out);
            } catch (const DivergenceError&) {
            } catch (const StatisticError&) {
            } catch (const ParameterDomainError&) {
            }
        });
    }

    auto average = [&](const std::vector<std::vector<double>>& runs, std::size_t& failed) {
        std::vector<double> acc(m, 0.0);
        std::size_t ok = 0;
        for (const auto& v : runs) {
            if (v.empty()) continue;
            for (std::size_t j = 0; j < m; ++j) acc[j] += v[j];
            ++ok;
        }
        failed = runs.size() - ok;
        for (double& a : acc) a = ok ? a / static_cast<double>(ok) : detail::nan();
        return acc;
    };
    std::size_t ref_failed = 0;
    res.reference = average(values[cfg.points], ref_failed);
    if (ref_failed == cfg.runs) throw NoFeasibleCandidateError("reference evaluation at theta failed in every run");
    res.failed.resize(cfg.points);
    for (std::size_t p = 0; p < cfg.points; ++p) {
        res.mean.push_back(average(values[p], res.failed[p]));
        std::vector<double> resp(m);
        for (std::size_t j = 0; j < m; ++j) resp[j] = res.mean[p][j] / res.reference[j];
        res.response.push_back(std::move(resp));
    }
    values.pop_back();
    res.values = std::move(values);
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport SensitivityResult::report() const {
    ExperimentReport rep;
    rep.experiment = "sensitivity";
    rep.report = Table({"model", "param", "point", "value_display", "moment", "mean", "reference", "response", "n_failed"});
    rep.raw = Table({"model", "param", "point", "value_display", "run", "replications", "seed0", "moment", "value"});
    rep.timing = detail::timing_table();
    const ModelId model = config.theta.model;
    const std::string mname(to_string(model));
    const std::string pname(param_names(model)[config.param]);
    const double scale = display_scale(model);
    const SeedPlan plan(master_seed);
    for (std::size_t p = 0; p < grid.size(); ++p) {
        for (std::size_t j = 0; j < config.set.size(); ++j)
            rep.report.add({mname, pname, p, grid[p] * scale, label_of(config.set[j]), mean[p][j], reference[j],
                            response[p][j], failed[p]});
        for (std::size_t r = 0; r < config.runs; ++r) {
            const std::uint64_t seed0 = plan.seed(SeedDomain::sensitivity, static_cast<std::uint32_t>(r), 0);
            const auto& v = values[p][r];
            for (std::size_t j = 0; j < config.set.size(); ++j)
                rep.raw.add({mname, pname, p, grid[p] * scale, r, config.ensemble, seed0, label_of(config.set[j]),
                             v.empty() ? detail::nan() : v[j]});
        }
    }
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    rep.timing.add({"sensitivity", pname, wall_time});
    return rep;
}

// ---------------------------------------------------------------------------
// Convergence traces

struct ConvergenceConfig {
    ParamVector theta = ParamVector::truth(ModelId::alw);
    std::vector<ScenarioConfig> scenarios{{"long", 400'000, 1, 500}, {"ensemble", 40'000, 10, 500}};
    MomentSet set = MomentSet::all();
    std::vector<double> true_values;   ///< reference vector over `set`
    std::size_t tail_window = 100;
};

struct ConvergenceTrace {
    ScenarioConfig scenario;
    std::vector<std::vector<double>> deviation;  ///< run x moment: m/m_true - 1 (absolute if flagged)
    std::vector<std::vector<double>> trace;      ///< run x moment: running mean of deviation
    std::vector<bool> flagged;                   ///< |m_true| < 1e-12, traced as absolute deviation
    std::vector<double> tail_std;                ///< std of the trace over the last tail_window runs
    std::vector<std::uint64_t> seed0;            ///< first replication seed per run
    double wall_time = 0.0;

    [[nodiscard]] const std::vector<double>& terminal() const { return trace.back(); }
};

struct ConvergenceResult {
    ConvergenceConfig config;
    std::vector<ConvergenceTrace> traces;
    double wall_time = 0.0;

    [[nodiscard]] ExperimentReport report() const;
};

/**
 * @brief Running mean across MC runs of the relative deviation m/m_true - 1.
 *
 * Scenario s, run r, replication n uses seed (convergence, r, s * 2^20 + n).
 */
[[nodiscard]] inline ConvergenceResult convergence_traces(const ConvergenceConfig& cfg, const RunOptions& opt) {
    cfg.theta.validate();
    const std::size_t m = cfg.set.size();
    if (cfg.true_values.size() != m) throw ParameterDomainError("true moment vector does not match the moment set");
    if (cfg.tail_window == 0) throw ParameterDomainError("tail window must be positive");
    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    ConvergenceResult res{cfg, {}, 0.0};
    std::vector<EnsembleEvaluator> evals;
    for (std::size_t w = 0; w < resolve_workers(opt.workers); ++w) evals.emplace_back(opt.boundary);
    for (std::size_t s = 0; s < cfg.scenarios.size(); ++s) {
        const auto ts = detail::Clock::now();
        const ScenarioConfig& sc = cfg.scenarios[s];
        sc.validate();
        ConvergenceTrace tr;
        tr.scenario = sc;
        tr.flagged.resize(m);
        for (std::size_t j = 0; j < m; ++j) tr.flagged[j] = std::fabs(cfg.true_values[j]) < 1e-12;
        std::vector<std::vector<double>> values(sc.runs, std::vector<double>(m));
        tr.seed0.resize(sc.runs);
        parallel_for(sc.runs, opt.workers, [&](std::size_t r, std::size_t w) {
            std::vector<std::uint64_t> seeds(sc.ensemble);
            for (std::size_t n = 0; n < sc.ensemble; ++n)
                seeds[n] = plan.seed(SeedDomain::convergence, static_cast<std::uint32_t>(r),
                                     static_cast<std::uint32_t>((s << 20) + n));
            tr.seed0[r] = seeds[0];
            evals[w].evaluate(cfg.theta, sc.t_len, seeds, cfg.set, values[r]);
        });
        std::vector<double> acc(m, 0.0);
        for (std::size_t r = 0; r < sc.runs; ++r) {
            std::vector<double> dev(m), run_mean(m);
            for (std::size_t j = 0; j < m; ++j) {
                dev[j] = tr.flagged[j] ? values[r][j] - cfg.true_values[j] : values[r][j] / cfg.true_values[j] - 1.0;
                acc[j] += dev[j];
                run_mean[j] = acc[j] / static_cast<double>(r + 1);
            }
            tr.deviation.push_back(std::move(dev));
            tr.trace.push_back(std::move(run_mean));
        }
        const std::size_t window = std::min(cfg.tail_window, sc.runs);
        for (std::size_t j = 0; j < m; ++j) {
            std::vector<double> tail;
            for (std::size_t r = sc.runs - window; r < sc.runs; ++r) tail.push_back(tr.trace[r][j]);
            tr.tail_std.push_back(tail.size() >= 2 ? stddev(tail) : 0.0);
        }
        tr.wall_time = detail::seconds_since(ts);
        res.traces.push_back(std::move(tr));
    }
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport ConvergenceResult::report() const {
    ExperimentReport rep;
    rep.experiment = "converge";
    rep.report = Table({"model", "scenario", "t_len", "ensemble", "runs", "moment", "true_value", "terminal",
                        "tail_std", "flagged_absolute"});
    rep.raw = Table({"model", "scenario", "run", "replications", "seed0", "moment", "deviation"});
    Table trace({"model", "scenario", "run", "moment", "running_mean"});
    rep.timing = detail::timing_table();
    const std::string model(to_string(config.theta.model));
    for (const auto& tr : traces) {
        for (std::size_t j = 0; j < config.set.size(); ++j)
            rep.report.add({model, tr.scenario.label, tr.scenario.t_len, tr.scenario.ensemble, tr.scenario.runs,
                            label_of(config.set[j]), config.true_values[j], tr.terminal()[j], tr.tail_std[j],
                            tr.flagged[j] ? "yes" : "no"});
        for (std::size_t r = 0; r < tr.deviation.size(); ++r)
            for (std::size_t j = 0; j < config.set.size(); ++j) {
                rep.raw.add({model, tr.scenario.label, r, tr.scenario.ensemble, tr.seed0[r], label_of(config.set[j]),
                             tr.deviation[r][j]});
                trace.add({model, tr.scenario.label, r, label_of(config.set[j]), tr.trace[r][j]});
            }
        rep.timing.add({"converge", tr.scenario.label, tr.wall_time});
    }
    rep.extra.emplace_back("trace.csv", std::move(trace));
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

// ---------------------------------------------------------------------------
// Estimation exercise

struct EstimationConfig {
    ParamVector truth = ParamVector::truth(ModelId::alw);
    ParameterSpace space = ParameterSpace::estimation_box(ModelId::alw);
    std::vector<ScenarioConfig> scenarios = ScenarioConfig::budget_table(50);
    std::size_t candidates = 500;
    std::size_t runs = 50;
    std::size_t emp_t = 400'000;   ///< length of the pseudo-empirical series per run
};

struct ScenarioEstimates {
    ScenarioConfig scenario;
    std::vector<std::size_t> best;                           ///< per run; candidates.size() if infeasible
    std::vector<std::optional<ParamVector>> theta_hat;
    std::vector<double> j;                                   ///< +inf if infeasible
    std::vector<std::vector<std::vector<double>>> moments;   ///< run x candidate x moment
    std::vector<std::size_t> infeasible_candidates;          ///< per run
    std::vector<std::uint64_t> seed0;                        ///< first candidate replication seed per run
    std::vector<double> run_wall_time;
    double wall_time = 0.0;

    [[nodiscard]] std::vector<double> estimates(std::size_t param) const {
        std::vector<double> v;
        for (const auto& t : theta_hat)
            if (t) v.push_back(t->values[param]);
        return v;
    }

    [[nodiscard]] std::vector<double> finite_j() const {
        std::vector<double> v;
        for (double x : j)
            if (std::isfinite(x)) v.push_back(x);
        return v;
    }

    [[nodiscard]] double mean_j() const {
        const auto v = finite_j();
        return v.empty() ? detail::nan() : mean(v);
    }
};

struct EstimationResult {
    EstimationConfig config;
    WeightingMatrix w;
    std::vector<ParamVector> candidates;
    std::vector<std::vector<double>> empirical;   ///< run x moment
    std::vector<std::uint64_t> empirical_seeds;
    std::vector<ScenarioEstimates> scenarios;
    double wall_time = 0.0;

    [[nodiscard]] const ScenarioEstimates& scenario(const std::string& label) const {
        for (const auto& s : scenarios)
            if (s.scenario.label == label) return s;
        throw ParameterDomainError("no scenario '" + label + "'");
    }

    [[nodiscard]] ExperimentReport report() const;
};

/**
 * @brief Monte Carlo SMM estimation over budget scenarios.
 *
 * Run r draws one pseudo-empirical series of length emp_t at the true
 * parameters (seed (empirical, r, 0)), shared by all scenarios. Each scenario
 * then searches the shared Sobol candidate set with replication seeds
 * (candidate, r, n), reused across candidates and scenarios.
 */
[[nodiscard]] inline EstimationResult estimation_exercise(const EstimationConfig& cfg, const WeightingMatrix& w,
                                                          const RunOptions& opt) {
    cfg.truth.validate();
    cfg.space.validate();
    if (cfg.space.model != cfg.truth.model) throw ParameterDomainError("parameter space and truth differ in model");
    if (cfg.runs == 0 || cfg.candidates == 0) throw ParameterDomainError("estimation needs runs >= 1 and candidates >= 1");
    std::vector<ScenarioConfig> matched;
    for (const auto& s : cfg.scenarios) {
        s.validate();
        if (s.label == "a" || s.label == "b" || s.label == "c" || s.label == "d") matched.push_back(s);
    }
    require_budget_matched(matched);
    w.set().require_order_condition(cfg.truth.values.size());

    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    EstimationResult res{cfg, w, sobol_candidates(cfg.space, cfg.candidates), {}, {}, {}, 0.0};
    const MomentSet& set = w.set();

    res.empirical.assign(cfg.runs, std::vector<double>(set.size()));
    res.empirical_seeds.resize(cfg.runs);
    std::vector<EnsembleEvaluator> evals;
    for (std::size_t k = 0; k < resolve_workers(opt.workers); ++k) evals.emplace_back(opt.boundary);
    parallel_for(cfg.runs, opt.workers, [&](std::size_t r, std::size_t k) {
        res.empirical_seeds[r] = plan.seed(SeedDomain::empirical, static_cast<std::uint32_t>(r), 0);
        evals[k].evaluate(cfg.truth, cfg.emp_t, std::span<const std::uint64_t>(&res.empirical_seeds[r], 1), set,
                          res.empirical[r]);
    });

    for (const auto& sc : cfg.scenarios) {
        const auto ts = detail::Clock::now();
        ScenarioEstimates est;
        est.scenario = sc;
        for (std::size_t r = 0; r < cfg.runs; ++r) {
            const auto tr = detail::Clock::now();
            const auto seeds = replication_seeds(plan, SeedDomain::candidate, r, sc.ensemble);
            est.seed0.push_back(seeds.front());
            const MomentVector m_emp{set, res.empirical[r]};
            try {
                SearchResult sr = evaluate_candidates(res.candidates, sc.t_len, seeds, w, m_emp, opt.workers,
                                                      opt.boundary);
                est.best.push_back(sr.best_index);
                est.theta_hat.emplace_back(sr.best.theta);
                est.j.push_back(sr.best.j_value);
                est.infeasible_candidates.push_back(static_cast<std::size_t>(
                    std::count_if(sr.j_values.begin(), sr.j_values.end(), [](double x) { return !std::isfinite(x); })));
                est.moments.push_back(std::move(sr.moments));
            } catch (const NoFeasibleCandidateError&) {
                est.best.push_back(res.candidates.size());
                est.theta_hat.emplace_back(std::nullopt);
                est.j.push_back(std::numeric_limits<double>::infinity());
                est.infeasible_candidates.push_back(res.candidates.size());
                est.moments.emplace_back(res.candidates.size());
            }
            est.run_wall_time.push_back(detail::seconds_since(tr));
        }
        est.wall_time = detail::seconds_since(ts);
        res.scenarios.push_back(std::move(est));
    }
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport EstimationResult::report() const {
    ExperimentReport rep;
    rep.experiment = "estimate";
    rep.report = Table({"model", "scenario", "t_len", "ensemble", "budget", "budget_matched", "runs", "param",
                        "truth_display", "mean_display", "std_display", "rmse_display", "mean_j", "n_infeasible_runs"});
    std::vector<std::string> raw_cols{"model", "scenario", "run", "replications", "empirical_seed", "seed0",
                                      "best_candidate", "j", "infeasible_candidates"};
    const ModelId model = config.truth.model;
    for (auto n : param_names(model)) raw_cols.push_back(std::string(n) + "_display");
    rep.raw = Table(raw_cols);
    rep.timing = detail::timing_table();
    const std::string mname(to_string(model));
    const double scale = display_scale(model);

    std::optional<std::size_t> matched_budget;
    bool matched = true;
    for (const auto& s : scenarios)
        if (s.scenario.label >= "a" && s.scenario.label <= "d" && s.scenario.label.size() == 1) {
            if (matched_budget && *matched_budget != s.scenario.budget()) matched = false;
            matched_budget = s.scenario.budget();
        }

    for (const auto& s : scenarios) {
        const bool in_family = s.scenario.label.size() == 1 && s.scenario.label >= "a" && s.scenario.label <= "d";
        const std::size_t infeasible_runs =
            static_cast<std::size_t>(std::count_if(s.theta_hat.begin(), s.theta_hat.end(), [](const auto& t) { return !t; }));
        for (std::size_t p = 0; p < param_count(model); ++p) {
            auto est = s.estimates(p);
            for (double& v : est) v *= scale;
            const double truth = config.truth.values[p] * scale;
            rep.report.add({mname, s.scenario.label, s.scenario.t_len, s.scenario.ensemble, s.scenario.budget(),
                            in_family ? (matched ? "yes" : "no") : "n/a", config.runs, param_names(model)[p], truth,
                            est.empty() ? detail::nan() : mean(est), std::sqrt(detail::safe_variance(est)),
                            est.empty() ? detail::nan() : rmse(est, truth), s.mean_j(), infeasible_runs});
        }
        for (std::size_t r = 0; r < s.j.size(); ++r) {
            std::vector<std::string> row{mname,
                                         s.scenario.label,
                                         std::to_string(r),
                                         std::to_string(s.scenario.ensemble),
                                         std::to_string(empirical_seeds[r]),
                                         std::to_string(s.seed0[r]),
                                         std::to_string(s.best[r]),
                                         format_double(s.j[r]),
                                         std::to_string(s.infeasible_candidates[r])};
            for (std::size_t p = 0; p < param_count(model); ++p)
                row.push_back(format_double(s.theta_hat[r] ? s.theta_hat[r]->values[p] * scale : detail::nan()));
            rep.raw.add_row(std::move(row));
        }
        rep.timing.add({"estimate", s.scenario.label, s.wall_time});
    }

    Table weights({"row_moment", "col_moment", "weight", "covariance", "t_w", "r_w", "ridge", "condition"});
    const auto& set = w.set();
    for (std::size_t i = 0; i < set.size(); ++i)
        for (std::size_t j = 0; j < set.size(); ++j)
            weights.add({label_of(set[i]), label_of(set[j]),
                         w.entries()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                         w.covariance() ? (*w.covariance())(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                        : detail::nan(),
                         w.source().t_w, w.source().r_w, w.source().ridge, w.source().condition});
    rep.extra.emplace_back("weighting.csv", std::move(weights));
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

// ---------------------------------------------------------------------------
// Robustness

enum class FitnessMode { relative, raw };

struct RobustnessConfig {
    std::size_t sets_per_size = 17;
    FitnessMode fitness = FitnessMode::relative;
    std::vector<std::string> fitness_scenarios{"a"};
    std::vector<std::string> comparison_scenarios{"a", "b", "c", "d", "e"};
};

struct SubsetFitness {
    std::string regime;     ///< "all" or "excl_m6"
    std::size_t size = 0;
    std::size_t index = 0;
    MomentSet set;
    std::string scenario;
    std::vector<double> fitness;   ///< per run; NaN if infeasible
    double median = 0.0;
    double mean = 0.0;
};

struct JComparison {
    std::string scenario;
    std::vector<double> j18;   ///< 17-moment J at the full-set estimate
    std::vector<double> j17;   ///< 17-moment J at the 17-moment estimate
    double mean_diff = 0.0;
    TestResult test;
};

struct RobustnessResult {
    RobustnessConfig config;
    ModelId model = ModelId::alw;
    std::vector<SubsetFitness> subsets;
    std::vector<JComparison> comparisons;
    double wall_time = 0.0;

    [[nodiscard]] const JComparison& comparison(const std::string& label) const {
        for (const auto& c : comparisons)
            if (c.scenario == label) return c;
        throw ParameterDomainError("no comparison for scenario '" + label + "'");
    }

    /// Median over subsets of the per-subset median fitness for one regime and size.
    [[nodiscard]] double median_fitness(const std::string& regime, std::size_t size) const {
        std::vector<double> v;
        for (const auto& s : subsets)
            if (s.regime == regime && s.size == size && std::isfinite(s.median)) v.push_back(s.median);
        return detail::median(std::move(v));
    }

    [[nodiscard]] ExperimentReport report() const;
};

/// Distance of theta_hat from truth: Euclidean norm of relative or raw errors.
[[nodiscard]] inline double parameter_fitness(const ParamVector& theta_hat, const ParamVector& truth, FitnessMode mode) {
    double s = 0.0;
    for (std::size_t i = 0; i < truth.values.size(); ++i) {
        const double e = mode == FitnessMode::relative ? theta_hat.values[i] / truth.values[i] - 1.0
                                                       : theta_hat.values[i] - truth.values[i];
        s += e * e;
    }
    return std::sqrt(s);
}

/// Argmin over stored candidate moments of the J restricted to `w_sub`'s set.
[[nodiscard]] inline std::optional<std::size_t> subset_argmin(const std::vector<std::vector<double>>& moments,
                                                              std::span<const double> empirical,
                                                              const MomentSet& full, const WeightingMatrix& w_sub,
                                                              std::vector<double>* j_out = nullptr) {
    std::vector<std::size_t> pos;
    for (MomentId id : w_sub.set().ids()) pos.push_back(*full.position(id));
    std::vector<double> g(pos.size());
    std::vector<double> js(moments.size(), std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < moments.size(); ++c) {
        if (moments[c].empty()) continue;
        for (std::size_t k = 0; k < pos.size(); ++k) g[k] = empirical[pos[k]] - moments[c][pos[k]];
        js[c] = objective_j(g, w_sub);
    }
    auto best = argmin_finite(js);
    if (j_out) *j_out = std::move(js);
    return best;
}

/**
 * @brief Moment-subset robustness from stored estimation artifacts.
 *
 * (i) For each vector size and `sets_per_size` random subsets, drawn from all
 * moments or from all but m6, re-select each run's argmin candidate under the
 * subset's weights inv(Sigma_SS) and score its parameter error.
 * (ii) For each scenario compare J on the 17-moment set (m6 dropped) at the
 * full-set estimate (J18) and at the 17-moment argmin (J17), with a paired
 * one-tailed t-test of J18 - J17 > 0.
 */
[[nodiscard]] inline RobustnessResult robustness_experiment(const EstimationResult& est, const RobustnessConfig& cfg,
                                                            const RunOptions& opt) {
    const auto t0 = detail::Clock::now();
    const MomentSet& full = est.w.set();
    if (!full.contains(MomentId::m6))
        throw ParameterDomainError("robustness needs an estimation over a moment set containing m6");
    if (cfg.sets_per_size == 0) throw ParameterDomainError("sets_per_size must be positive");
    const ModelId model = est.config.truth.model;
    const std::size_t n_params = param_count(model);
    const SeedPlan plan(opt.master_seed);
    RobustnessResult res;
    res.config = cfg;
    res.model = model;

    // (i) random subsets
    struct Job {
        std::string regime;
        std::size_t size, index;
        MomentSet set;
    };
    std::vector<Job> jobs;
    for (int regime = 0; regime < 2; ++regime) {
        std::vector<MomentId> pool;
        for (MomentId id : full.ids())
            if (regime == 0 || id != MomentId::m6) pool.push_back(id);
        for (std::size_t k = n_params; k <= pool.size(); ++k)
            for (std::size_t i = 0; i < cfg.sets_per_size; ++i) {
                GaussianStream rng(plan.seed(SeedDomain::subsets, static_cast<std::uint32_t>(regime * 1000 + k),
                                             static_cast<std::uint32_t>(i)));
                std::vector<MomentId> draw = pool;
                for (std::size_t a = 0; a < k; ++a) {
                    const std::size_t b = a + static_cast<std::size_t>(rng.index(draw.size() - a));
                    std::swap(draw[a], draw[b]);
                }
                draw.resize(k);
                jobs.push_back({regime == 0 ? "all" : "excl_m6", k, i, MomentSet(std::move(draw))});
            }
    }
    std::vector<const ScenarioEstimates*> fit_scen;
    for (const auto& label : cfg.fitness_scenarios) fit_scen.push_back(&est.scenario(label));
    res.subsets.resize(jobs.size() * fit_scen.size());
    parallel_for(jobs.size(), opt.workers, [&](std::size_t q, std::size_t) {
        const Job& job = jobs[q];
        const WeightingMatrix ws = est.w.restrict_to(job.set);
        for (std::size_t s = 0; s < fit_scen.size(); ++s) {
            const ScenarioEstimates& sc = *fit_scen[s];
            SubsetFitness out{job.regime, job.size, job.index, job.set, sc.scenario.label, {}, 0.0, 0.0};
            for (std::size_t r = 0; r < sc.moments.size(); ++r) {
                const auto best = subset_argmin(sc.moments[r], est.empirical[r], full, ws);
                out.fitness.push_back(best ? parameter_fitness(est.candidates[*best], est.config.truth, cfg.fitness)
                                           : detail::nan());
            }
            std::vector<double> finite;
            for (double f : out.fitness)
                if (std::isfinite(f)) finite.push_back(f);
            out.median = detail::median(finite);
            out.mean = finite.empty() ? detail::nan() : mean(finite);
            res.subsets[q * fit_scen.size() + s] = std::move(out);
        }
    });

    // (ii) J18 vs J17
    const MomentSet set17 = [&] {
        std::vector<MomentId> ids;
        for (MomentId id : full.ids())
            if (id != MomentId::m6) ids.push_back(id);
        return MomentSet(std::move(ids));
    }();
    const WeightingMatrix w17 = est.w.restrict_to(set17);
    for (const auto& label : cfg.comparison_scenarios) {
        const ScenarioEstimates& sc = est.scenario(label);
        JComparison cmp;
        cmp.scenario = label;
        for (std::size_t r = 0; r < sc.moments.size(); ++r) {
            if (!sc.theta_hat[r]) continue;
            std::vector<double> js;
            const auto best17 = subset_argmin(sc.moments[r], est.empirical[r], full, w17, &js);
            if (!best17) continue;
            cmp.j18.push_back(js[sc.best[r]]);
            cmp.j17.push_back(js[*best17]);
        }
        if (cmp.j18.size() >= 2) {
            cmp.test = paired_t_one_tailed(cmp.j18, cmp.j17);
            std::vector<double> d(cmp.j18.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = cmp.j18[i] - cmp.j17[i];
            cmp.mean_diff = mean(d);
        } else {
            cmp.test = {detail::nan(), detail::nan(), cmp.j18.size()};
            cmp.mean_diff = detail::nan();
        }
        res.comparisons.push_back(std::move(cmp));
    }
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport RobustnessResult::report() const {
    ExperimentReport rep;
    rep.experiment = "robustness";
    rep.report = Table({"model", "part", "scenario", "regime", "size", "subset", "moments", "median_fitness",
                        "mean_fitness", "mean_j18_minus_j17", "t_stat", "p_value", "n", "stars"});
    rep.raw = Table({"model", "part", "scenario", "regime", "size", "subset", "run", "value", "j18", "j17"});
    rep.timing = detail::timing_table();
    const std::string mname(to_string(model));
    const double nan = detail::nan();
    for (const auto& s : subsets) {
        rep.report.add({mname, "subset", s.scenario, s.regime, s.size, s.index, s.set.to_string(), s.median, s.mean,
                        nan, nan, nan, s.fitness.size(), ""});
        for (std::size_t r = 0; r < s.fitness.size(); ++r)
            rep.raw.add({mname, "subset", s.scenario, s.regime, s.size, s.index, r, s.fitness[r], nan, nan});
    }
    for (const auto& c : comparisons) {
        rep.report.add({mname, "j18_vs_j17", c.scenario, "", 17, 0, "", nan, nan, c.mean_diff, c.test.statistic,
                        c.test.p_value, c.test.n, stars(c.test.p_value)});
        for (std::size_t r = 0; r < c.j18.size(); ++r)
            rep.raw.add({mname, "j18_vs_j17", c.scenario, "", 17, 0, r, c.j18[r] - c.j17[r], c.j18[r], c.j17[r]});
    }
    rep.timing.add({"robustness", "all", wall_time});
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

// ---------------------------------------------------------------------------
// Surface

struct SurfaceResult {
    SurfaceSpec spec;
    ScenarioConfig scenario;
    MomentSet set;
    SearchResult search;
    std::vector<double> empirical;
    bool crn_empirical = false;
    double wall_time = 0.0;

    [[nodiscard]] double j(std::size_t i, std::size_t k) const { return search.j_values[i * spec.grid_n + k]; }

    /// Sum over rows of |1/J[i][k+1] - 1/J[i][k]|.
    [[nodiscard]] double row_total_variation() const {
        double tv = 0.0;
        for (std::size_t i = 0; i < spec.grid_n; ++i)
            for (std::size_t k = 1; k < spec.grid_n; ++k) {
                const double a = 1.0 / j(i, k), b = 1.0 / j(i, k - 1);
                if (std::isfinite(a) && std::isfinite(b)) tv += std::fabs(a - b);
            }
        return tv;
    }

    [[nodiscard]] ExperimentReport report() const;
};

/**
 * @brief J (and 1/J) over a two-parameter grid with common random numbers.
 *
 * Simulated ensembles use seeds (candidate, 0, n). The target moments come
 * from an ensemble of the same shape at the true parameters, simulated with
 * seeds (surface_empirical, 0, n), or with the candidate seeds when
 * `crn_empirical` is set (then J vanishes at the true node).
 */
[[nodiscard]] inline SurfaceResult surface_experiment(const SurfaceSpec& spec, const ParamVector& truth,
                                                      const ScenarioConfig& scenario, const WeightingMatrix& w,
                                                      bool crn_empirical, const RunOptions& opt) {
    scenario.validate();
    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    const auto sim_seeds = replication_seeds(plan, SeedDomain::candidate, 0, scenario.ensemble);
    const auto emp_seeds =
        crn_empirical ? sim_seeds : replication_seeds(plan, SeedDomain::surface_empirical, 0, scenario.ensemble);
    EnsembleEvaluator eval(opt.boundary);
    MomentVector m_emp = eval.evaluate(truth, scenario.t_len, emp_seeds, w.set());
    SurfaceResult res{spec,         scenario,      w.set(), surface_grid(spec, scenario.t_len, sim_seeds, w, m_emp, opt.workers),
                      m_emp.values, crn_empirical, 0.0};
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport SurfaceResult::report() const {
    ExperimentReport rep;
    rep.experiment = "surface";
    const ModelId model = spec.fixed.model;
    const std::string mname(to_string(model));
    const double scale = display_scale(model);
    const std::string px(param_names(model)[spec.free_x]), py(param_names(model)[spec.free_y]);
    rep.report = Table({"model", "grid_i", "grid_j", px + "_display", py + "_display", "j", "inv_j", "status"});
    rep.raw = Table({"model", "grid_i", "grid_j", "moment", "value", "empirical"});
    rep.timing = Table({"experiment", "cell", "wall_time_s"});
    for (std::size_t i = 0; i < spec.grid_n; ++i)
        for (std::size_t k = 0; k < spec.grid_n; ++k) {
            const std::size_t c = i * spec.grid_n + k;
            const ParamVector& th = search.candidates[c];
            const double jv = search.j_values[c];
            rep.report.add({mname, i, k, th.values[spec.free_x] * scale, th.values[spec.free_y] * scale, jv, 1.0 / jv,
                            search.failures[c].empty() ? std::string("ok") : search.failures[c]});
            const auto& m = search.moments[c];
            for (std::size_t j = 0; j < empirical.size(); ++j)
                rep.raw.add({mname, i, k, label_of(set[j]), m.empty() ? detail::nan() : m[j], empirical[j]});
            rep.timing.add({"surface", std::to_string(i) + ":" + std::to_string(k), search.wall_times[c]});
        }
    rep.timing.add({"surface", "all", wall_time});
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

// ---------------------------------------------------------------------------
// Wiener ergodicity demo

struct WienerConfig {
    std::size_t t_len = 10'000;     ///< increments per path
    std::size_t paths = 10'000;
    std::size_t prefixes = 5;       ///< prefix lengths t_len / 2^(prefixes-1), ..., t_len
    bool zero_noise = false;
};

struct WienerResult {
    WienerConfig config;
    std::vector<std::size_t> prefix_lengths;
    std::vector<double> ta_variance;       ///< variance across paths of the time average of W
    double slope = 0.0;                    ///< OLS slope of log variance on log length
    double ea_sq_displacement = 0.0;       ///< ensemble mean of D_T^2 / T
    double ta_sq_increment = 0.0;          ///< path-0 time average of squared unit increments
    std::vector<std::vector<double>> ta;   ///< path x prefix
    std::vector<double> sq_displacement;   ///< path: D_T^2 / T
    std::vector<std::uint64_t> seeds;
    double wall_time = 0.0;

    [[nodiscard]] ExperimentReport report() const;
};

/// OLS slope of y on x.
[[nodiscard]] inline double ols_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw StatisticError("slope needs two or more paired points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/**
 * @brief Non-ergodic raw observable vs ergodic increment observable of a random walk.
 *
 * The time average TA_L = (1/L) sum_{t=1..L} W_t has variance ~ L/3, growing
 * with L, while D_T^2 / T has ensemble mean 1, matching the single-path time
 * average of squared increments. Path p uses seed (wiener, 0, p).
 */
[[nodiscard]] inline WienerResult wiener_ergodicity_demo(const WienerConfig& cfg, const RunOptions& opt) {
    if (cfg.t_len < 1000 || cfg.paths < 1000)
        throw ParameterDomainError("Wiener demo needs t_len >= 1000 and paths >= 1000");
    if (cfg.prefixes < 2 || (cfg.t_len >> (cfg.prefixes - 1)) == 0)
        throw ParameterDomainError("Wiener demo needs at least two distinct prefix lengths");
    const auto t0 = detail::Clock::now();
    const SeedPlan plan(opt.master_seed);
    WienerResult res;
    res.config = cfg;
    for (std::size_t k = 0; k < cfg.prefixes; ++k) res.prefix_lengths.push_back(cfg.t_len >> (cfg.prefixes - 1 - k));
    res.ta.assign(cfg.paths, std::vector<double>(cfg.prefixes));
    res.sq_displacement.resize(cfg.paths);
    res.seeds.resize(cfg.paths);
    std::vector<double> ta_sq_inc(cfg.paths);
    std::vector<std::vector<double>> buffers(resolve_workers(opt.workers));

    parallel_for(cfg.paths, opt.workers, [&](std::size_t p, std::size_t w) {
        res.seeds[p] = plan.seed(SeedDomain::wiener, 0, static_cast<std::uint32_t>(p));
        auto& path = buffers[w];
        path.resize(cfg.t_len + 1);
        if (cfg.zero_noise) {
            ZeroNoise z;
            simulate_wiener_into(z, std::span<double>(path));
        } else {
            GaussianStream g(res.seeds[p]);
            simulate_wiener_into(g, std::span<double>(path));
        }
        double sum = 0.0, inc = 0.0;
        std::size_t next = 0;
        for (std::size_t t = 1; t <= cfg.t_len; ++t) {
            sum += path[t];
            const double d = path[t] - path[t - 1];
            inc += d * d;
            if (next < cfg.prefixes && t == res.prefix_lengths[next]) {
                res.ta[p][next] = sum / static_cast<double>(t);
                ++next;
            }
        }
        const double disp = path[cfg.t_len] - path[0];
        res.sq_displacement[p] = disp * disp / static_cast<double>(cfg.t_len);
        ta_sq_inc[p] = inc / static_cast<double>(cfg.t_len);
    });

    std::vector<double> log_len, log_var;
    bool degenerate = false;
    for (std::size_t k = 0; k < cfg.prefixes; ++k) {
        std::vector<double> col(cfg.paths);
        for (std::size_t p = 0; p < cfg.paths; ++p) col[p] = res.ta[p][k];
        const double v = variance(col);
        res.ta_variance.push_back(v);
        if (!(v > 0.0)) degenerate = true;
        log_len.push_back(std::log(static_cast<double>(res.prefix_lengths[k])));
        log_var.push_back(std::log(v));
    }
    res.slope = degenerate ? 0.0 : ols_slope(log_len, log_var);
    res.ea_sq_displacement = mean(res.sq_displacement);
    res.ta_sq_increment = ta_sq_inc.front();
    res.wall_time = detail::seconds_since(t0);
    return res;
}

inline ExperimentReport WienerResult::report() const {
    ExperimentReport rep;
    rep.experiment = "wiener-demo";
    rep.report = Table({"statistic", "t_len", "value"});
    for (std::size_t k = 0; k < prefix_lengths.size(); ++k)
        rep.report.add({"ta_variance", prefix_lengths[k], ta_variance[k]});
    rep.report.add({"ta_variance_loglog_slope", config.t_len, slope});
    rep.report.add({"ea_sq_displacement_per_t", config.t_len, ea_sq_displacement});
    rep.report.add({"ta_sq_increment_path0", config.t_len, ta_sq_increment});
    std::vector<std::string> cols{"path", "seed", "sq_displacement_per_t"};
    for (auto l : prefix_lengths) cols.push_back("ta_" + std::to_string(l));
    rep.raw = Table(cols);
    for (std::size_t p = 0; p < ta.size(); ++p) {
        std::vector<std::string> row{std::to_string(p), std::to_string(seeds[p]), format_double(sq_displacement[p])};
        for (double v : ta[p]) row.push_back(format_double(v));
        rep.raw.add_row(std::move(row));
    }
    rep.timing = detail::timing_table();
    rep.timing.add({"wiener-demo", "all", wall_time});
    rep.cells = rep.report.size();
    rep.wall_time = wall_time;
    return rep;
}

}  // namespace smmergo
