#include "smmergo/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <string>
#include <vector>

using namespace smmergo;

namespace {

std::string csv(const Table& t) { return to_csv(t, Provenance{}); }

void expect_close(double a, double b, double tol = 1e-9) {
    if (std::isnan(a) || std::isnan(b)) {
        EXPECT_TRUE(std::isnan(a) && std::isnan(b)) << a << " vs " << b;
        return;
    }
    EXPECT_NEAR(a, b, tol * std::max(1.0, std::fabs(b)));
}

// Small budget-matched family: a-d share T N = 2000, e doubles it.
std::vector<ScenarioConfig> small_family(std::size_t runs) {
    return {{"a", 2000, 1, runs}, {"b", 1000, 2, runs}, {"c", 500, 4, runs}, {"d", 250, 8, runs}, {"e", 1000, 4, runs}};
}

EstimationConfig small_estimation(ModelId m) {
    EstimationConfig cfg;
    cfg.truth = ParamVector::truth(m);
    cfg.space = ParameterSpace::estimation_box(m);
    cfg.runs = 3;
    cfg.scenarios = small_family(cfg.runs);
    cfg.candidates = 16;
    cfg.emp_t = 4000;
    return cfg;
}

WeightingMatrix small_weights(ModelId m) {
    return estimate_weighting_matrix(ParamVector::truth(m), 2000, 60, MomentSet::all(), 42, 1);
}

}  // namespace

TEST(TrueMoments, DeterministicAcrossWorkerCounts) {
    TrueMomentsConfig cfg;
    cfg.theta = ParamVector::truth(ModelId::fw);
    cfg.t_list = {1000, 3000};
    cfg.runs = 6;
    const auto base = true_moments_experiment(cfg, {7, 1}).report();
    for (std::size_t w : {4u, 8u}) {
        const auto other = true_moments_experiment(cfg, {7, w}).report();
        EXPECT_EQ(csv(base.report), csv(other.report));
        EXPECT_EQ(csv(base.raw), csv(other.raw));
    }
    const auto reseeded = true_moments_experiment(cfg, {8, 1}).report();
    EXPECT_NE(csv(base.raw), csv(reseeded.raw));
}

TEST(TrueMoments, AggregatesRecomputableFromRaw) {
    TrueMomentsConfig cfg;
    cfg.t_list = {1500, 4000};
    cfg.runs = 8;
    const auto rep = true_moments_experiment(cfg, {3, 2}).report();
    std::map<std::pair<std::string, std::string>, std::vector<double>> cols;
    const auto& raw = rep.raw;
    for (const auto& row : raw.rows)
        if (row[raw.column("status")] == "ok")
            cols[{row[raw.column("t_len")], row[raw.column("moment")]}].push_back(
                parse_double(row[raw.column("value")]));
    const auto& r = rep.report;
    ASSERT_EQ(r.size(), 2u * 18u);
    for (const auto& row : r.rows) {
        const auto& v = cols.at({row[r.column("t_len")], row[r.column("moment")]});
        expect_close(parse_double(row[r.column("mean")]), mean(v));
        expect_close(parse_double(row[r.column("variance")]), variance(v));
        expect_close(parse_double(row[r.column("ks_stat")]), ks_normal(v).statistic);
    }
}

TEST(TrueMoments, RejectsTooFewRuns) {
    TrueMomentsConfig cfg;
    cfg.runs = 1;
    EXPECT_THROW((void)true_moments_experiment(cfg, {}), ParameterDomainError);
    cfg.runs = 3;
    cfg.t_list = {50};
    EXPECT_THROW((void)true_moments_experiment(cfg, {}), ParameterDomainError);
}

TEST(Sensitivity, ResponseIsOneAtTruthAndDeterministic) {
    SensitivityConfig cfg;
    cfg.theta = ParamVector::truth(ModelId::alw);
    cfg.param = 1;
    const double b = cfg.theta.values[1];
    cfg.lo = 0.5 * b;
    cfg.hi = 1.5 * b;
    cfg.points = 5;
    cfg.t_len = 2000;
    cfg.ensemble = 2;
    cfg.runs = 3;
    const auto res = sensitivity_sweep(cfg, {11, 1});
    ASSERT_EQ(res.response.size(), 5u);
    EXPECT_NEAR(res.grid[2], b, 1e-15 * b);
    for (std::size_t j = 0; j < cfg.set.size(); ++j) {
        if (res.grid[2] == b) EXPECT_EQ(res.response[2][j], 1.0);
        else EXPECT_NEAR(res.response[2][j], 1.0, 1e-8);
    }
    for (std::size_t w : {4u, 8u}) {
        const auto other = sensitivity_sweep(cfg, {11, w}).report();
        EXPECT_EQ(csv(res.report().report), csv(other.report));
        EXPECT_EQ(csv(res.report().raw), csv(other.raw));
    }
}

TEST(Sensitivity, AggregatesRecomputableFromRaw) {
    SensitivityConfig cfg;
    cfg.theta = ParamVector::truth(ModelId::fw);
    cfg.param = 1;
    cfg.lo = 1.0;
    cfg.hi = 2.0;
    cfg.points = 4;
    cfg.t_len = 1500;
    cfg.ensemble = 2;
    cfg.runs = 3;
    const auto rep = sensitivity_sweep(cfg, {5, 2}).report();
    std::map<std::pair<std::string, std::string>, std::vector<double>> cols;
    const auto& raw = rep.raw;
    for (const auto& row : raw.rows)
        cols[{row[raw.column("point")], row[raw.column("moment")]}].push_back(parse_double(row[raw.column("value")]));
    const auto& r = rep.report;
    for (const auto& row : r.rows) {
        const double m = mean(cols.at({row[r.column("point")], row[r.column("moment")]}));
        expect_close(parse_double(row[r.column("mean")]), m);
        expect_close(parse_double(row[r.column("response")]), m / parse_double(row[r.column("reference")]));
    }
}

TEST(Sensitivity, RejectsBadGrid) {
    SensitivityConfig cfg;
    cfg.lo = 1.0;
    cfg.hi = 1.0;
    EXPECT_THROW((void)sensitivity_sweep(cfg, {}), ParameterDomainError);
    cfg.hi = 2.0;
    cfg.points = 1;
    EXPECT_THROW((void)sensitivity_sweep(cfg, {}), ParameterDomainError);
    cfg.points = 3;
    cfg.param = 9;
    EXPECT_THROW((void)sensitivity_sweep(cfg, {}), ParameterDomainError);
}

TEST(Convergence, SingleRunEqualsSingleEvaluation) {
    ConvergenceConfig cfg;
    cfg.theta = ParamVector::truth(ModelId::alw);
    cfg.set = MomentSet::parse("m1,m2,m4,m7");
    cfg.true_values = {0.03, 0.5, 5.0, 0.1};
    cfg.scenarios = {{"long", 3000, 1, 1}, {"ensemble", 1000, 3, 1}};
    const RunOptions opt{19, 1};
    const auto res = convergence_traces(cfg, opt);
    const SeedPlan plan(opt.master_seed);
    EnsembleEvaluator ev;
    for (std::size_t s = 0; s < 2; ++s) {
        const auto& sc = cfg.scenarios[s];
        std::vector<std::uint64_t> seeds;
        for (std::uint32_t n = 0; n < sc.ensemble; ++n)
            seeds.push_back(plan.seed(SeedDomain::convergence, 0, static_cast<std::uint32_t>((s << 20) + n)));
        const auto mv = ev.evaluate(cfg.theta, sc.t_len, seeds, cfg.set);
        const auto& tr = res.traces[s];
        ASSERT_EQ(tr.trace.size(), 1u);
        for (std::size_t j = 0; j < cfg.set.size(); ++j) {
            EXPECT_EQ(tr.deviation[0][j], mv.values[j] / cfg.true_values[j] - 1.0);
            EXPECT_EQ(tr.terminal()[j], tr.deviation[0][j]);
        }
        EXPECT_EQ(tr.tail_std[0], 0.0);
    }
}

TEST(Convergence, TraceIsRunningMeanAndDeterministic) {
    ConvergenceConfig cfg;
    cfg.theta = ParamVector::truth(ModelId::fw);
    cfg.set = MomentSet::parse("m1,m3,m6");
    cfg.true_values = {0.007, 0.0, 2.0};
    cfg.scenarios = {{"long", 2000, 1, 7}, {"ensemble", 500, 4, 7}};
    cfg.tail_window = 4;
    const auto res = convergence_traces(cfg, {2, 1});
    for (const auto& tr : res.traces) {
        EXPECT_TRUE(tr.flagged[1]);
        EXPECT_FALSE(tr.flagged[0]);
        for (std::size_t j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < 7; ++r) {
                acc += tr.deviation[r][j];
                expect_close(tr.trace[r][j], acc / static_cast<double>(r + 1), 1e-14);
            }
        }
    }
    const auto base = res.report();
    for (std::size_t w : {4u, 8u}) {
        const auto other = convergence_traces(cfg, {2, w}).report();
        EXPECT_EQ(csv(base.report), csv(other.report));
        EXPECT_EQ(csv(base.raw), csv(other.raw));
    }
    cfg.true_values.pop_back();
    EXPECT_THROW((void)convergence_traces(cfg, {}), ParameterDomainError);
}

TEST(Estimation, BudgetMatchingEnforced) {
    auto cfg = small_estimation(ModelId::alw);
    cfg.scenarios[2].ensemble = 5;
    EXPECT_THROW((void)estimation_exercise(cfg, small_weights(ModelId::alw), {}), ParameterDomainError);
}

TEST(Estimation, DeterministicAndRecomputableFromRaw) {
    const auto cfg = small_estimation(ModelId::fw);
    const auto w = small_weights(ModelId::fw);
    const auto res = estimation_exercise(cfg, w, {9, 1});
    const auto rep = res.report();
    for (std::size_t k : {4u, 8u}) {
        const auto other = estimation_exercise(cfg, w, {9, k}).report();
        EXPECT_EQ(csv(rep.report), csv(other.report));
        EXPECT_EQ(csv(rep.raw), csv(other.raw));
    }
    // Every a-d row reports the shared budget as matched.
    const auto& r = rep.report;
    for (const auto& row : r.rows) {
        const std::string s = row[r.column("scenario")];
        EXPECT_EQ(row[r.column("budget_matched")], s == "e" ? "n/a" : "yes");
    }
    // Per-scenario parameter means and RMSE from the raw rows.
    const auto& raw = rep.raw;
    for (const auto& row : r.rows) {
        const std::string s = row[r.column("scenario")];
        const std::string p = row[r.column("param")];
        std::vector<double> est;
        for (const auto& rr : raw.rows)
            if (rr[raw.column("scenario")] == s) est.push_back(parse_double(rr[raw.column(p + "_display")]));
        const double truth = parse_double(row[r.column("truth_display")]);
        expect_close(parse_double(row[r.column("mean_display")]), mean(est));
        expect_close(parse_double(row[r.column("rmse_display")]), rmse(est, truth));
    }
    // The stored argmin is reproduced by a direct candidate search.
    const auto& sc = res.scenario("b");
    const auto seeds = replication_seeds(SeedPlan(9), SeedDomain::candidate, 1, sc.scenario.ensemble);
    const auto direct = evaluate_candidates(res.candidates, sc.scenario.t_len, seeds, w,
                                            MomentVector{w.set(), res.empirical[1]});
    EXPECT_EQ(direct.best_index, sc.best[1]);
    EXPECT_EQ(direct.best.j_value, sc.j[1]);
}

TEST(Robustness, FullSubsetReproducesEstimate) {
    const auto cfg = small_estimation(ModelId::alw);
    const auto w = small_weights(ModelId::alw);
    const auto est = estimation_exercise(cfg, w, {4, 1});
    const auto full = w.restrict_to(w.set());
    for (const auto& sc : est.scenarios)
        for (std::size_t r = 0; r < cfg.runs; ++r) {
            const auto best = subset_argmin(sc.moments[r], est.empirical[r], w.set(), full);
            ASSERT_TRUE(best.has_value());
            EXPECT_EQ(*best, sc.best[r]);
            EXPECT_EQ(parameter_fitness(est.candidates[*best], cfg.truth, FitnessMode::relative),
                      parameter_fitness(*sc.theta_hat[r], cfg.truth, FitnessMode::relative));
        }
}

TEST(Robustness, J17NeverExceedsJ18AndDeterministic) {
    const auto cfg = small_estimation(ModelId::alw);
    const auto est = estimation_exercise(cfg, small_weights(ModelId::alw), {4, 1});
    RobustnessConfig rc;
    rc.sets_per_size = 2;
    const auto res = robustness_experiment(est, rc, {4, 1});
    ASSERT_EQ(res.comparisons.size(), 5u);
    for (const auto& c : res.comparisons) {
        ASSERT_EQ(c.j18.size(), cfg.runs);
        for (std::size_t r = 0; r < c.j18.size(); ++r) EXPECT_GE(c.j18[r], c.j17[r]);
        EXPECT_GE(c.mean_diff, 0.0);
    }
    // Sizes 3..18 for all moments, 3..17 without m6.
    EXPECT_EQ(res.subsets.size(), 2u * (16u + 15u));
    for (const auto& s : res.subsets) {
        EXPECT_EQ(s.set.size(), s.size);
        if (s.regime == "excl_m6") {
            EXPECT_FALSE(s.set.contains(MomentId::m6));
        }
    }
    const auto base = res.report();
    for (std::size_t k : {4u, 8u}) {
        const auto other = robustness_experiment(est, rc, {4, k}).report();
        EXPECT_EQ(csv(base.report), csv(other.report));
        EXPECT_EQ(csv(base.raw), csv(other.raw));
    }
    // Aggregated J difference from raw rows.
    const auto& raw = base.raw;
    const auto& rep = base.report;
    for (const auto& row : rep.rows) {
        if (row[rep.column("part")] != "j18_vs_j17") continue;
        std::vector<double> d;
        for (const auto& rr : raw.rows)
            if (rr[raw.column("part")] == "j18_vs_j17" && rr[raw.column("scenario")] == row[rep.column("scenario")])
                d.push_back(parse_double(rr[raw.column("value")]));
        expect_close(parse_double(row[rep.column("mean_j18_minus_j17")]), mean(d));
    }
}

TEST(SurfaceExperiment, CrnTargetVanishesAtTruth) {
    const auto truth = ParamVector::truth(ModelId::fw);
    SurfaceSpec spec{truth, 1, 4, 0.0, 0.0, 0.0, 0.0, 3};
    spec.x_lo = 0.8 * truth.values[1];
    spec.x_hi = 1.2 * truth.values[1];
    spec.y_lo = 0.8 * truth.values[4];
    spec.y_hi = 1.2 * truth.values[4];
    const ScenarioConfig sc{"s", 2000, 2, 1};
    const auto w = WeightingMatrix::identity(MomentSet::all());
    const auto crn = surface_experiment(spec, truth, sc, w, true, {1, 1});
    EXPECT_EQ(crn.search.best_index, 4u);
    EXPECT_LT(crn.j(1, 1), 1e-20);
    const auto indep = surface_experiment(spec, truth, sc, w, false, {1, 1});
    EXPECT_GT(indep.j(1, 1), 0.0);
    EXPECT_EQ(csv(indep.report().report), csv(surface_experiment(spec, truth, sc, w, false, {1, 8}).report().report));
}

TEST(Wiener, ZeroNoiseAndDeterminism) {
    WienerConfig cfg{1000, 1000, 4, true};
    const auto z = wiener_ergodicity_demo(cfg, {});
    EXPECT_EQ(z.slope, 0.0);
    EXPECT_EQ(z.ea_sq_displacement, 0.0);
    EXPECT_EQ(z.ta_sq_increment, 0.0);
    cfg.zero_noise = false;
    const auto a = wiener_ergodicity_demo(cfg, {5, 1});
    EXPECT_EQ(a.prefix_lengths, (std::vector<std::size_t>{125, 250, 500, 1000}));
    EXPECT_GT(a.slope, 0.7);
    EXPECT_LT(a.slope, 1.3);
    const auto b = wiener_ergodicity_demo(cfg, {5, 8});
    EXPECT_EQ(csv(a.report().raw), csv(b.report().raw));
    EXPECT_THROW((void)wiener_ergodicity_demo(WienerConfig{100, 1000, 4, false}, {}), ParameterDomainError);
}
