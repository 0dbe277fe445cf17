// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
//
//   acceptance [--workers N] [--only 1,5,9] [--results FILE]

#include "smmergo/cli.hpp"
#include "smmergo/harness.hpp"

#include <CLI11.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace smmergo;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t master_seed = 20240917;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 6) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

std::size_t pos(const MomentSet& set, MomentId id) { return *set.position(id); }

/// Lazily computed experiments shared by several criteria.
class Shared {
public:
    explicit Shared(std::size_t workers) : workers_(workers) {}

    RunOptions opt() const { return {master_seed, workers_}; }
    std::size_t workers() const { return workers_; }

    const TrueMomentsResult& long_run(ModelId m) {
        auto& slot = long_run_[m];
        if (!slot) {
            TrueMomentsConfig cfg{ParamVector::truth(m), {1'000'000}, 200, MomentSet::all()};
            slot = true_moments_experiment(cfg, opt());
        }
        return *slot;
    }

    const EstimationResult& estimation(ModelId m) {
        auto& slot = estimation_[m];
        if (!slot) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto w = estimate_weighting_matrix(ParamVector::truth(m), 100'000, 500, MomentSet::all(),
                                                     master_seed, workers_);
            EstimationConfig cfg;
            cfg.truth = ParamVector::truth(m);
            cfg.space = ParameterSpace::estimation_box(m);
            cfg.scenarios = ScenarioConfig::budget_table(50);
            cfg.candidates = 500;
            cfg.runs = 50;
            cfg.emp_t = 400'000;
            slot = estimation_exercise(cfg, w, opt());
            std::cerr << "  estimation " << to_string(m) << " done in "
                      << fmt(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 4)
                      << " s\n";
        }
        return *slot;
    }

    const RobustnessResult& robustness(ModelId m) {
        auto& slot = robustness_[m];
        if (!slot) {
            RobustnessConfig rc;
            rc.sets_per_size = 1;
            rc.comparison_scenarios = {"a", "b", "e"};
            slot = robustness_experiment(estimation(m), rc, opt());
        }
        return *slot;
    }

private:
    std::size_t workers_;
    std::map<ModelId, std::optional<TrueMomentsResult>> long_run_;
    std::map<ModelId, std::optional<EstimationResult>> estimation_;
    std::map<ModelId, std::optional<RobustnessResult>> robustness_;
};

struct Band {
    MomentId id;
    double target, tol;
};

Outcome long_run_bands(Shared& sh, ModelId m, const std::vector<Band>& bands) {
    const auto& cell = sh.long_run(m).at(1'000'000);
    const MomentSet set = MomentSet::all();
    Outcome o{true, std::string(to_string(m)) + " T=1e6 R=200 (ok " + std::to_string(cell.ok) + "):"};
    for (const auto& b : bands) {
        const double v = cell.mean[pos(set, b.id)];
        const bool ok = std::fabs(v - b.target) <= b.tol;
        o.pass = o.pass && ok;
        o.detail += " " + std::string(label_of(b.id)) + "=" + fmt(v) + (ok ? "" : "(!)") + " [" + fmt(b.target) +
                    "+-" + fmt(b.tol) + "]";
    }
    return o;
}

Outcome variance_scaling(Shared& sh) {
    Outcome o{true, "min var(1e4)/var(1e5):"};
    for (ModelId m : {ModelId::alw, ModelId::fw}) {
        TrueMomentsConfig cfg{ParamVector::truth(m), {10'000, 100'000}, 500, MomentSet::all()};
        const auto res = true_moments_experiment(cfg, sh.opt());
        double worst = INFINITY;
        MomentId worst_id = MomentId::m1;
        for (std::size_t j = 0; j < cfg.set.size(); ++j) {
            const double ratio = res.at(10'000).var[j] / res.at(100'000).var[j];
            if (!(ratio >= 5.0)) o.pass = false;
            if (!(ratio >= worst)) {
                worst = ratio;
                worst_id = cfg.set[j];
            }
        }
        o.detail += " " + std::string(to_string(m)) + " " + fmt(worst, 4) + " (" + std::string(label_of(worst_id)) +
                    ", R=500)";
    }
    return o;
}

Outcome ergodic_inequality(Shared& sh) {
    const std::size_t runs = 100, n = 10, t_len = 40'000;
    const MomentSet set = MomentSet::parse("m1,m2,m3,m4");
    const auto theta = ParamVector::truth(ModelId::alw);
    const SeedPlan plan(master_seed + 4);
    std::vector<double> max_gap(runs), m4_gap(runs);
    parallel_for(runs, sh.workers(), [&](std::size_t r, std::size_t) {
        std::vector<ReturnSeries> ens;
        for (std::size_t i = 0; i < n; ++i)
            ens.push_back(simulate(theta, SimConfig{t_len, 500,
                                                    plan.seed(SeedDomain::truth, static_cast<std::uint32_t>(r),
                                                              static_cast<std::uint32_t>(i))}));
        const auto e = ensemble_moment_vector(std::span<const ReturnSeries>(ens), set);
        const auto p = pooled_moment_vector(std::span<const ReturnSeries>(ens), set);
        double g = 0.0;
        for (std::size_t j = 0; j < 3; ++j) g = std::max(g, std::fabs(e.values[j] - p.values[j]));
        max_gap[r] = g;
        m4_gap[r] = std::fabs(e.values[3] - p.values[3]);
    });
    const double worst = *std::max_element(max_gap.begin(), max_gap.end());
    std::size_t differ = 0;
    for (double d : m4_gap) differ += d > 1e-6;
    Outcome o;
    o.pass = worst <= 1e-12 && differ >= 90;
    o.detail = "max |pooled-ensemble| on m1-m3 = " + fmt(worst, 3) + " (<=1e-12); m4 differs >1e-6 in " +
               std::to_string(differ) + "/100 runs (>=90)";
    return o;
}

Outcome scenario_ordering(Shared& sh) {
    std::map<std::string, double> ja, jf;
    for (const auto& s : sh.estimation(ModelId::alw).scenarios) ja[s.scenario.label] = s.mean_j();
    for (const auto& s : sh.estimation(ModelId::fw).scenarios) jf[s.scenario.label] = s.mean_j();
    bool d_max = true;
    for (const auto& [label, j] : ja)
        if (label != "d" && !(ja["d"] > j)) d_max = false;
    const bool e_lt_a = ja["e"] < ja["a"];
    const bool fw_ratio = jf["d"] > 1.5 * jf["a"];
    Outcome o;
    o.pass = d_max && e_lt_a && fw_ratio;
    o.detail = "ALW mean J a..e = " + fmt(ja["a"], 4) + " " + fmt(ja["b"], 4) + " " + fmt(ja["c"], 4) + " " +
               fmt(ja["d"], 4) + " " + fmt(ja["e"], 4) + " (J(e)<J(a): " + (e_lt_a ? "yes" : "no") +
               ", J(d) max: " + (d_max ? "yes" : "no") + "); FW J(d)/J(a) = " + fmt(jf["d"] / jf["a"], 4) +
               " (>1.5)";
    return o;
}

Outcome parameter_recovery(Shared& sh) {
    const auto& est = sh.estimation(ModelId::alw);
    const double scale = display_scale(ModelId::alw);
    Outcome o{true, "ALW mean b_hat:"};
    for (const char* label : {"a", "b", "e"}) {
        auto b = est.scenario(label).estimates(1);
        for (double& v : b) v *= scale;
        const double mb = mean(b);
        const bool ok = std::fabs(mb / 1.4 - 1.0) <= 0.02;
        o.pass = o.pass && ok;
        o.detail += std::string(" ") + label + "=" + fmt(mb, 5) + (ok ? "" : "(!)");
    }
    o.detail += " [1.4+-2%]; RMSE(sigma_f_hat):";
    const double truth = est.config.truth.values[2] * scale;
    std::map<std::string, double> r;
    for (const auto& s : est.scenarios) {
        auto v = s.estimates(2);
        for (double& x : v) x *= scale;
        r[s.scenario.label] = rmse(v, truth);
        o.detail += " " + s.scenario.label + "=" + fmt(r[s.scenario.label], 4);
    }
    for (const auto& [label, v] : r)
        if (label != "e" && !(r["e"] < v)) o.pass = false;
    return o;
}

Outcome j18_vs_j17(Shared& sh) {
    Outcome o{true, "mean(J18-J17):"};
    for (ModelId m : {ModelId::alw, ModelId::fw}) {
        const auto& rob = sh.robustness(m);
        for (const char* label : {"a", "b", "e"}) {
            const auto& c = rob.comparison(label);
            const bool ok = c.mean_diff > 0.0;
            o.pass = o.pass && ok;
            o.detail += " " + std::string(to_string(m)) + "/" + label + "=" + fmt(c.mean_diff, 4) + (ok ? "" : "(!)");
        }
    }
    const double p = sh.robustness(ModelId::alw).comparison("e").test.p_value;
    o.pass = o.pass && p < 0.05;
    o.detail += "; ALW e paired t p=" + fmt(p, 4) + " (<0.05)";
    return o;
}

Outcome m6_pathology(Shared& sh) {
    Outcome o{true, "tail std of running mean, m6/m1:"};
    for (ModelId m : {ModelId::alw, ModelId::fw}) {
        ConvergenceConfig cfg;
        cfg.theta = ParamVector::truth(m);
        cfg.set = MomentSet::all();
        cfg.true_values = sh.long_run(m).at(1'000'000).mean;
        const auto res = convergence_traces(cfg, sh.opt());
        for (const auto& tr : res.traces) {
            const double ratio = tr.tail_std[pos(cfg.set, MomentId::m6)] / tr.tail_std[pos(cfg.set, MomentId::m1)];
            // Terminal relative deviation across the 500 runs.
            std::vector<double> d6, d1;
            for (const auto& d : tr.deviation) {
                d6.push_back(d[pos(cfg.set, MomentId::m6)]);
                d1.push_back(d[pos(cfg.set, MomentId::m1)]);
            }
            const double run_ratio = stddev(d6) / stddev(d1);
            const bool ok = ratio >= 3.0 && run_ratio >= 3.0;
            o.pass = o.pass && ok;
            o.detail += " " + std::string(to_string(m)) + "/" + tr.scenario.label + "=" + fmt(ratio, 4) +
                        " (per-run " + fmt(run_ratio, 4) + ")" + (ok ? "" : "(!)");
        }
    }
    o.detail += " [>=3]";
    return o;
}

Outcome hill_oracle() {
    GaussianStream g(master_seed + 9);
    std::vector<double> x(1'000'000);
    for (double& v : x) v = std::pow(g.uniform(), -1.0 / 3.0);
    const double h = hill_tail(x, 0.025);
    return {h >= 2.9 && h <= 3.1, "Pareto(3) n=1e6 hill(q=0.025) = " + fmt(h, 5) + " [2.9, 3.1]"};
}

Outcome gaussian_oracle() {
    const double sigma = 0.02;
    const double n = 1e6;
    GaussianStream g(master_seed + 10);
    std::vector<double> x(1'000'000);
    for (double& v : x) v = sigma * g.normal();
    const auto mv = moment_vector(x, MomentSet::parse("m1,m2,m6"));
    const double z1 = (mv.values[0] - sigma * std::sqrt(2.0 / std::numbers::pi)) /
                      (sigma * std::sqrt(1.0 - 2.0 / std::numbers::pi) / std::sqrt(n));
    const double z2 = (mv.values[1] - sigma * sigma) / (sigma * sigma * std::sqrt(2.0 / n));
    const double z6 = mv.values[2] * std::sqrt(n);
    const bool ok = std::fabs(z1) <= 5 && std::fabs(z2) <= 5 && std::fabs(z6) <= 5;
    return {ok, "N(0, 0.02^2) n=1e6 standard errors: m1 " + fmt(z1, 3) + ", m2 " + fmt(z2, 3) + ", m6 " + fmt(z6, 3) +
                    " (|z|<=5)"};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

int run_binary(const std::string& args) {
    const std::string cmd = std::string(SMMERGO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Scaled-down settings so every subcommand runs in seconds.
const char* determinism_config = R"(
[weighting]
t = 20000
r = 100

[estimate]
candidates = 32
runs = 4
emp_t = 40000
scenarios = a, b, c, d, e

[scenario:a]
t = 40000
n = 1

[scenario:b]
t = 4000
n = 10

[scenario:c]
t = 2000
n = 20

[scenario:d]
t = 1000
n = 40

[scenario:e]
t = 4000
n = 20

[surface]
t = 20000
n = 2
grid = 9

[true_moments]
t_list = 10000, 50000
runs = 40

[sensitivity]
points = 7
t = 10000
n = 3
r = 3

[convergence]
runs = 20
true_t = 50000
true_r = 10
long_t = 40000
ensemble_t = 4000
ensemble_n = 10

[robustness]
sets_per_size = 3
scenarios = a, e

[simulate]
t = 50000

[wiener]
t = 2000
paths = 2000
)";

Outcome cli_determinism() {
    const fs::path root = fs::temp_directory_path() / ("smmergo_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "config.ini";
    std::ofstream(cfg) << determinism_config;
    Outcome o{true, "byte-identical report.csv/raw.csv at workers 1 vs 8:"};
    for (const auto& sub : subcommands()) {
        for (const char* model : {"alw", "fw"}) {
            if (sub == "wiener-demo" && std::string(model) == "fw") continue;
            std::string cells[2];
            bool ran = true;
            for (int k = 0; k < 2; ++k) {
                const fs::path out = root / (sub + "_" + model + "_" + std::to_string(k));
                const int code = run_binary(sub + " --model " + model + " --config " + cfg.string() +
                                            " --seed 7 --workers " + (k ? "8" : "1") + " --out " + out.string());
                if (code != 0) ran = false;
                cells[k] = slurp(out / "report.csv") + "\x1f" + slurp(out / "raw.csv");
            }
            const bool ok = ran && !cells[0].empty() && cells[0] == cells[1];
            o.pass = o.pass && ok;
            if (!ok) o.detail += " " + sub + "/" + model + "(!)";
        }
    }
    if (o.pass) o.detail += " all " + std::to_string(subcommands().size()) + " subcommands, both models";
    fs::remove_all(root);
    return o;
}

Outcome ks_calibration(Shared& sh) {
    const std::size_t samples = 2000, n = 500;
    const SeedPlan plan(master_seed + 12);
    std::vector<double> p(samples);
    parallel_for(samples, sh.workers(), [&](std::size_t s, std::size_t) {
        GaussianStream g(plan.seed(SeedDomain::truth, 0, static_cast<std::uint32_t>(s)));
        std::vector<double> x(n);
        for (double& v : x) v = g.normal();
        p[s] = ks_normal(x).p_value;
    });
    std::size_t below = 0;
    for (double v : p) below += v < 0.05;
    const double frac = static_cast<double>(below) / static_cast<double>(samples);
    return {frac >= 0.03 && frac <= 0.07, "fraction p<0.05 = " + fmt(frac, 4) + " [0.03, 0.07]"};
}

Outcome wiener(Shared& sh) {
    const auto res = wiener_ergodicity_demo(WienerConfig{10'000, 10'000, 5, false}, sh.opt());
    const bool ok = res.slope >= 0.85 && res.slope <= 1.15 && res.ea_sq_displacement >= 0.95 &&
                    res.ea_sq_displacement <= 1.05;
    return {ok, "var(TA) log-log slope = " + fmt(res.slope, 4) + " [0.85, 1.15]; EA(D^2)/T = " +
                    fmt(res.ea_sq_displacement, 4) + " [0.95, 1.05]"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::size_t workers = 0;
    std::string only;
    std::string results = "acceptance_results.txt";
    app.add_option("--workers", workers, "worker threads (0 = all cores)");
    app.add_option("--only", only, "comma-separated criterion numbers");
    app.add_option("--results", results, "file receiving a copy of the result lines");
    CLI11_PARSE(app, argc, argv);

    Shared sh(workers);
    struct Criterion {
        int id;
        std::string name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "ALW long-run moments",
         [&] {
             return long_run_bands(sh, ModelId::alw, {{MomentId::m1, 0.0332, 0.0005},
                                                      {MomentId::m3, 0.856, 0.01},
                                                      {MomentId::m4, 5.66, 0.08},
                                                      {MomentId::m7, 0.1038, 0.003}});
         }},
        {2, "FW long-run moments",
         [&] {
             return long_run_bands(sh, ModelId::fw, {{MomentId::m1, 0.0071, 0.0002},
                                                     {MomentId::m4, 4.350, 0.05},
                                                     {MomentId::m7, 0.194, 0.005}});
         }},
        {3, "variance scaling per decade of T", [&] { return variance_scaling(sh); }},
        {4, "ergodic inequality pooled vs ensemble", [&] { return ergodic_inequality(sh); }},
        {5, "scenario ordering of mean J", [&] { return scenario_ordering(sh); }},
        {6, "ALW parameter recovery", [&] { return parameter_recovery(sh); }},
        {7, "J18 vs J17 direction", [&] { return j18_vs_j17(sh); }},
        {8, "m6 convergence pathology", [&] { return m6_pathology(sh); }},
        {9, "Hill oracle", [] { return hill_oracle(); }},
        {10, "Gaussian moment oracle", [] { return gaussian_oracle(); }},
        {11, "CLI determinism", [] { return cli_determinism(); }},
        {12, "KS calibration", [&] { return ks_calibration(sh); }},
        {13, "Wiener ergodicity demo", [&] { return wiener(sh); }},
    };
    std::set<int> selected;
    if (!only.empty()) {
        std::stringstream ss(only);
        for (std::string tok; std::getline(ss, tok, ',');) selected.insert(std::stoi(tok));
    }

    std::ofstream log(results);
    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::ostringstream line;
        line << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << o.detail
             << "  (" << fmt(dt, 4) << " s)";
        std::cout << line.str() << std::endl;
        log << line.str() << "\n";
        log.flush();
        ++ran;
        failed += !o.pass;
    }
    const std::string summary = "acceptance: " + std::to_string(ran - failed) + "/" + std::to_string(ran) + " passed";
    std::cout << summary << std::endl;
    log << summary << "\n";
    return failed == 0 ? 0 : 1;
}
