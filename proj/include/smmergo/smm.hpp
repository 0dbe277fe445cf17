#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/models.hpp"
#include "smmergo/moments.hpp"
#include "smmergo/parallel.hpp"
#include "smmergo/params.hpp"
#include "smmergo/seed_plan.hpp"
#include "smmergo/sobol.hpp"
#include "smmergo/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smmergo {

struct WeightSource {
    std::size_t t_w = 0;
    std::size_t r_w = 0;
    std::optional<ParamVector> theta;
    double ridge = 0.0;
    double condition = 0.0;
};

/**
 * @brief Quadratic-form weights over a moment set.
 *
 * When built from a moment covariance, the covariance is retained so that the
 * weights for any subset S can be formed as inv(Sigma_SS).
 */
class WeightingMatrix {
public:
    WeightingMatrix(MomentSet set, Eigen::MatrixXd entries, WeightSource source = {},
                    std::optional<Eigen::MatrixXd> covariance = std::nullopt)
        : set_(std::move(set)),
          entries_(std::move(entries)),
          source_(std::move(source)),
          covariance_(std::move(covariance)) {
        if (entries_.rows() != static_cast<Eigen::Index>(set_.size()) ||
            entries_.cols() != static_cast<Eigen::Index>(set_.size()))
            throw MatrixDomainError("weighting matrix dimension does not match its moment set");
        validate();
    }

    [[nodiscard]] static WeightingMatrix identity(const MomentSet& set) {
        const auto m = static_cast<Eigen::Index>(set.size());
        return {set, Eigen::MatrixXd::Identity(m, m)};
    }

    /// W = inv(cov) with the ridge fallback of spd_inverse_regularized.
    [[nodiscard]] static WeightingMatrix from_covariance(const MomentSet& set,
                                                         const Eigen::MatrixXd& cov,
                                                         WeightSource source = {}) {
        const SpdInverse inv = spd_inverse_regularized(cov);
        source.ridge = inv.ridge;
        source.condition = inv.condition;
        return {set, inv.inverse, std::move(source), cov};
    }

    [[nodiscard]] const MomentSet& set() const noexcept { return set_; }
    [[nodiscard]] const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    [[nodiscard]] const WeightSource& source() const noexcept { return source_; }
    [[nodiscard]] const std::optional<Eigen::MatrixXd>& covariance() const noexcept { return covariance_; }
    [[nodiscard]] std::size_t size() const noexcept { return set_.size(); }

    /// Weights restricted to `subset`: inv(Sigma_SS) if a covariance is known, else the principal block.
    [[nodiscard]] WeightingMatrix restrict_to(const MomentSet& subset) const {
        const auto m = static_cast<Eigen::Index>(subset.size());
        std::vector<Eigen::Index> pos;
        for (MomentId id : subset.ids()) {
            auto p = set_.position(id);
            if (!p) throw MatrixDomainError(std::string(label_of(id)) + " not in weighting matrix");
            pos.push_back(static_cast<Eigen::Index>(*p));
        }
        const Eigen::MatrixXd& src = covariance_ ? *covariance_ : entries_;
        Eigen::MatrixXd block(m, m);
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = 0; j < m; ++j) block(i, j) = src(pos[i], pos[j]);
        if (!covariance_) return {subset, block, source_};
        WeightSource meta = source_;
        return from_covariance(subset, block, std::move(meta));
    }

    [[nodiscard]] WeightingMatrix scaled(double c) const {
        if (!(c > 0.0)) throw MatrixDomainError("weighting scale must be positive");
        std::optional<Eigen::MatrixXd> cov;
        if (covariance_) cov = *covariance_ / c;
        return {set_, entries_ * c, source_, std::move(cov)};
    }

    /// Symmetric to 1e-10 and eigenvalues >= -1e-8 * ||W||.
    void validate() const {
        if (!entries_.allFinite()) throw MatrixDomainError("weighting matrix has non-finite entries");
        const double norm = entries_.norm();
        if ((entries_ - entries_.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, norm))
            throw MatrixDomainError("weighting matrix is not symmetric");
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(entries_, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-8 * norm)
            throw MatrixDomainError("weighting matrix is not positive semi-definite");
    }

private:
    MomentSet set_;
    Eigen::MatrixXd entries_;
    WeightSource source_;
    std::optional<Eigen::MatrixXd> covariance_;
};

/// g = m_emp - m_sim, entrywise.
[[nodiscard]] inline std::vector<double> distance(const MomentVector& m_emp, const MomentVector& m_sim) {
    if (!(m_emp.set == m_sim.set)) throw ParameterDomainError("moment vectors use different moment sets");
    std::vector<double> g(m_emp.values.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = m_emp.values[j] - m_sim.values[j];
    return g;
}

/// J = g' W g over a raw matrix; tiny negatives are clamped to zero.
[[nodiscard]] inline double quadratic_form(std::span<const double> g, const Eigen::MatrixXd& w) {
    if (static_cast<Eigen::Index>(g.size()) != w.rows() || w.rows() != w.cols())
        throw MatrixDomainError("distance and weighting matrix dimensions differ");
    const Eigen::Map<const Eigen::VectorXd> v(g.data(), static_cast<Eigen::Index>(g.size()));
    const double j = v.dot(w * v);
    if (std::isnan(j)) return std::numeric_limits<double>::infinity();
    if (j < 0.0) {
        if (j < -1e-9) throw MatrixDomainError("negative quadratic form: weighting matrix is not PSD");
        return 0.0;
    }
    return j;
}

[[nodiscard]] inline double objective_j(std::span<const double> g, const WeightingMatrix& w) {
    return quadratic_form(g, w.entries());
}

/// Box of admissible parameter values; lower == upper pins a coordinate.
struct ParameterSpace {
    ModelId model = ModelId::alw;
    std::vector<double> lower;
    std::vector<double> upper;

    /// truth * (1 -+ fraction), with each pair ordered so lower <= upper.
    [[nodiscard]] static ParameterSpace around(const ParamVector& center, double fraction) {
        if (!(fraction >= 0.0)) throw ParameterDomainError("box fraction must be nonnegative");
        ParameterSpace s{center.model, {}, {}};
        for (double v : center.values) {
            const double a = v * (1.0 - fraction);
            const double b = v * (1.0 + fraction);
            s.lower.push_back(std::min(a, b));
            s.upper.push_back(std::max(a, b));
        }
        s.validate();
        return s;
    }

    /// The +-25% box around the true parameters.
    [[nodiscard]] static ParameterSpace estimation_box(ModelId m) {
        return around(ParamVector::truth(m), 0.25);
    }

    [[nodiscard]] static ParameterSpace point(const ParamVector& theta) { return around(theta, 0.0); }

    [[nodiscard]] std::size_t dim() const noexcept { return lower.size(); }

    void validate() const {
        if (lower.size() != param_count(model) || upper.size() != param_count(model))
            throw ParameterDomainError("parameter space dimension does not match the model");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
                throw ParameterDomainError("parameter space bound " + std::string(param_names(model)[i]) +
                                           " has lower > upper");
    }

    [[nodiscard]] bool contains(const ParamVector& theta) const {
        if (theta.model != model || theta.values.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i)
            if (theta.values[i] < lower[i] || theta.values[i] > upper[i]) return false;
        return true;
    }

    /// Affine map of a unit-cube point onto the box.
    [[nodiscard]] ParamVector map(std::span<const double> unit) const {
        if (unit.size() != dim()) throw ParameterDomainError("point dimension does not match the space");
        ParamVector theta{model, std::vector<double>(dim())};
        for (std::size_t i = 0; i < dim(); ++i) {
            const double v = lower[i] + unit[i] * (upper[i] - lower[i]);
            theta.values[i] = std::clamp(v, lower[i], upper[i]);
        }
        return theta;
    }
};

[[nodiscard]] inline ParamVector map_to_space(std::span<const double> unit, const ParameterSpace& space) {
    return space.map(unit);
}

/// The first n Sobol points mapped onto the box.
[[nodiscard]] inline std::vector<ParamVector> sobol_candidates(const ParameterSpace& space, std::size_t n) {
    space.validate();
    SobolSequence seq(space.dim());
    std::vector<ParamVector> out;
    out.reserve(n);
    std::vector<double> u(space.dim());
    for (std::size_t i = 0; i < n; ++i) {
        seq.next(u);
        out.push_back(space.map(u));
    }
    return out;
}

/// One cell of the Monte Carlo cube: series length, ensemble size and MC repetitions.
struct ScenarioConfig {
    std::string label;
    std::size_t t_len = 0;
    std::size_t ensemble = 1;
    std::size_t runs = 1;

    [[nodiscard]] std::size_t budget() const noexcept { return t_len * ensemble; }

    void validate() const {
        if (t_len < SimConfig::min_length)
            throw ParameterDomainError("scenario " + label + ": T must be at least " +
                                       std::to_string(SimConfig::min_length));
        if (ensemble == 0) throw ParameterDomainError("scenario " + label + ": N must be positive");
        if (runs == 0) throw ParameterDomainError("scenario " + label + ": R must be positive");
    }

    /// Budget allocations (a)-(e): (a)-(d) share T N = 400000, (e) doubles it.
    [[nodiscard]] static std::vector<ScenarioConfig> budget_table(std::size_t runs) {
        return {{"a", 400'000, 1, runs},
                {"b", 40'000, 10, runs},
                {"c", 20'000, 20, runs},
                {"d", 10'000, 40, runs},
                {"e", 40'000, 20, runs}};
    }

    [[nodiscard]] static ScenarioConfig from_table(const std::string& label, std::size_t runs) {
        for (auto& s : budget_table(runs))
            if (s.label == label) return s;
        throw ParameterDomainError("unknown scenario '" + label + "'");
    }
};

/// Throws unless every scenario in `family` shares the same T N.
inline void require_budget_matched(std::span<const ScenarioConfig> family) {
    for (const auto& s : family)
        if (s.budget() != family.front().budget())
            throw ParameterDomainError("scenario " + s.label + " breaks the shared T*N budget");
}

struct ObjectiveResult {
    ParamVector theta;
    double j_value = 0.0;
    std::vector<double> distance;
    double wall_time = 0.0;
};

/// Seeds of the N replications of run `run` in `domain`.
[[nodiscard]] inline std::vector<std::uint64_t> replication_seeds(const SeedPlan& plan, SeedDomain domain,
                                                                  std::size_t run, std::size_t n) {
    std::vector<std::uint64_t> seeds(n);
    for (std::size_t i = 0; i < n; ++i)
        seeds[i] = plan.seed(domain, static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(i));
    return seeds;
}

/**
 * @brief Per-worker simulator + moment workspace.
 *
 * evaluate() simulates one series per seed and averages the per-series moment
 * vectors in seed order; the result equals ensemble_moment_vector on the same
 * series bit for bit.
 */
/**
 * @brief Pre-generated normals for a fixed list of seeds.
 *
 * Candidate searches reuse one set of seeds for every candidate, so the noise
 * can be drawn once and replayed. Replayed draws are the exact values a fresh
 * GaussianStream would produce.
 */
class NoiseBank {
public:
    /// Largest bank built automatically (number of doubles, about 512 MB).
    static constexpr std::size_t default_cap = std::size_t{64} << 20;

    NoiseBank() = default;

    NoiseBank(std::span<const std::uint64_t> seeds, std::size_t steps, std::size_t workers = 1)
        : seeds_(seeds.begin(), seeds.end()), steps_(steps), draws_(seeds.size()) {
        parallel_for(seeds_.size(), workers, [&](std::size_t i, std::size_t) {
            GaussianStream g(seeds_[i]);
            auto& d = draws_[i];
            d.resize(steps_ * normals_per_step);
            for (double& v : d) v = g.normal();
        });
    }

    /// Bank for `seeds` covering burn-in plus t_len steps, or nothing when above `cap` doubles.
    [[nodiscard]] static std::optional<NoiseBank> maybe(std::span<const std::uint64_t> seeds, std::size_t t_len,
                                                        std::size_t burn_in, std::size_t workers = 1,
                                                        std::size_t cap = default_cap) {
        const std::size_t steps = t_len + burn_in;
        if (seeds.size() * steps * normals_per_step > cap) return std::nullopt;
        return NoiseBank(seeds, steps, workers);
    }

    [[nodiscard]] std::span<const std::uint64_t> seeds() const noexcept { return seeds_; }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] std::span<const double> draws(std::size_t i) const { return draws_.at(i); }

private:
    std::vector<std::uint64_t> seeds_;
    std::size_t steps_ = 0;
    std::vector<std::vector<double>> draws_;
};

class EnsembleEvaluator {
public:
    explicit EnsembleEvaluator(BoundaryMode boundary = BoundaryMode::clamp, std::size_t burn_in = 500)
        : boundary_(boundary), burn_in_(burn_in) {}

    void evaluate(const ParamVector& theta, std::size_t t_len, std::span<const std::uint64_t> seeds,
                  const MomentSet& set, std::span<double> out) {
        if (seeds.empty()) throw ParameterDomainError("ensemble needs at least one seed");
        if (out.size() != set.size()) throw ParameterDomainError("output size != moment set size");
        series_.resize(t_len);
        one_.resize(set.size());
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t n = 0; n < seeds.size(); ++n) {
            SimConfig cfg{t_len, burn_in_, seeds[n], boundary_};
            GaussianStream noise(seeds[n]);
            simulate_into(theta, cfg, noise, std::span<double>(series_));
            try {
                calc_.compute(series_, set, one_);
            } catch (const MomentError& e) {
                throw MomentError(e.id(), n, e.what());
            }
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += one_[j];
        }
        for (double& v : out) v /= static_cast<double>(seeds.size());
    }

    /// Same result as evaluate(theta, t_len, bank.seeds(), set, out), replaying the bank's draws.
    void evaluate(const ParamVector& theta, std::size_t t_len, const NoiseBank& bank, const MomentSet& set,
                  std::span<double> out) {
        const auto seeds = bank.seeds();
        if (seeds.empty()) throw ParameterDomainError("ensemble needs at least one seed");
        if (out.size() != set.size()) throw ParameterDomainError("output size != moment set size");
        if (bank.steps() < t_len + burn_in_) throw ParameterDomainError("noise bank is shorter than the run");
        series_.resize(t_len);
        one_.resize(set.size());
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t n = 0; n < seeds.size(); ++n) {
            SimConfig cfg{t_len, burn_in_, seeds[n], boundary_};
            BufferedNoise noise(bank.draws(n));
            simulate_into(theta, cfg, noise, std::span<double>(series_));
            try {
                calc_.compute(series_, set, one_);
            } catch (const MomentError& e) {
                throw MomentError(e.id(), n, e.what());
            }
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += one_[j];
        }
        for (double& v : out) v /= static_cast<double>(seeds.size());
    }

    /**
     * Evaluates up to sim_lanes parameter vectors at once over the bank's
     * noise. outs[j] and errors[j] receive exactly what evaluate() would
     * produce or throw for thetas[j].
     */
    void evaluate_lanes(std::span<const ParamVector> thetas, std::size_t t_len, const NoiseBank& bank,
                        const MomentSet& set, std::span<std::vector<double>> outs,
                        std::span<std::exception_ptr> errors) {
        const auto seeds = bank.seeds();
        const std::size_t lanes = thetas.size();
        if (seeds.empty()) throw ParameterDomainError("ensemble needs at least one seed");
        if (bank.steps() < t_len + burn_in_) throw ParameterDomainError("noise bank is shorter than the run");
        if (outs.size() != lanes || errors.size() != lanes)
            throw ParameterDomainError("lane output count mismatch");
        lane_series_.resize(lanes);
        std::vector<std::span<double>> views(lanes);
        for (std::size_t j = 0; j < lanes; ++j) {
            lane_series_[j].resize(t_len);
            views[j] = lane_series_[j];
            outs[j].assign(set.size(), 0.0);
            errors[j] = nullptr;
        }
        std::vector<std::optional<std::size_t>> diverged(lanes);
        one_.resize(set.size());
        for (std::size_t n = 0; n < seeds.size(); ++n) {
            SimConfig cfg{t_len, burn_in_, seeds[n], boundary_};
            simulate_lanes(thetas, cfg, bank.draws(n).first((t_len + burn_in_) * normals_per_step), views,
                           diverged);
            for (std::size_t j = 0; j < lanes; ++j) {
                if (errors[j]) continue;
                if (diverged[j]) {
                    errors[j] = std::make_exception_ptr(DivergenceError(*diverged[j], "FW price diverged"));
                    continue;
                }
                try {
                    try {
                        calc_.compute(lane_series_[j], set, one_);
                    } catch (const MomentError& e) {
                        throw MomentError(e.id(), n, e.what());
                    }
                    for (std::size_t k = 0; k < one_.size(); ++k) outs[j][k] += one_[k];
                } catch (...) {
                    errors[j] = std::current_exception();
                }
            }
        }
        for (std::size_t j = 0; j < lanes; ++j)
            for (double& v : outs[j]) v /= static_cast<double>(seeds.size());
    }

    [[nodiscard]] std::size_t burn_in() const noexcept { return burn_in_; }

    [[nodiscard]] MomentVector evaluate(const ParamVector& theta, std::size_t t_len,
                                        std::span<const std::uint64_t> seeds, const MomentSet& set) {
        MomentVector mv{set, std::vector<double>(set.size())};
        evaluate(theta, t_len, seeds, set, mv.values);
        return mv;
    }

private:
    BoundaryMode boundary_;
    std::size_t burn_in_;
    std::vector<double> series_;
    std::vector<std::vector<double>> lane_series_;
    std::vector<double> one_;
    MomentCalculator calc_;
};

/**
 * @brief Weighting matrix from the moment covariance at theta.
 *
 * Simulates r_w single-series replications of length t_w, computes their
 * moment vectors, and inverts the unbiased sample covariance (ridge fallback
 * when the condition number exceeds 1e12).
 */
[[nodiscard]] inline WeightingMatrix estimate_weighting_matrix(const ParamVector& theta, std::size_t t_w,
                                                               std::size_t r_w, const MomentSet& set,
                                                               std::uint64_t master_seed,
                                                               std::size_t workers = 1) {
    // r_w <= M leaves the covariance singular; spd_inverse_regularized then adds a ridge.
    if (r_w < 2) throw ParameterDomainError("weighting matrix needs r_w >= 2");
    theta.validate();
    const SeedPlan plan(master_seed);
    Eigen::MatrixXd rows(static_cast<Eigen::Index>(r_w), static_cast<Eigen::Index>(set.size()));
    std::vector<EnsembleEvaluator> evals(resolve_workers(workers));
    std::vector<std::vector<double>> results(r_w, std::vector<double>(set.size()));
    parallel_for(r_w, workers, [&](std::size_t r, std::size_t w) {
        const std::uint64_t seed = plan.seed(SeedDomain::weighting, static_cast<std::uint32_t>(r), 0);
        evals[w].evaluate(theta, t_w, std::span<const std::uint64_t>(&seed, 1), set, results[r]);
    });
    for (std::size_t r = 0; r < r_w; ++r)
        for (std::size_t j = 0; j < set.size(); ++j)
            rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = results[r][j];
    WeightSource src{t_w, r_w, theta, 0.0, 0.0};
    return WeightingMatrix::from_covariance(set, sample_cov(rows), std::move(src));
}

struct SearchResult {
    ObjectiveResult best;
    std::size_t best_index = 0;
    std::vector<ParamVector> candidates;
    std::vector<double> j_values;                 ///< +inf for infeasible candidates
    std::vector<std::vector<double>> moments;     ///< ensemble moments over w.set(); empty if infeasible
    std::vector<std::string> failures;            ///< empty string for feasible candidates
    std::vector<double> wall_times;
    double wall_time = 0.0;
};

/// Argmin of J over `j_values` (lowest index on ties); nullopt if none is finite.
[[nodiscard]] inline std::optional<std::size_t> argmin_finite(std::span<const double> j_values) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < j_values.size(); ++i)
        if (std::isfinite(j_values[i]) && (!best || j_values[i] < j_values[*best])) best = i;
    return best;
}

/**
 * @brief Evaluates J at every candidate with common random numbers.
 *
 * Each candidate is simulated as an N-ensemble of length T using the same
 * replication seeds. Candidates whose simulation diverges or whose moments
 * fail get J = +inf and a recorded reason. Returns the argmin (lowest index
 * on ties).
 */
[[nodiscard]] inline SearchResult evaluate_candidates(std::vector<ParamVector> candidates, std::size_t t_len,
                                                      std::span<const std::uint64_t> seeds,
                                                      const WeightingMatrix& w, const MomentVector& m_emp,
                                                      std::size_t workers = 1,
                                                      BoundaryMode boundary = BoundaryMode::clamp) {
    if (candidates.empty()) throw ParameterDomainError("candidate search needs at least one candidate");
    if (!(m_emp.set == w.set())) throw MatrixDomainError("empirical moments and weighting matrix differ in set");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = candidates.size();
    SearchResult res;
    res.j_values.assign(n, std::numeric_limits<double>::infinity());
    res.moments.assign(n, {});
    res.failures.assign(n, {});
    res.wall_times.assign(n, 0.0);
    std::vector<EnsembleEvaluator> evals;
    for (std::size_t i = 0; i < resolve_workers(workers); ++i) evals.emplace_back(boundary);
    // Every candidate sees the same seeds, so draw the noise once and run
    // candidates in lanes over it.
    const auto bank = NoiseBank::maybe(seeds, t_len, evals.front().burn_in(), workers);
    for (const auto& c : candidates) c.validate();

    auto record = [&](std::size_t i, std::vector<double>& m, std::exception_ptr err) {
        try {
            if (err) std::rethrow_exception(err);
            std::vector<double> g(m.size());
            for (std::size_t j = 0; j < g.size(); ++j) g[j] = m_emp.values[j] - m[j];
            res.j_values[i] = objective_j(g, w);
            res.moments[i] = std::move(m);
        } catch (const DivergenceError& e) {
            res.failures[i] = e.what();
        } catch (const StatisticError& e) {
            res.failures[i] = e.what();
        }
    };

    const std::size_t lanes = bank ? sim_lanes : 1;
    const std::size_t groups = (n + lanes - 1) / lanes;
    parallel_for(groups, workers, [&](std::size_t gi, std::size_t wk) {
        const auto c0 = std::chrono::steady_clock::now();
        const std::size_t first = gi * lanes;
        const std::size_t count = std::min(lanes, n - first);
        if (bank) {
            std::vector<std::vector<double>> m(count);
            std::vector<std::exception_ptr> errs(count);
            evals[wk].evaluate_lanes(std::span<const ParamVector>(candidates).subspan(first, count), t_len, *bank,
                                     w.set(), m, errs);
            for (std::size_t j = 0; j < count; ++j) record(first + j, m[j], errs[j]);
        } else {
            std::vector<double> m(w.size());
            std::exception_ptr err;
            try {
                evals[wk].evaluate(candidates[first], t_len, seeds, w.set(), m);
            } catch (const DivergenceError&) {
                err = std::current_exception();
            } catch (const StatisticError&) {
                err = std::current_exception();
            }
            record(first, m, err);
        }
        const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
        for (std::size_t j = 0; j < count; ++j) res.wall_times[first + j] = dt / static_cast<double>(count);
    });

    const auto best = argmin_finite(res.j_values);
    if (!best) throw NoFeasibleCandidateError("every candidate diverged or failed to produce moments");
    res.best_index = *best;
    MomentVector sim{w.set(), res.moments[*best]};
    res.best = {candidates[*best], res.j_values[*best], distance(m_emp, sim), res.wall_times[*best]};
    res.candidates = std::move(candidates);
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

/// Sobol candidate search over `space` for one MC run of `scenario`.
[[nodiscard]] inline SearchResult candidate_search(const ParameterSpace& space, std::size_t n_candidates,
                                                   const ScenarioConfig& scenario, const WeightingMatrix& w,
                                                   const MomentVector& m_emp, std::uint64_t master_seed,
                                                   std::size_t run = 0, std::size_t workers = 1) {
    if (n_candidates == 0) throw ParameterDomainError("candidate search needs n_candidates >= 1");
    scenario.validate();
    const auto seeds = replication_seeds(SeedPlan(master_seed), SeedDomain::candidate, run, scenario.ensemble);
    return evaluate_candidates(sobol_candidates(space, n_candidates), scenario.t_len, seeds, w, m_emp, workers);
}

/// Two free coordinates of a model, each over [lo, hi]; everything else pinned.
struct SurfaceSpec {
    ParamVector fixed;
    std::size_t free_x = 0;
    std::size_t free_y = 1;
    double x_lo = 0.0, x_hi = 0.0;
    double y_lo = 0.0, y_hi = 0.0;
    std::size_t grid_n = 41;

    void validate() const {
        fixed.check_dimension();
        const std::size_t d = fixed.values.size();
        if (free_x >= d || free_y >= d || free_x == free_y)
            throw ParameterDomainError("surface needs exactly two distinct free coordinates");
        if (grid_n == 0) throw ParameterDomainError("surface grid needs at least one node");
        if (!(x_lo <= x_hi) || !(y_lo <= y_hi)) throw ParameterDomainError("surface range has lower > upper");
    }

    [[nodiscard]] static double node(double lo, double hi, std::size_t i, std::size_t n) noexcept {
        if (n == 1) return 0.5 * (lo + hi);
        return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    /// Parameter vector at grid node (i, j), row-major with i along free_x.
    [[nodiscard]] ParamVector at(std::size_t i, std::size_t j) const {
        ParamVector p = fixed;
        p.values[free_x] = node(x_lo, x_hi, i, grid_n);
        p.values[free_y] = node(y_lo, y_hi, j, grid_n);
        return p;
    }
};

/// J over a grid_n x grid_n grid in row-major order (index i * grid_n + j).
[[nodiscard]] inline SearchResult surface_grid(const SurfaceSpec& spec, std::size_t t_len,
                                               std::span<const std::uint64_t> seeds, const WeightingMatrix& w,
                                               const MomentVector& m_emp, std::size_t workers = 1) {
    spec.validate();
    std::vector<ParamVector> nodes;
    nodes.reserve(spec.grid_n * spec.grid_n);
    for (std::size_t i = 0; i < spec.grid_n; ++i)
        for (std::size_t j = 0; j < spec.grid_n; ++j) nodes.push_back(spec.at(i, j));
    return evaluate_candidates(std::move(nodes), t_len, seeds, w, m_emp, workers);
}

}  // namespace smmergo
