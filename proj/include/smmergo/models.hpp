#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/params.hpp"
#include "smmergo/rng.hpp"

#include <algorithm>
#include <array>
#include <cstddef>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace smmergo {

/// Treatment of sentiment excursions beyond the admissible interval.
enum class BoundaryMode { clamp, reflect };

struct SimConfig {
    static constexpr std::size_t min_length = 101;

    std::size_t t_len = 10'000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 0;
    BoundaryMode boundary = BoundaryMode::clamp;

    void validate() const {
        if (t_len < min_length)
            throw ParameterDomainError("t_len must be at least " + std::to_string(min_length) +
                                       ", got " + std::to_string(t_len));
    }
};

enum class SeriesSource { alw, fw, wiener };

[[nodiscard]] inline std::string_view to_string(SeriesSource s) noexcept {
    switch (s) {
        case SeriesSource::alw: return "alw";
        case SeriesSource::fw: return "fw";
        case SeriesSource::wiener: return "wiener";
    }
    return "?";
}

[[nodiscard]] constexpr SeriesSource source_of(ModelId m) noexcept {
    return m == ModelId::alw ? SeriesSource::alw : SeriesSource::fw;
}

/// One simulated realization after burn-in, tagged with the seed that produced it.
struct ReturnSeries {
    std::vector<double> values;
    std::uint64_t seed = 0;
    SeriesSource source = SeriesSource::alw;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] std::span<const double> view() const noexcept { return values; }
};

/// Observer that ignores every step; the default for the simulation kernels.
/// Both kernels draw two normals per step (burn-in included).
inline constexpr std::size_t normals_per_step = 2;

struct NullObserver {
    constexpr void operator()(std::size_t, double) const noexcept {}
    constexpr void operator()(std::size_t, double, double, double) const noexcept {}
};

namespace detail {

inline constexpr double sentiment_limit = 0.999999;
inline constexpr double fw_price_limit = 1e6;
// |beta * attractiveness| cap: keeps the fundamentalist share strictly inside (0, 1)
inline constexpr double fw_logit_cap = 36.0;

}  // namespace detail

/**
 * @brief ALW kernel: writes cfg.t_len returns into `out`.
 *
 * Per step (unit time), drawing the sentiment shock first and the news shock
 * second:
 *   x' = x - 2 a x + sqrt(2 b (1 - x^2)) eps,  then bounded to |x'| <= 0.999999
 *   r  = sigma_f eta + (x' - x)
 * starting from x = 0. The first cfg.burn_in returns are discarded. The
 * observer receives (step, x') for every step including burn-in.
 */
template <NoiseSource Noise, class Observer = NullObserver>
void simulate_alw_into(const AlwParams& params, const SimConfig& cfg, Noise& noise,
                       std::span<double> out, Observer&& observe = {}) {
    params.validate();
    cfg.validate();
    if (out.size() != cfg.t_len) throw ParameterDomainError("output buffer size != t_len");

    const double two_a = 2.0 * params.a;
    const double two_b = 2.0 * params.b;
    const double lim = detail::sentiment_limit;
    const std::size_t total = cfg.burn_in + cfg.t_len;
    double x = 0.0;
    for (std::size_t t = 0; t < total; ++t) {
        const double eps = noise.normal();
        const double eta = noise.normal();
        double next = x - two_a * x + std::sqrt(two_b * (1.0 - x * x)) * eps;
        if (cfg.boundary == BoundaryMode::reflect) {
            if (next > lim) next = 2.0 * lim - next;
            else if (next < -lim) next = -2.0 * lim - next;
        }
        next = std::clamp(next, -lim, lim);
        const double r = params.sigma_f * eta + (next - x);
        if (t >= cfg.burn_in) out[t - cfg.burn_in] = r;
        observe(t, next);
        x = next;
    }
}

/**
 * @brief FW (DCA-HPM) kernel: writes cfg.t_len returns into `out`.
 *
 * State (p, p_prev, attractiveness) starts at (0, 0, 0). Per step:
 *   n_f = 1 / (1 + exp(-beta a)),  n_c = 1 - n_f
 *   d_f = phi (p* - p) + sigma_f e_f,   d_c = chi (p - p_prev) + sigma_c e_c
 *   p'  = p + mu (n_f d_f + n_c d_c)
 *   a   = alpha_n (n_f - n_c) + alpha_0 + alpha_p (p - p*)^2
 *   r   = p' - p
 * The observer receives (step, n_f, n_c, p').
 *
 * @throws DivergenceError if the price leaves |p| <= 1e6 or becomes non-finite.
 */
template <NoiseSource Noise, class Observer = NullObserver>
void simulate_fw_into(const FwParams& params, const SimConfig& cfg, Noise& noise,
                      std::span<double> out, Observer&& observe = {}) {
    params.validate();
    cfg.validate();
    if (out.size() != cfg.t_len) throw ParameterDomainError("output buffer size != t_len");

    constexpr double beta = FwParams::beta;
    constexpr double mu = FwParams::mu;
    constexpr double p_star = FwParams::p_star;
    const std::size_t total = cfg.burn_in + cfg.t_len;
    double p = 0.0;
    double p_prev = 0.0;
    double attract = 0.0;
    for (std::size_t t = 0; t < total; ++t) {
        const double logit = std::clamp(beta * attract, -detail::fw_logit_cap, detail::fw_logit_cap);
        const double n_f = 1.0 / (1.0 + std::exp(-logit));
        const double n_c = 1.0 - n_f;
        const double e_f = params.sigma_f * noise.normal();
        const double e_c = params.sigma_c * noise.normal();
        const double d_f = params.phi * (p_star - p) + e_f;
        const double d_c = params.chi * (p - p_prev) + e_c;
        const double next = p + mu * (n_f * d_f + n_c * d_c);
        if (!std::isfinite(next) || std::fabs(next) > detail::fw_price_limit)
            throw DivergenceError(t, "FW price diverged");
        const double dev = p - p_star;
        attract = params.alpha_n * (n_f - n_c) + params.alpha_0 + params.alpha_p * dev * dev;
        if (t >= cfg.burn_in) out[t - cfg.burn_in] = next - p;
        observe(t, n_f, n_c, next);
        p_prev = p;
        p = next;
    }
}

[[nodiscard]] inline ReturnSeries simulate_alw(const AlwParams& params, const SimConfig& cfg) {
    cfg.validate();
    ReturnSeries s{std::vector<double>(cfg.t_len), cfg.seed, SeriesSource::alw};
    GaussianStream noise(cfg.seed);
    simulate_alw_into(params, cfg, noise, std::span<double>(s.values));
    return s;
}

[[nodiscard]] inline ReturnSeries simulate_fw(const FwParams& params, const SimConfig& cfg) {
    cfg.validate();
    ReturnSeries s{std::vector<double>(cfg.t_len), cfg.seed, SeriesSource::fw};
    GaussianStream noise(cfg.seed);
    simulate_fw_into(params, cfg, noise, std::span<double>(s.values));
    return s;
}

/// Number of parameter vectors simulated together by the lane kernels.
inline constexpr std::size_t sim_lanes = 4;

/**
 * @brief Runs up to sim_lanes parameter vectors of one model over one shared
 * noise path (two draws per step, as the single kernels consume them).
 *
 * Each lane performs exactly the operations of simulate_alw_into or
 * simulate_fw_into, so lane j of the output equals a single-lane run with the
 * same draws bit for bit. Interleaving independent lanes hides the latency of
 * the per-step sqrt/exp chains. A diverging FW lane stops writing and its
 * step is reported in `diverged_at` (entries of healthy lanes stay empty).
 */
inline void simulate_lanes(std::span<const ParamVector> thetas, const SimConfig& cfg,
                           std::span<const double> draws, std::span<const std::span<double>> out,
                           std::span<std::optional<std::size_t>> diverged_at) {
    constexpr std::size_t L = sim_lanes;
    const std::size_t active = thetas.size();
    if (active == 0 || active > L) throw ParameterDomainError("lane kernel needs 1 to 4 parameter vectors");
    if (out.size() != active || diverged_at.size() != active)
        throw ParameterDomainError("lane kernel output count mismatch");
    cfg.validate();
    const std::size_t total = cfg.burn_in + cfg.t_len;
    if (draws.size() < total * normals_per_step) throw ParameterDomainError("noise path shorter than the run");
    const ModelId model = thetas.front().model;
    for (std::size_t j = 0; j < active; ++j) {
        if (thetas[j].model != model) throw ParameterDomainError("lane kernel needs a single model");
        thetas[j].validate();
        if (out[j].size() != cfg.t_len) throw ParameterDomainError("output buffer size != t_len");
        diverged_at[j].reset();
    }
    // Unused lanes repeat lane 0 and write nowhere.
    auto lane = [&](std::size_t j) -> const ParamVector& { return thetas[j < active ? j : 0]; };
    std::array<double*, L> dst{};
    for (std::size_t j = 0; j < active; ++j) dst[j] = out[j].data();

    if (model == ModelId::alw) {
        double two_a[L], two_b[L], sigma_f[L], x[L];
        for (std::size_t j = 0; j < L; ++j) {
            const AlwParams p = lane(j).alw();
            two_a[j] = 2.0 * p.a;
            two_b[j] = 2.0 * p.b;
            sigma_f[j] = p.sigma_f;
            x[j] = 0.0;
        }
        const double lim = detail::sentiment_limit;
        const bool reflect = cfg.boundary == BoundaryMode::reflect;
        for (std::size_t t = 0; t < total; ++t) {
            const double eps = draws[normals_per_step * t];
            const double eta = draws[normals_per_step * t + 1];
            double r[L];
            for (std::size_t j = 0; j < L; ++j) {
                double next = x[j] - two_a[j] * x[j] + std::sqrt(two_b[j] * (1.0 - x[j] * x[j])) * eps;
                if (reflect) {
                    if (next > lim) next = 2.0 * lim - next;
                    else if (next < -lim) next = -2.0 * lim - next;
                }
                next = std::clamp(next, -lim, lim);
                r[j] = sigma_f[j] * eta + (next - x[j]);
                x[j] = next;
            }
            if (t >= cfg.burn_in)
                for (std::size_t j = 0; j < active; ++j) dst[j][t - cfg.burn_in] = r[j];
        }
        return;
    }

    constexpr double beta = FwParams::beta;
    constexpr double mu = FwParams::mu;
    constexpr double p_star = FwParams::p_star;
    double phi[L], chi[L], sigma_f[L], sigma_c[L], alpha_n[L], alpha_0[L], alpha_p[L];
    double p[L], p_prev[L], attract[L];
    bool alive[L];
    for (std::size_t j = 0; j < L; ++j) {
        const FwParams q = lane(j).fw();
        phi[j] = q.phi;
        chi[j] = q.chi;
        sigma_f[j] = q.sigma_f;
        sigma_c[j] = q.sigma_c;
        alpha_n[j] = q.alpha_n;
        alpha_0[j] = q.alpha_0;
        alpha_p[j] = q.alpha_p;
        p[j] = p_prev[j] = attract[j] = 0.0;
        alive[j] = j < active;
    }
    std::size_t live = active;
    for (std::size_t t = 0; t < total && live > 0; ++t) {
        const double z_f = draws[normals_per_step * t];
        const double z_c = draws[normals_per_step * t + 1];
        double r[L];
        for (std::size_t j = 0; j < L; ++j) {
            const double logit = std::clamp(beta * attract[j], -detail::fw_logit_cap, detail::fw_logit_cap);
            const double n_f = 1.0 / (1.0 + std::exp(-logit));
            const double n_c = 1.0 - n_f;
            const double e_f = sigma_f[j] * z_f;
            const double e_c = sigma_c[j] * z_c;
            const double d_f = phi[j] * (p_star - p[j]) + e_f;
            const double d_c = chi[j] * (p[j] - p_prev[j]) + e_c;
            const double next = p[j] + mu * (n_f * d_f + n_c * d_c);
            const double dev = p[j] - p_star;
            attract[j] = alpha_n[j] * (n_f - n_c) + alpha_0[j] + alpha_p[j] * dev * dev;
            r[j] = next - p[j];
            p_prev[j] = p[j];
            p[j] = next;
        }
        for (std::size_t j = 0; j < active; ++j) {
            if (!alive[j]) continue;
            if (!std::isfinite(p[j]) || std::fabs(p[j]) > detail::fw_price_limit) {
                diverged_at[j] = t;
                alive[j] = false;
                --live;
                continue;
            }
            if (t >= cfg.burn_in) dst[j][t - cfg.burn_in] = r[j];
        }
        // Park dead lanes at the fixed point so they stay finite.
        for (std::size_t j = 0; j < L; ++j)
            if (j < active && !alive[j]) p[j] = p_prev[j] = attract[j] = 0.0;
    }
}

/// Dispatches on the model of `theta` and fills `out` (size cfg.t_len).
template <NoiseSource Noise>
void simulate_into(const ParamVector& theta, const SimConfig& cfg, Noise& noise,
                   std::span<double> out) {
    if (theta.model == ModelId::alw)
        simulate_alw_into(theta.alw(), cfg, noise, out);
    else
        simulate_fw_into(theta.fw(), cfg, noise, out);
}

[[nodiscard]] inline ReturnSeries simulate(const ParamVector& theta, const SimConfig& cfg) {
    if (theta.model == ModelId::alw) return simulate_alw(theta.alw(), cfg);
    return simulate_fw(theta.fw(), cfg);
}

/// Unit-step Wiener path W_0 = 0, W_{t+1} = W_t + eps_t, of t_len points.
template <NoiseSource Noise>
void simulate_wiener_into(Noise& noise, std::span<double> out) {
    if (out.size() < 2) throw ParameterDomainError("Wiener path needs t_len >= 2");
    double w = 0.0;
    out[0] = w;
    for (std::size_t t = 1; t < out.size(); ++t) {
        w += noise.normal();
        out[t] = w;
    }
}

[[nodiscard]] inline ReturnSeries simulate_wiener(std::size_t t_len, std::uint64_t seed) {
    if (t_len < 2) throw ParameterDomainError("Wiener path needs t_len >= 2");
    ReturnSeries s{std::vector<double>(t_len), seed, SeriesSource::wiener};
    GaussianStream noise(seed);
    simulate_wiener_into(noise, std::span<double>(s.values));
    return s;
}

}  // namespace smmergo
