#pragma once

#include "smmergo/errors.hpp"
#include "smmergo/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smmergo {

/// The eighteen registered moment functions, numbered as in the canonical table.
enum class MomentId : int {
    m1 = 1, m2, m3, m4, m5, m6, m7, m8, m9, m10, m11, m12, m13, m14, m15, m16, m17, m18
};

inline constexpr std::size_t moment_count = 18;

enum class Transform { raw, abs, square };

enum class MomentKind { abs_mean, second_moment, kurtosis, hill, autocorr };

struct MomentSpec {
    MomentId id;
    std::string_view label;
    std::string_view description;
    MomentKind kind;
    double tail = 0.0;       ///< Hill tail fraction
    std::size_t lag = 0;     ///< autocorrelation lag
    Transform transform = Transform::raw;
};

// clang-format off
inline constexpr std::array<MomentSpec, moment_count> moment_registry{{
    {MomentId::m1,  "m1",  "mean absolute return E|r|",               MomentKind::abs_mean},
    {MomentId::m2,  "m2",  "second moment E r^2",                     MomentKind::second_moment},
    {MomentId::m3,  "m3",  "excess kurtosis of standardized returns", MomentKind::kurtosis},
    {MomentId::m4,  "m4",  "Hill tail index, top 2.5%",               MomentKind::hill, 0.025},
    {MomentId::m5,  "m5",  "Hill tail index, top 5%",                 MomentKind::hill, 0.05},
    {MomentId::m6,  "m6",  "autocorrelation raw returns lag 1",       MomentKind::autocorr, 0.0, 1,   Transform::raw},
    {MomentId::m7,  "m7",  "autocorrelation |r| lag 1",               MomentKind::autocorr, 0.0, 1,   Transform::abs},
    {MomentId::m8,  "m8",  "autocorrelation r^2 lag 1",               MomentKind::autocorr, 0.0, 1,   Transform::square},
    {MomentId::m9,  "m9",  "autocorrelation |r| lag 5",               MomentKind::autocorr, 0.0, 5,   Transform::abs},
    {MomentId::m10, "m10", "autocorrelation r^2 lag 5",               MomentKind::autocorr, 0.0, 5,   Transform::square},
    {MomentId::m11, "m11", "autocorrelation |r| lag 10",              MomentKind::autocorr, 0.0, 10,  Transform::abs},
    {MomentId::m12, "m12", "autocorrelation r^2 lag 10",              MomentKind::autocorr, 0.0, 10,  Transform::square},
    {MomentId::m13, "m13", "autocorrelation |r| lag 25",              MomentKind::autocorr, 0.0, 25,  Transform::abs},
    {MomentId::m14, "m14", "autocorrelation r^2 lag 25",              MomentKind::autocorr, 0.0, 25,  Transform::square},
    {MomentId::m15, "m15", "autocorrelation |r| lag 50",              MomentKind::autocorr, 0.0, 50,  Transform::abs},
    {MomentId::m16, "m16", "autocorrelation r^2 lag 50",              MomentKind::autocorr, 0.0, 50,  Transform::square},
    {MomentId::m17, "m17", "autocorrelation |r| lag 100",             MomentKind::autocorr, 0.0, 100, Transform::abs},
    {MomentId::m18, "m18", "autocorrelation r^2 lag 100",             MomentKind::autocorr, 0.0, 100, Transform::square},
}};
// clang-format on

[[nodiscard]] constexpr int index_of(MomentId id) noexcept { return static_cast<int>(id); }

[[nodiscard]] inline const MomentSpec& spec_of(MomentId id) {
    const int i = index_of(id);
    if (i < 1 || i > static_cast<int>(moment_count))
        throw ParameterDomainError("moment index out of range: " + std::to_string(i));
    return moment_registry[static_cast<std::size_t>(i - 1)];
}

[[nodiscard]] inline std::string_view label_of(MomentId id) { return spec_of(id).label; }

[[nodiscard]] inline MomentId moment_from_index(int index) {
    if (index < 1 || index > static_cast<int>(moment_count))
        throw ParameterDomainError("moment index out of range: " + std::to_string(index));
    return static_cast<MomentId>(index);
}

[[nodiscard]] inline MomentId parse_moment(std::string_view label) {
    for (const auto& s : moment_registry)
        if (s.label == label) return s.id;
    throw ParameterDomainError("unknown moment '" + std::string(label) + "'");
}

/// A moment statistic failed; carries the offending id and, for ensembles, the series index.
class MomentError : public StatisticError {
public:
    MomentError(MomentId id, std::optional<std::size_t> series, const std::string& what)
        : StatisticError(std::string(label_of(id)) +
                         (series ? " (series " + std::to_string(*series) + ")" : std::string{}) +
                         ": " + what),
          id_(id),
          series_(series) {}

    [[nodiscard]] MomentId id() const noexcept { return id_; }
    [[nodiscard]] std::optional<std::size_t> series() const noexcept { return series_; }

private:
    MomentId id_;
    std::optional<std::size_t> series_;
};

/// Non-empty, duplicate-free subset of the registry, kept in index order.
class MomentSet {
public:
    MomentSet() : MomentSet(all()) {}

    explicit MomentSet(std::vector<MomentId> ids) : ids_(std::move(ids)) {
        if (ids_.empty()) throw ParameterDomainError("moment set must not be empty");
        for (MomentId id : ids_) (void)spec_of(id);
        std::sort(ids_.begin(), ids_.end());
        if (std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
            throw ParameterDomainError("moment set contains duplicates");
    }

    [[nodiscard]] static MomentSet all() {
        std::vector<MomentId> ids;
        for (const auto& s : moment_registry) ids.push_back(s.id);
        return MomentSet(std::move(ids));
    }

    [[nodiscard]] static MomentSet excluding(MomentId excluded) {
        std::vector<MomentId> ids;
        for (const auto& s : moment_registry)
            if (s.id != excluded) ids.push_back(s.id);
        return MomentSet(std::move(ids));
    }

    /// Parses "m1,m2,m7" (labels) or "1,2,7" (indices).
    [[nodiscard]] static MomentSet parse(std::string_view list) {
        std::vector<MomentId> ids;
        std::size_t pos = 0;
        while (pos <= list.size()) {
            std::size_t end = list.find(',', pos);
            if (end == std::string_view::npos) end = list.size();
            std::string_view tok = list.substr(pos, end - pos);
            while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
            while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
            if (!tok.empty()) {
                if (tok.front() == 'm')
                    ids.push_back(parse_moment(tok));
                else
                    ids.push_back(moment_from_index(std::stoi(std::string(tok))));
            }
            pos = end + 1;
        }
        return MomentSet(std::move(ids));
    }

    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] std::span<const MomentId> ids() const noexcept { return ids_; }
    [[nodiscard]] MomentId operator[](std::size_t i) const { return ids_.at(i); }

    [[nodiscard]] bool contains(MomentId id) const noexcept {
        return std::binary_search(ids_.begin(), ids_.end(), id);
    }

    [[nodiscard]] std::optional<std::size_t> position(MomentId id) const noexcept {
        auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
        if (it == ids_.end() || *it != id) return std::nullopt;
        return static_cast<std::size_t>(it - ids_.begin());
    }

    /// Order condition: at least as many moments as estimated parameters.
    void require_order_condition(std::size_t n_params) const {
        if (ids_.size() < n_params)
            throw ParameterDomainError("moment set of size " + std::to_string(ids_.size()) +
                                       " violates the order condition for " +
                                       std::to_string(n_params) + " parameters");
    }

    [[nodiscard]] std::string to_string() const {
        std::string out;
        for (MomentId id : ids_) {
            if (!out.empty()) out += ',';
            out += label_of(id);
        }
        return out;
    }

    friend bool operator==(const MomentSet&, const MomentSet&) = default;

private:
    std::vector<MomentId> ids_;
};

struct MomentVector {
    MomentSet set;
    std::vector<double> values;

    [[nodiscard]] double operator[](MomentId id) const {
        auto pos = set.position(id);
        if (!pos) throw ParameterDomainError(std::string(label_of(id)) + " not in moment vector");
        return values[*pos];
    }
};

namespace detail {

// Eight-lane reductions: lane j accumulates elements i = j (mod 8) in order,
// the tail goes to lane 0, and lanes combine as a fixed pairwise tree. Every
// statistic routes through these so that shared-precomputation and standalone
// paths are bit-identical.
inline constexpr std::size_t lanes = 8;

[[nodiscard]] inline double combine_lanes(const double* s) noexcept {
    return ((s[0] + s[1]) + (s[2] + s[3])) + ((s[4] + s[5]) + (s[6] + s[7]));
}

template <class F>
[[nodiscard]] inline double sum_map(std::span<const double> x, F&& f) noexcept {
    double s[lanes] = {};
    const std::size_t n = x.size();
    std::size_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::size_t j = 0; j < lanes; ++j) s[j] += f(x[i + j]);
    for (; i < n; ++i) s[0] += f(x[i]);
    return combine_lanes(s);
}

[[nodiscard]] inline double dot(const double* a, const double* b, std::size_t n) noexcept {
    double s[lanes] = {};
    std::size_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::size_t j = 0; j < lanes; ++j) s[j] += a[i + j] * b[i + j];
    for (; i < n; ++i) s[0] += a[i] * b[i];
    return combine_lanes(s);
}

[[nodiscard]] inline double apply(Transform t, double v) noexcept {
    switch (t) {
        case Transform::abs: return std::fabs(v);
        case Transform::square: return v * v;
        case Transform::raw: break;
    }
    return v;
}

/// Sum of the transformed series.
[[nodiscard]] inline double transformed_sum(std::span<const double> r, Transform t) noexcept {
    switch (t) {
        case Transform::abs: return sum_map(r, [](double v) { return std::fabs(v); });
        case Transform::square: return sum_map(r, [](double v) { return v * v; });
        case Transform::raw: break;
    }
    return sum_map(r, [](double v) { return v; });
}

/// Writes transform(r) - mean into `out` (resized).
inline void center_into(std::span<const double> r, Transform t, double mean,
                        std::vector<double>& out) {
    out.resize(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) out[i] = apply(t, r[i]) - mean;
}

/// Sum over t >= lag of c_t c_{t-lag}.
[[nodiscard]] inline double lag_product(std::span<const double> c, std::size_t lag) noexcept {
    if (lag >= c.size()) return 0.0;
    return dot(c.data() + lag, c.data(), c.size() - lag);
}

/**
 * lag_product for several lags in one cache-tiled sweep. Each lag keeps the
 * lane assignment and per-lane order of dot(), so every output equals
 * lag_product(c, lag) bit for bit.
 */
inline void lag_products(std::span<const double> c, std::span<const std::size_t> lags, std::span<double> out) {
    constexpr std::size_t tile = 2048;  // multiple of lanes
    const std::size_t n = c.size();
    const double* x = c.data();
    const std::size_t nl = lags.size();
    std::vector<std::array<double, lanes>> acc(nl, std::array<double, lanes>{});
    for (std::size_t b = 0; b < n; b += tile) {
        for (std::size_t k = 0; k < nl; ++k) {
            const std::size_t lag = lags[k];
            if (lag >= n) continue;
            const std::size_t len = n - lag;
            const std::size_t end = std::min(b + tile, len - len % lanes);
            double s[lanes];
            for (std::size_t j = 0; j < lanes; ++j) s[j] = acc[k][j];
            const double* a = x + lag;
            for (std::size_t i = b; i < end; i += lanes)
                for (std::size_t j = 0; j < lanes; ++j) s[j] += a[i + j] * x[i + j];
            for (std::size_t j = 0; j < lanes; ++j) acc[k][j] = s[j];
        }
    }
    for (std::size_t k = 0; k < nl; ++k) {
        const std::size_t lag = lags[k];
        if (lag >= n) {
            out[k] = 0.0;
            continue;
        }
        const std::size_t len = n - lag;
        for (std::size_t i = len - len % lanes; i < len; ++i) acc[k][0] += x[i + lag] * x[i];
        out[k] = combine_lanes(acc[k].data());
    }
}

/// Copies the strictly positive |r| into `out`.
inline void collect_positive_abs(std::span<const double> r, std::vector<double>& out) {
    out.clear();
    out.reserve(r.size());
    for (double v : r) {
        const double a = std::fabs(v);
        if (a > 0.0) out.push_back(a);
    }
}

/**
 * Collects a superset of the `count` largest positive |r| into `out` and
 * returns the number of positive observations. A threshold estimated from a
 * strided sample discards most of the bulk; if it turns out too high, every
 * positive value is kept instead, so the selected top block never changes.
 */
inline std::size_t collect_tail_candidates(std::span<const double> r, std::size_t count, std::vector<double>& out) {
    const std::size_t n = r.size();
    double threshold = 0.0;
    if (n >= 8192 && count * 8 < n) {
        const std::size_t stride = n / 2048;
        std::vector<double> sample;
        sample.reserve(n / stride + 1);
        for (std::size_t i = 0; i < n; i += stride) sample.push_back(std::fabs(r[i]));
        // Keep roughly twice the needed fraction, plus slack for small counts.
        const double frac = 2.0 * static_cast<double>(count) / static_cast<double>(n) + 0.01;
        const auto keep = static_cast<std::size_t>(frac * static_cast<double>(sample.size()));
        if (keep < sample.size()) {
            auto it = sample.end() - static_cast<std::ptrdiff_t>(keep) - 1;
            std::nth_element(sample.begin(), it, sample.end());
            threshold = *it;
        }
    }
    out.resize(n);
    std::size_t positive = 0, kept = 0;
    for (double v : r) {
        const double a = std::fabs(v);
        positive += a > 0.0;
        out[kept] = a;
        kept += (a > 0.0) & (a >= threshold);
    }
    out.resize(kept);
    if (kept < count && threshold > 0.0) collect_positive_abs(r, out);
    return positive;
}

[[nodiscard]] inline std::size_t tail_count(double q, std::size_t n) noexcept {
    return static_cast<std::size_t>(std::floor(q * static_cast<double>(n) * (1.0 + 1e-12)));
}

[[nodiscard]] inline std::size_t tail_required(double q, std::size_t n) noexcept {
    return static_cast<std::size_t>(std::ceil(q * static_cast<double>(n) * (1.0 - 1e-12))) + 1;
}

/// Moves the `count` largest values of `buf` to its front in descending order.
inline void select_top_descending(std::vector<double>& buf, std::size_t count) {
    count = std::min(count, buf.size());
    auto mid = buf.begin() + static_cast<std::ptrdiff_t>(count);
    if (mid != buf.end()) std::nth_element(buf.begin(), mid - 1, buf.end(), std::greater<>{});
    std::sort(buf.begin(), mid, std::greater<>{});
}

/**
 * The (k+1)-th largest value of `cand`, i.e. the Hill threshold x(k+1).
 * `scratch` receives a partially ordered copy.
 */
[[nodiscard]] inline double order_threshold(std::span<const double> cand, std::size_t k,
                                            std::vector<double>& scratch) {
    scratch.assign(cand.begin(), cand.end());
    std::nth_element(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end(),
                     std::greater<>{});
    return scratch[k];
}

/**
 * Hill estimate k / sum(log x - log x(k+1)) over the values above the
 * threshold, summed in the order they appear in `cand`. Values tied with the
 * threshold add exactly zero, so this equals the sum over the top k.
 */
[[nodiscard]] inline double hill_above(std::span<const double> cand, double threshold, std::size_t k) {
    const double log_threshold = std::log(threshold);
    double s = 0.0;
    for (double x : cand)
        if (x > threshold) s += std::log(x) - log_threshold;
    if (!(s > 0.0)) throw DegenerateTailError("top order statistics are all equal to the threshold");
    return static_cast<double>(k) / s;
}

/// Hill estimate from a descending prefix x(1) >= ... >= x(k+1).
[[nodiscard]] inline double hill_from_sorted(std::span<const double> desc, std::size_t k) {
    const double log_threshold = std::log(desc[k]);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += std::log(desc[i]) - log_threshold;
    if (!(s > 0.0)) throw DegenerateTailError("top order statistics are all equal to the threshold");
    return static_cast<double>(k) / s;
}

/// Central second and fourth moment ratio, pre-scaled: returns m4 / m2^2.
[[nodiscard]] inline double standardized_fourth(std::span<const double> r) {
    const double n = static_cast<double>(r.size());
    const double mean = sum_map(r, [](double v) { return v; }) / n;
    const double m2 = sum_map(r, [mean](double v) { return (v - mean) * (v - mean); }) / n;
    if (!(m2 > 0.0)) throw ZeroVarianceError("series has zero variance");
    const double m4 = sum_map(r, [mean](double v) {
                          const double d = (v - mean) * (v - mean);
                          return d * d;
                      }) / n;
    return m4 / (m2 * m2);
}

inline void require_non_empty(std::span<const double> r) {
    if (r.empty()) throw StatisticError("series is empty");
}

}  // namespace detail

/// m1: (1/T) sum |r_t|.
[[nodiscard]] inline double abs_mean(std::span<const double> r) {
    detail::require_non_empty(r);
    return detail::transformed_sum(r, Transform::abs) / static_cast<double>(r.size());
}

/// (1/T) sum r_t^k for k in {2, 4}; m2 is k = 2.
[[nodiscard]] inline double raw_moment(std::span<const double> r, int k) {
    detail::require_non_empty(r);
    if (k == 2) return detail::transformed_sum(r, Transform::square) / static_cast<double>(r.size());
    if (k == 4)
        return detail::sum_map(r, [](double v) { return (v * v) * (v * v); }) /
               static_cast<double>(r.size());
    throw ParameterDomainError("raw_moment supports orders 2 and 4");
}

/// m3: mean(z^4) - 3 with z the per-series standardized returns (population std).
[[nodiscard]] inline double excess_kurtosis(std::span<const double> r) {
    detail::require_non_empty(r);
    return detail::standardized_fourth(r) - 3.0;
}

/// Hill tail index over the k largest |r| (zeros excluded), threshold x(k+1).
[[nodiscard]] inline double hill_tail_k(std::span<const double> r, std::size_t k) {
    if (k == 0) throw InsufficientTailError("Hill estimator needs k >= 1");
    std::vector<double> buf;
    const std::size_t positive = detail::collect_tail_candidates(r, k + 1, buf);
    if (positive < k + 1)
        throw InsufficientTailError("Hill estimator needs " + std::to_string(k + 1) +
                                    " positive observations, got " + std::to_string(positive));
    std::vector<double> scratch;
    return detail::hill_above(buf, detail::order_threshold(buf, k, scratch), k);
}

/// m4/m5: Hill tail index with k = floor(q T).
[[nodiscard]] inline double hill_tail(std::span<const double> r, double q) {
    if (!(q > 0.0 && q < 1.0)) throw ParameterDomainError("tail fraction must lie in (0, 1)");
    const std::size_t k = detail::tail_count(q, r.size());
    if (k == 0) throw InsufficientTailError("series too short for tail fraction");
    std::vector<double> buf;
    const std::size_t positive = detail::collect_tail_candidates(r, k + 1, buf);
    const std::size_t need = detail::tail_required(q, r.size());
    if (positive < need)
        throw InsufficientTailError("Hill estimator needs " + std::to_string(need) +
                                    " positive observations, got " + std::to_string(positive));
    std::vector<double> scratch;
    return detail::hill_above(buf, detail::order_threshold(buf, k, scratch), k);
}

/// m6-m18: lag-tau sample autocorrelation of transform(r), centered on the
/// full-sample mean and normalized by the full-sample sum of squares.
[[nodiscard]] inline double autocorr(std::span<const double> r, std::size_t lag, Transform t) {
    detail::require_non_empty(r);
    if (lag >= r.size()) throw StatisticError("lag must be smaller than the series length");
    const double mean = detail::transformed_sum(r, t) / static_cast<double>(r.size());
    std::vector<double> c;
    detail::center_into(r, t, mean, c);
    const double denom = detail::lag_product(c, 0);
    if (!(denom > 0.0)) throw ZeroVarianceError("transformed series is constant");
    return detail::lag_product(c, lag) / denom;
}

/**
 * @brief Reusable workspace computing a moment vector in one sweep.
 *
 * |r|, r^2 and the sorted tail are computed once and shared across members.
 * Results are bit-identical to calling the standalone statistics one by one.
 * Not thread-safe; give each worker its own instance.
 */
class MomentCalculator {
public:
    void compute(std::span<const double> r, const MomentSet& set, std::span<double> out) {
        if (out.size() != set.size()) throw ParameterDomainError("output size != moment set size");
        bool have_tail = false;
        std::array<bool, 3> centered{false, false, false};
        std::array<double, 3> denom{0.0, 0.0, 0.0};

        for (std::size_t j = 0; j < set.size(); ++j) {
            const MomentSpec& s = spec_of(set[j]);
            try {
                switch (s.kind) {
                    case MomentKind::abs_mean: out[j] = abs_mean(r); break;
                    case MomentKind::second_moment: out[j] = raw_moment(r, 2); break;
                    case MomentKind::kurtosis: out[j] = excess_kurtosis(r); break;
                    case MomentKind::hill: {
                        if (!have_tail) {
                            prepare_tail(r, set);
                            have_tail = true;
                        }
                        const std::size_t k = detail::tail_count(s.tail, r.size());
                        if (k == 0) throw InsufficientTailError("series too short for tail fraction");
                        const std::size_t need = detail::tail_required(s.tail, r.size());
                        if (positive_count_ < need)
                            throw InsufficientTailError(
                                "Hill estimator needs " + std::to_string(need) +
                                " positive observations, got " + std::to_string(positive_count_));
                        std::nth_element(top_.begin(), top_.begin() + static_cast<std::ptrdiff_t>(k),
                                         top_.end(), std::greater<>{});
                        out[j] = detail::hill_above(tail_, top_[k], k);
                        break;
                    }
                    case MomentKind::autocorr: {
                        detail::require_non_empty(r);
                        if (s.lag >= r.size())
                            throw StatisticError("lag must be smaller than the series length");
                        const auto ti = static_cast<std::size_t>(s.transform);
                        auto& buf = centered_[ti];
                        if (!centered[ti]) {
                            const double mean = detail::transformed_sum(r, s.transform) /
                                                static_cast<double>(r.size());
                            detail::center_into(r, s.transform, mean, buf);
                            auto& lags = lags_[ti];
                            lags.assign(1, 0);
                            for (MomentId id : set.ids()) {
                                const MomentSpec& o = spec_of(id);
                                if (o.kind == MomentKind::autocorr && o.transform == s.transform)
                                    lags.push_back(o.lag);
                            }
                            products_[ti].resize(lags.size());
                            detail::lag_products(buf, lags, products_[ti]);
                            denom[ti] = products_[ti][0];
                            centered[ti] = true;
                        }
                        if (!(denom[ti] > 0.0))
                            throw ZeroVarianceError("transformed series is constant");
                        const auto& lags = lags_[ti];
                        const auto pos = static_cast<std::size_t>(
                            std::find(lags.begin() + 1, lags.end(), s.lag) - lags.begin());
                        out[j] = products_[ti][pos] / denom[ti];
                        break;
                    }
                }
            } catch (const MomentError&) {
                throw;
            } catch (const std::exception& e) {
                throw MomentError(s.id, std::nullopt, e.what());
            }
        }
    }

    [[nodiscard]] std::vector<double> compute(std::span<const double> r, const MomentSet& set) {
        std::vector<double> out(set.size());
        compute(r, set, out);
        return out;
    }

private:
    void prepare_tail(std::span<const double> r, const MomentSet& set) {
        std::size_t kmax = 0;
        for (MomentId id : set.ids()) {
            const MomentSpec& s = spec_of(id);
            if (s.kind == MomentKind::hill) kmax = std::max(kmax, detail::tail_count(s.tail, r.size()));
        }
        positive_count_ = detail::collect_tail_candidates(r, kmax + 1, tail_);
        // top_ holds the kmax + 1 largest values; smaller thresholds are found inside it.
        if (tail_.size() > kmax) {
            (void)detail::order_threshold(tail_, kmax, top_);
            top_.resize(kmax + 1);
        } else {
            top_.clear();
        }
    }

    std::array<std::vector<double>, 3> centered_;
    std::array<std::vector<std::size_t>, 3> lags_;
    std::array<std::vector<double>, 3> products_;
    std::vector<double> tail_;
    std::vector<double> top_;
    std::size_t positive_count_ = 0;
};

/// Time average over one realization: every member of `set`, in index order.
[[nodiscard]] inline MomentVector moment_vector(std::span<const double> r, const MomentSet& set) {
    MomentCalculator calc;
    return {set, calc.compute(r, set)};
}

namespace detail {

inline void require_equal_lengths(std::span<const std::span<const double>> ensemble) {
    if (ensemble.empty()) throw ParameterDomainError("ensemble must contain at least one series");
    for (const auto& s : ensemble)
        if (s.size() != ensemble.front().size())
            throw ParameterDomainError("all series of an ensemble must have equal length");
}

[[nodiscard]] inline std::vector<std::span<const double>> views_of(
    std::span<const ReturnSeries> ensemble) {
    std::vector<std::span<const double>> views;
    views.reserve(ensemble.size());
    for (const auto& s : ensemble) views.emplace_back(s.values);
    return views;
}

}  // namespace detail

/// Ensemble of time averages: per-series moment vectors, then their entrywise mean.
[[nodiscard]] inline MomentVector ensemble_moment_vector(
    std::span<const std::span<const double>> ensemble, const MomentSet& set) {
    detail::require_equal_lengths(ensemble);
    MomentCalculator calc;
    std::vector<double> acc(set.size(), 0.0);
    std::vector<double> one(set.size());
    for (std::size_t n = 0; n < ensemble.size(); ++n) {
        try {
            calc.compute(ensemble[n], set, one);
        } catch (const MomentError& e) {
            throw MomentError(e.id(), n, e.what());
        }
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += one[j];
    }
    for (double& v : acc) v /= static_cast<double>(ensemble.size());
    return {set, std::move(acc)};
}

[[nodiscard]] inline MomentVector ensemble_moment_vector(std::span<const ReturnSeries> ensemble,
                                                         const MomentSet& set) {
    const auto views = detail::views_of(ensemble);
    return ensemble_moment_vector(std::span<const std::span<const double>>(views), set);
}

/**
 * @brief Pooled sample: all N T observations treated as one sample.
 *
 * Means, variances and tails pool across series; lagged autocorrelation
 * products restart at every series boundary. Kurtosis pools the per-series
 * standardized observations.
 */
[[nodiscard]] inline MomentVector pooled_moment_vector(
    std::span<const std::span<const double>> ensemble, const MomentSet& set) {
    detail::require_equal_lengths(ensemble);
    const double total = static_cast<double>(ensemble.size() * ensemble.front().size());
    std::vector<double> out(set.size());
    std::vector<double> pooled_tail;
    bool tail_ready = false;
    std::vector<double> c;

    for (std::size_t j = 0; j < set.size(); ++j) {
        const MomentSpec& s = spec_of(set[j]);
        try {
            switch (s.kind) {
                case MomentKind::abs_mean:
                case MomentKind::second_moment: {
                    const Transform t = s.kind == MomentKind::abs_mean ? Transform::abs : Transform::square;
                    double sum = 0.0;
                    for (const auto& r : ensemble) sum += detail::transformed_sum(r, t);
                    out[j] = sum / total;
                    break;
                }
                case MomentKind::kurtosis: {
                    double sum = 0.0;
                    for (const auto& r : ensemble)
                        sum += detail::standardized_fourth(r) * static_cast<double>(r.size());
                    out[j] = sum / total - 3.0;
                    break;
                }
                case MomentKind::hill: {
                    if (!tail_ready) {
                        pooled_tail.clear();
                        std::vector<double> part;
                        for (const auto& r : ensemble) {
                            detail::collect_positive_abs(r, part);
                            pooled_tail.insert(pooled_tail.end(), part.begin(), part.end());
                        }
                        tail_ready = true;
                    }
                    const auto n = static_cast<std::size_t>(total);
                    const std::size_t k = detail::tail_count(s.tail, n);
                    if (k == 0 || pooled_tail.size() < detail::tail_required(s.tail, n))
                        throw InsufficientTailError("too few positive observations in pooled sample");
                    std::vector<double> scratch;
                    out[j] = detail::hill_above(pooled_tail, detail::order_threshold(pooled_tail, k, scratch), k);
                    break;
                }
                case MomentKind::autocorr: {
                    if (s.lag >= ensemble.front().size())
                        throw StatisticError("lag must be smaller than the series length");
                    double sum = 0.0;
                    for (const auto& r : ensemble) sum += detail::transformed_sum(r, s.transform);
                    const double mean = sum / total;
                    double num = 0.0;
                    double den = 0.0;
                    for (const auto& r : ensemble) {
                        detail::center_into(r, s.transform, mean, c);
                        num += detail::lag_product(c, s.lag);
                        den += detail::lag_product(c, 0);
                    }
                    if (!(den > 0.0)) throw ZeroVarianceError("transformed series is constant");
                    out[j] = num / den;
                    break;
                }
            }
        } catch (const std::exception& e) {
            throw MomentError(s.id, std::nullopt, e.what());
        }
    }
    return {set, std::move(out)};
}

[[nodiscard]] inline MomentVector pooled_moment_vector(std::span<const ReturnSeries> ensemble,
                                                       const MomentSet& set) {
    const auto views = detail::views_of(ensemble);
    return pooled_moment_vector(std::span<const std::span<const double>>(views), set);
}

}  // namespace smmergo
