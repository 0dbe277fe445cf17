#pragma once

#include "smmergo/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smmergo {

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Significance stars: *** p < 0.01, ** p < 0.05, * p < 0.10.
[[nodiscard]] inline std::string_view stars(double p) noexcept {
    if (p < 0.01) return "***";
    if (p < 0.05) return "**";
    if (p < 0.10) return "*";
    return "";
}

[[nodiscard]] inline double mean(std::span<const double> x) {
    if (x.empty()) throw StatisticError("mean of empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (divisor n - 1).
[[nodiscard]] inline double variance(std::span<const double> x) {
    if (x.size() < 2) throw StatisticError("variance needs at least two observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

[[nodiscard]] inline double stddev(std::span<const double> x) { return std::sqrt(variance(x)); }

[[nodiscard]] inline double rmse(std::span<const double> estimates, double truth) {
    if (estimates.empty()) throw StatisticError("rmse of empty sample");
    double s = 0.0;
    for (double v : estimates) s += (v - truth) * (v - truth);
    return std::sqrt(s / static_cast<double>(estimates.size()));
}

[[nodiscard]] inline double normal_cdf(double x) noexcept {
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

// Modified Lentz continued fraction for the incomplete beta function.
[[nodiscard]] inline double beta_continued_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw StatisticError("incomplete beta continued fraction did not converge");
}

}  // namespace detail

/// Regularized incomplete beta I_x(a, b).
[[nodiscard]] inline double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw StatisticError("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw StatisticError("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

/// Student-t cumulative distribution with `df` (> 0, possibly fractional) degrees of freedom.
[[nodiscard]] inline double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw StatisticError("Student-t needs df > 0");
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

/// Kolmogorov survival function Q(x) = P(K > x) of the limiting sup-statistic.
[[nodiscard]] inline double kolmogorov_survival(double x) {
    if (!(x > 0.0)) return 1.0;
    if (x < 1.18) {
        // Theta-function form converges fast for small x.
        const double pi2 = std::numbers::pi * std::numbers::pi;
        const double w = -pi2 / (8.0 * x * x);
        double s = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double term = std::exp(w * (2 * k - 1) * (2 * k - 1));
            s += term;
            if (term < 1e-17) break;
        }
        return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * x * x);
        s += (k % 2 == 1) ? term : -term;
        if (term < 1e-17) break;
    }
    return std::clamp(2.0 * s, 0.0, 1.0);
}

/// p-value convention for a normality test with estimated mean and variance.
enum class KsMethod {
    lilliefors,  ///< Dallal-Wilkinson approximation to the Lilliefors distribution
    asymptotic,  ///< plain Kolmogorov limit at sqrt(n) D (conservative with estimated parameters)
};

namespace detail {

[[nodiscard]] inline double lilliefors_p_value(double d, std::size_t n_obs) {
    const double n = static_cast<double>(n_obs);
    double kd = d;
    double nd = n;
    if (n > 100.0) {
        kd = d * std::pow(n / 100.0, 0.49);
        nd = 100.0;
    }
    double p = std::exp(-7.01256 * kd * kd * (nd + 2.78019) + 2.99587 * kd * std::sqrt(nd + 2.78019) -
                        0.122119 + 0.974598 / std::sqrt(nd) + 1.67997 / nd);
    if (p > 0.1) {
        const double kk = (std::sqrt(n) - 0.01 + 0.85 / std::sqrt(n)) * d;
        if (kk <= 0.302)
            p = 1.0;
        else if (kk <= 0.5)
            p = 2.76773 - 19.828315 * kk + 80.709644 * kk * kk - 138.55152 * std::pow(kk, 3) +
                81.218052 * std::pow(kk, 4);
        else if (kk <= 0.9)
            p = -4.901232 + 40.662806 * kk - 97.490286 * kk * kk + 94.029866 * std::pow(kk, 3) -
                32.355711 * std::pow(kk, 4);
        else if (kk <= 1.31)
            p = 6.198765 - 19.558097 * kk + 23.186922 * kk * kk - 12.897771 * std::pow(kk, 3) +
                2.673678 * std::pow(kk, 4);
        else
            p = 0.0;
    }
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace detail

/**
 * @brief Kolmogorov-Smirnov normality check after standardizing by the sample
 * mean and standard deviation (divisor n - 1).
 *
 * The statistic is D = sup |F_n(x) - Phi(x)|. Because both parameters are
 * estimated, the default p-value uses the Lilliefors null distribution.
 */
[[nodiscard]] inline TestResult ks_normal(std::span<const double> sample,
                                          KsMethod method = KsMethod::lilliefors) {
    const std::size_t n = sample.size();
    if (n < 8) throw StatisticError("ks_normal needs at least 8 observations");
    const double m = mean(sample);
    const double sd = stddev(sample);
    if (!(sd > 0.0)) throw ZeroVarianceError("ks_normal sample has zero variance");

    std::vector<double> z(sample.begin(), sample.end());
    for (double& v : z) v = (v - m) / sd;
    std::sort(z.begin(), z.end());
    const double nn = static_cast<double>(n);
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf(z[i]);
        d = std::max({d, static_cast<double>(i + 1) / nn - f, f - static_cast<double>(i) / nn});
    }
    const double p = method == KsMethod::lilliefors ? detail::lilliefors_p_value(d, n)
                                                    : kolmogorov_survival(std::sqrt(nn) * d);
    return {d, p, n};
}

/// One-tailed paired t-test of H1: mean(x - y) > 0.
[[nodiscard]] inline TestResult paired_t_one_tailed(std::span<const double> x,
                                                    std::span<const double> y) {
    if (x.size() != y.size()) throw StatisticError("paired samples differ in length");
    const std::size_t n = x.size();
    if (n < 2) throw StatisticError("paired t-test needs at least two pairs");
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - y[i];
    const double md = mean(d);
    const double sd = stddev(d);
    if (md == 0.0 && sd == 0.0) return {0.0, 0.5, n};
    if (sd == 0.0) return {md > 0.0 ? std::numeric_limits<double>::infinity()
                                    : -std::numeric_limits<double>::infinity(),
                           md > 0.0 ? 0.0 : 1.0, n};
    const double t = md / (sd / std::sqrt(static_cast<double>(n)));
    const double p = 1.0 - student_t_cdf(t, static_cast<double>(n - 1));
    return {t, std::clamp(p, 0.0, 1.0), n};
}

/// Unbiased covariance (divisor n - 1) of the rows of an n x m matrix.
[[nodiscard]] inline Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 2) throw StatisticError("sample_cov needs at least two rows");
    const Eigen::RowVectorXd mu = rows.colwise().mean();
    const Eigen::MatrixXd centered = rows.rowwise() - mu;
    Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(rows.rows() - 1);
    return 0.5 * (cov + cov.transpose());
}

[[nodiscard]] inline Eigen::MatrixXd sample_cov(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw StatisticError("sample_cov needs at least two rows");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size())
            throw StatisticError("sample_cov rows differ in length");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return sample_cov(m);
}

struct SpdInverse {
    Eigen::MatrixXd inverse;
    double ridge = 0.0;       ///< diagonal shift applied before factorization (0 if none)
    double condition = 0.0;   ///< condition number of the input
};

inline void require_symmetric(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) throw MatrixDomainError("matrix is not square");
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw MatrixDomainError("matrix is not symmetric");
}

/**
 * @brief Inverse of a symmetric positive (semi-)definite matrix via Cholesky.
 *
 * If the condition number exceeds `max_condition`, the diagonal is shifted by
 * 1e-8 * trace / M first and the shift is reported.
 */
[[nodiscard]] inline SpdInverse spd_inverse_regularized(const Eigen::MatrixXd& a,
                                                        double max_condition = 1e12) {
    require_symmetric(a);
    const Eigen::Index m = a.rows();
    if (m == 0) throw MatrixDomainError("matrix is empty");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    SpdInverse out;
    out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    Eigen::MatrixXd work = a;
    if (out.condition > max_condition) {
        out.ridge = 1e-8 * a.trace() / static_cast<double>(m);
        work.diagonal().array() += out.ridge;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(work);
    if (llt.info() != Eigen::Success || !(out.ridge >= 0.0))
        throw MatrixDomainError("matrix is not positive definite even after ridge");
    out.inverse = llt.solve(Eigen::MatrixXd::Identity(m, m));
    out.inverse = 0.5 * (out.inverse + out.inverse.transpose());
    if (!out.inverse.allFinite()) throw MatrixDomainError("matrix inverse is not finite");
    return out;
}

[[nodiscard]] inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a) {
    return spd_inverse_regularized(a).inverse;
}

}  // namespace smmergo
