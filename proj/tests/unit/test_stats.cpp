#include "smmergo/rng.hpp"
#include "smmergo/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include <vector>

using namespace smmergo;

namespace {

std::vector<double> normals(std::size_t n, GaussianStream& g) {
    std::vector<double> v(n);
    for (double& x : v) x = g.normal();
    return v;
}

}  // namespace

TEST(Descriptives, MeanVarianceRmse) {
    const std::vector<double> x{2.0, 4.0};
    EXPECT_DOUBLE_EQ(mean(x), 3.0);
    EXPECT_DOUBLE_EQ(variance(x), 2.0);
    EXPECT_DOUBLE_EQ(rmse(x, 3.0), 1.0);
    EXPECT_EQ(rmse(std::vector<double>(4, 1.5), 1.5), 0.0);
    EXPECT_THROW((void)variance(std::vector<double>{1.0}), StatisticError);
}

TEST(Descriptives, RmseDecomposition) {
    GaussianStream g(3);
    auto x = normals(37, g);
    for (double& v : x) v = 0.3 + 0.05 * v;
    const double truth = 0.29;
    const double n = static_cast<double>(x.size());
    const double bias = mean(x) - truth;
    const double r = rmse(x, truth);
    EXPECT_NEAR(r * r, bias * bias + (n - 1.0) / n * variance(x), 1e-10);
}

TEST(Distributions, StudentTAgainstBoost) {
    for (double df : {1.0, 2.0, 3.0, 7.5, 30.0, 1000.0}) {
        boost::math::students_t_distribution<double> d(df);
        for (double t : {-40.0, -3.0, -0.5, 0.0, 0.2, 1.96, 3.464, 12.0}) {
            EXPECT_NEAR(student_t_cdf(t, df), boost::math::cdf(d, t), 1e-10) << t << " df " << df;
        }
    }
    EXPECT_NEAR(student_t_cdf(-2.5, 3), 0.04385332350403277, 1e-12);
    EXPECT_NEAR(student_t_cdf(4.0, 1), 0.9220208696226307, 1e-12);
}

TEST(Distributions, KolmogorovSurvivalReference) {
    const std::pair<double, double> ref[] = {
        {0.3, 0.9999906941986655},  {0.5, 0.9639452436648751},  {0.8, 0.5441424115741981},
        {1.0, 0.26999967167735456}, {1.18, 0.1234538094297657}, {1.36, 0.049485876755377876},
        {2.0, 0.0006709252557796953}, {3.0, 3.045995948942526e-08},
    };
    for (auto [x, q] : ref) EXPECT_NEAR(kolmogorov_survival(x), q, 1e-10) << x;
    EXPECT_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Distributions, IncompleteBetaEdges) {
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 0.0), 0.0);
    EXPECT_EQ(incomplete_beta(2.0, 3.0, 1.0), 1.0);
    EXPECT_NEAR(incomplete_beta(1.0, 1.0, 0.37), 0.37, 1e-14);
    EXPECT_THROW((void)incomplete_beta(0.0, 1.0, 0.5), StatisticError);
}

TEST(PairedT, Examples) {
    const std::vector<double> d{1.0, 2.0, 3.0};
    const std::vector<double> zero(3, 0.0);
    const auto r = paired_t_one_tailed(d, zero);
    EXPECT_NEAR(r.statistic, 2.0 * std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(r.p_value, 0.03708995011372427, 1e-10);
    EXPECT_EQ(r.n, 3u);
    const auto z = paired_t_one_tailed(zero, zero);
    EXPECT_EQ(z.statistic, 0.0);
    EXPECT_EQ(z.p_value, 0.5);
    const std::vector<double> lo{-10.0, -11.0, -9.5, -10.2};
    const std::vector<double> hi{0.0, 0.1, -0.2, 0.3};
    EXPECT_GT(paired_t_one_tailed(lo, hi).p_value, 0.999);
    EXPECT_THROW((void)paired_t_one_tailed(d, std::vector<double>{1.0}), StatisticError);
}

TEST(PairedT, Antisymmetry) {
    GaussianStream g(12);
    const auto x = normals(40, g);
    const auto y = normals(40, g);
    const auto a = paired_t_one_tailed(x, y);
    const auto b = paired_t_one_tailed(y, x);
    EXPECT_DOUBLE_EQ(a.statistic, -b.statistic);
    EXPECT_NEAR(a.p_value + b.p_value, 1.0, 1e-12);
}

TEST(Stars, Thresholds) {
    EXPECT_EQ(stars(0.005), "***");
    EXPECT_EQ(stars(0.02), "**");
    EXPECT_EQ(stars(0.07), "*");
    EXPECT_EQ(stars(0.5), "");
}

TEST(KsNormal, PreconditionsAndRange) {
    EXPECT_THROW((void)ks_normal(std::vector<double>{0.1, 0.2}), StatisticError);
    EXPECT_THROW((void)ks_normal(std::vector<double>(20, 1.0)), ZeroVarianceError);
    GaussianStream g(1);
    const auto x = normals(200, g);
    for (KsMethod m : {KsMethod::lilliefors, KsMethod::asymptotic}) {
        const auto r = ks_normal(x, m);
        EXPECT_GE(r.p_value, 0.0);
        EXPECT_LE(r.p_value, 1.0);
        EXPECT_GT(r.statistic, 0.0);
        EXPECT_EQ(r.n, 200u);
    }
}

TEST(KsNormal, AffineInvariance) {
    GaussianStream g(77);
    const auto x = normals(500, g);
    const auto base = ks_normal(x);
    // Scales chosen so that building y itself loses no more than ~1e-14.
    for (double c : {-4.0, 0.25, 1024.0}) {
        std::vector<double> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i] + 12.5;
        EXPECT_NEAR(ks_normal(y).statistic, base.statistic, 1e-12);
    }
}

TEST(KsNormal, LillieforsPValueMonotoneAndContinuous) {
    for (std::size_t n : {10ul, 50ul, 500ul, 5000ul}) {
        double prev = 1.0;
        for (double d = 0.001; d < 0.5; d += 0.0005) {
            const double p = detail::lilliefors_p_value(d, n);
            EXPECT_LE(p, prev + 1e-3) << n << " " << d;
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            prev = p;
        }
    }
}

TEST(KsNormal, NullAndAlternative) {
    GaussianStream g(4242);
    int null_ok = 0, alt_rejected = 0;
    const int trials = 100;
    for (int t = 0; t < trials; ++t) {
        null_ok += ks_normal(normals(5000, g)).p_value > 0.01;
        std::vector<double> u(5000);
        for (double& v : u) v = g.uniform();
        alt_rejected += ks_normal(u).p_value < 0.01;
    }
    EXPECT_GE(null_ok, 95);
    EXPECT_GE(alt_rejected, 99);
}

TEST(KsNormal, LillieforsCalibratedAtFivePercent) {
    GaussianStream g(99);
    int below = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) below += ks_normal(normals(200, g)).p_value < 0.05;
    const double frac = below / static_cast<double>(trials);
    EXPECT_GT(frac, 0.03);
    EXPECT_LT(frac, 0.07);
}

TEST(Matrices, SampleCovExamples) {
    const std::vector<std::vector<double>> same{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
    EXPECT_EQ(sample_cov(same).cwiseAbs().maxCoeff(), 0.0);
    const std::vector<std::vector<double>> two{{0.0, 0.0}, {2.0, 2.0}};
    const Eigen::MatrixXd c = sample_cov(two);
    EXPECT_DOUBLE_EQ(c(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(c(0, 1), 2.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 2.0);
    EXPECT_DOUBLE_EQ(c(1, 1), 2.0);
    EXPECT_THROW((void)sample_cov(std::vector<std::vector<double>>{{1.0}}), StatisticError);
}

TEST(Matrices, SpdInverse) {
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
    EXPECT_TRUE(spd_inverse(id).isApprox(id, 1e-15));
    // Condition number about 1e7.
    Eigen::MatrixXd q = Eigen::MatrixXd::Random(6, 6);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    const Eigen::MatrixXd o = qr.householderQ();
    Eigen::VectorXd ev(6);
    ev << 1e-7, 1e-5, 1e-3, 0.1, 0.5, 1.0;
    const Eigen::MatrixXd a = o * ev.asDiagonal() * o.transpose();
    const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
    const auto inv = spd_inverse_regularized(sym);
    EXPECT_EQ(inv.ridge, 0.0);
    EXPECT_LT((inv.inverse * sym - Eigen::MatrixXd::Identity(6, 6)).norm(), 1e-8);
}

TEST(Matrices, SingularTakesRidgePath) {
    Eigen::MatrixXd s(3, 3);
    s << 1, 1, 0, 1, 1, 0, 0, 0, 2;
    const auto inv = spd_inverse_regularized(s);
    EXPECT_GT(inv.ridge, 0.0);
    EXPECT_TRUE(inv.inverse.allFinite());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(inv.inverse);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 0.0);
    Eigen::MatrixXd asym = s;
    asym(0, 2) = 1.0;
    EXPECT_THROW((void)spd_inverse(asym), MatrixDomainError);
}
