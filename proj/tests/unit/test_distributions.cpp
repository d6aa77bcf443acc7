#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "imabc/distributions.hpp"
#include "imabc/errors.hpp"
#include "test_support.hpp"

using namespace imabc;
using imabc::testing::ks_critical_1e4;
using imabc::testing::ks_statistic;

namespace {

prior_spec tn(double mu, double sigma, double lower, double upper)
{
    prior_spec s;
    s.name = "x";
    s.kind = prior_kind::truncated_normal;
    s.mu = mu;
    s.sigma = sigma;
    s.lower = lower;
    s.upper = upper;
    return s;
}

prior_spec unif(double lower, double upper)
{
    prior_spec s;
    s.name = "x";
    s.kind = prior_kind::uniform;
    s.lower = lower;
    s.upper = upper;
    return s;
}

double quad(const std::function<double(double)>& f, double a, double b)
{
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

} // namespace

TEST(PriorSample, TruncatedNormalStaysInSupport)
{
    const auto spec = tn(-6.4, 0.25, -6.7, -6.1);
    random_stream rng(11);
    for (int i = 0; i < 100000; ++i) {
        const double x = prior_sample(spec, rng);
        ASSERT_GE(x, -6.7);
        ASSERT_LE(x, -6.1);
    }
}

TEST(PriorSample, UniformStaysInSupport)
{
    const auto spec = unif(1.5, 5.0);
    random_stream rng(12);
    for (int i = 0; i < 100000; ++i) {
        const double x = prior_sample(spec, rng);
        ASSERT_GE(x, 1.5);
        ASSERT_LE(x, 5.0);
    }
}

TEST(PriorSample, NarrowTruncatedNormalCollapsesToLower)
{
    const double eps = 1e-9;
    const auto spec = tn(0.0, 1.0, 2.0, 2.0 + eps);
    random_stream rng(13);
    for (int i = 0; i < 1000; ++i) EXPECT_NEAR(prior_sample(spec, rng), 2.0, 2 * eps);
}

TEST(PriorSample, FarTailTruncatedNormalIsFinite)
{
    const auto spec = tn(0.0, 1.0, 30.0, 31.0);
    random_stream rng(14);
    for (int i = 0; i < 1000; ++i) {
        const double x = prior_sample(spec, rng);
        ASSERT_GE(x, 30.0);
        ASSERT_LE(x, 31.0);
    }
}

TEST(PriorSpec, InvalidSpecsThrow)
{
    EXPECT_THROW(tn(0.0, 0.0, -1.0, 1.0).validate(), invalid_spec);
    EXPECT_THROW(tn(0.0, -1.0, -1.0, 1.0).validate(), invalid_spec);
    EXPECT_THROW(unif(1.0, 1.0).validate(), invalid_spec);
    EXPECT_THROW(unif(2.0, 1.0).validate(), invalid_spec);
    EXPECT_NO_THROW(unif(0.0, 1.0).validate());
}

TEST(PriorDensity, UniformHeightAndSupport)
{
    const auto spec = unif(0.0, 2.0);
    EXPECT_DOUBLE_EQ(prior_density(spec, 1.0), 0.5);
    EXPECT_EQ(prior_density(spec, 3.0), 0.0);
    EXPECT_EQ(prior_density(spec, -0.1), 0.0);
}

TEST(PriorDensity, TruncatedNormalAtZeroMatchesNormalOracle)
{
    const auto spec = tn(0.0, 1.0, -1.0, 1.0);
    boost::math::normal_distribution<double> n01;
    const double expected = boost::math::pdf(n01, 0.0) / (boost::math::cdf(n01, 1.0) - boost::math::cdf(n01, -1.0));
    EXPECT_NEAR(prior_density(spec, 0.0), expected, 1e-12);
    EXPECT_NEAR(prior_density(spec, 0.0), 0.5844, 1e-4);
    EXPECT_EQ(prior_density(spec, 1.5), 0.0);
}

TEST(PriorDensity, IntegratesToOne)
{
    for (const auto& spec : {tn(-6.4, 0.25, -6.7, -6.1), tn(0.04, 0.06, 0.02, 0.05), tn(-0.008, 0.004, -0.024, 0.002),
                             unif(1.1, 5.0), tn(0.0, 1.0, -10.0, 10.0)}) {
        const double total = quad([&](double x) { return prior_density(spec, x); }, spec.lower, spec.upper);
        EXPECT_NEAR(total, 1.0, 1e-6) << spec.lower << " " << spec.upper;
    }
}

TEST(PriorDensity, ProportionalToNormalPdfOnGrid)
{
    const auto spec = tn(0.5, 0.8, -1.0, 2.0);
    boost::math::normal_distribution<double> n(0.5, 0.8);
    const double ratio0 = prior_density(spec, -1.0) / boost::math::pdf(n, -1.0);
    for (int i = 0; i <= 60; ++i) {
        const double x = -1.0 + 3.0 * i / 60.0;
        EXPECT_NEAR(prior_density(spec, x) / boost::math::pdf(n, x), ratio0, 1e-10 * ratio0);
        EXPECT_NEAR(prior_log_density(spec, x), std::log(prior_density(spec, x)), 1e-12);
    }
    EXPECT_EQ(prior_log_density(spec, 2.5), -std::numeric_limits<double>::infinity());
}

TEST(PriorSample, KolmogorovSmirnovAgainstCdf)
{
    const std::size_t n = 100000;
    for (const auto& spec : {tn(-6.4, 0.25, -6.7, -6.1), tn(0.03, 0.01, -0.01, 0.05), unif(10.7, 40.0)}) {
        random_stream rng(21);
        std::vector<double> xs(n);
        for (auto& x : xs) x = prior_sample(spec, rng);
        EXPECT_LT(ks_statistic(xs, [&](double x) { return prior_cdf(spec, x); }), ks_critical_1e4(n));
    }
}

TEST(PriorQuantile, InvertsCdf)
{
    const auto spec = tn(3.1, 0.25, 2.6, 3.6);
    for (double p : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.999999}) EXPECT_NEAR(prior_cdf(spec, prior_quantile(spec, p)), p, 1e-10);
}

TEST(PriorMoments, MatchQuadrature)
{
    const auto spec = tn(-0.5, 0.1, -0.7, -0.3);
    const double mean = quad([&](double x) { return x * prior_density(spec, x); }, spec.lower, spec.upper);
    const double second = quad([&](double x) { return x * x * prior_density(spec, x); }, spec.lower, spec.upper);
    EXPECT_NEAR(prior_mean(spec), mean, 1e-10);
    EXPECT_NEAR(prior_sd(spec), std::sqrt(second - mean * mean), 1e-10);
    EXPECT_NEAR(prior_sd(unif(0.0, 1.0)), std::sqrt(1.0 / 12.0), 1e-14);
}

TEST(FrechetBound, ScaleBoundsFollowTenYearRule)
{
    const double shape = 2.0;
    const auto [lo, hi] = frechet_scale_bounds(shape);
    EXPECT_NEAR(frechet(shape, lo).cdf(10.0), 0.25, 1e-12);
    EXPECT_NEAR(frechet(shape, hi).cdf(10.0), 1e-4, 1e-15);
}

TEST(PriorSet, BoundRuleZeroesDensityOutsideAdmissibleScale)
{
    auto shape = unif(1.1, 5.0);
    shape.name = "beta1";
    auto scale = unif(10.7, 40.0);
    scale.name = "beta2";
    scale.bound_rule = frechet_10mm_rule;
    scale.bound_ref = "beta1";
    prior_set set({shape, scale});
    // shape 5 admits scales in [10.68, 15.58]; shape 1.2 admits [13.1, 63.6]
    EXPECT_GT(set.density(std::vector<double>{5.0, 12.0}), 0.0);
    EXPECT_EQ(set.density(std::vector<double>{5.0, 20.0}), 0.0);
    EXPECT_EQ(set.log_density(std::vector<double>{5.0, 20.0}), -std::numeric_limits<double>::infinity());
    EXPECT_GT(set.density(std::vector<double>{1.2, 20.0}), 0.0);
    EXPECT_EQ(set.density(std::vector<double>{1.2, 12.0}), 0.0);
}

TEST(LatinHypercube, OneValuePerStratum)
{
    std::vector<prior_spec> priors{unif(0.0, 1.0), unif(0.0, 1.0)};
    random_stream rng(31);
    const auto x = latin_hypercube(priors, 4, rng);
    ASSERT_EQ(x.rows(), 4);
    ASSERT_EQ(x.cols(), 2);
    for (int c = 0; c < 2; ++c) {
        std::vector<int> hits(4, 0);
        for (int r = 0; r < 4; ++r) ++hits[static_cast<std::size_t>(std::floor(x(r, c) * 4.0))];
        for (int h : hits) EXPECT_EQ(h, 1);
    }
}

TEST(LatinHypercube, StrataOfTruncatedNormalPrior)
{
    const auto spec = tn(-6.4, 0.25, -6.7, -6.1);
    random_stream rng(32);
    const std::size_t n = 1000;
    const auto x = latin_hypercube(std::vector<prior_spec>{spec}, n, rng);
    std::vector<int> hits(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        const double u = prior_cdf(spec, x(static_cast<Eigen::Index>(r), 0));
        ++hits[std::min(n - 1, static_cast<std::size_t>(std::floor(u * static_cast<double>(n))))];
    }
    for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(LatinHypercube, SingleDrawInsideSupport)
{
    random_stream rng(33);
    const auto x = latin_hypercube(std::vector<prior_spec>{tn(0.0, 1.0, -1.0, 1.0), unif(2.0, 3.0)}, 1, rng);
    ASSERT_EQ(x.rows(), 1);
    EXPECT_GE(x(0, 0), -1.0);
    EXPECT_LE(x(0, 0), 1.0);
    EXPECT_GE(x(0, 1), 2.0);
    EXPECT_LE(x(0, 1), 3.0);
}

TEST(LatinHypercube, MeanWithinCltBound)
{
    random_stream rng(34);
    const std::size_t n = 10000;
    const auto x = latin_hypercube(std::vector<prior_spec>{unif(0.0, 1.0)}, n, rng);
    EXPECT_NEAR(x.col(0).mean(), 0.5, 0.5 / std::sqrt(12.0) / std::sqrt(double(n)) * 4.0);
}

TEST(LatinHypercube, ZeroRowsRejected)
{
    random_stream rng(35);
    EXPECT_THROW(latin_hypercube(std::vector<prior_spec>{unif(0.0, 1.0)}, 0, rng), invalid_spec);
}

TEST(Frechet, CdfAtScale)
{
    EXPECT_NEAR(frechet(1.32, 38.1).cdf(38.1), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(frechet(1.32, 38.1).cdf(38.1), 0.367879, 1e-6);
}

TEST(Frechet, MeanWithShapeTwo)
{
    EXPECT_NEAR(frechet(2.0, 20.0).mean(), 20.0 * std::sqrt(std::numbers::pi), 1e-10);
    EXPECT_NEAR(frechet(2.0, 20.0).mean(), 35.4491, 1e-4);
}

TEST(Frechet, MedianWithShapeOne)
{
    EXPECT_NEAR(frechet(1.0, 10.0).median(), 10.0 / std::log(2.0), 1e-12);
    EXPECT_NEAR(frechet(1.0, 10.0).median(), 14.4270, 1e-4);
    random_stream rng(41);
    const frechet f(1.0, 10.0);
    const std::size_t n = 1000000;
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) below += f.sample(rng) <= f.median();
    const double sd = std::sqrt(0.25 / double(n));
    EXPECT_NEAR(double(below) / double(n), 0.5, 4.0 * sd);
}

TEST(Frechet, MeanUndefinedForShapeAtMostOne)
{
    EXPECT_THROW(frechet(1.0, 10.0).mean(), undefined_moment);
    EXPECT_THROW(frechet(0.5, 10.0).mean(), undefined_moment);
    EXPECT_THROW(frechet(0.0, 10.0), invalid_spec);
    EXPECT_THROW(frechet(2.0, -1.0), invalid_spec);
}

TEST(Frechet, QuantileInvertsCdf)
{
    const frechet f(3.3, 16.4);
    for (double p : {1e-8, 0.1, 0.5, 0.9, 1 - 1e-8}) EXPECT_NEAR(f.cdf(f.quantile(p)), p, 1e-12);
    // inverse-CDF form t = scale * (-ln u)^(-1/shape)
    EXPECT_NEAR(f.quantile(0.3), 16.4 * std::pow(-std::log(0.3), -1.0 / 3.3), 1e-12);
}

TEST(Frechet, KolmogorovSmirnov)
{
    const frechet f(1.32, 38.1);
    random_stream rng(42);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = f.sample(rng);
    EXPECT_LT(ks_statistic(xs, [&](double t) { return f.cdf(t); }), ks_critical_1e4(n));
}

TEST(Frechet, MeanMatchesMonteCarlo)
{
    const frechet f(5.0, 20.0);
    random_stream rng(43);
    const std::size_t n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = f.sample(rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / double(n);
    const double se = std::sqrt((s2 / double(n) - mean * mean) / double(n));
    EXPECT_NEAR(mean, f.mean(), 3.0 * se);
    EXPECT_NEAR(f.mean(), 20.0 * boost::math::tgamma(0.8), 1e-10);
}

TEST(WeibullSojourn, ShortestSojournScale)
{
    const weibull_sojourn w(1.5);
    EXPECT_NEAR(w.mean(), 1.3773, 1e-4);
    EXPECT_NEAR(w.sd(), 0.3155, 1e-4);
    EXPECT_NEAR(w.mean(), 1.4, 0.05);
    EXPECT_NEAR(w.sd(), 0.32, 0.005);
}

TEST(WeibullSojourn, UnitScaleMeanIsGamma)
{
    EXPECT_NEAR(weibull_sojourn(1.0).mean(), boost::math::tgamma(1.2), 1e-14);
    EXPECT_NEAR(weibull_sojourn(1.0).mean(), 0.91817, 1e-5);
}

TEST(WeibullSojourn, QuantileAtCdfOfTauReturnsTau)
{
    const weibull_sojourn w(2.32);
    EXPECT_NEAR(w.cdf(2.32), 1.0 - std::exp(-1.0), 1e-15);
    EXPECT_NEAR(w.quantile(1.0 - std::exp(-1.0)), 2.32, 1e-12);
    EXPECT_THROW(weibull_sojourn(0.0), invalid_spec);
}

TEST(WeibullSojourn, MomentsMatchMonteCarlo)
{
    const weibull_sojourn w(1.91);
    random_stream rng(51);
    const std::size_t n = 1000000;
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = w.sample(rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / double(n);
    const double var = s2 / double(n) - mean * mean;
    EXPECT_NEAR(mean, w.mean(), 3.0 * std::sqrt(var / double(n)));
    EXPECT_NEAR(std::sqrt(var), w.sd(), 0.01 * w.sd());
}

TEST(WeibullSojourn, KolmogorovSmirnov)
{
    const weibull_sojourn w(2.0);
    random_stream rng(52);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = w.sample(rng);
    EXPECT_LT(ks_statistic(xs, [&](double t) { return w.cdf(t); }), ks_critical_1e4(n));
}

TEST(LognormalSize, TransitionProbabilityAtTwentyMillimetres)
{
    const lognormal_size l(3.5, 0.5);
    EXPECT_NEAR(l.cdf(20.0), 0.1566, 1e-4);
    EXPECT_NEAR(l.cdf(20.0), 0.16, 0.005);
    EXPECT_NEAR(l.cdf(10.0), 0.0083, 1e-4);
    EXPECT_NEAR(l.cdf(15.0), 0.057, 1e-3);
}

TEST(LognormalSize, MeanAndMedian)
{
    const lognormal_size l(3.5, 0.5);
    EXPECT_NEAR(l.mean(), std::exp(3.625), 1e-10);
    EXPECT_NEAR(l.mean(), 37.524, 1e-3);
    EXPECT_NEAR(l.cdf(std::exp(3.5)), 0.5, 1e-15);
    EXPECT_NEAR(l.median(), std::exp(3.5), 1e-12);
}

TEST(LognormalSize, InvalidInputs)
{
    EXPECT_THROW(lognormal_size(3.0, 0.0), invalid_spec);
    EXPECT_THROW(lognormal_size(3.0, 0.5).cdf(0.0), invalid_spec);
    EXPECT_THROW(lognormal_size(3.0, 0.5).cdf(-1.0), invalid_spec);
}

TEST(LognormalSize, KolmogorovSmirnov)
{
    const lognormal_size l(2.78, 0.5);
    random_stream rng(61);
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    for (auto& x : xs) x = l.sample(rng);
    EXPECT_LT(ks_statistic(xs, [&](double s) { return l.cdf(s); }), ks_critical_1e4(n));
}

TEST(GaussianKernel, StandardBivariateAtMean)
{
    const gaussian_kernel k(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
    const std::vector<double> x{0.0, 0.0};
    EXPECT_NEAR(k.density(x), 1.0 / (2.0 * std::numbers::pi), 1e-9);
    EXPECT_NEAR(k.density(x), 0.159155, 1e-6);
}

TEST(GaussianKernel, UnivariateAtOnePointNineSix)
{
    const gaussian_kernel k(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1));
    const std::vector<double> x{1.96};
    boost::math::normal_distribution<double> n01;
    EXPECT_NEAR(k.density(x), boost::math::pdf(n01, 1.96), 1e-10);
    EXPECT_NEAR(k.density(x), 0.05844, 1e-5);
}

TEST(GaussianKernel, MeanIsTheMode)
{
    Eigen::MatrixXd cov(2, 2);
    cov << 2.0, 0.6, 0.6, 0.5;
    const Eigen::VectorXd mean = Eigen::Vector2d(1.0, -2.0);
    const gaussian_kernel k(mean, cov);
    const std::vector<double> m{1.0, -2.0};
    const double top = k.density(m);
    random_stream rng(71);
    for (int i = 0; i < 1000; ++i) {
        const std::vector<double> x{1.0 + 3.0 * rng.normal(), -2.0 + 3.0 * rng.normal()};
        EXPECT_LE(k.density(x), top);
    }
}

TEST(GaussianKernel, DensityIntegratesToOne)
{
    const gaussian_kernel k(Eigen::VectorXd::Constant(1, 0.3), Eigen::MatrixXd::Constant(1, 1, 0.04));
    const double total = quad([&](double x) { return k.density(std::vector<double>{x}); }, -3.0, 3.0);
    EXPECT_NEAR(total, 1.0, 1e-10);
}

TEST(GaussianKernel, ZeroCovarianceSamplesMean)
{
    const gaussian_kernel k(Eigen::Vector2d(1.5, -0.5), Eigen::MatrixXd::Zero(2, 2));
    EXPECT_TRUE(k.is_point_mass());
    random_stream rng(72);
    for (int i = 0; i < 10; ++i) {
        const auto x = k.sample(rng);
        EXPECT_EQ(x(0), 1.5);
        EXPECT_EQ(x(1), -0.5);
    }
}

TEST(GaussianKernel, IdentitySampleMeans)
{
    const gaussian_kernel k(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
    random_stream rng(73);
    const int n = 100000;
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int i = 0; i < n; ++i) s += k.sample(rng);
    s /= n;
    for (int j = 0; j < 3; ++j) EXPECT_NEAR(s(j), 0.0, 4.0 / std::sqrt(double(n)));
}

TEST(GaussianKernel, EmpiricalCovarianceWithinFivePercent)
{
    Eigen::MatrixXd cov(3, 3);
    cov << 1.0, 0.3, -0.2, 0.3, 0.5, 0.1, -0.2, 0.1, 2.0;
    const gaussian_kernel k(Eigen::Vector3d(1.0, 2.0, 3.0), cov);
    random_stream rng(74);
    const int n = 100000;
    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) x.row(i) = k.sample(rng).transpose();
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd emp = centered.transpose() * centered / double(n - 1);
    EXPECT_LT((emp - cov).norm() / cov.norm(), 0.05);
}

TEST(GaussianKernel, DiagonalComponentsUncorrelated)
{
    const gaussian_kernel k(Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(4.0, 0.25).asDiagonal());
    random_stream rng(75);
    const int n = 100000;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const auto v = k.sample(rng);
        sx += v(0);
        sy += v(1);
        sxx += v(0) * v(0);
        syy += v(1) * v(1);
        sxy += v(0) * v(1);
    }
    const double cxy = sxy / n - sx / n * sy / n;
    const double r = cxy / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    EXPECT_NEAR(r, 0.0, 4.0 / std::sqrt(double(n)));
}

TEST(GaussianKernel, DuplicatedPointsAreRegularized)
{
    // rank-one covariance, as produced by collinear accepted points
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 1.0, 1.0, 1.0;
    EXPECT_NO_THROW(gaussian_kernel(Eigen::Vector2d(0.0, 0.0), cov));
}

TEST(GaussianKernel, NonPositiveDefiniteThrows)
{
    Eigen::MatrixXd cov(2, 2);
    cov << 1.0, 0.0, 0.0, -1.0;
    EXPECT_THROW(gaussian_kernel(Eigen::Vector2d(0.0, 0.0), cov), degenerate_kernel);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.5, 0.0, 1.0;
    EXPECT_THROW(gaussian_kernel(Eigen::Vector2d(0.0, 0.0), asym), invalid_spec);
}

TEST(NormalHelpers, TwoSidedZ)
{
    EXPECT_NEAR(two_sided_z(0.05), 1.959963984540054, 1e-12);
    EXPECT_NEAR(two_sided_z(0.001), 3.2905267314919, 1e-10);
    EXPECT_NEAR(two_sided_z(1e-9), 6.109410204869, 1e-9);
    EXPECT_TRUE(std::isinf(two_sided_z(0.0)));
}
