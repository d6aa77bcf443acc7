#include "imabc/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <Eigen/Cholesky>
#include <boost/math/distributions/normal.hpp>

#include "imabc/errors.hpp"

namespace imabc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

const boost::math::normal& std_normal()
{
    static const boost::math::normal n(0.0, 1.0);
    return n;
}

double normal_survival(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

double log_normal_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

double normal_pdf(double z) { return std::exp(log_normal_pdf(z)); }

/// Upper-tail quantile: z with P(Z > z) = q.
double survival_quantile(double q) { return boost::math::quantile(boost::math::complement(std_normal(), q)); }

struct standardized_bounds {
    double a;
    double b;
    bool upper_tail; // both probabilities computed from the survival function
    double mass;     // probability of [a, b] under N(0,1)
};

standardized_bounds standardize(const prior_spec& s)
{
    standardized_bounds out{};
    out.a = (s.lower - s.mu) / s.sigma;
    out.b = (s.upper - s.mu) / s.sigma;
    out.upper_tail = out.a > 0.0;
    out.mass = out.upper_tail ? normal_survival(out.a) - normal_survival(out.b)
                              : normal_cdf(out.b) - normal_cdf(out.a);
    return out;
}

} // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p)
{
    if (p <= 0.0) return -inf;
    if (p >= 1.0) return inf;
    return boost::math::quantile(std_normal(), p);
}

double two_sided_z(double alpha)
{
    if (alpha <= 0.0) return inf;
    if (alpha >= 1.0) return 0.0;
    return survival_quantile(alpha / 2.0);
}

void prior_spec::validate() const
{
    if (!std::isfinite(lower) || !std::isfinite(upper) || !(upper > lower))
        throw invalid_spec("prior '" + name + "': upper must exceed lower");
    if (kind == prior_kind::truncated_normal && !(sigma > 0.0 && std::isfinite(mu)))
        throw invalid_spec("prior '" + name + "': sigma must be positive");
    if (!bound_rule.empty() && bound_rule != frechet_10mm_rule)
        throw invalid_spec("prior '" + name + "': unknown bound rule '" + bound_rule + "'");
}

double prior_quantile(const prior_spec& s, double p)
{
    p = std::clamp(p, 0.0, 1.0);
    if (s.kind == prior_kind::uniform) return s.lower + p * (s.upper - s.lower);

    const auto sb = standardize(s);
    if (!(sb.mass > 0.0) || !std::isfinite(sb.mass)) return s.lower + p * (s.upper - s.lower);

    double z;
    if (sb.upper_tail) {
        const double qa = normal_survival(sb.a);
        const double q = qa - p * sb.mass;
        if (q <= 0.0) return s.upper;
        if (q >= 1.0) return s.lower;
        z = survival_quantile(q);
    } else {
        const double pa = normal_cdf(sb.a);
        const double q = pa + p * sb.mass;
        if (q <= 0.0) return s.lower;
        if (q >= 1.0) return s.upper;
        z = boost::math::quantile(std_normal(), q);
    }
    return std::clamp(s.mu + s.sigma * z, s.lower, s.upper);
}

double prior_sample(const prior_spec& s, random_stream& rng)
{
    s.validate();
    return prior_quantile(s, rng.uniform());
}

double prior_log_density(const prior_spec& s, double x)
{
    if (!(x >= s.lower && x <= s.upper)) return -inf;
    if (s.kind == prior_kind::uniform) return -std::log(s.upper - s.lower);
    const auto sb = standardize(s);
    const double z = (x - s.mu) / s.sigma;
    return log_normal_pdf(z) - std::log(s.sigma) - std::log(sb.mass);
}

double prior_density(const prior_spec& s, double x)
{
    const double ld = prior_log_density(s, x);
    return std::isfinite(ld) ? std::exp(ld) : 0.0;
}

double prior_cdf(const prior_spec& s, double x)
{
    if (x <= s.lower) return 0.0;
    if (x >= s.upper) return 1.0;
    if (s.kind == prior_kind::uniform) return (x - s.lower) / (s.upper - s.lower);
    const auto sb = standardize(s);
    const double z = (x - s.mu) / s.sigma;
    const double num = sb.upper_tail ? normal_survival(sb.a) - normal_survival(z) : normal_cdf(z) - normal_cdf(sb.a);
    return std::clamp(num / sb.mass, 0.0, 1.0);
}

double prior_mean(const prior_spec& s)
{
    if (s.kind == prior_kind::uniform) return 0.5 * (s.lower + s.upper);
    const auto sb = standardize(s);
    return s.mu + s.sigma * (normal_pdf(sb.a) - normal_pdf(sb.b)) / sb.mass;
}

double prior_sd(const prior_spec& s)
{
    if (s.kind == prior_kind::uniform) return (s.upper - s.lower) / std::sqrt(12.0);
    const auto sb = standardize(s);
    const double pa = normal_pdf(sb.a);
    const double pb = normal_pdf(sb.b);
    const double shift = (pa - pb) / sb.mass;
    const double var = 1.0 + (sb.a * pa - sb.b * pb) / sb.mass - shift * shift;
    return s.sigma * std::sqrt(std::max(var, 0.0));
}

std::pair<double, double> frechet_scale_bounds(double shape)
{
    return {10.0 * std::pow(-std::log(0.25), 1.0 / shape), 10.0 * std::pow(-std::log(0.0001), 1.0 / shape)};
}

prior_set::prior_set(std::vector<prior_spec> specs) : specs_(std::move(specs))
{
    for (const auto& s : specs_) s.validate();
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const auto& s = specs_[i];
        if (s.bound_rule.empty()) continue;
        if (s.bound_ref.empty()) throw invalid_spec("prior '" + s.name + "': bound rule needs a reference parameter");
        rules_.push_back({i, index_of(s.bound_ref)});
    }
}

std::vector<std::string> prior_set::names() const
{
    std::vector<std::string> out;
    out.reserve(specs_.size());
    for (const auto& s : specs_) out.push_back(s.name);
    return out;
}

std::size_t prior_set::index_of(const std::string& name) const
{
    for (std::size_t i = 0; i < specs_.size(); ++i)
        if (specs_[i].name == name) return i;
    throw invalid_spec("unknown parameter '" + name + "'");
}

bool prior_set::in_support(std::span<const double> theta) const { return std::isfinite(log_density(theta)); }

double prior_set::log_density(std::span<const double> theta) const
{
    if (theta.size() != specs_.size()) throw invalid_spec("parameter vector has wrong length");
    double ld = 0.0;
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        ld += prior_log_density(specs_[i], theta[i]);
        if (!std::isfinite(ld)) return -inf;
    }
    for (const auto& r : rules_) {
        const auto [lo, hi] = frechet_scale_bounds(theta[r.shape]);
        const double scale = theta[r.scale];
        if (!(scale >= lo && scale <= hi)) return -inf;
    }
    return ld;
}

double prior_set::density(std::span<const double> theta) const
{
    const double ld = log_density(theta);
    return std::isfinite(ld) ? std::exp(ld) : 0.0;
}

Eigen::VectorXd prior_set::sds() const
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(specs_.size()));
    for (std::size_t i = 0; i < specs_.size(); ++i) out[static_cast<Eigen::Index>(i)] = prior_sd(specs_[i]);
    return out;
}

Eigen::MatrixXd latin_hypercube(std::span<const prior_spec> priors, std::size_t n, random_stream& rng)
{
    if (n == 0) throw invalid_spec("latin hypercube needs n >= 1");
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd out(rows, static_cast<Eigen::Index>(priors.size()));
    std::vector<std::size_t> strata(n);
    for (std::size_t j = 0; j < priors.size(); ++j) {
        priors[j].validate();
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double u = (static_cast<double>(strata[i]) + rng.uniform()) / static_cast<double>(n);
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = prior_quantile(priors[j], u);
        }
    }
    return out;
}

frechet::frechet(double shape, double scale) : shape_(shape), scale_(scale)
{
    if (!(shape > 0.0) || !(scale > 0.0)) throw invalid_spec("frechet: shape and scale must be positive");
}

double frechet::cdf(double t) const
{
    if (t <= 0.0) return 0.0;
    return std::exp(-std::pow(t / scale_, -shape_));
}

double frechet::quantile(double p) const { return scale_ * std::pow(-std::log(p), -1.0 / shape_); }

double frechet::mean() const
{
    if (shape_ <= 1.0) throw undefined_moment("frechet mean is undefined for shape <= 1");
    return scale_ * std::tgamma(1.0 - 1.0 / shape_);
}

double frechet::median() const { return scale_ * std::pow(std::numbers::ln2, -1.0 / shape_); }

weibull_sojourn::weibull_sojourn(double tau) : tau_(tau)
{
    if (!(tau > 0.0)) throw invalid_spec("weibull sojourn: tau must be positive");
}

double weibull_sojourn::cdf(double t) const
{
    if (t <= 0.0) return 0.0;
    return -std::expm1(-std::pow(t / tau_, shape));
}

double weibull_sojourn::quantile(double p) const { return tau_ * std::pow(-std::log1p(-p), 1.0 / shape); }

double weibull_sojourn::mean() const { return tau_ * std::tgamma(1.0 + 1.0 / shape); }

double weibull_sojourn::sd() const
{
    const double g1 = std::tgamma(1.0 + 1.0 / shape);
    return tau_ * std::sqrt(std::tgamma(1.0 + 2.0 / shape) - g1 * g1);
}

lognormal_size::lognormal_size(double mu, double sigma) : mu_(mu), sigma_(sigma)
{
    if (!(sigma > 0.0)) throw invalid_spec("lognormal: sigma must be positive");
}

double lognormal_size::cdf(double s) const
{
    if (!(s > 0.0)) throw invalid_spec("lognormal cdf: size must be positive");
    return normal_cdf((std::log(s) - mu_) / sigma_);
}

double lognormal_size::sample(random_stream& rng) const { return std::exp(mu_ + sigma_ * rng.normal()); }

double lognormal_size::mean() const { return std::exp(mu_ + 0.5 * sigma_ * sigma_); }

double lognormal_size::median() const { return std::exp(mu_); }

gaussian_kernel::gaussian_kernel(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance))
{
    const auto p = mean_.size();
    if (p == 0 || covariance_.rows() != p || covariance_.cols() != p)
        throw invalid_spec("gaussian kernel: covariance shape does not match mean");
    if (!covariance_.allFinite() || !mean_.allFinite()) throw degenerate_kernel("gaussian kernel: non-finite input");
    const double scale = covariance_.cwiseAbs().maxCoeff();
    if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1e-300))
        throw invalid_spec("gaussian kernel: covariance is not symmetric");

    const double trace = covariance_.trace();
    if (scale == 0.0) {
        point_mass_ = true;
        return;
    }
    // jitter only when the factor is missing or worse conditioned than the jitter itself
    const double jitter = 1e-10 * trace / static_cast<double>(p);
    Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
    if (llt.info() != Eigen::Success || !(llt.matrixLLT().diagonal().array().square().minCoeff() > jitter)) {
        Eigen::MatrixXd reg = covariance_;
        reg.diagonal().array() += jitter;
        llt.compute(reg);
    }
    if (llt.info() != Eigen::Success || !(trace > 0.0))
        throw degenerate_kernel("gaussian kernel: covariance is not positive definite after regularization");
    chol_ = llt.matrixL();
    const double log_det = 2.0 * chol_.diagonal().array().log().sum();
    if (!std::isfinite(log_det)) throw degenerate_kernel("gaussian kernel: singular covariance");
    log_norm_ = -0.5 * (static_cast<double>(p) * std::log(2.0 * std::numbers::pi) + log_det);
}

double gaussian_kernel::log_density(std::span<const double> x) const
{
    if (point_mass_) throw degenerate_kernel("gaussian kernel: density of a point mass");
    if (x.size() != dim()) throw invalid_spec("gaussian kernel: dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd r = chol_.triangularView<Eigen::Lower>().solve(xv - mean_);
    return log_norm_ - 0.5 * r.squaredNorm();
}

double gaussian_kernel::density(std::span<const double> x) const { return std::exp(log_density(x)); }

Eigen::VectorXd gaussian_kernel::sample(random_stream& rng) const
{
    if (point_mass_) return mean_;
    Eigen::VectorXd z(mean_.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    return mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

} // namespace imabc
