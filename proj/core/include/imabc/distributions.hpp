#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "imabc/random.hpp"

namespace imabc {

enum class prior_kind { truncated_normal, uniform };

/// Prior for one calibrated parameter. `bound_rule` optionally ties the
/// admissible range of this parameter to the value of `bound_ref`.
struct prior_spec {
    std::string name;
    prior_kind kind = prior_kind::uniform;
    double mu = 0.0;
    double sigma = 1.0;
    double lower = 0.0;
    double upper = 1.0;
    std::string bound_rule;
    std::string bound_ref;

    /// Throws invalid_spec when sigma <= 0 (truncated normal) or upper <= lower.
    void validate() const;
};

double prior_sample(const prior_spec& spec, random_stream& rng);
double prior_density(const prior_spec& spec, double x);
double prior_log_density(const prior_spec& spec, double x);
double prior_cdf(const prior_spec& spec, double x);
double prior_quantile(const prior_spec& spec, double p);
double prior_mean(const prior_spec& spec);
double prior_sd(const prior_spec& spec);

/// Rule identifier for the growth-scale constraint: the Frechet scale must
/// put the 10-year probability of reaching 10 mm between 1e-4 and 0.25.
inline constexpr const char* frechet_10mm_rule = "frechet_10mm_within_10y";

/// Admissible (lower, upper) Frechet scale for a given shape under the rule above.
std::pair<double, double> frechet_scale_bounds(double shape);

/// The joint prior: independent marginals plus validity predicates that
/// zero the density on inadmissible combinations.
class prior_set {
public:
    prior_set() = default;
    explicit prior_set(std::vector<prior_spec> specs);

    std::size_t size() const noexcept { return specs_.size(); }
    std::span<const prior_spec> specs() const noexcept { return specs_; }
    const prior_spec& operator[](std::size_t i) const { return specs_[i]; }
    std::vector<std::string> names() const;
    std::size_t index_of(const std::string& name) const;

    bool in_support(std::span<const double> theta) const;
    /// Sum of marginal log densities; -inf outside support or when a bound rule fails.
    double log_density(std::span<const double> theta) const;
    double density(std::span<const double> theta) const;

    /// Per-parameter prior standard deviations.
    Eigen::VectorXd sds() const;

private:
    struct linked_bound {
        std::size_t scale = 0;
        std::size_t shape = 0;
    };
    std::vector<prior_spec> specs_;
    std::vector<linked_bound> rules_;
};

/// Latin hypercube draw: n rows, one column per prior; every column has
/// exactly one value in each of the n equal-probability prior strata.
Eigen::MatrixXd latin_hypercube(std::span<const prior_spec> priors, std::size_t n, random_stream& rng);

/// Frechet distribution used for the time an adenoma takes to reach 10 mm.
class frechet {
public:
    frechet(double shape, double scale);

    double shape() const noexcept { return shape_; }
    double scale() const noexcept { return scale_; }

    double cdf(double t) const;
    double quantile(double p) const;
    double sample(random_stream& rng) const { return quantile(rng.uniform()); }
    /// Throws undefined_moment when shape <= 1.
    double mean() const;
    double median() const;

private:
    double shape_;
    double scale_;
};

/// Weibull sojourn time with the shape fixed at 5.
class weibull_sojourn {
public:
    static constexpr double shape = 5.0;

    explicit weibull_sojourn(double tau);

    double tau() const noexcept { return tau_; }
    double cdf(double t) const;
    double quantile(double p) const;
    double sample(random_stream& rng) const { return quantile(rng.uniform()); }
    double mean() const;
    double sd() const;

private:
    double tau_;
};

/// Lognormal size at transition to preclinical cancer.
class lognormal_size {
public:
    lognormal_size(double mu, double sigma);

    double mu() const noexcept { return mu_; }
    double sigma() const noexcept { return sigma_; }
    /// Throws invalid_spec for s <= 0.
    double cdf(double s) const;
    double sample(random_stream& rng) const;
    double mean() const;
    double median() const;

private:
    double mu_;
    double sigma_;
};

/// Multivariate normal kernel. The covariance is regularized by
/// 1e-10 * trace/p on the diagonal before factorization; an all-zero
/// covariance is treated as a point mass (sampling returns the mean).
class gaussian_kernel {
public:
    gaussian_kernel(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
    const Eigen::VectorXd& mean() const noexcept { return mean_; }
    const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
    bool is_point_mass() const noexcept { return point_mass_; }

    double log_density(std::span<const double> x) const;
    double density(std::span<const double> x) const;
    Eigen::VectorXd sample(random_stream& rng) const;

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd covariance_;
    Eigen::MatrixXd chol_;
    double log_norm_ = 0.0;
    bool point_mass_ = false;
};

/// Standard normal helpers shared across modules.
double normal_cdf(double z);
double normal_quantile(double p);
/// z such that P(|Z| > z) = alpha; +inf at alpha = 0.
double two_sided_z(double alpha);

} // namespace imabc
