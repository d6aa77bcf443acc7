#include "imabc/reference_models.hpp"

#include <cmath>

#include "imabc/errors.hpp"

namespace imabc {

namespace {

void check_setup(const prior_set& priors, const target_set& targets, const std::vector<double>& noise_sd)
{
    if (priors.size() != 1) throw config_error("reference models have exactly one parameter");
    if (noise_sd.size() != targets.size()) throw config_error("one noise sd per target is required");
    for (double s : noise_sd)
        if (!(s >= 0.0)) throw config_error("noise sd must be non-negative");
}

} // namespace

double mean_of_normal_draws(double mu, double sigma, std::size_t m, random_stream& rng)
{
    if (m == 0) throw invalid_spec("sample size must be positive");
    if (sigma == 0.0) return mu;
    return mu + sigma / std::sqrt(static_cast<double>(m)) * rng.normal();
}

double bimodal_simulate(double theta, double sigma, std::size_t m, random_stream& rng)
{
    return mean_of_normal_draws(std::abs(theta), sigma, m, rng);
}

normal_moments conjugate_posterior(double prior_mean, double prior_sd, const std::vector<double>& observed,
                                   const std::vector<double>& standard_errors)
{
    if (observed.size() != standard_errors.size()) throw invalid_spec("observed/se size mismatch");
    if (!(prior_sd > 0.0)) throw invalid_spec("prior sd must be positive");
    double precision = 1.0 / (prior_sd * prior_sd);
    double weighted = prior_mean * precision;
    for (std::size_t j = 0; j < observed.size(); ++j) {
        const double p = 1.0 / (standard_errors[j] * standard_errors[j]);
        precision += p;
        weighted += observed[j] * p;
    }
    return {weighted / precision, std::sqrt(1.0 / precision)};
}

conjugate_normal_model::conjugate_normal_model(prior_set priors, target_set targets, std::vector<double> noise_sd)
    : priors_(std::move(priors)), targets_(std::move(targets)), noise_sd_(std::move(noise_sd))
{
    check_setup(priors_, targets_, noise_sd_);
    if (priors_[0].kind != prior_kind::truncated_normal)
        throw config_error("conjugate model needs a (wide) truncated normal prior");
}

void conjugate_normal_model::simulate(std::span<const double> theta, std::span<const std::size_t> target_indices,
                                      random_stream& rng, std::span<double> out) const
{
    for (auto j : target_indices) {
        auto stream = rng.split(j);
        out[j] = conjugate_simulate(theta[0], noise_sd_[j], targets_[j].sim_sample_size, stream);
    }
}

normal_moments conjugate_normal_model::posterior() const
{
    std::vector<double> obs, se;
    for (std::size_t j = 0; j < targets_.size(); ++j) {
        obs.push_back(targets_[j].observed);
        se.push_back(noise_sd_[j] / std::sqrt(static_cast<double>(targets_[j].sim_sample_size)));
    }
    return conjugate_posterior(priors_[0].mu, priors_[0].sigma, obs, se);
}

symmetric_bimodal_model::symmetric_bimodal_model(prior_set priors, target_set targets, std::vector<double> noise_sd)
    : priors_(std::move(priors)), targets_(std::move(targets)), noise_sd_(std::move(noise_sd))
{
    check_setup(priors_, targets_, noise_sd_);
}

void symmetric_bimodal_model::simulate(std::span<const double> theta, std::span<const std::size_t> target_indices,
                                       random_stream& rng, std::span<double> out) const
{
    for (auto j : target_indices) {
        auto stream = rng.split(j);
        out[j] = bimodal_simulate(theta[0], noise_sd_[j], targets_[j].sim_sample_size, stream);
    }
}

} // namespace imabc
