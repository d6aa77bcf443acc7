#pragma once

#include <cstddef>
#include <vector>

#include "imabc/model.hpp"
#include "imabc/targets.hpp"

namespace imabc {

/// Mean of m draws from N(mu, sigma), drawn through its exact sampling
/// distribution N(mu, sigma / sqrt(m)).
double mean_of_normal_draws(double mu, double sigma, std::size_t m, random_stream& rng);

inline double conjugate_simulate(double theta, double sigma, std::size_t m, random_stream& rng)
{
    return mean_of_normal_draws(theta, sigma, m, rng);
}

double bimodal_simulate(double theta, double sigma, std::size_t m, random_stream& rng);

struct normal_moments {
    double mean;
    double sd;
};

/// Posterior of a normal mean under a normal prior and independent normal
/// observations with the given standard errors.
normal_moments conjugate_posterior(double prior_mean, double prior_sd, const std::vector<double>& observed,
                                   const std::vector<double>& standard_errors);

/// One parameter; target j is the mean of m_j draws from N(theta, sigma_j).
class conjugate_normal_model : public simulation_model {
public:
    /// `noise_sd` holds sigma_j per target; m_j is the target's sim_sample_size.
    conjugate_normal_model(prior_set priors, target_set targets, std::vector<double> noise_sd);

    const prior_set& priors() const override { return priors_; }
    const target_set& targets() const noexcept { return targets_; }

    void simulate(std::span<const double> theta, std::span<const std::size_t> target_indices, random_stream& rng,
                  std::span<double> out) const override;

    /// Exact posterior under the untruncated normal prior (truncation must be negligible).
    normal_moments posterior() const;

private:
    prior_set priors_;
    target_set targets_;
    std::vector<double> noise_sd_;
};

/// One parameter; target j is the mean of m_j draws from N(|theta|, sigma_j).
/// With a prior symmetric about zero the posterior is symmetric and bimodal.
class symmetric_bimodal_model : public simulation_model {
public:
    symmetric_bimodal_model(prior_set priors, target_set targets, std::vector<double> noise_sd);

    const prior_set& priors() const override { return priors_; }
    const target_set& targets() const noexcept { return targets_; }

    void simulate(std::span<const double> theta, std::span<const std::size_t> target_indices, random_stream& rng,
                  std::span<double> out) const override;

private:
    prior_set priors_;
    target_set targets_;
    std::vector<double> noise_sd_;
};

} // namespace imabc
