#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "imabc/distributions.hpp"
#include "imabc/model.hpp"
#include "imabc/random.hpp"
#include "imabc/targets.hpp"

namespace imabc {

struct engine_config {
    std::size_t n_init = 21000;
    std::size_t n_centers = 10;
    std::size_t batch_per_center = 1000;
    std::size_t n_post = 5000;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 100;
    std::size_t workers = 1;

    void validate() const;
};

enum class point_status { accepted, rejected, pruned };

struct point {
    std::uint64_t index = 0;
    std::vector<double> theta;
    std::vector<double> sim_targets; ///< NaN where the target was never simulated
    std::vector<double> rho;         ///< per-target p-values, NaN where unsimulated
    double rho_min = 0.0;
    double dist = 0.0;
    point_status status = point_status::rejected;
    std::size_t origin_iteration = 0; ///< 0 for prior draws
    int origin_center = -1;           ///< kernel within its iteration, -1 for prior draws
    double weight = 0.0;
    std::size_t groups_evaluated = 0;
    std::string failure;

    bool accepted() const noexcept { return status == point_status::accepted; }
};

/// Per-iteration bookkeeping kept alongside the state.
struct iteration_record {
    std::size_t iteration = 0;
    std::size_t n_total = 0;
    std::size_t n_drawn = 0;
    std::size_t n_drawn_accepted = 0;
    std::size_t n_centers_demoted = 0;
    std::size_t n_pruned = 0;
    std::size_t n_accepted = 0;
    double acceptance_rate = 0.0;
    double ess = 0.0; ///< 0 until tolerances reach their final levels
};

struct engine_state {
    engine_config config;
    std::vector<point> points;
    std::vector<gaussian_kernel> kernels;
    tolerance_state tolerance;
    std::size_t iteration = 0;
    std::size_t n_total = 0;
    std::vector<std::vector<double>> tolerance_history;
    std::vector<iteration_record> history;
    std::vector<std::uint64_t> group_evaluations; ///< model calls per cost-rank group
    bool converged = false;
    double ess = 0.0;

    std::size_t dim() const { return points.empty() ? 0 : points.front().theta.size(); }
    std::size_t accepted_count() const;
    std::vector<std::size_t> accepted_positions() const;
};

/// Draws n_init Latin hypercube points from the prior and evaluates them at
/// the initial alphas. A state with zero accepted points is returned as-is;
/// callers check `accepted_count()`.
engine_state initialize(const engine_config& config, const simulation_model& model, const target_set& targets);

/// Positions (into state.points) of the n_centers best accepted points,
/// ordered by rho_min descending, dist ascending, then index. Once weights
/// exist (tolerances final) the largest weights come first instead, which
/// steers new kernels toward regions the mixture still under-covers. When
/// fewer points are accepted the best ones are reused cyclically.
std::vector<std::size_t> select_centers(const engine_state& state);

/// Proposal covariance around one center (see the 5p / 25p rule).
Eigen::MatrixXd local_covariance(const engine_state& state, const prior_set& priors, std::size_t center);

struct proposal_stats {
    std::size_t drawn = 0;
    std::size_t drawn_accepted = 0;
    std::size_t centers_demoted = 0;
};

/// One sampling step: builds a kernel per center, draws batch_per_center
/// points from each, re-simulates the centers and evaluates everything
/// cheapest target group first with early rejection.
proposal_stats propose_and_evaluate(engine_state& state, const simulation_model& model, const target_set& targets);

struct tolerance_update {
    bool updated = false;
    std::size_t pruned = 0;
};

/// Tightens alphas toward their final values from the median-fit accepted
/// point, pruning at most half of the accepted set.
tolerance_update update_tolerances(engine_state& state, const target_set& targets);

/// Recomputes per-target p-values, rho_min and dist of accepted points under
/// the current tolerance.
void refresh_fit(engine_state& state, const target_set& targets);

double mixture_log_density(const engine_state& state, const prior_set& priors, std::span<const double> theta);
double mixture_density(const engine_state& state, const prior_set& priors, std::span<const double> theta);

/// Importance weights prior/mixture for accepted points, normalized to sum
/// to one; zero elsewhere. Stores them on the points and returns them in
/// point order. Throws empty_posterior when nothing carries weight.
std::vector<double> compute_weights(engine_state& state, const prior_set& priors);

/// (sum w)^2 / sum w^2, which is (sum w^2)^-1 for normalized weights.
double effective_sample_size(std::span<const double> weights);

struct calibration_result {
    engine_state state;
    bool converged = false;
    bool prior_target_incompatible = false;
    double ess = 0.0;
    std::vector<std::string> messages;

    std::vector<std::size_t> accepted_positions() const { return state.accepted_positions(); }
};

struct run_hooks {
    std::function<void(const engine_state&)> after_iteration;
    std::function<void(const std::string&)> log;
};

calibration_result run(const engine_config& config,
                       const simulation_model& model,
                       const target_set& targets,
                       const run_hooks& hooks = {});

/// Continues a run from an existing state (e.g. a loaded checkpoint).
calibration_result resume(engine_state state,
                          const simulation_model& model,
                          const target_set& targets,
                          const run_hooks& hooks = {});

/// n draws with replacement from accepted points, probability proportional to weight.
std::vector<std::vector<double>> resample_posterior(const calibration_result& result, std::size_t n, random_stream& rng);

} // namespace imabc
