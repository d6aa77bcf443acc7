#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "imabc/config.hpp"
#include "imabc/engine.hpp"
#include "imabc/errors.hpp"
#include "imabc/model.hpp"

namespace imabc {

std::unique_ptr<simulation_model> build_model(const run_config& config, const prior_set& priors,
                                              const target_set& targets);

/// Thrown by the after-iteration hook when `stop_after_iteration` is reached;
/// leaves the output directory exactly as a killed process would.
class interrupted : public error {
public:
    using error::error;
};

struct calibrate_options {
    std::optional<std::filesystem::path> resume; ///< checkpoint to continue from
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out;
    std::optional<std::size_t> stop_after_iteration;
    std::function<void(const std::string&)> log;
};

struct calibrate_outcome {
    calibration_result result;
    std::filesystem::path output_dir;
};

/// Runs (or resumes) a calibration and writes into the output directory:
/// checkpoint_iter_NNN.json per iteration plus checkpoint_latest.json,
/// accepted.csv, tolerance_history.csv, diagnostics.csv, report.json and
/// copies of the run config, priors and targets.
calibrate_outcome calibrate(const std::filesystem::path& config_path, const calibrate_options& options = {});

/// Weighted posterior mean and 2.5 / 97.5 percentiles of one parameter.
struct weighted_summary {
    double mean;
    double lower;
    double upper;
};

/// Weighted quantile: smallest value whose cumulative normalized weight reaches q.
double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q);
weighted_summary summarize_values(const std::vector<double>& values, const std::vector<double>& weights);

/// Accepted points of a finished calibration, read back from accepted.csv.
struct posterior_table {
    std::vector<std::string> names;
    std::vector<std::vector<double>> theta;
    std::vector<double> weights;
};

posterior_table read_posterior(const std::filesystem::path& result_dir);

struct density_grid {
    std::string x_name;
    std::string y_name;
    std::vector<double> x; ///< cell centers
    std::vector<double> y;
    std::vector<double> density; ///< row-major, x fastest; integrates to one
};

density_grid weighted_density_grid(const posterior_table& posterior, const std::string& x_name,
                                   const std::string& y_name, std::size_t bins = 50);

/// Writes posterior_summary.csv and one density_<x>__<y>.csv per pair into `out`.
std::vector<weighted_summary> summarize(const std::filesystem::path& result_dir, const std::filesystem::path& out,
                                        const std::vector<std::pair<std::string, std::string>>& pairs = {},
                                        std::size_t bins = 50);

/// n posterior draws with replacement, written to `out`/draws.csv. The
/// default seed is the calibration seed.
std::vector<std::vector<double>> resample(const std::filesystem::path& result_dir, std::size_t n,
                                          std::optional<std::uint64_t> seed, const std::filesystem::path& out);

struct target_prediction {
    std::string id;
    double observed;
    double mean;
    double lower;
    double upper;
};

/// Simulates the targets (all when `target_ids` is empty) at n posterior
/// draws; writes predictions.csv and predicted_draws.csv into `out`.
std::vector<target_prediction> predict(const std::filesystem::path& result_dir, std::size_t n_draws,
                                       const std::vector<std::string>& target_ids,
                                       std::optional<std::uint64_t> seed, const std::filesystem::path& out,
                                       std::size_t workers = 1);

} // namespace imabc
