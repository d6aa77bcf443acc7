#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "imabc/crc_model.hpp"
#include "imabc/distributions.hpp"
#include "imabc/engine.hpp"
#include "imabc/natural_history.hpp"
#include "imabc/targets.hpp"

namespace imabc {

/// Columns: name, kind (truncated_normal | uniform), mu, sigma, lower, upper,
/// bound_rule, bound_ref. Empty fields take their defaults.
prior_set load_priors(const std::filesystem::path& path);
void save_priors(const prior_set& priors, const std::filesystem::path& path);

/// Columns: id, observed, interval_form, se, final_lower, final_upper,
/// upper_extension, alpha_init, alpha_final, sim_sample_size, cost_rank, nonnegative.
target_set load_targets(const std::filesystem::path& path);
void save_targets(const target_set& targets, const std::filesystem::path& path);

/// Study population specs (JSON, see configs/crc_spin/populations.json).
std::vector<crc::study_spec> load_populations(const std::filesystem::path& path);

/// Columns: sex, birth_cohort (blank = all cohorts), age, qx.
crc::life_table load_life_table(const std::filesystem::path& path);

enum class model_kind { crc_spin, conjugate_normal, symmetric_bimodal };
model_kind parse_model_kind(const std::string& s);
std::string to_string(model_kind k);

struct run_config {
    std::filesystem::path source;     ///< the file it was read from
    model_kind model = model_kind::conjugate_normal;
    std::filesystem::path priors;
    std::filesystem::path targets;
    std::filesystem::path populations; ///< crc_spin only
    std::filesystem::path life_table;  ///< crc_spin only; empty means nobody dies before 110
    engine_config engine;
    std::filesystem::path output_dir;
    std::vector<double> noise_sd;      ///< reference models: sigma_j per target
    std::size_t block_size = 4096;     ///< crc_spin: persons per random-stream block
    std::size_t model_workers = 1;     ///< crc_spin: threads inside one evaluation
};

/// Reads a run config. Relative paths resolve against the config file's
/// directory; `seed` is mandatory and every referenced file must exist.
run_config load_run_config(const std::filesystem::path& path);

/// JSON text equivalent to the loaded config (absolute paths), written next to run outputs.
std::string run_config_to_json(const run_config& config);

} // namespace imabc
