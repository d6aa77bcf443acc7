#pragma once

#include <filesystem>
#include <string>

#include "imabc/engine.hpp"

namespace imabc {

/// Full engine state as JSON text. Doubles round-trip exactly; NaN is
/// written as null and infinities as the strings "inf" / "-inf". The worker
/// count is not stored since it never changes results.
std::string checkpoint_to_string(const engine_state& state);
engine_state checkpoint_from_string(const std::string& text);

/// Writes through a temporary file and a rename so a crash never leaves a
/// truncated checkpoint behind.
void save_checkpoint(const engine_state& state, const std::filesystem::path& path);
engine_state load_checkpoint(const std::filesystem::path& path);

/// Throws config_error when a checkpoint cannot continue under `config`
/// (seed, sample sizes or problem dimensions differ).
void check_resume_compatible(const engine_state& state, const engine_config& config, std::size_t n_params,
                             std::size_t n_targets);

} // namespace imabc
