#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "imabc/model.hpp"
#include "imabc/natural_history.hpp"
#include "imabc/targets.hpp"

namespace imabc::crc {

enum class statistic_kind {
    seer_incidence,         ///< clinical cancers in the next year per 100,000 at risk
    adenoma_prevalence,     ///< percent of persons with a detected adenoma
    percent_large_adenomas, ///< percent of detected adenomas inside the size band
    preclinical_per_person, ///< detected preclinical cancers per 1,000 persons
    preclinical_per_lesion  ///< detected preclinical cancers per 1,000 detected lesions in the size band
};

statistic_kind parse_statistic(const std::string& s);
std::string to_string(statistic_kind k);

struct population_cell {
    sex person_sex = sex::male;
    double age_lower = 50.0;
    double age_upper = 51.0; ///< exclusive; ages are uniform within the cell
    double weight = 1.0;
};

/// Age ~ normal(mean, sd) truncated to [lower, upper]; sex Bernoulli.
struct age_normal_population {
    double mean = 65.0;
    double sd = 5.0;
    double lower = 20.0;
    double upper = 90.0;
    double male_fraction = 0.5;
};

/// Which persons or lesions count toward one target of a study.
struct study_target {
    std::string id;
    std::optional<sex> person_sex;
    double age_lower = 0.0;
    double age_upper = 1e9;
    std::optional<bool> rectal; ///< seer only: site of the clinical cancer
    double size_lower = 0.0;
    double size_upper = 1e9;
};

/// How lesions present at the screening age are found: colonoscopy uses the
/// size-dependent sensitivity, perfect finds every lesion.
enum class detection_protocol { colonoscopy, perfect };

detection_protocol parse_detection(const std::string& s);

struct study_spec {
    std::string name;
    statistic_kind statistic = statistic_kind::adenoma_prevalence;
    int calendar_year = 2000;
    bool screening_naive = true;
    detection_protocol detection = detection_protocol::colonoscopy;
    std::vector<population_cell> cells;            ///< used when non-empty
    std::optional<age_normal_population> age_normal; ///< used otherwise
    std::vector<study_target> targets;

    void validate() const;
};

/// Deterministic largest-remainder split of m persons over the cells.
std::vector<std::size_t> allocate_persons(const std::vector<population_cell>& cells, std::size_t m);

struct study_result {
    std::vector<double> values; ///< one per study target
    std::vector<double> numerators;
    std::vector<double> denominators;
};

/// Simulates m persons of a study population and returns its target statistics.
/// Persons are processed in blocks, each with its own child stream of `rng`,
/// so the result does not depend on `workers`.
study_result simulate_study(const natural_history_params& params, const study_spec& study, const life_table& lt,
                            std::size_t m, const random_stream& rng, std::size_t workers = 1,
                            std::size_t block_size = 4096);

struct crc_model_options {
    std::size_t block_size = 4096;
    std::size_t workers = 1; ///< threads inside one model evaluation
};

/// CRC-SPIN natural history bound to a target set and its study populations.
class crc_model : public simulation_model {
public:
    crc_model(prior_set priors, target_set targets, std::vector<study_spec> studies, life_table lt,
              crc_model_options options = {});

    const prior_set& priors() const override { return priors_; }
    const target_set& targets() const noexcept { return targets_; }
    const std::vector<study_spec>& studies() const noexcept { return studies_; }

    void simulate(std::span<const double> theta, std::span<const std::size_t> target_indices, random_stream& rng,
                  std::span<double> out) const override;

    /// All targets with cost rank <= cutoff; NaN for the rest.
    std::vector<double> simulate_target_set(std::span<const double> theta, random_stream& rng,
                                            int max_cost_rank = std::numeric_limits<int>::max()) const;

    /// Natural-history parameters from a theta ordered like the priors.
    natural_history_params params_from(std::span<const double> theta) const;

private:
    struct target_ref {
        std::size_t study;
        std::size_t slot;
    };

    prior_set priors_;
    target_set targets_;
    std::vector<study_spec> studies_;
    life_table life_table_;
    crc_model_options options_;
    std::vector<target_ref> refs_;            ///< per target index
    std::vector<std::size_t> study_samples_;  ///< persons per study
    std::vector<std::size_t> param_order_;    ///< theta position of each natural-history parameter
};

} // namespace imabc::crc
