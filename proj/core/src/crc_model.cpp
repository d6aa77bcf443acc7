#include "imabc/crc_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "imabc/distributions.hpp"
#include "imabc/errors.hpp"
#include "imabc/parallel.hpp"

namespace imabc::crc {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double statistic_scale(statistic_kind k)
{
    switch (k) {
    case statistic_kind::seer_incidence: return 1e5;
    case statistic_kind::adenoma_prevalence:
    case statistic_kind::percent_large_adenomas: return 100.0;
    case statistic_kind::preclinical_per_person:
    case statistic_kind::preclinical_per_lesion: return 1000.0;
    }
    return 1.0;
}

struct counters {
    std::vector<double> num;
    std::vector<double> den;
};

struct screened_lesion {
    double size;
    bool cancer;
};

bool person_matches(const study_target& t, sex s, double age)
{
    if (t.person_sex && *t.person_sex != s) return false;
    return age >= t.age_lower && age < t.age_upper;
}

bool size_matches(const study_target& t, double size) { return size >= t.size_lower && size < t.size_upper; }

class person_sampler {
public:
    person_sampler(const study_spec& study, std::size_t m) : study_(study)
    {
        if (!study.cells.empty()) {
            const auto counts = allocate_persons(study.cells, m);
            cumulative_.resize(counts.size());
            std::partial_sum(counts.begin(), counts.end(), cumulative_.begin());
        } else {
            const auto& an = *study.age_normal;
            age_prior_.kind = prior_kind::truncated_normal;
            age_prior_.mu = an.mean;
            age_prior_.sigma = an.sd;
            age_prior_.lower = an.lower;
            age_prior_.upper = an.upper;
        }
    }

    std::pair<sex, double> draw(std::size_t person, random_stream& rng) const
    {
        if (!cumulative_.empty()) {
            const auto c = static_cast<std::size_t>(
                std::upper_bound(cumulative_.begin(), cumulative_.end(), person) - cumulative_.begin());
            const auto& cell = study_.cells[c];
            return {cell.person_sex, cell.age_lower + (cell.age_upper - cell.age_lower) * rng.uniform()};
        }
        const sex s = rng.uniform() < study_.age_normal->male_fraction ? sex::male : sex::female;
        return {s, prior_quantile(age_prior_, rng.uniform())};
    }

private:
    const study_spec& study_;
    std::vector<std::size_t> cumulative_;
    prior_spec age_prior_;
};

void simulate_block(const natural_history_params& params, const study_spec& study, const life_table& lt,
                    const person_sampler& sampler, std::size_t first, std::size_t last, random_stream rng,
                    counters& acc)
{
    const bool seer = study.statistic == statistic_kind::seer_incidence;
    person_history h;
    std::vector<screened_lesion> detected;
    for (std::size_t k = first; k < last; ++k) {
        const auto [s, age] = sampler.draw(k, rng);
        const int birth_year = study.calendar_year - static_cast<int>(std::floor(age));
        simulate_person(params, s, birth_year, lt, rng, h, {age, seer ? age + 1.0 : age});

        const auto first_clinical = h.first_clinical();
        const double clinical_age = first_clinical ? *h.adenomas[*first_clinical].clinical_age
                                                   : std::numeric_limits<double>::infinity();
        if (clinical_age <= age) continue; // already diagnosed: not at risk / not eligible

        if (seer) {
            const bool incident = clinical_age <= age + 1.0;
            const bool rectal = incident && is_rectal(h.adenomas[*first_clinical].location);
            for (std::size_t t = 0; t < study.targets.size(); ++t) {
                const auto& tg = study.targets[t];
                if (!person_matches(tg, s, age)) continue;
                acc.den[t] += 1.0;
                if (incident && (!tg.rectal || *tg.rectal == rectal)) acc.num[t] += 1.0;
            }
            continue;
        }

        detected.clear();
        for (const auto& a : h.adenomas) {
            const bool cancer = a.transition_age && *a.transition_age <= age;
            const double size = cancer ? a.transition_size : a.size_at(age);
            const double sens =
                study.detection == detection_protocol::perfect
                    ? 1.0
                    : colonoscopy_sensitivity(std::max(size, 1.0), cancer ? lesion::preclinical_cancer : lesion::adenoma);
            if (rng.uniform() < sens) detected.push_back({size, cancer});
        }

        for (std::size_t t = 0; t < study.targets.size(); ++t) {
            const auto& tg = study.targets[t];
            if (!person_matches(tg, s, age)) continue;
            switch (study.statistic) {
            case statistic_kind::adenoma_prevalence: {
                acc.den[t] += 1.0;
                const bool any = std::any_of(detected.begin(), detected.end(),
                                             [&](const auto& l) { return !l.cancer && size_matches(tg, l.size); });
                if (any) acc.num[t] += 1.0;
                break;
            }
            case statistic_kind::percent_large_adenomas:
                for (const auto& l : detected) {
                    if (l.cancer) continue;
                    acc.den[t] += 1.0;
                    if (size_matches(tg, l.size)) acc.num[t] += 1.0;
                }
                break;
            case statistic_kind::preclinical_per_person:
                acc.den[t] += 1.0;
                for (const auto& l : detected)
                    if (l.cancer && size_matches(tg, l.size)) acc.num[t] += 1.0;
                break;
            case statistic_kind::preclinical_per_lesion:
                for (const auto& l : detected) {
                    if (!size_matches(tg, l.size)) continue;
                    acc.den[t] += 1.0;
                    if (l.cancer) acc.num[t] += 1.0;
                }
                break;
            case statistic_kind::seer_incidence: break;
            }
        }
    }
}

} // namespace

statistic_kind parse_statistic(const std::string& s)
{
    if (s == "seer_incidence") return statistic_kind::seer_incidence;
    if (s == "adenoma_prevalence") return statistic_kind::adenoma_prevalence;
    if (s == "percent_large_adenomas") return statistic_kind::percent_large_adenomas;
    if (s == "preclinical_per_person") return statistic_kind::preclinical_per_person;
    if (s == "preclinical_per_lesion") return statistic_kind::preclinical_per_lesion;
    throw config_error("unknown study statistic '" + s + "'");
}

detection_protocol parse_detection(const std::string& s)
{
    if (s == "colonoscopy") return detection_protocol::colonoscopy;
    if (s == "perfect" || s == "none") return detection_protocol::perfect;
    throw config_error("unknown detection protocol '" + s + "'");
}

std::string to_string(statistic_kind k)
{
    switch (k) {
    case statistic_kind::seer_incidence: return "seer_incidence";
    case statistic_kind::adenoma_prevalence: return "adenoma_prevalence";
    case statistic_kind::percent_large_adenomas: return "percent_large_adenomas";
    case statistic_kind::preclinical_per_person: return "preclinical_per_person";
    case statistic_kind::preclinical_per_lesion: return "preclinical_per_lesion";
    }
    return "?";
}

void study_spec::validate() const
{
    if (name.empty()) throw config_error("study needs a name");
    if (targets.empty()) throw config_error("study '" + name + "' has no targets");
    if (cells.empty() && !age_normal) throw config_error("study '" + name + "' has no population");
    if (!cells.empty()) {
        double total = 0.0;
        for (const auto& c : cells) {
            if (!(c.weight >= 0.0) || !(c.age_upper > c.age_lower) || c.age_lower < 0.0)
                throw config_error("study '" + name + "' has an invalid population cell");
            total += c.weight;
        }
        if (!(total > 0.0)) throw config_error("study '" + name + "' population weights sum to zero");
    } else {
        const auto& a = *age_normal;
        if (!(a.sd > 0.0) || !(a.upper > a.lower) || !(a.male_fraction >= 0.0 && a.male_fraction <= 1.0))
            throw config_error("study '" + name + "' has an invalid age_normal population");
    }
    for (const auto& t : targets)
        if (!(t.age_upper > t.age_lower) || !(t.size_upper > t.size_lower))
            throw config_error("study target '" + t.id + "' has an empty filter");
}

std::vector<std::size_t> allocate_persons(const std::vector<population_cell>& cells, std::size_t m)
{
    const double total = std::accumulate(cells.begin(), cells.end(), 0.0,
                                         [](double acc, const population_cell& c) { return acc + c.weight; });
    std::vector<std::size_t> counts(cells.size());
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const double exact = static_cast<double>(m) * cells[i].weight / total;
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        remainders.emplace_back(exact - std::floor(exact), i);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < m && r < remainders.size(); ++r, ++assigned) ++counts[remainders[r].second];
    return counts;
}

study_result simulate_study(const natural_history_params& params, const study_spec& study, const life_table& lt,
                            std::size_t m, const random_stream& rng, std::size_t workers, std::size_t block_size)
{
    block_size = std::max<std::size_t>(block_size, 1);
    const person_sampler sampler(study, m);
    const std::size_t n_blocks = (m + block_size - 1) / block_size;
    const std::size_t n_t = study.targets.size();
    std::vector<counters> per_block(n_blocks, counters{std::vector<double>(n_t), std::vector<double>(n_t)});

    parallel_for(n_blocks, workers, [&](std::size_t b) {
        const std::size_t first = b * block_size;
        simulate_block(params, study, lt, sampler, first, std::min(m, first + block_size), rng.split(b), per_block[b]);
    });

    study_result r{std::vector<double>(n_t), std::vector<double>(n_t), std::vector<double>(n_t)};
    for (const auto& c : per_block)
        for (std::size_t t = 0; t < n_t; ++t) {
            r.numerators[t] += c.num[t];
            r.denominators[t] += c.den[t];
        }
    const double scale = statistic_scale(study.statistic);
    for (std::size_t t = 0; t < n_t; ++t)
        r.values[t] = r.denominators[t] > 0.0 ? scale * r.numerators[t] / r.denominators[t] : 0.0;
    return r;
}

crc_model::crc_model(prior_set priors, target_set targets, std::vector<study_spec> studies, life_table lt,
                     crc_model_options options)
    : priors_(std::move(priors)),
      targets_(std::move(targets)),
      studies_(std::move(studies)),
      life_table_(std::move(lt)),
      options_(options)
{
    for (const auto& name : natural_history_params::names()) param_order_.push_back(priors_.index_of(name));
    if (priors_.size() != natural_history_params::count)
        throw config_error("CRC model expects exactly 21 parameters");

    refs_.assign(targets_.size(), target_ref{studies_.size(), 0});
    study_samples_.assign(studies_.size(), 0);
    for (std::size_t s = 0; s < studies_.size(); ++s) {
        studies_[s].validate();
        for (std::size_t k = 0; k < studies_[s].targets.size(); ++k) {
            const auto& id = studies_[s].targets[k].id;
            std::size_t j;
            try {
                j = targets_.index_of(id);
            } catch (const error&) {
                continue; // study statistic not used for calibration
            }
            if (refs_[j].study != studies_.size())
                throw config_error("target '" + id + "' is served by more than one study");
            refs_[j] = {s, k};
            study_samples_[s] = std::max(study_samples_[s], targets_[j].sim_sample_size);
        }
    }
    for (std::size_t j = 0; j < targets_.size(); ++j)
        if (refs_[j].study == studies_.size())
            throw config_error("no study population configured for target '" + targets_[j].id + "'");
}

natural_history_params crc_model::params_from(std::span<const double> theta) const
{
    if (theta.size() != priors_.size()) throw invalid_spec("theta has the wrong dimension");
    std::vector<double> ordered(natural_history_params::count);
    for (std::size_t k = 0; k < ordered.size(); ++k) ordered[k] = theta[param_order_[k]];
    return natural_history_params::from_vector(ordered);
}

void crc_model::simulate(std::span<const double> theta, std::span<const std::size_t> target_indices,
                         random_stream& rng, std::span<double> out) const
{
    const auto params = params_from(theta);
    std::vector<bool> needed(studies_.size(), false);
    for (auto j : target_indices) needed[refs_[j].study] = true;
    std::vector<std::vector<double>> values(studies_.size());
    for (std::size_t s = 0; s < studies_.size(); ++s) {
        if (!needed[s]) continue;
        values[s] = simulate_study(params, studies_[s], life_table_, study_samples_[s], rng.split(s),
                                   options_.workers, options_.block_size)
                        .values;
    }
    for (auto j : target_indices) out[j] = values[refs_[j].study][refs_[j].slot];
}

std::vector<double> crc_model::simulate_target_set(std::span<const double> theta, random_stream& rng,
                                                   int max_cost_rank) const
{
    std::vector<std::size_t> wanted;
    for (std::size_t j = 0; j < targets_.size(); ++j)
        if (targets_[j].cost_rank <= max_cost_rank) wanted.push_back(j);
    std::vector<double> out(targets_.size(), nan);
    simulate(theta, wanted, rng, out);
    return out;
}

} // namespace imabc::crc
