#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "imabc/random.hpp"

namespace imabc::crc {

enum class sex { male, female };
/// Six large-bowel locations, distal to proximal.
enum class site { rectum, sigmoid, descending, transverse, ascending, cecum };
enum class lesion { adenoma, preclinical_cancer };

inline bool is_female(sex s) noexcept { return s == sex::female; }
inline bool is_rectal(site s) noexcept { return s == site::rectum; }

std::string to_string(sex s);
sex parse_sex(const std::string& s);

/// The 21 calibrated natural-history parameters, in prior-table order.
struct natural_history_params {
    // adenoma risk
    double A = -6.4;
    double sigma_alpha = 1.25;
    double alpha1 = -0.5;
    double alpha20 = 0.035;
    double alpha50 = 0.03;
    double alpha60 = 0.02;
    double alpha70 = 0.005;
    // time to 10 mm (Frechet shape/scale)
    double beta1_colon = 2.0;
    double beta1_rectum = 2.0;
    double beta2_colon = 25.0;
    double beta2_rectum = 25.0;
    // size at transition to preclinical cancer
    std::array<double, 8> gamma{3.1, -0.06, 0.0, 0.0, -0.008, 0.0, 0.0, 0.0};
    // sojourn time scale
    double tau_colon = 3.0;
    double tau_rectum = 3.0;

    static constexpr std::size_t count = 21;
    static const std::array<std::string, count>& names();
    static natural_history_params from_vector(std::span<const double> theta);
    std::vector<double> to_vector() const;

    /// Published posterior means of the 2.0 calibration.
    static natural_history_params posterior_means();
};

struct growth_constants {
    static constexpr double d_inf = 50.0;
    static constexpr double d_0 = 1.0;
    static constexpr double shape_p = 3.0;
    static constexpr double lognormal_sd = 0.5;
    static constexpr double weibull_shape = 5.0;
};

/// Log instantaneous adenoma risk at `age` (>= 20): piecewise linear in age
/// with knots at 50, 60 and 70. Throws out_of_domain below 20.
double log_adenoma_risk(const natural_history_params& p, sex s, double alpha0, double age);

/// Integral of the adenoma intensity over [a1, a2], piece by piece in closed form.
double cumulative_intensity(const natural_history_params& p, sex s, double alpha0, double a1, double a2);

/// Adenoma onset ages on [20, end_age) from the non-homogeneous Poisson process.
std::vector<double> sample_adenoma_initiations(const natural_history_params& p, sex s, double alpha0, double end_age,
                                               random_stream& rng);

const std::array<double, 6>& location_probabilities();
site sample_location(random_stream& rng);

/// Generalized von Bertalanffy growth calibrated by the time to reach 10 mm.
class adenoma_growth {
public:
    explicit adenoma_growth(double t10);

    double lambda() const noexcept { return lambda_; }
    /// Diameter (mm) t years after onset.
    double diameter_at(double t) const;
    /// Years after onset at which the diameter reaches `size`; nullopt when
    /// the size is never attained (size >= d_inf).
    std::optional<double> time_to_size(double size) const;

private:
    double lambda_;
};

double transition_log_size_mean(const natural_history_params& p, sex s, site loc, double onset_age);
double sample_transition_size(const natural_history_params& p, sex s, site loc, double onset_age, random_stream& rng);

/// Probability that colonoscopy detects a lesion of the given size (mm >= 1).
double colonoscopy_sensitivity(double size, lesion kind);

/// Other-cause mortality: annual death probabilities by sex, birth cohort
/// and single-year age, constant within each listed age interval.
class life_table {
public:
    struct row {
        sex s;
        std::optional<int> birth_cohort; ///< nullopt applies to every cohort
        int age;
        double qx;
    };

    static constexpr int max_age = 110;

    life_table() = default;
    explicit life_table(std::vector<row> rows);

    /// Annual probability of death at `age`.
    double qx(sex s, int birth_year, int age) const;
    /// Death age drawn conditional on being alive at `alive_at`.
    double sample_death_age(sex s, int birth_year, double alive_at, random_stream& rng) const;

    /// Nobody dies before max_age; used by tests and zero-mortality scenarios.
    static life_table immortal();

private:
    struct schedule {
        std::array<double, max_age + 1> cumulative_hazard{}; ///< at integer ages 0..max_age
    };
    const schedule& lookup(sex s, int birth_year) const;
    double hazard_at(const schedule& sch, double age) const;

    std::map<std::pair<int, int>, schedule> schedules_; ///< (sex, cohort or INT_MIN for "all")
};

struct adenoma {
    double onset_age = 0.0;
    site location = site::sigmoid;
    double t10 = 0.0;
    double growth_rate = 0.0;
    double transition_size = 0.0;
    std::optional<double> transition_age;
    std::optional<double> clinical_age;

    double size_at(double age) const;
};

struct person_history {
    sex person_sex = sex::male;
    int birth_year = 1900;
    double alpha0 = 0.0;
    double death_age = 0.0;
    std::vector<adenoma> adenomas;

    /// Earliest clinical detection and the adenoma that produced it.
    std::optional<std::size_t> first_clinical() const;
};

struct person_options {
    double alive_at = 0.0;                                          ///< condition survival to this age
    double horizon = std::numeric_limits<double>::infinity();       ///< stop simulating onsets here
};

void simulate_person(const natural_history_params& p, sex s, int birth_year, const life_table& lt, random_stream& rng,
                     person_history& out, const person_options& opts = {});

person_history simulate_person(const natural_history_params& p, sex s, int birth_year, const life_table& lt,
                               random_stream& rng, const person_options& opts = {});

} // namespace imabc::crc
