#include "imabc/natural_history.hpp"

#include <algorithm>
#include <climits>
#include <cmath>

#include "imabc/distributions.hpp"
#include "imabc/errors.hpp"

namespace imabc::crc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct risk_segment {
    double start;
    double end;
    double slope;
};

std::array<risk_segment, 4> risk_segments(const natural_history_params& p)
{
    return {{{20.0, 50.0, p.alpha20}, {50.0, 60.0, p.alpha50}, {60.0, 70.0, p.alpha60}, {70.0, inf, p.alpha70}}};
}

/// Integral of exp(c + b s) for s in [0, len].
double segment_mass(double c, double b, double len)
{
    if (len == inf) return b < 0.0 ? std::exp(c) / -b : inf;
    if (std::abs(b) < 1e-14) return len * std::exp(c);
    return std::exp(c) * std::expm1(b * len) / b;
}

/// Offset s at which the integral of exp(c + b s) from 0 reaches `mass`
/// (the caller guarantees the segment holds at least that much).
double segment_inverse(double c, double b, double mass)
{
    if (std::abs(b) < 1e-14) return mass * std::exp(-c);
    return std::log1p(b * mass * std::exp(-c)) / b;
}

const double frac_d0 = std::pow(growth_constants::d_0 / growth_constants::d_inf, 1.0 / growth_constants::shape_p) - 1.0;

} // namespace

std::string to_string(sex s) { return s == sex::female ? "female" : "male"; }

sex parse_sex(const std::string& s)
{
    if (s == "female" || s == "F" || s == "f") return sex::female;
    if (s == "male" || s == "M" || s == "m") return sex::male;
    throw config_error("unknown sex '" + s + "'");
}

const std::array<std::string, natural_history_params::count>& natural_history_params::names()
{
    static const std::array<std::string, count> n{
        "A",          "sigma_alpha", "alpha1",       "alpha20",     "alpha50", "alpha60", "alpha70",
        "beta1_colon", "beta1_rectum", "beta2_colon", "beta2_rectum", "gamma0", "gamma1",  "gamma2",
        "gamma3",     "gamma4",      "gamma5",       "gamma6",      "gamma7",  "tau_colon", "tau_rectum"};
    return n;
}

natural_history_params natural_history_params::from_vector(std::span<const double> v)
{
    if (v.size() != count) throw invalid_spec("natural history needs 21 parameters");
    natural_history_params p;
    p.A = v[0];
    p.sigma_alpha = v[1];
    p.alpha1 = v[2];
    p.alpha20 = v[3];
    p.alpha50 = v[4];
    p.alpha60 = v[5];
    p.alpha70 = v[6];
    p.beta1_colon = v[7];
    p.beta1_rectum = v[8];
    p.beta2_colon = v[9];
    p.beta2_rectum = v[10];
    for (std::size_t k = 0; k < 8; ++k) p.gamma[k] = v[11 + k];
    p.tau_colon = v[19];
    p.tau_rectum = v[20];
    return p;
}

std::vector<double> natural_history_params::to_vector() const
{
    std::vector<double> v{A, sigma_alpha, alpha1, alpha20, alpha50, alpha60, alpha70,
                          beta1_colon, beta1_rectum, beta2_colon, beta2_rectum};
    v.insert(v.end(), gamma.begin(), gamma.end());
    v.push_back(tau_colon);
    v.push_back(tau_rectum);
    return v;
}

natural_history_params natural_history_params::posterior_means()
{
    natural_history_params p;
    p.A = -6.36;
    p.sigma_alpha = 1.28;
    p.alpha1 = -0.61;
    p.alpha20 = 0.041;
    p.alpha50 = 0.028;
    p.alpha60 = 0.013;
    p.alpha70 = 0.008;
    p.beta1_colon = 1.32;
    p.beta1_rectum = 3.30;
    p.beta2_colon = 38.1;
    p.beta2_rectum = 16.4;
    p.gamma = {3.23, -0.17, -0.07, 0.12, -0.009, 0.001, 0.000, 0.000};
    p.tau_colon = 1.91;
    p.tau_rectum = 2.32;
    return p;
}

double log_adenoma_risk(const natural_history_params& p, sex s, double alpha0, double age)
{
    if (!(age >= 20.0)) throw out_of_domain("adenoma risk is zero before age 20");
    double r = alpha0 + (is_female(s) ? p.alpha1 : 0.0);
    r += std::min(age - 20.0, 30.0) * p.alpha20;
    if (age >= 50.0) r += std::min(age - 50.0, 10.0) * p.alpha50;
    if (age >= 60.0) r += std::min(age - 60.0, 10.0) * p.alpha60;
    if (age >= 70.0) r += (age - 70.0) * p.alpha70;
    return r;
}

double cumulative_intensity(const natural_history_params& p, sex s, double alpha0, double a1, double a2)
{
    if (!(a1 >= 20.0) || !(a2 >= a1)) throw out_of_domain("cumulative intensity needs 20 <= a1 <= a2");
    double total = 0.0;
    for (const auto& seg : risk_segments(p)) {
        const double lo = std::max(a1, seg.start);
        const double hi = std::min(a2, seg.end);
        if (!(hi > lo)) continue;
        total += segment_mass(log_adenoma_risk(p, s, alpha0, lo), seg.slope, hi - lo);
    }
    return total;
}

std::vector<double> sample_adenoma_initiations(const natural_history_params& p, sex s, double alpha0, double end_age,
                                               random_stream& rng)
{
    std::vector<double> onsets;
    if (!(end_age > 20.0)) return onsets;
    const auto segments = risk_segments(p);
    std::size_t k = 0;
    double age = 20.0;
    while (true) {
        double need = rng.exponential();
        while (true) {
            const auto& seg = segments[k];
            const double c = log_adenoma_risk(p, s, alpha0, age);
            const double mass = segment_mass(c, seg.slope, seg.end - age);
            if (need <= mass) {
                age = std::min(age + segment_inverse(c, seg.slope, need), seg.end);
                break;
            }
            if (k + 1 == segments.size()) return onsets; // finite total intensity exhausted
            need -= mass;
            age = seg.end;
            ++k;
        }
        if (age >= end_age) return onsets;
        onsets.push_back(age);
    }
}

const std::array<double, 6>& location_probabilities()
{
    static const std::array<double, 6> probs{0.09, 0.24, 0.12, 0.24, 0.23, 0.08};
    return probs;
}

site sample_location(random_stream& rng)
{
    const auto& probs = location_probabilities();
    double u = rng.uniform();
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        if (u < probs[i]) return static_cast<site>(i);
        u -= probs[i];
    }
    return site::cecum;
}

adenoma_growth::adenoma_growth(double t10)
{
    if (!(t10 > 0.0)) throw invalid_spec("time to 10 mm must be positive");
    const double frac_10 = std::pow(10.0 / growth_constants::d_inf, 1.0 / growth_constants::shape_p) - 1.0;
    lambda_ = -std::log(frac_10 / frac_d0) / t10;
}

double adenoma_growth::diameter_at(double t) const
{
    return growth_constants::d_inf * std::pow(1.0 + frac_d0 * std::exp(-lambda_ * t), growth_constants::shape_p);
}

std::optional<double> adenoma_growth::time_to_size(double size) const
{
    if (size >= growth_constants::d_inf) return std::nullopt;
    if (size <= growth_constants::d_0) return 0.0;
    const double frac = std::pow(size / growth_constants::d_inf, 1.0 / growth_constants::shape_p) - 1.0;
    return -std::log(frac / frac_d0) / lambda_;
}

double transition_log_size_mean(const natural_history_params& p, sex s, site loc, double onset_age)
{
    const double f = is_female(s) ? 1.0 : 0.0;
    const double r = is_rectal(loc) ? 1.0 : 0.0;
    const auto& g = p.gamma;
    return g[0] + g[1] * f + g[2] * r + g[3] * f * r + (g[4] + g[5] * f + g[6] * r + g[7] * f * r) * onset_age;
}

double sample_transition_size(const natural_history_params& p, sex s, site loc, double onset_age, random_stream& rng)
{
    return std::exp(transition_log_size_mean(p, s, loc, onset_age) + growth_constants::lognormal_sd * rng.normal());
}

double colonoscopy_sensitivity(double size, lesion kind)
{
    if (!(size >= 1.0)) throw invalid_spec("lesion size must be at least 1 mm");
    double miss;
    if (size <= 15.0)
        miss = 0.34 - 0.0349 * size + 0.0009 * size * size;
    else if (size <= 30.0)
        miss = 0.01;
    else if (size <= 40.0)
        miss = 0.005;
    else
        miss = 0.001;
    const double adenoma_sens = 1.0 - miss;
    return kind == lesion::preclinical_cancer ? std::max(0.95, adenoma_sens) : adenoma_sens;
}

life_table::life_table(std::vector<row> rows)
{
    if (rows.empty()) throw config_error("life table is empty");
    std::map<std::pair<int, int>, std::vector<std::pair<int, double>>> grouped;
    for (const auto& r : rows) {
        if (!(r.qx >= 0.0 && r.qx <= 1.0)) throw config_error("life table qx must lie in [0, 1]");
        if (r.age < 0 || r.age > max_age) throw config_error("life table age out of range");
        grouped[{static_cast<int>(r.s), r.birth_cohort.value_or(INT_MIN)}].emplace_back(r.age, r.qx);
    }
    for (auto& [key, entries] : grouped) {
        std::sort(entries.begin(), entries.end());
        if (entries.front().first != 0) throw config_error("life table schedules must start at age 0");
        schedule sch;
        std::size_t e = 0;
        double h = 0.0;
        for (int age = 0; age <= max_age; ++age) {
            while (e + 1 < entries.size() && entries[e + 1].first <= age) ++e;
            sch.cumulative_hazard[static_cast<std::size_t>(age)] = h;
            const double q = entries[e].second;
            h += q >= 1.0 ? inf : -std::log1p(-q);
        }
        schedules_[key] = sch;
    }
}

life_table life_table::immortal()
{
    return life_table({{sex::male, std::nullopt, 0, 0.0}, {sex::female, std::nullopt, 0, 0.0}});
}

const life_table::schedule& life_table::lookup(sex s, int birth_year) const
{
    const int sx = static_cast<int>(s);
    // Exact cohort, else the latest cohort at or before birth_year, else the all-cohort schedule.
    auto it = schedules_.upper_bound({sx, birth_year});
    if (it != schedules_.begin()) {
        auto prev = std::prev(it);
        if (prev->first.first == sx && prev->first.second != INT_MIN) return prev->second;
    }
    auto all = schedules_.find({sx, INT_MIN});
    if (all != schedules_.end()) return all->second;
    for (const auto& [key, sch] : schedules_)
        if (key.first == sx) return sch;
    throw config_error("life table has no schedule for " + to_string(s));
}

double life_table::hazard_at(const schedule& sch, double age) const
{
    if (age >= max_age) return inf;
    const auto a = static_cast<std::size_t>(std::floor(age));
    const double h0 = sch.cumulative_hazard[a];
    const double h1 = a + 1 <= static_cast<std::size_t>(max_age) ? sch.cumulative_hazard[a + 1] : inf;
    if (h1 == inf) return age == static_cast<double>(a) ? h0 : inf;
    return h0 + (h1 - h0) * (age - static_cast<double>(a));
}

double life_table::qx(sex s, int birth_year, int age) const
{
    const auto& sch = lookup(s, birth_year);
    if (age >= max_age) return 1.0;
    const double h = sch.cumulative_hazard[static_cast<std::size_t>(age + 1)] - sch.cumulative_hazard[static_cast<std::size_t>(age)];
    return -std::expm1(-h);
}

double life_table::sample_death_age(sex s, int birth_year, double alive_at, random_stream& rng) const
{
    const auto& sch = lookup(s, birth_year);
    alive_at = std::max(alive_at, 0.0);
    if (alive_at >= max_age) return alive_at;
    const double target = hazard_at(sch, alive_at) + rng.exponential();
    // Piecewise-constant hazard within each year of age.
    auto a = static_cast<std::size_t>(std::floor(alive_at));
    while (a < static_cast<std::size_t>(max_age) && sch.cumulative_hazard[a + 1] < target) ++a;
    if (a >= static_cast<std::size_t>(max_age)) return max_age;
    const double h0 = sch.cumulative_hazard[a];
    const double h1 = sch.cumulative_hazard[a + 1];
    if (h1 == inf) return std::max(alive_at, static_cast<double>(a));
    if (h1 == h0) return static_cast<double>(a + 1);
    return std::max(alive_at, static_cast<double>(a) + (target - h0) / (h1 - h0));
}

double adenoma::size_at(double age) const
{
    if (age <= onset_age) return growth_constants::d_0;
    return adenoma_growth(t10).diameter_at(age - onset_age);
}

std::optional<std::size_t> person_history::first_clinical() const
{
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < adenomas.size(); ++i) {
        const auto& c = adenomas[i].clinical_age;
        if (c && (!best || *c < *adenomas[*best].clinical_age)) best = i;
    }
    return best;
}

void simulate_person(const natural_history_params& p, sex s, int birth_year, const life_table& lt, random_stream& rng,
                     person_history& out, const person_options& opts)
{
    out.person_sex = s;
    out.birth_year = birth_year;
    out.alpha0 = p.A + p.sigma_alpha * rng.normal();
    out.death_age = lt.sample_death_age(s, birth_year, opts.alive_at, rng);
    out.adenomas.clear();

    const double end = std::min(out.death_age, opts.horizon);
    for (double onset : sample_adenoma_initiations(p, s, out.alpha0, end, rng)) {
        adenoma a;
        a.onset_age = onset;
        a.location = sample_location(rng);
        const bool rectal = is_rectal(a.location);
        a.t10 = frechet(rectal ? p.beta1_rectum : p.beta1_colon, rectal ? p.beta2_rectum : p.beta2_colon).sample(rng);
        const adenoma_growth growth(a.t10);
        a.growth_rate = growth.lambda();
        a.transition_size = sample_transition_size(p, s, a.location, onset, rng);
        const double sojourn = weibull_sojourn(rectal ? p.tau_rectum : p.tau_colon).sample(rng);
        if (const auto dt = growth.time_to_size(a.transition_size)) {
            const double ta = onset + *dt;
            if (ta < out.death_age) {
                a.transition_age = ta;
                if (ta + sojourn < out.death_age) a.clinical_age = ta + sojourn;
            }
        }
        out.adenomas.push_back(a);
    }
}

person_history simulate_person(const natural_history_params& p, sex s, int birth_year, const life_table& lt,
                               random_stream& rng, const person_options& opts)
{
    person_history h;
    simulate_person(p, s, birth_year, lt, rng, h, opts);
    return h;
}

} // namespace imabc::crc
