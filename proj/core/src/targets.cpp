#include "imabc/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "imabc/distributions.hpp"
#include "imabc/errors.hpp"

namespace imabc {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double two_sided_tail(double z) { return std::erfc(z / std::numbers::sqrt2); }

void check_length(const target_set& targets, std::size_t n)
{
    if (n != targets.size()) throw invalid_spec("simulated target vector has wrong length");
}

} // namespace

void target_spec::validate() const
{
    const auto fail = [&](const std::string& what) { throw invalid_spec("target '" + id + "': " + what); };
    if (!std::isfinite(observed)) fail("observed value must be finite");
    if (!(alpha_init >= 0.0 && alpha_init < 1.0)) fail("alpha_init must lie in [0, 1)");
    if (!(alpha_final > 0.0 && alpha_final < 1.0)) fail("alpha_final must lie in (0, 1)");
    if (alpha_init > alpha_final) fail("alpha_init exceeds alpha_final");
    if (!(upper_extension >= 0.0)) fail("upper_extension must be nonnegative");
    if (sim_sample_size == 0) fail("sim_sample_size must be positive");
    if (form == interval_form::normal_se) {
        if (!(se > 0.0) || !std::isfinite(se)) fail("se must be positive");
    } else {
        if (!(final_lower < observed && observed < final_upper)) fail("explicit bounds must bracket the observed value");
    }
}

target_set::target_set(std::vector<target_spec> targets) : targets_(std::move(targets))
{
    std::map<int, std::vector<std::size_t>> by_rank;
    for (std::size_t j = 0; j < targets_.size(); ++j) {
        targets_[j].validate();
        for (std::size_t k = 0; k < j; ++k)
            if (targets_[k].id == targets_[j].id) throw invalid_spec("duplicate target id '" + targets_[j].id + "'");
        by_rank[targets_[j].cost_rank].push_back(j);
    }
    for (auto& [rank, idx] : by_rank) groups_.push_back(std::move(idx));
}

std::size_t target_set::index_of(const std::string& id) const
{
    for (std::size_t j = 0; j < targets_.size(); ++j)
        if (targets_[j].id == id) return j;
    throw invalid_spec("unknown target '" + id + "'");
}

std::vector<std::string> target_set::ids() const
{
    std::vector<std::string> out;
    for (const auto& t : targets_) out.push_back(t.id);
    return out;
}

std::vector<double> target_set::alpha_init() const
{
    std::vector<double> out;
    for (const auto& t : targets_) out.push_back(t.alpha_init);
    return out;
}

std::vector<double> target_set::alpha_final() const
{
    std::vector<double> out;
    for (const auto& t : targets_) out.push_back(t.alpha_final);
    return out;
}

bool tolerance_state::at_final(const target_set& targets) const
{
    for (std::size_t j = 0; j < targets.size(); ++j)
        if (alphas[j] < targets[j].alpha_final) return false;
    return true;
}

interval tolerance_interval(const target_spec& t, double alpha)
{
    if (!(alpha >= 0.0) || alpha > t.alpha_final)
        throw schedule_violation("target '" + t.id + "': alpha outside [0, alpha_final]");
    if (alpha == 0.0) return {-inf, inf};

    const double z = two_sided_z(alpha);
    interval out{};
    if (t.form == interval_form::normal_se) {
        out.lower = t.observed - z * t.se;
        out.upper = t.observed + z * t.se + t.upper_extension * t.observed;
    } else {
        const double ratio = z / two_sided_z(t.alpha_final);
        out.lower = t.observed - (t.observed - t.final_lower) * ratio;
        out.upper = t.observed + (t.final_upper - t.observed) * ratio;
    }
    if (t.nonnegative) out.lower = std::max(out.lower, 0.0);
    return out;
}

double p_value(const target_spec& t, double s)
{
    if (std::isnan(s)) return 0.0;
    if (s == t.observed) return 1.0;
    if (t.nonnegative && s < 0.0) return 0.0;

    double z;
    if (t.form == interval_form::normal_se) {
        if (s > t.observed) {
            const double excess = s - t.observed - t.upper_extension * t.observed;
            if (excess <= 0.0) return 1.0;
            z = excess / t.se;
        } else {
            z = (t.observed - s) / t.se;
        }
    } else {
        const double z_final = two_sided_z(t.alpha_final);
        z = s > t.observed ? (s - t.observed) / (t.final_upper - t.observed) * z_final
                           : (t.observed - s) / (t.observed - t.final_lower) * z_final;
    }
    return two_sided_tail(z);
}

bool target_accepts(const target_spec& t, double s, double alpha)
{
    if (std::isnan(s)) return false;
    if (!(alpha >= 0.0) || alpha > t.alpha_final)
        throw schedule_violation("target '" + t.id + "': alpha outside [0, alpha_final]");
    // Same set as tolerance_interval(t, alpha).contains(s); the p-value form
    // keeps thresholds taken from observed p-values exact at the boundary.
    return alpha == 0.0 || p_value(t, s) >= alpha;
}

bool delta_accept(const target_set& targets, std::span<const double> s, const tolerance_state& tol)
{
    check_length(targets, s.size());
    for (std::size_t j = 0; j < targets.size(); ++j)
        if (!target_accepts(targets[j], s[j], tol.alphas[j])) return false;
    return true;
}

double discrepancy(const target_set& targets, std::span<const double> s, const tolerance_state& tol)
{
    check_length(targets, s.size());
    double d = 0.0;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        const auto& t = targets[j];
        if (!(tol.alphas[j] < t.alpha_final)) continue;
        if (t.observed == 0.0) throw ill_defined_distance("target '" + t.id + "': observed value is zero");
        const double r = (s[j] - t.observed) / t.observed;
        d += r * r;
    }
    return d;
}

double min_p_value(const target_set& targets, std::span<const double> s)
{
    check_length(targets, s.size());
    double m = 1.0;
    for (std::size_t j = 0; j < targets.size(); ++j) m = std::min(m, p_value(targets[j], s[j]));
    return m;
}

} // namespace imabc
