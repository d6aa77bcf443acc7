#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace imabc {

enum class interval_form { normal_se, explicit_bounds };

/// One observed calibration statistic and its tolerance schedule.
///
/// `normal_se` targets build (1 - alpha) intervals as O +/- z * se, with
/// `upper_extension * O` added to the upper limit. `explicit_bounds` targets
/// carry their final interval verbatim and scale each side's half-width in
/// proportion to z for other alpha levels. `nonnegative` floors the lower
/// limit at zero.
struct target_spec {
    std::string id;
    double observed = 0.0;
    interval_form form = interval_form::normal_se;
    double se = 1.0;
    double final_lower = 0.0;
    double final_upper = 0.0;
    double upper_extension = 0.0;
    double alpha_init = 0.0;
    double alpha_final = 0.05;
    std::size_t sim_sample_size = 1;
    int cost_rank = 0;
    bool nonnegative = false;

    void validate() const;
};

struct interval {
    double lower;
    double upper;
    bool contains(double s) const noexcept { return s >= lower && s <= upper; }
};

class target_set {
public:
    target_set() = default;
    explicit target_set(std::vector<target_spec> targets);

    std::size_t size() const noexcept { return targets_.size(); }
    bool empty() const noexcept { return targets_.empty(); }
    const target_spec& operator[](std::size_t j) const { return targets_[j]; }
    std::span<const target_spec> specs() const noexcept { return targets_; }
    std::size_t index_of(const std::string& id) const;
    std::vector<std::string> ids() const;

    std::vector<double> alpha_init() const;
    std::vector<double> alpha_final() const;

    /// Target indices grouped by cost rank, cheapest group first.
    const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }

private:
    std::vector<target_spec> targets_;
    std::vector<std::vector<std::size_t>> groups_;
};

/// Current alpha level per target.
struct tolerance_state {
    std::vector<double> alphas;

    static tolerance_state initial(const target_set& targets) { return {targets.alpha_init()}; }
    bool at_final(const target_set& targets) const;
};

/// (1 - alpha) tolerance interval; alpha = 0 gives the whole real line.
/// Throws schedule_violation when alpha lies outside [0, alpha_final].
interval tolerance_interval(const target_spec& target, double alpha);

/// Two-sided p-value of s against the observed value. This is the exact
/// inverse of tolerance_interval: s lies inside the alpha interval iff
/// p_value(s) >= alpha.
double p_value(const target_spec& target, double s);

bool target_accepts(const target_spec& target, double s, double alpha);

/// Intersection criterion: every s_j inside its current interval.
bool delta_accept(const target_set& targets, std::span<const double> s, const tolerance_state& tol);

/// Sum of squared relative errors over targets not yet at their final alpha.
double discrepancy(const target_set& targets, std::span<const double> s, const tolerance_state& tol);

double min_p_value(const target_set& targets, std::span<const double> s);

} // namespace imabc
