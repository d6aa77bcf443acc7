#include "imabc/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include "imabc/errors.hpp"
#include "imabc/parallel.hpp"

namespace imabc {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();
constexpr double inf = std::numeric_limits<double>::infinity();

bool better_fit(const point& a, const point& b)
{
    if (a.rho_min != b.rho_min) return a.rho_min > b.rho_min;
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.index < b.index;
}

/// True once importance weights have been computed for the accepted set.
bool weights_available(const engine_state& state)
{
    return std::any_of(state.points.begin(), state.points.end(),
                       [](const point& p) { return p.accepted() && p.weight > 0.0; });
}

std::vector<std::size_t> ranked_accepted(const engine_state& state)
{
    auto acc = state.accepted_positions();
    const bool weighted = weights_available(state);
    std::sort(acc.begin(), acc.end(), [&](std::size_t a, std::size_t b) {
        const auto& pa = state.points[a];
        const auto& pb = state.points[b];
        if (weighted && pa.weight != pb.weight) return pa.weight > pb.weight;
        return better_fit(pa, pb);
    });
    return acc;
}

/// Simulates target groups cheapest first and stops at the first group with
/// a target outside its current interval.
void evaluate_point(point& pt,
                    const simulation_model& model,
                    const target_set& targets,
                    const tolerance_state& tol,
                    std::uint64_t key,
                    std::span<std::atomic<std::uint64_t>> counters)
{
    const auto J = targets.size();
    pt.sim_targets.assign(J, nan);
    pt.rho.assign(J, nan);
    pt.rho_min = 0.0;
    pt.dist = 0.0;
    pt.weight = 0.0;
    pt.groups_evaluated = 0;
    pt.failure.clear();
    pt.status = point_status::rejected;

    if (!model.priors().in_support(pt.theta)) return;

    const auto& groups = targets.groups();
    try {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            random_stream rng(derive_key(key, g));
            model.simulate(pt.theta, groups[g], rng, pt.sim_targets);
            ++pt.groups_evaluated;
            counters[g].fetch_add(1, std::memory_order_relaxed);
            for (auto j : groups[g])
                if (!target_accepts(targets[j], pt.sim_targets[j], tol.alphas[j])) return;
        }
    } catch (const std::exception& e) {
        pt.failure = e.what();
        return;
    }
    pt.status = point_status::accepted;
}

void evaluate_batch(engine_state& state,
                    const simulation_model& model,
                    const target_set& targets,
                    std::span<const std::size_t> positions,
                    std::span<const std::uint64_t> keys)
{
    const auto n_groups = targets.groups().size();
    auto counters = std::make_unique<std::atomic<std::uint64_t>[]>(n_groups);
    parallel_for(positions.size(), state.config.workers, [&](std::size_t i) {
        evaluate_point(state.points[positions[i]], model, targets, state.tolerance, keys[i],
                       std::span(counters.get(), n_groups));
    });
    state.group_evaluations.resize(n_groups, 0);
    for (std::size_t g = 0; g < n_groups; ++g) state.group_evaluations[g] += counters[g].load();
}

Eigen::MatrixXd half_prior_sd_covariance(const prior_set& priors)
{
    const Eigen::VectorXd sd = priors.sds() / 2.0;
    return sd.array().square().matrix().asDiagonal();
}

Eigen::MatrixXd sample_covariance(const engine_state& state, std::span<const std::size_t> positions)
{
    const auto p = static_cast<Eigen::Index>(state.dim());
    const auto n = static_cast<Eigen::Index>(positions.size());
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(state.points[positions[static_cast<std::size_t>(i)]].theta.data(), p);
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    return (centered.transpose() * centered) / static_cast<double>(std::max<Eigen::Index>(n - 1, 1));
}

/// Second moment of the points about `center` rather than about their own mean.
Eigen::MatrixXd moment_about(const engine_state& state, std::span<const std::size_t> positions,
                             const std::vector<double>& center)
{
    const auto p = static_cast<Eigen::Index>(state.dim());
    const auto n = static_cast<Eigen::Index>(positions.size());
    const Eigen::Map<const Eigen::RowVectorXd> c(center.data(), p);
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        x.row(i) = Eigen::Map<const Eigen::RowVectorXd>(state.points[positions[static_cast<std::size_t>(i)]].theta.data(), p) - c;
    return (x.transpose() * x) / static_cast<double>(n);
}

double log_sum_exp(std::span<const double> terms)
{
    double m = -inf;
    for (double t : terms) m = std::max(m, t);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

} // namespace

void engine_config::validate() const
{
    if (n_init == 0 || n_centers == 0 || batch_per_center == 0 || n_post == 0)
        throw invalid_spec("engine config: n_init, n_centers, batch_per_center and n_post must be >= 1");
    if (workers == 0) throw invalid_spec("engine config: workers must be >= 1");
}

std::size_t engine_state::accepted_count() const
{
    return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const point& p) { return p.accepted(); }));
}

std::vector<std::size_t> engine_state::accepted_positions() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i)
        if (points[i].accepted()) out.push_back(i);
    return out;
}

void refresh_fit(engine_state& state, const target_set& targets)
{
    for (auto& pt : state.points) {
        if (!pt.accepted()) continue;
        pt.rho_min = 1.0;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            pt.rho[j] = p_value(targets[j], pt.sim_targets[j]);
            pt.rho_min = std::min(pt.rho_min, pt.rho[j]);
        }
        pt.dist = discrepancy(targets, pt.sim_targets, state.tolerance);
    }
}

engine_state initialize(const engine_config& config, const simulation_model& model, const target_set& targets)
{
    config.validate();
    const auto& priors = model.priors();
    if (priors.size() == 0) throw invalid_spec("model has no parameters");
    if (targets.empty()) throw invalid_spec("no calibration targets");

    engine_state state;
    state.config = config;
    state.tolerance = tolerance_state::initial(targets);
    state.group_evaluations.assign(targets.groups().size(), 0);

    random_stream lhs_rng(config.seed, {stream_domain::latin_hypercube});
    const Eigen::MatrixXd draws = latin_hypercube(priors.specs(), config.n_init, lhs_rng);

    state.points.resize(config.n_init);
    std::vector<std::size_t> positions(config.n_init);
    std::vector<std::uint64_t> keys(config.n_init);
    for (std::size_t i = 0; i < config.n_init; ++i) {
        auto& pt = state.points[i];
        pt.index = i;
        pt.theta.resize(priors.size());
        for (std::size_t j = 0; j < priors.size(); ++j)
            pt.theta[j] = draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        positions[i] = i;
        keys[i] = path_key(config.seed, {stream_domain::evaluation, i});
    }
    evaluate_batch(state, model, targets, positions, keys);
    refresh_fit(state, targets);

    state.n_total = config.n_init;
    state.tolerance_history.push_back(state.tolerance.alphas);
    iteration_record rec;
    rec.n_total = state.n_total;
    rec.n_drawn = config.n_init;
    rec.n_accepted = rec.n_drawn_accepted = state.accepted_count();
    rec.acceptance_rate = static_cast<double>(rec.n_accepted) / static_cast<double>(config.n_init);
    state.history.push_back(rec);
    return state;
}

std::vector<std::size_t> select_centers(const engine_state& state)
{
    const auto ranked = ranked_accepted(state);
    if (ranked.empty()) throw empty_frontier("no accepted points to center kernels on");
    std::vector<std::size_t> out(state.config.n_centers);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = ranked[k % ranked.size()];
    return out;
}

Eigen::MatrixXd local_covariance(const engine_state& state, const prior_set& priors, std::size_t center)
{
    const std::size_t p = priors.size();
    auto acc = state.accepted_positions();
    if (acc.size() < 5 * p) return half_prior_sd_covariance(priors);
    if (acc.size() <= 25 * p) return sample_covariance(state, acc);

    const Eigen::ArrayXd sd = priors.sds().array();
    const auto& c = state.points[center].theta;
    std::vector<std::pair<double, std::size_t>> by_distance;
    by_distance.reserve(acc.size());
    for (auto pos : acc) {
        const auto& th = state.points[pos].theta;
        double d2 = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double z = (th[j] - c[j]) / sd[static_cast<Eigen::Index>(j)];
            d2 += z * z;
        }
        by_distance.emplace_back(d2, pos);
    }
    const auto keep = static_cast<std::ptrdiff_t>(25 * p);
    std::nth_element(by_distance.begin(), by_distance.begin() + keep - 1, by_distance.end());
    std::vector<std::size_t> nearest;
    nearest.reserve(25 * p);
    for (std::ptrdiff_t i = 0; i < keep; ++i) nearest.push_back(by_distance[static_cast<std::size_t>(i)].second);
    std::sort(nearest.begin(), nearest.end());
    return moment_about(state, nearest, c);
}

proposal_stats propose_and_evaluate(engine_state& state, const simulation_model& model, const target_set& targets)
{
    const auto& cfg = state.config;
    const auto& priors = model.priors();
    const std::size_t t = state.iteration + 1;
    const auto centers = select_centers(state);
    // Weight-chosen centers do not depend on their simulated targets, so
    // re-testing them would only erode the tails they sit in.
    const bool resimulate_centers = !weights_available(state);

    std::vector<gaussian_kernel> fresh;
    fresh.reserve(centers.size());
    for (auto c : centers) {
        const auto& th = state.points[c].theta;
        Eigen::VectorXd mean = Eigen::Map<const Eigen::VectorXd>(th.data(), static_cast<Eigen::Index>(th.size()));
        try {
            gaussian_kernel k(mean, local_covariance(state, priors, c));
            if (k.is_point_mass()) throw degenerate_kernel("point-mass kernel");
            fresh.push_back(std::move(k));
        } catch (const degenerate_kernel&) {
            // Collapsed local covariance (e.g. duplicated points): use the wide diagonal.
            fresh.emplace_back(mean, half_prior_sd_covariance(priors));
        }
    }

    const std::size_t first = state.points.size();
    const std::size_t drawn = cfg.n_centers * cfg.batch_per_center;
    state.points.resize(first + drawn);
    std::vector<std::size_t> positions;
    std::vector<std::uint64_t> keys;
    positions.reserve(drawn + centers.size());
    keys.reserve(drawn + centers.size());
    for (std::size_t k = 0; k < cfg.n_centers; ++k) {
        for (std::size_t b = 0; b < cfg.batch_per_center; ++b) {
            const std::size_t idx = first + k * cfg.batch_per_center + b;
            auto& pt = state.points[idx];
            pt.index = idx;
            pt.origin_iteration = t;
            pt.origin_center = static_cast<int>(k);
            random_stream rng(cfg.seed, {stream_domain::proposal, idx});
            const Eigen::VectorXd x = fresh[k].sample(rng);
            pt.theta.assign(x.data(), x.data() + x.size());
            positions.push_back(idx);
            keys.push_back(path_key(cfg.seed, {stream_domain::evaluation, idx}));
        }
    }

    auto unique_centers = resimulate_centers ? centers : std::vector<std::size_t>{};
    std::sort(unique_centers.begin(), unique_centers.end());
    unique_centers.erase(std::unique(unique_centers.begin(), unique_centers.end()), unique_centers.end());
    for (auto c : unique_centers) {
        positions.push_back(c);
        keys.push_back(path_key(cfg.seed, {stream_domain::center_resimulation, t, c}));
    }

    evaluate_batch(state, model, targets, positions, keys);

    proposal_stats stats;
    stats.drawn = drawn;
    for (std::size_t i = first; i < first + drawn; ++i)
        if (state.points[i].accepted()) ++stats.drawn_accepted;
    for (auto c : unique_centers)
        if (!state.points[c].accepted()) ++stats.centers_demoted;

    for (auto& k : fresh) state.kernels.push_back(std::move(k));
    state.iteration = t;
    state.n_total += drawn;
    refresh_fit(state, targets);
    return stats;
}

tolerance_update update_tolerances(engine_state& state, const target_set& targets)
{
    tolerance_update out;
    if (state.tolerance.at_final(targets)) return out;
    const auto ranked = ranked_accepted(state);
    if (ranked.size() < 50 * state.dim()) return out;

    const auto& old = state.tolerance.alphas;
    const point& median = state.points[ranked[ranked.size() / 2]];
    tolerance_state next = state.tolerance;
    for (std::size_t j = 0; j < targets.size(); ++j) {
        if (!(old[j] < targets[j].alpha_final)) continue;
        next.alphas[j] = std::max(std::min(median.rho[j], targets[j].alpha_final), old[j]);
    }

    std::vector<std::size_t> failing;
    for (auto pos : ranked)
        if (!delta_accept(targets, state.points[pos].sim_targets, next)) failing.push_back(pos);

    const std::size_t cap = ranked.size() / 2;
    if (failing.size() > cap) {
        std::sort(failing.begin(), failing.end(), [&](std::size_t a, std::size_t b) {
            const auto& pa = state.points[a];
            const auto& pb = state.points[b];
            if (pa.dist != pb.dist) return pa.dist > pb.dist;
            return pa.index < pb.index;
        });
        failing.resize(cap);
    }
    for (auto pos : failing) {
        state.points[pos].status = point_status::pruned;
        state.points[pos].weight = 0.0;
    }

    // Roll each alpha back to the largest level every retained point meets.
    for (std::size_t j = 0; j < targets.size(); ++j) {
        if (!(next.alphas[j] > old[j])) continue;
        double floor_rho = inf;
        for (auto pos : ranked)
            if (state.points[pos].accepted()) floor_rho = std::min(floor_rho, state.points[pos].rho[j]);
        if (floor_rho < next.alphas[j]) next.alphas[j] = std::max(floor_rho, old[j]);
    }

    out.updated = next.alphas != old;
    out.pruned = failing.size();
    state.tolerance = std::move(next);
    refresh_fit(state, targets);
    return out;
}

double mixture_log_density(const engine_state& state, const prior_set& priors, std::span<const double> theta)
{
    const double n_total = static_cast<double>(state.n_total);
    std::vector<double> terms;
    terms.reserve(state.kernels.size() + 1);
    terms.push_back(std::log(static_cast<double>(state.config.n_init) / n_total) + priors.log_density(theta));
    const double log_batch = std::log(static_cast<double>(state.config.batch_per_center) / n_total);
    for (const auto& k : state.kernels) terms.push_back(log_batch + k.log_density(theta));
    return log_sum_exp(terms);
}

double mixture_density(const engine_state& state, const prior_set& priors, std::span<const double> theta)
{
    return std::exp(mixture_log_density(state, priors, theta));
}

std::vector<double> compute_weights(engine_state& state, const prior_set& priors)
{
    const auto acc = state.accepted_positions();
    if (acc.empty()) throw empty_posterior("no accepted points");

    std::vector<double> log_w(acc.size());
    parallel_for(acc.size(), state.config.workers, [&](std::size_t i) {
        const auto& th = state.points[acc[i]].theta;
        log_w[i] = priors.log_density(th) - mixture_log_density(state, priors, th);
    });
    const double top = *std::max_element(log_w.begin(), log_w.end());
    if (!std::isfinite(top)) throw empty_posterior("all importance weights are zero");

    double total = 0.0;
    for (auto& lw : log_w) {
        lw = std::isfinite(lw) ? std::exp(lw - top) : 0.0;
        total += lw;
    }
    std::vector<double> weights(state.points.size(), 0.0);
    for (auto& pt : state.points) pt.weight = 0.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        weights[acc[i]] = log_w[i] / total;
        state.points[acc[i]].weight = weights[acc[i]];
    }
    return weights;
}

double effective_sample_size(std::span<const double> weights)
{
    double top = 0.0;
    for (double w : weights) {
        if (w < 0.0 || !std::isfinite(w)) throw invalid_spec("weights must be finite and nonnegative");
        top = std::max(top, w);
    }
    if (!(top > 0.0)) throw empty_posterior("weights sum to zero");
    // scaled by the largest weight so equal weights give exactly n
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double w : weights) {
        const double v = w / top;
        sum += v;
        sum_sq += v * v;
    }
    return sum * sum / sum_sq;
}

calibration_result run(const engine_config& config,
                       const simulation_model& model,
                       const target_set& targets,
                       const run_hooks& hooks)
{
    auto state = initialize(config, model, targets);
    if (hooks.log)
        hooks.log("initialized: " + std::to_string(state.accepted_count()) + " of " + std::to_string(config.n_init) +
                  " prior draws accepted");
    if (hooks.after_iteration) hooks.after_iteration(state);
    return resume(std::move(state), model, targets, hooks);
}

calibration_result resume(engine_state state,
                          const simulation_model& model,
                          const target_set& targets,
                          const run_hooks& hooks)
{
    calibration_result result;
    const auto log = [&](const std::string& msg) {
        result.messages.push_back(msg);
        if (hooks.log) hooks.log(msg);
    };
    const auto& priors = model.priors();
    if (state.points.empty() || state.tolerance.alphas.size() != targets.size())
        throw invalid_spec("engine state does not match the target set");
    if (state.dim() != priors.size()) throw invalid_spec("engine state does not match the model parameters");

    if (state.history.size() == 1 && state.history.front().n_accepted == 0) {
        result.prior_target_incompatible = true;
        log("no prior draw satisfied the initial tolerances: prior and targets look incompatible");
    }

    while (!state.converged && state.iteration < state.config.max_iterations) {
        if (state.accepted_count() == 0) {
            log("no accepted points remain; stopping");
            break;
        }
        const auto stats = propose_and_evaluate(state, model, targets);
        const auto upd = update_tolerances(state, targets);

        iteration_record rec;
        rec.iteration = state.iteration;
        rec.n_total = state.n_total;
        rec.n_drawn = stats.drawn;
        rec.n_drawn_accepted = stats.drawn_accepted;
        rec.n_centers_demoted = stats.centers_demoted;
        rec.n_pruned = upd.pruned;
        rec.n_accepted = state.accepted_count();
        rec.acceptance_rate = static_cast<double>(stats.drawn_accepted) / static_cast<double>(stats.drawn);

        if (state.tolerance.at_final(targets) && rec.n_accepted > 0) {
            const auto w = compute_weights(state, priors);
            state.ess = effective_sample_size(w);
            rec.ess = state.ess;
            state.converged = state.ess >= static_cast<double>(state.config.n_post);
        }
        state.history.push_back(rec);
        state.tolerance_history.push_back(state.tolerance.alphas);
        // progress goes to the caller only; result.messages must not depend on where a run was resumed
        if (hooks.log)
            hooks.log("iteration " + std::to_string(rec.iteration) + ": accepted " + std::to_string(rec.n_accepted) +
            ", new " + std::to_string(rec.n_drawn_accepted) + "/" + std::to_string(rec.n_drawn) + ", pruned " +
            std::to_string(rec.n_pruned) + (rec.ess > 0.0 ? ", ESS " + std::to_string(rec.ess) : ""));
        if (hooks.after_iteration) hooks.after_iteration(state);
    }

    if (!state.converged && state.accepted_count() > 0) {
        const auto w = compute_weights(state, priors);
        state.ess = effective_sample_size(w);
        if (!state.tolerance.at_final(targets)) log("stopped before tolerances reached their final levels");
        log("not converged: ESS " + std::to_string(state.ess) + " < " + std::to_string(state.config.n_post));
    }
    result.converged = state.converged;
    result.ess = state.ess;
    result.state = std::move(state);
    return result;
}

std::vector<std::vector<double>> resample_posterior(const calibration_result& result, std::size_t n, random_stream& rng)
{
    const auto& pts = result.state.points;
    std::vector<std::size_t> support;
    std::vector<double> cumulative;
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i].weight > 0.0)) continue;
        total += pts[i].weight;
        support.push_back(i);
        cumulative.push_back(total);
    }
    if (support.empty()) throw empty_posterior("no positive-weight points to resample");

    std::vector<std::vector<double>> draws;
    draws.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        draws.push_back(pts[support[static_cast<std::size_t>(it - cumulative.begin())]].theta);
    }
    return draws;
}

} // namespace imabc
