#include "imabc/workflow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "imabc/checkpoint.hpp"
#include "imabc/crc_model.hpp"
#include "imabc/errors.hpp"
#include "imabc/parallel.hpp"
#include "imabc/reference_models.hpp"
#include "imabc/tables.hpp"

namespace imabc {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw config_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw config_error("failed writing '" + path.string() + "'");
}

std::string checkpoint_name(std::size_t iteration)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "checkpoint_iter_%03zu.json", iteration);
    return buf;
}

void write_accepted(const engine_state& state, const prior_set& priors, const target_set& targets,
                    const fs::path& path)
{
    csv_table t;
    t.header.push_back("index");
    for (const auto& n : priors.names()) t.header.push_back(n);
    for (const auto& id : targets.ids()) t.header.push_back("S_" + id);
    for (const auto& id : targets.ids()) t.header.push_back("rho_" + id);
    for (const char* c : {"rho_min", "dist", "weight", "origin_iteration", "origin_center"}) t.header.push_back(c);
    for (const auto& p : state.points) {
        if (!p.accepted()) continue;
        std::vector<std::string> row{std::to_string(p.index)};
        for (double x : p.theta) row.push_back(format_double(x));
        for (double x : p.sim_targets) row.push_back(format_double(x));
        for (double x : p.rho) row.push_back(format_double(x));
        row.push_back(format_double(p.rho_min));
        row.push_back(format_double(p.dist));
        row.push_back(format_double(p.weight));
        row.push_back(std::to_string(p.origin_iteration));
        row.push_back(std::to_string(p.origin_center));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, path);
}

void write_tolerance_history(const engine_state& state, const target_set& targets, const fs::path& path)
{
    csv_table t;
    t.header.push_back("iteration");
    for (const auto& id : targets.ids()) t.header.push_back("alpha_" + id);
    for (std::size_t k = 0; k < state.tolerance_history.size(); ++k) {
        std::vector<std::string> row{std::to_string(k)};
        for (double a : state.tolerance_history[k]) row.push_back(format_double(a));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, path);
}

void write_diagnostics(const engine_state& state, const fs::path& path)
{
    csv_table t{{"iteration", "n_total", "n_drawn", "n_drawn_accepted", "n_centers_demoted", "n_pruned",
                 "n_accepted", "acceptance_rate", "ess"},
                {}};
    for (const auto& r : state.history)
        t.rows.push_back({std::to_string(r.iteration), std::to_string(r.n_total), std::to_string(r.n_drawn),
                          std::to_string(r.n_drawn_accepted), std::to_string(r.n_centers_demoted),
                          std::to_string(r.n_pruned), std::to_string(r.n_accepted), format_double(r.acceptance_rate),
                          format_double(r.ess)});
    write_csv(t, path);
}

void write_report(const calibration_result& r, const target_set& targets, const fs::path& path)
{
    const auto& s = r.state;
    json j;
    j["converged"] = r.converged;
    j["prior_target_incompatible"] = r.prior_target_incompatible;
    j["iterations"] = s.iteration;
    j["n_total"] = s.n_total;
    j["n_accepted"] = s.accepted_count();
    j["ess"] = r.ess;
    j["n_post"] = s.config.n_post;
    j["tolerance_at_final"] = s.tolerance.at_final(targets);
    json alphas = json::object();
    for (std::size_t k = 0; k < targets.size(); ++k) alphas[targets[k].id] = s.tolerance.alphas[k];
    j["alphas"] = std::move(alphas);
    j["group_evaluations"] = s.group_evaluations;
    j["messages"] = r.messages;
    write_text(path, j.dump(2) + "\n");
}

calibration_result as_result(const posterior_table& posterior)
{
    calibration_result r;
    for (std::size_t i = 0; i < posterior.theta.size(); ++i) {
        point p;
        p.index = i;
        p.theta = posterior.theta[i];
        p.weight = posterior.weights[i];
        p.status = point_status::accepted;
        r.state.points.push_back(std::move(p));
    }
    return r;
}

std::uint64_t result_seed(const fs::path& result_dir, std::optional<std::uint64_t> seed)
{
    if (seed) return *seed;
    return load_run_config(result_dir / "run_config.json").engine.seed;
}

} // namespace

std::unique_ptr<simulation_model> build_model(const run_config& config, const prior_set& priors,
                                              const target_set& targets)
{
    switch (config.model) {
    case model_kind::conjugate_normal:
        return std::make_unique<conjugate_normal_model>(priors, targets, config.noise_sd);
    case model_kind::symmetric_bimodal:
        return std::make_unique<symmetric_bimodal_model>(priors, targets, config.noise_sd);
    case model_kind::crc_spin: {
        auto lt = config.life_table.empty() ? crc::life_table::immortal() : load_life_table(config.life_table);
        return std::make_unique<crc::crc_model>(priors, targets, load_populations(config.populations), std::move(lt),
                                                crc::crc_model_options{config.block_size, config.model_workers});
    }
    }
    throw config_error("unknown model");
}

calibrate_outcome calibrate(const fs::path& config_path, const calibrate_options& options)
{
    auto cfg = load_run_config(config_path);
    if (options.workers) cfg.engine.workers = *options.workers;
    if (options.seed) cfg.engine.seed = *options.seed;
    if (options.out) cfg.output_dir = fs::absolute(*options.out);
    cfg.engine.validate();

    const auto priors = load_priors(cfg.priors);
    const auto targets = load_targets(cfg.targets);
    const auto model = build_model(cfg, priors, targets);

    const auto& out = cfg.output_dir;
    fs::create_directories(out);
    write_text(out / "run_config.json", run_config_to_json(cfg));
    save_priors(priors, out / "priors.csv");
    save_targets(targets, out / "targets.csv");

    run_hooks hooks;
    hooks.log = options.log;
    hooks.after_iteration = [&](const engine_state& state) {
        const auto file = out / checkpoint_name(state.iteration);
        save_checkpoint(state, file);
        fs::copy_file(file, out / "checkpoint_latest.json", fs::copy_options::overwrite_existing);
        if (options.stop_after_iteration && state.iteration >= *options.stop_after_iteration)
            throw interrupted("stopped after iteration " + std::to_string(state.iteration));
    };

    calibration_result result;
    if (options.resume) {
        auto state = load_checkpoint(*options.resume);
        check_resume_compatible(state, cfg.engine, priors.size(), targets.size());
        state.config.workers = cfg.engine.workers;
        state.config.max_iterations = cfg.engine.max_iterations;
        if (options.log) options.log("resuming from iteration " + std::to_string(state.iteration));
        result = resume(std::move(state), *model, targets, hooks);
    } else {
        result = run(cfg.engine, *model, targets, hooks);
    }

    write_accepted(result.state, priors, targets, out / "accepted.csv");
    write_tolerance_history(result.state, targets, out / "tolerance_history.csv");
    write_diagnostics(result.state, out / "diagnostics.csv");
    write_report(result, targets, out / "report.json");
    return {std::move(result), out};
}

double weighted_quantile(const std::vector<double>& values, const std::vector<double>& weights, double q)
{
    if (values.size() != weights.size()) throw invalid_spec("values/weights size mismatch");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw empty_posterior("no posterior weight");
    double cum = 0.0;
    for (auto i : order) {
        cum += weights[i] / total;
        if (cum >= q) return values[i];
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (weights[*it] > 0.0) return values[*it];
    return values[order.back()];
}

weighted_summary summarize_values(const std::vector<double>& values, const std::vector<double>& weights)
{
    if (values.empty()) throw empty_posterior("no posterior points");
    double total = 0.0;
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw invalid_spec("weights must be nonnegative");
        total += weights[i];
        mean += weights[i] * values[i];
    }
    if (!(total > 0.0)) throw empty_posterior("no posterior weight");
    return {mean / total, weighted_quantile(values, weights, 0.025), weighted_quantile(values, weights, 0.975)};
}

posterior_table read_posterior(const fs::path& result_dir)
{
    const auto priors = load_priors(result_dir / "priors.csv");
    const auto t = read_csv(result_dir / "accepted.csv");
    posterior_table p;
    p.names = priors.names();
    std::vector<std::size_t> cols;
    for (const auto& n : p.names) cols.push_back(t.column(n));
    const auto wcol = t.column("weight");
    for (const auto& row : t.rows) {
        std::vector<double> theta;
        for (auto c : cols) theta.push_back(parse_double(row[c]));
        p.theta.push_back(std::move(theta));
        p.weights.push_back(parse_double(row[wcol]));
    }
    if (p.theta.empty()) throw empty_posterior("'" + (result_dir / "accepted.csv").string() + "' has no points");
    return p;
}

density_grid weighted_density_grid(const posterior_table& posterior, const std::string& x_name,
                                   const std::string& y_name, std::size_t bins)
{
    const auto find = [&](const std::string& n) {
        const auto it = std::find(posterior.names.begin(), posterior.names.end(), n);
        if (it == posterior.names.end()) throw config_error("unknown parameter '" + n + "'");
        return static_cast<std::size_t>(it - posterior.names.begin());
    };
    const auto xi = find(x_name);
    const auto yi = find(y_name);
    bins = std::max<std::size_t>(bins, 1);
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY, total = 0.0;
    for (std::size_t i = 0; i < posterior.theta.size(); ++i) {
        x0 = std::min(x0, posterior.theta[i][xi]);
        x1 = std::max(x1, posterior.theta[i][xi]);
        y0 = std::min(y0, posterior.theta[i][yi]);
        y1 = std::max(y1, posterior.theta[i][yi]);
        total += posterior.weights[i];
    }
    if (!(total > 0.0)) throw empty_posterior("no posterior weight");
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) y1 = y0 + 1.0;
    const double dx = (x1 - x0) / static_cast<double>(bins);
    const double dy = (y1 - y0) / static_cast<double>(bins);

    density_grid g{x_name, y_name, {}, {}, std::vector<double>(bins * bins, 0.0)};
    for (std::size_t b = 0; b < bins; ++b) {
        g.x.push_back(x0 + (static_cast<double>(b) + 0.5) * dx);
        g.y.push_back(y0 + (static_cast<double>(b) + 0.5) * dy);
    }
    const auto cell = [bins](double v, double lo, double d) {
        return std::min(bins - 1, static_cast<std::size_t>(std::max(0.0, std::floor((v - lo) / d))));
    };
    for (std::size_t i = 0; i < posterior.theta.size(); ++i) {
        const auto cx = cell(posterior.theta[i][xi], x0, dx);
        const auto cy = cell(posterior.theta[i][yi], y0, dy);
        g.density[cy * bins + cx] += posterior.weights[i] / (total * dx * dy);
    }
    return g;
}

std::vector<weighted_summary> summarize(const fs::path& result_dir, const fs::path& out,
                                        const std::vector<std::pair<std::string, std::string>>& pairs,
                                        std::size_t bins)
{
    const auto posterior = read_posterior(result_dir);
    fs::create_directories(out);
    std::vector<weighted_summary> summaries;
    csv_table t{{"parameter", "mean", "lower_2.5", "upper_97.5"}, {}};
    for (std::size_t k = 0; k < posterior.names.size(); ++k) {
        std::vector<double> v;
        for (const auto& th : posterior.theta) v.push_back(th[k]);
        const auto s = summarize_values(v, posterior.weights);
        summaries.push_back(s);
        t.rows.push_back({posterior.names[k], format_double(s.mean), format_double(s.lower), format_double(s.upper)});
    }
    write_csv(t, out / "posterior_summary.csv");
    for (const auto& [x, y] : pairs) {
        const auto g = weighted_density_grid(posterior, x, y, bins);
        csv_table d{{x, y, "density"}, {}};
        for (std::size_t r = 0; r < g.y.size(); ++r)
            for (std::size_t c = 0; c < g.x.size(); ++c)
                d.rows.push_back({format_double(g.x[c]), format_double(g.y[r]),
                                  format_double(g.density[r * g.x.size() + c])});
        write_csv(d, out / ("density_" + x + "__" + y + ".csv"));
    }
    return summaries;
}

std::vector<std::vector<double>> resample(const fs::path& result_dir, std::size_t n,
                                          std::optional<std::uint64_t> seed, const fs::path& out)
{
    const auto posterior = read_posterior(result_dir);
    random_stream rng(result_seed(result_dir, seed), {stream_domain::resample});
    auto draws = resample_posterior(as_result(posterior), n, rng);
    fs::create_directories(out);
    csv_table t;
    t.header.push_back("draw");
    for (const auto& name : posterior.names) t.header.push_back(name);
    for (std::size_t d = 0; d < draws.size(); ++d) {
        std::vector<std::string> row{std::to_string(d)};
        for (double x : draws[d]) row.push_back(format_double(x));
        t.rows.push_back(std::move(row));
    }
    write_csv(t, out / "draws.csv");
    return draws;
}

std::vector<target_prediction> predict(const fs::path& result_dir, std::size_t n_draws,
                                       const std::vector<std::string>& target_ids,
                                       std::optional<std::uint64_t> seed, const fs::path& out, std::size_t workers)
{
    if (n_draws == 0) throw invalid_spec("predict needs at least one draw");
    const auto cfg = load_run_config(result_dir / "run_config.json");
    const auto priors = load_priors(result_dir / "priors.csv");
    const auto targets = load_targets(result_dir / "targets.csv");
    const auto model = build_model(cfg, priors, targets);
    const auto posterior = read_posterior(result_dir);
    const auto s = seed.value_or(cfg.engine.seed);

    std::vector<std::size_t> wanted;
    if (target_ids.empty()) {
        wanted.resize(targets.size());
        std::iota(wanted.begin(), wanted.end(), 0);
    } else {
        for (const auto& id : target_ids) wanted.push_back(targets.index_of(id));
    }

    random_stream pick(s, {stream_domain::prediction, 0});
    const auto draws = resample_posterior(as_result(posterior), n_draws, pick);
    std::vector<std::vector<double>> sims(n_draws, std::vector<double>(targets.size(), std::nan("")));
    parallel_for(n_draws, workers, [&](std::size_t d) {
        random_stream rng(s, {stream_domain::prediction, 1, d});
        model->simulate(draws[d], wanted, rng, sims[d]);
    });

    fs::create_directories(out);
    std::vector<target_prediction> preds;
    csv_table summary{{"id", "observed", "tolerance_lower", "tolerance_upper", "mean", "lower_2.5", "upper_97.5"}, {}};
    csv_table per_draw;
    per_draw.header.push_back("draw");
    for (auto j : wanted) per_draw.header.push_back(targets[j].id);
    const std::vector<double> equal(n_draws, 1.0);
    for (auto j : wanted) {
        std::vector<double> v;
        for (const auto& row : sims) v.push_back(row[j]);
        const auto w = summarize_values(v, equal);
        preds.push_back({targets[j].id, targets[j].observed, w.mean, w.lower, w.upper});
        const auto tol = tolerance_interval(targets[j], targets[j].alpha_final);
        summary.rows.push_back({targets[j].id, format_double(targets[j].observed), format_double(tol.lower),
                                format_double(tol.upper), format_double(w.mean), format_double(w.lower),
                                format_double(w.upper)});
    }
    for (std::size_t d = 0; d < n_draws; ++d) {
        std::vector<std::string> row{std::to_string(d)};
        for (auto j : wanted) row.push_back(format_double(sims[d][j]));
        per_draw.rows.push_back(std::move(row));
    }
    write_csv(summary, out / "predictions.csv");
    write_csv(per_draw, out / "predicted_draws.csv");
    return preds;
}

} // namespace imabc
