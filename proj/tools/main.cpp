#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imabc/errors.hpp"
#include "imabc/workflow.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<std::pair<std::string, std::string>> parse_pairs(const std::vector<std::string>& raw)
{
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& p : raw) {
        const auto colon = p.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 == p.size())
            throw imabc::config_error("--pair expects NAME:NAME, got '" + p + "'");
        pairs.emplace_back(p.substr(0, colon), p.substr(colon + 1));
    }
    return pairs;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Incremental mixture ABC calibration"};
    app.require_subcommand(1);

    std::string config_path;
    std::string resume_path;
    std::string out_dir;
    std::string result_dir;
    std::size_t workers = 0;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    bool quiet = false;
    std::vector<std::string> pairs;
    std::vector<std::string> target_ids;
    std::size_t bins = 50;

    auto* cal = app.add_subcommand("calibrate", "run or resume a calibration");
    cal->add_option("--config", config_path, "run config (JSON)")->required()->check(CLI::ExistingFile);
    auto* resume_opt = cal->add_option("--resume", resume_path, "checkpoint to continue from")->check(CLI::ExistingFile);
    auto* cal_workers = cal->add_option("--workers", workers, "parallel evaluation threads")->check(CLI::PositiveNumber);
    auto* cal_seed = cal->add_option("--seed", seed, "master seed (overrides the config)");
    auto* cal_out = cal->add_option("--out", out_dir, "output directory (overrides the config)");
    cal->add_flag("--quiet", quiet, "no per-iteration log");

    auto* sum = app.add_subcommand("summarize", "weighted posterior means and 95% intervals");
    sum->add_option("result", result_dir, "calibration output directory")->required()->check(CLI::ExistingDirectory);
    sum->add_option("--out", out_dir, "where to write summary tables (default: result directory)");
    sum->add_option("--pair", pairs, "parameter pair NAME:NAME for a density grid (repeatable)");
    sum->add_option("--bins", bins, "density grid bins per axis")->check(CLI::PositiveNumber);

    auto* res = app.add_subcommand("resample", "draw from the weighted posterior");
    res->add_option("result", result_dir, "calibration output directory")->required()->check(CLI::ExistingDirectory);
    res->add_option("-n,--draws", n, "number of draws")->required()->check(CLI::PositiveNumber);
    auto* res_seed = res->add_option("--seed", seed, "resampling seed (default: calibration seed)");
    res->add_option("--out", out_dir, "where to write draws.csv (default: result directory)");

    auto* pre = app.add_subcommand("predict", "posterior predictive target summaries");
    pre->add_option("result", result_dir, "calibration output directory")->required()->check(CLI::ExistingDirectory);
    pre->add_option("-n,--draws", n, "number of posterior draws")->required()->check(CLI::PositiveNumber);
    pre->add_option("--target", target_ids, "target id (repeatable; default all)");
    auto* pre_seed = pre->add_option("--seed", seed, "prediction seed (default: calibration seed)");
    auto* pre_workers = pre->add_option("--workers", workers, "parallel simulation threads")->check(CLI::PositiveNumber);
    pre->add_option("--out", out_dir, "where to write predictions (default: result directory)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) {
            imabc::calibrate_options opts;
            if (*resume_opt) opts.resume = fs::path(resume_path);
            if (*cal_workers) opts.workers = workers;
            if (*cal_seed) opts.seed = seed;
            if (*cal_out) opts.out = fs::path(out_dir);
            if (!quiet) opts.log = [](const std::string& m) { std::cerr << m << '\n'; };
            const auto outcome = imabc::calibrate(config_path, opts);
            const auto& r = outcome.result;
            std::cout << (r.converged ? "converged" : "not converged") << ": " << r.state.accepted_count()
                      << " accepted points, ESS " << r.ess << ", " << r.state.iteration << " iterations -> "
                      << outcome.output_dir.string() << '\n';
            return 0;
        }
        const fs::path out = out_dir.empty() ? fs::path(result_dir) : fs::path(out_dir);
        if (sum->parsed()) {
            imabc::summarize(result_dir, out, parse_pairs(pairs), bins);
            std::cout << "wrote " << (out / "posterior_summary.csv").string() << '\n';
        } else if (res->parsed()) {
            imabc::resample(result_dir, n, *res_seed ? std::optional(seed) : std::nullopt, out);
            std::cout << "wrote " << n << " draws to " << (out / "draws.csv").string() << '\n';
        } else if (pre->parsed()) {
            imabc::predict(result_dir, n, target_ids, *pre_seed ? std::optional(seed) : std::nullopt, out,
                           *pre_workers ? workers : 1);
            std::cout << "wrote " << (out / "predictions.csv").string() << '\n';
        }
        return 0;
    } catch (const imabc::config_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
