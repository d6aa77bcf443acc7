#include <vector>

#include <benchmark/benchmark.h>

#include "imabc/crc_model.hpp"
#include "imabc/distributions.hpp"
#include "imabc/engine.hpp"
#include "imabc/natural_history.hpp"

namespace {

void bm_simulate_person(benchmark::State& state)
{
    const auto params = imabc::crc::natural_history_params::posterior_means();
    const auto lt = imabc::crc::life_table::immortal();
    imabc::random_stream rng(1, {0});
    imabc::crc::person_history h;
    for (auto _ : state) {
        imabc::crc::simulate_person(params, imabc::crc::sex::male, 1920, lt, rng, h, {60.0, 61.0});
        benchmark::DoNotOptimize(h.adenomas.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_simulate_person);

void bm_seer_study(benchmark::State& state)
{
    const auto params = imabc::crc::natural_history_params::posterior_means();
    const auto lt = imabc::crc::life_table::immortal();
    imabc::crc::study_spec study;
    study.name = "seer";
    study.statistic = imabc::crc::statistic_kind::seer_incidence;
    study.calendar_year = 1978;
    study.cells = {{imabc::crc::sex::male, 60, 70, 1.0}, {imabc::crc::sex::female, 60, 70, 1.0}};
    study.targets = {{"colon", std::nullopt, 60, 70, false, 0, 1e9}};
    const auto m = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        auto r = imabc::crc::simulate_study(params, study, lt, m, imabc::random_stream(3), 1);
        benchmark::DoNotOptimize(r.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_seer_study)->Arg(1 << 14)->Arg(1 << 17);

void bm_kernel_log_density(benchmark::State& state)
{
    const auto p = static_cast<Eigen::Index>(state.range(0));
    Eigen::MatrixXd a = Eigen::MatrixXd::Random(p, p);
    Eigen::MatrixXd cov = a * a.transpose() + Eigen::MatrixXd::Identity(p, p);
    imabc::gaussian_kernel k(Eigen::VectorXd::Zero(p), cov);
    std::vector<double> x(static_cast<std::size_t>(p), 0.3);
    for (auto _ : state) benchmark::DoNotOptimize(k.log_density(x));
}
BENCHMARK(bm_kernel_log_density)->Arg(1)->Arg(21);

void bm_weights(benchmark::State& state)
{
    const auto n_kernels = static_cast<std::size_t>(state.range(0));
    imabc::prior_spec prior{"theta", imabc::prior_kind::truncated_normal, 0.0, 1.0, -10.0, 10.0, "", ""};
    imabc::prior_set priors({prior});
    imabc::engine_state s;
    s.config.n_init = 1000;
    s.config.batch_per_center = 100;
    s.n_total = 1000 + 100 * n_kernels;
    imabc::random_stream rng(5);
    for (std::size_t i = 0; i < 1000; ++i) {
        imabc::point pt;
        pt.index = i;
        pt.theta = {rng.normal() * 0.3};
        pt.status = imabc::point_status::accepted;
        s.points.push_back(pt);
    }
    for (std::size_t k = 0; k < n_kernels; ++k)
        s.kernels.emplace_back(Eigen::VectorXd::Constant(1, rng.normal() * 0.2), Eigen::MatrixXd::Constant(1, 1, 0.04));
    for (auto _ : state) benchmark::DoNotOptimize(imabc::compute_weights(s, priors).data());
    state.SetItemsProcessed(state.iterations() * 1000);
}
BENCHMARK(bm_weights)->Arg(10)->Arg(200);

} // namespace

BENCHMARK_MAIN();
