#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <unistd.h>

#include "imabc/targets.hpp"

namespace imabc::testing {

/// Two-sided Kolmogorov-Smirnov statistic of a sample against a cdf.
inline double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf)
{
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Asymptotic critical value of the KS statistic at level 1e-4.
inline double ks_critical_1e4(std::size_t n)
{
    return std::sqrt(-0.5 * std::log(1e-4 / 2.0)) / std::sqrt(static_cast<double>(n));
}

inline target_spec normal_target(std::string id, double observed, double se, double alpha_init = 0.0,
                                 double alpha_final = 0.05, int cost_rank = 1)
{
    target_spec t;
    t.id = std::move(id);
    t.observed = observed;
    t.se = se;
    t.alpha_init = alpha_init;
    t.alpha_final = alpha_final;
    t.cost_rank = cost_rank;
    return t;
}

/// Fresh directory under the system temp dir, removed on destruction.
class temp_dir {
public:
    explicit temp_dir(const std::string& tag)
    {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("imabc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~temp_dir() { std::filesystem::remove_all(path_); }
    temp_dir(const temp_dir&) = delete;
    temp_dir& operator=(const temp_dir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string config_dir() { return IMABC_CONFIG_DIR; }

} // namespace imabc::testing
