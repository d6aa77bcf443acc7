#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace imabc {

/// Mixes a 64-bit key (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child key from a parent key and an index. Used to give every
/// candidate point, target group and person block its own stream so results
/// never depend on evaluation order.
std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept;

/// Key reached from `seed` by following `path` through derive_key.
std::uint64_t path_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept;

/// A keyed random stream. Two streams built from the same key produce the
/// same sequence; `split` yields statistically independent children.
class random_stream {
public:
    using result_type = std::mt19937_64::result_type;

    explicit random_stream(std::uint64_t key);
    random_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    std::uint64_t key() const noexcept { return key_; }
    random_stream split(std::uint64_t index) const { return random_stream(derive_key(key_, index)); }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }
    double normal() { return normal_(engine_); }
    double exponential() noexcept;

private:
    std::uint64_t key_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Stream domains keep keys from different uses of the master seed apart.
namespace stream_domain {
inline constexpr std::uint64_t latin_hypercube = 1;
inline constexpr std::uint64_t proposal = 2;
inline constexpr std::uint64_t evaluation = 3;
inline constexpr std::uint64_t center_resimulation = 4;
inline constexpr std::uint64_t resample = 5;
inline constexpr std::uint64_t prediction = 6;
} // namespace stream_domain

} // namespace imabc
