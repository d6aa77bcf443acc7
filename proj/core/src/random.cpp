#include "imabc/random.hpp"

#include <cmath>

namespace imabc {

std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_key(std::uint64_t parent, std::uint64_t index) noexcept
{
    return mix64(mix64(parent) ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

std::uint64_t path_key(std::uint64_t seed, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t k = mix64(seed);
    for (auto p : path) k = derive_key(k, p);
    return k;
}

random_stream::random_stream(std::uint64_t key) : key_(key), engine_(mix64(key)) {}

random_stream::random_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path)
    : random_stream(path_key(seed, path))
{
}

double random_stream::exponential() noexcept { return -std::log(uniform()); }

} // namespace imabc
