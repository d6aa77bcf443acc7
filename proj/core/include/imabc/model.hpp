#pragma once

#include <cstddef>
#include <span>

#include "imabc/distributions.hpp"
#include "imabc/random.hpp"

namespace imabc {

/// Contract between the engine and a simulator. A model is bound to the
/// target set it was configured with; `simulate` fills `out[j]` for every
/// requested target index j and must be deterministic given `rng`.
class simulation_model {
public:
    virtual ~simulation_model() = default;

    virtual const prior_set& priors() const = 0;

    virtual void simulate(std::span<const double> theta,
                          std::span<const std::size_t> target_indices,
                          random_stream& rng,
                          std::span<double> out) const = 0;
};

} // namespace imabc
