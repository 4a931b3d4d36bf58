#pragma once

#include <cstddef>
#include <vector>

#include "semipert/coord_ops.hpp"

namespace semipert {

/// Uniform time grid t_k = k * step, k = 0..steps.
struct TimeGrid {
    double step = 0.0;
    std::size_t steps = 0;

    TimeGrid() = default;
    TimeGrid(double step, std::size_t steps);

    /// Grid with the given step reaching exactly horizon (horizon / step must be integral).
    static TimeGrid covering(double horizon, double step);

    std::size_t nodes() const { return steps + 1; }
    double at(std::size_t k) const { return static_cast<double>(k) * step; }
    double horizon() const { return at(steps); }
    /// Index of the node equal to t (to 1e-9 relative), or throws.
    std::size_t index_of(double t) const;

    bool operator==(const TimeGrid&) const = default;
};

/// Green's function of the unperturbed semigroup, sampled on time grids.
class ReferenceGreen {
public:
    virtual ~ReferenceGreen() = default;

    /// G(x, y, t_k) for every node of grid.
    virtual std::vector<double> path(Site x, Site y, const TimeGrid& grid) const = 0;

    /// Pairs with equal keys share identical paths; lets callers reuse samples.
    virtual SitePair path_key(Site x, Site y) const { return {x, y}; }
};

}  // namespace semipert
