#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "mlab/lattice.hpp"

// Shared deterministic generators for the property tests. Everything is
// seeded explicitly so every run sees the same inputs.

namespace testutil {

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// Piecewise-constant function: `pieces` random levels on random subintervals
// of the index range, on top of a baseline level.
inline mlab::GridFunction piecewise_constant(const mlab::Grid& grid,
                                             std::mt19937_64& gen,
                                             int pieces = 6) {
    std::uniform_real_distribution<double> level(-3.0, 3.0);
    std::uniform_int_distribution<std::size_t> pos(0, grid.cell_count() - 1);
    mlab::GridFunction f{grid, std::vector<double>(grid.cell_count(), level(gen))};
    for (int k = 0; k < pieces; ++k) {
        std::size_t a = pos(gen);
        std::size_t b = pos(gen);
        if (a > b) std::swap(a, b);
        const double v = level(gen);
        for (std::size_t i = a; i <= b; ++i) f.values[i] = v;
    }
    return f;
}

// Strictly positive random samples (for weights).
inline mlab::GridFunction positive_samples(const mlab::Grid& grid,
                                           std::mt19937_64& gen,
                                           double lo = 0.2, double hi = 5.0) {
    std::uniform_real_distribution<double> value(lo, hi);
    mlab::GridFunction f{grid, std::vector<double>(grid.cell_count())};
    for (double& v : f.values) v = value(gen);
    return f;
}

}  // namespace testutil
