#pragma once

/// @file noise.hpp
/// Finite-dimensional Wiener paths on dyadic grids and their
/// piecewise-linear interpolants. Sampling is counter-based: every normal
/// draw is a pure function of (seed, component, step index), so paths are
/// reproducible regardless of evaluation order or thread count, and a
/// coarse path is obtained from a fine one by dropping nodes (the shared
/// nodes coincide bitwise).

#include <array>
#include <cstdint>
#include <vector>

#include "crossdiff/linalg.hpp"

namespace crossdiff {

/// Philox 4x32-10 counter-based random engine: maps a 128-bit counter and
/// 64-bit key to 128 random bits.
struct Philox4x32 {
    static std::array<uint32_t, 4> block(const std::array<uint32_t, 4>& counter,
                                         const std::array<uint32_t, 2>& key);
};

/// Standard normal deviate for lane (seed, component, step), built from a
/// Philox block through the inverse normal CDF. Deterministic by
/// construction; no engine state anywhere.
double normal_draw(uint64_t seed, uint32_t component, uint64_t step);

/// Uniform deviate in the open interval (0,1) for the same lane scheme,
/// taken from the half of the Philox block that normal_draw does not use.
double uniform_draw(uint64_t seed, uint32_t component, uint64_t step);

/// Derive an independent per-path seed from a master seed and path id via
/// a 64-bit mix (splitmix64 of master xor id-offset).
uint64_t derive_path_seed(uint64_t master_seed, uint64_t path_id);

/// Sampled Wiener path on the dyadic grid t_k = k * eta, eta = T / 2^levels,
/// with values[k] the n components of W(t_k); values[0] = 0.
struct WienerPath {
    double horizon = 0.0;  ///< T
    double eta = 0.0;      ///< node spacing
    int components = 0;    ///< n
    int levels = 0;        ///< node count is 2^levels + 1
    uint64_t seed = 0;
    std::vector<Vec> values;

    int intervals() const { return static_cast<int>(values.size()) - 1; }
    /// Increment W(t_{k+1}) - W(t_k) of interval k.
    Vec increment(int k) const;
    /// Increment over [t_a, t_b] for node indices a <= b.
    Vec increment(int a, int b) const;
};

/// Sample a path with 2^levels intervals. Increments are sqrt(eta) times
/// independent standard normals, indexed by (seed, component, interval).
WienerPath sample_path(uint64_t seed, double horizon, int levels, int components);

/// Drop every other node (coarsen_levels times): the coarse path is the
/// restriction of the fine path to its dyadic subgrid.
WienerPath coarsen(const WienerPath& path, int coarsen_levels);

/// Slope of the piecewise-linear interpolant on the interval containing t
/// (right-continuous at the nodes, last interval at t >= T):
///   (W(t_{k+1}) - W(t_k)) / eta.
Vec wong_zakai_slope(const WienerPath& path, double t);

/// Same, by interval index.
Vec wong_zakai_slope_at(const WienerPath& path, int interval);

}  // namespace crossdiff
