#pragma once

// Discretised space-time white noise.
//
// Every increment W[n, g] (time step n, global cell g) is a pure function of
// (seed, replica, n, g): a Philox4x32-10 block keyed by the seed and indexed by
// (replica, n, g / 2) yields two 53-bit uniforms, mapped to N(0, dt dx) through
// the normal quantile. Order of generation and thread count are irrelevant.

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "she/grid.hpp"

namespace she {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

struct NoiseKey {
    std::uint64_t seed = 0;
    std::uint64_t replica = 0;
};

/// Standard normal for (key, step, global cell). Unit variance.
double standard_normal(const NoiseKey& key, std::int64_t step, std::int64_t global_cell);

/// Standard normals for consecutive global cells first .. first + out.size() - 1.
void standard_normal_row(const NoiseKey& key, std::int64_t step, std::int64_t first, std::span<double> out);

/// Seed for a named sub-experiment, so that experiments sharing a master seed
/// never reuse a stream (splitmix64 over the master seed and an FNV-1a hash).
std::uint64_t derive_seed(std::uint64_t master, std::string_view scope);

struct NoiseSpec {
    std::uint64_t seed = 0;
    std::uint64_t replica_id = 0;
    Grid grid;

    NoiseKey key() const { return {seed, replica_id}; }
};

/// Row-major (n_steps x cells) array of N(0, dt dx) cell integrals.
struct NoiseField {
    Grid grid;
    double cell_variance = 0.0;
    std::vector<double> increments;

    double operator()(std::int64_t n, std::int64_t j) const {
        return increments[static_cast<std::size_t>(n * grid.cells() + j)];
    }
    std::span<const double> row(std::int64_t n) const {
        return {increments.data() + n * grid.cells(), static_cast<std::size_t>(grid.cells())};
    }
};

/// Largest field sample_noise will materialise (doubles); larger grids must stream rows.
inline constexpr std::int64_t kMaxNoiseEntries = std::int64_t{1} << 27;

/// Scaled increments of one time slice: W[n, j] for every cell of the grid.
void noise_row(const NoiseSpec& spec, std::int64_t n, std::span<double> out);

/// Whole field, time slices generated in parallel (OpenMP).
/// Throws CapacityError beyond max_entries.
NoiseField sample_noise(const NoiseSpec& spec, std::int64_t max_entries = kMaxNoiseEntries);
/// Serial reference for sample_noise; bit-identical output.
NoiseField sample_noise_serial(const NoiseSpec& spec, std::int64_t max_entries = kMaxNoiseEntries);

/// Brownian sheet B(t, x) = W([0, t] x [0, x]) assembled from cell increments
/// (cells 1..x/dx for x > 0, cells -|x|/dx..-1 for x < 0). Grid must be centred at 0.
double sheet_value(const NoiseField& field, double t, double x);

/// Single-field covariance sample B(s, x) B(t, y); average over replicas to
/// estimate min(s, t) min(|x|, |y|) 1{xy > 0}.
double brownian_sheet_check(const NoiseField& field, double s, double t, double x, double y);

}  // namespace she
