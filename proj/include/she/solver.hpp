#pragma once

// Explicit finite differences for du = (1/2) u'' dt + sigma(u) W(dt, dx) / dx,
// with Dirichlet values pinned to the deterministic continuation (p_t * u0)(+-X).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "she/grid.hpp"
#include "she/noise.hpp"
#include "she/profiles.hpp"
#include "she/sigma.hpp"

namespace she {

struct SolveOptions {
    bool clamp_at_zero = false;  ///< Off by default: clamping biases moments.
};

/// (p_{t_n} * u0)(x) at both grid ends for n = 0 .. n_steps.
struct BoundaryTrace {
    std::vector<double> left;
    std::vector<double> right;
};

BoundaryTrace boundary_trace(const InitialData& u0, const Grid& g);

/// One explicit step on the interior cells; next[0] and next[last] are left
/// for the caller. noise_row holds W[n, j] ~ N(0, dt dx) or is empty (no noise).
/// Throws ReplicaAbort(step, cell) on a non-finite value.
void step_explicit(std::span<const double> state, std::span<const double> noise_row, const SigmaFn& sigma,
                   const Grid& g, std::span<double> next, std::int64_t step = 0);

/// Row-major (n_steps + 1) x cells trajectory of one replica.
struct SolutionField {
    Grid grid;
    InitialData profile;
    SigmaFn sigma;
    NoiseSpec noise_spec;
    std::vector<double> values;
    double negativity_fraction = 0.0;

    double operator()(std::int64_t n, std::int64_t j) const {
        return values[static_cast<std::size_t>(n * grid.cells() + j)];
    }
    std::span<const double> row(std::int64_t n) const {
        return {values.data() + n * grid.cells(), static_cast<std::size_t>(grid.cells())};
    }
};

using RowObserver = std::function<void(std::int64_t n, std::span<const double> row)>;
using PairObserver = std::function<void(std::int64_t n, std::span<const double> u, std::span<const double> d)>;

struct RunSummary {
    std::vector<double> final_row;
    double negativity_fraction = 0.0;
};

/// Initial data, coefficient and grid with the boundary trace precomputed, so
/// that many replicas can be streamed without storing their trajectories.
class Problem {
public:
    Problem(InitialData u0, SigmaFn sigma, Grid grid, SolveOptions options = {});

    const Grid& grid() const noexcept { return grid_; }
    const InitialData& initial_data() const noexcept { return u0_; }
    const SigmaFn& sigma() const noexcept { return sigma_; }
    const BoundaryTrace& boundary() const noexcept { return boundary_; }

    std::vector<double> initial_row() const;

    /// Streams rows 0 .. n_steps to observer (when set).
    RunSummary run(const NoiseKey& key, const RowObserver& observer = {}) const;
    SolutionField solve(const NoiseKey& key) const;

private:
    InitialData u0_;
    SigmaFn sigma_;
    Grid grid_;
    SolveOptions options_;
    BoundaryTrace boundary_;
};

/// Two solutions u (from u0) and v (from v0) driven by one noise field,
/// advanced as (u, d = v - u) so that tiny differences keep full precision.
class CoupledProblem {
public:
    CoupledProblem(InitialData u0, InitialData v0, SigmaFn sigma, Grid grid);

    const Grid& grid() const noexcept { return base_.grid(); }

    /// Streams (u, d) rows; returns the final d row.
    std::vector<double> run(const NoiseKey& key, const PairObserver& observer = {}) const;

private:
    Problem base_;
    InitialData diff_;
    BoundaryTrace diff_boundary_;
};

/// Full trajectory; T must equal grid.final_time() and noise_spec.grid must be grid.
SolutionField solve(const InitialData& u0, const SigmaFn& sigma, double T, const Grid& grid,
                    const NoiseSpec& noise_spec, SolveOptions options = {});

/// Rows every `stride` steps as "t,x,value" lines (17 significant digits).
void write_csv(const SolutionField& f, const std::filesystem::path& path, std::int64_t stride = 1);

/// One JSON header line describing the grid, then row-major little-endian float64 values.
void write_binary(const SolutionField& f, const std::filesystem::path& path);

struct BinaryDump {
    std::int64_t rows = 0;
    std::int64_t cells = 0;
    std::vector<double> values;
};
BinaryDump read_binary(const std::filesystem::path& path);

}  // namespace she
