#pragma once

// Picard iterates of the mild equation, discretised with the propagator of
// the finite-difference scheme so that the fixed point is the scheme itself:
//
//   u^(k+1)_m = L^m u0 + sum_{i < m} L^{m-1-i} [sigma(u^(k)_i) W_i / dx],
//
// with L the explicit heat step. sigma is evaluated at the left end of each
// time cell (predictable integrand).

#include <cstdint>
#include <utility>
#include <vector>

#include "she/grid.hpp"
#include "she/noise.hpp"
#include "she/profiles.hpp"
#include "she/sigma.hpp"
#include "she/solver.hpp"

namespace she {

/// Iterates u^(0) .. u^(n_iters) on the whole grid; u^(0) is u0 at every time.
/// t must equal grid.final_time().
std::vector<SolutionField> picard_iterate(const InitialData& u0, const SigmaFn& sigma, double t, const Grid& grid,
                                          const NoiseSpec& noise_spec, int n_iters);

/// A read of the noise field: (time step, global cell).
using NoiseCell = std::pair<std::int64_t, std::int64_t>;

struct LocalizedResult {
    double value = 0.0;              ///< u^(n,n)_t(x).
    std::vector<double> levels;      ///< u^(n,j)_t(x) for j = 0 .. n.
    std::vector<NoiseCell> footprint;  ///< Sorted noise cells read (when requested).
};

/// The localized scheme u^(n,j): at time s the stochastic integral around y
/// only runs over [y - sqrt(n s), y + sqrt(n s)]. u^(n,n)_t(x) then reads
/// noise within n sqrt(n t) of x only.
class LocalizedPicard {
public:
    /// The final time is grid.final_time(). Throws PreconditionError when
    /// [x - n sqrt(n t), x + n sqrt(n t)] is not inside the grid.
    LocalizedPicard(const InitialData& u0, SigmaFn sigma, Grid grid, double x, int n);

    /// n sqrt(n t): reach of u^(n,n)_t(x) into the noise.
    static double dependence_radius(int n, double t);

    LocalizedResult evaluate(const NoiseKey& key, bool record_footprint = false) const;
    /// Noise cells read, independent of the noise values.
    std::vector<NoiseCell> footprint() const;

    const Grid& grid() const noexcept { return grid_; }
    double x() const noexcept { return grid_.x(centre_); }

private:
    SigmaFn sigma_;
    Grid grid_;
    int n_;
    std::int64_t centre_;
    std::int64_t steps_;
    std::vector<std::int64_t> window_;  ///< Cells strictly inside sqrt(n s), per step.
    std::vector<double> heat_;          ///< Deterministic L^m u0, row-major.
    std::vector<double> kernel_;        ///< Lattice propagator G_s(o), (steps) x (2 steps + 1).
};

/// u^(n,n)_t(x) for one noise realisation; noise_spec.grid supplies t.
double localized_picard(const InitialData& u0, const SigmaFn& sigma, double t, double x, int n,
                        const NoiseSpec& noise_spec);

}  // namespace she
