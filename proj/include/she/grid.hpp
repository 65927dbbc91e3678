#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace she {

/// Truncated space-time lattice. Cells sit at x_j = (c + j - h) dx for
/// j = 0 .. 2h, where h = floor(halfwidth / dx) and c is the lattice index of
/// the (snapped) centre. Noise is keyed by the global index c + j - h, so
/// grids with different centres see one consistent noise field.
class Grid {
public:
    /// dt defaults to dx^2 / 2 and is shrunk so that n_steps * dt == T exactly.
    /// Throws PreconditionError when dt > dx^2 or any size is non-positive.
    static Grid make(double halfwidth, double dx, double T, std::optional<double> dt = std::nullopt,
                     double centre = 0.0);

    double halfwidth() const noexcept { return halfwidth_; }
    double dx() const noexcept { return dx_; }
    double dt() const noexcept { return dt_; }
    std::int64_t n_steps() const noexcept { return n_steps_; }
    double final_time() const noexcept { return static_cast<double>(n_steps_) * dt_; }
    std::int64_t cells() const noexcept { return 2 * half_cells_ + 1; }
    std::int64_t half_cells() const noexcept { return half_cells_; }
    double centre() const noexcept { return static_cast<double>(centre_index_) * dx_; }
    std::int64_t centre_index() const noexcept { return centre_index_; }

    std::int64_t global_index(std::int64_t j) const noexcept { return centre_index_ + j - half_cells_; }
    double x(std::int64_t j) const noexcept { return static_cast<double>(global_index(j)) * dx_; }
    double left() const noexcept { return x(0); }
    double right() const noexcept { return x(cells() - 1); }
    double time(std::int64_t n) const noexcept { return static_cast<double>(n) * dt_; }

    /// Nearest cell to x; throws PreconditionError when x lies outside the grid.
    std::int64_t cell_of(double x) const;
    /// Nearest step to t; throws PreconditionError when t is outside [0, T].
    std::int64_t step_of(double t) const;
    bool contains(double x) const noexcept;

    std::string describe() const;

private:
    double halfwidth_ = 0.0;
    double dx_ = 0.0;
    double dt_ = 0.0;
    std::int64_t n_steps_ = 0;
    std::int64_t half_cells_ = 0;
    std::int64_t centre_index_ = 0;
};

}  // namespace she
