#include "she/grid.hpp"

#include <cmath>
#include <sstream>

#include "she/errors.hpp"

namespace she {

Grid Grid::make(double halfwidth, double dx, double T, std::optional<double> dt, double centre) {
    if (!(halfwidth > 0.0) || !(dx > 0.0) || !(T > 0.0)) {
        throw PreconditionError("grid: halfwidth, dx and T must be positive");
    }
    const double requested = dt.value_or(0.5 * dx * dx);
    if (!(requested > 0.0)) {
        throw PreconditionError("grid: dt must be positive");
    }
    if (requested > dx * dx * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "stability: dt <= dx^2 violated (dt = " << requested << ", dx^2 = " << dx * dx << ")";
        throw PreconditionError(os.str());
    }
    Grid g;
    g.halfwidth_ = halfwidth;
    g.dx_ = dx;
    g.n_steps_ = static_cast<std::int64_t>(std::ceil(T / requested - 1e-9));
    g.dt_ = T / static_cast<double>(g.n_steps_);
    g.half_cells_ = static_cast<std::int64_t>(std::floor(halfwidth / dx + 1e-9));
    g.centre_index_ = std::llround(centre / dx);
    if (g.half_cells_ < 1) {
        throw PreconditionError("grid: halfwidth must cover at least one cell on each side");
    }
    if (std::abs(g.final_time() - T) > 1e-12) {
        throw PreconditionError("grid: n_steps * dt does not reproduce T");
    }
    return g;
}

bool Grid::contains(double x) const noexcept {
    const double tol = 0.5 * dx_;
    return x >= left() - tol && x <= right() + tol;
}

std::int64_t Grid::cell_of(double x) const {
    if (!contains(x)) {
        std::ostringstream os;
        os << "grid: x = " << x << " lies outside [" << left() << ", " << right() << "]";
        throw PreconditionError(os.str());
    }
    return std::llround(x / dx_) - centre_index_ + half_cells_;
}

std::int64_t Grid::step_of(double t) const {
    if (!(t >= -0.5 * dt_ && t <= final_time() + 0.5 * dt_)) {
        std::ostringstream os;
        os << "grid: t = " << t << " lies outside [0, " << final_time() << "]";
        throw PreconditionError(os.str());
    }
    return std::llround(t / dt_);
}

std::string Grid::describe() const {
    std::ostringstream os;
    os << "[" << left() << ", " << right() << "] dx=" << dx_ << " dt=" << dt_ << " steps=" << n_steps_;
    return os.str();
}

}  // namespace she
