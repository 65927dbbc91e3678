#include "she/solver.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "she/errors.hpp"
#include "she/kernel.hpp"

namespace she {

namespace {

double trace_value(const std::function<double(double)>& f, double t, double x) {
    if (t <= 0.0) {
        return f(x);
    }
    const double sd = std::sqrt(t);
    QuadratureSpec q;
    q.spatial_halfwidth = 10.0 * sd;
    q.spatial_step = 0.05 * sd;
    return semigroup_apply(f, t, x, q).value;
}

BoundaryTrace trace_of(const std::function<double(double)>& f, const Grid& g) {
    BoundaryTrace b;
    const auto n = static_cast<std::size_t>(g.n_steps() + 1);
    b.left.resize(n);
    b.right.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = g.time(static_cast<std::int64_t>(k));
        b.left[k] = trace_value(f, t, g.left());
        b.right[k] = trace_value(f, t, g.right());
    }
    return b;
}

std::vector<double> sample_row(const std::function<double(double)>& f, const Grid& g) {
    std::vector<double> row(static_cast<std::size_t>(g.cells()));
    for (std::int64_t j = 0; j < g.cells(); ++j) {
        row[static_cast<std::size_t>(j)] = f(g.x(j));
    }
    return row;
}

[[noreturn]] void abort_at(std::span<const double> row, std::int64_t step) {
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (!std::isfinite(row[j])) {
            throw ReplicaAbort(step, static_cast<std::int64_t>(j));
        }
    }
    throw ReplicaAbort(step, -1);
}

}  // namespace

BoundaryTrace boundary_trace(const InitialData& u0, const Grid& g) { return trace_of(u0.fn, g); }

void step_explicit(std::span<const double> u, std::span<const double> w, const SigmaFn& sigma, const Grid& g,
                   std::span<double> next, std::int64_t step) {
    const std::size_t m = u.size();
    if (m < 3 || next.size() != m || (!w.empty() && w.size() != m)) {
        throw PreconditionError("step_explicit: row sizes disagree with the grid");
    }
    const double r = g.dt() / (2.0 * g.dx() * g.dx());
    const double c = 1.0 - 2.0 * r;
    const double inv_dx = 1.0 / g.dx();
    double check = 0.0;
    if (w.empty()) {
        for (std::size_t j = 1; j + 1 < m; ++j) {
            next[j] = r * (u[j - 1] + u[j + 1]) + c * u[j];
            check += next[j] * 0.0;
        }
    } else if (sigma.kind() == SigmaFn::Kind::linear) {
        const double lam = sigma.lam() * inv_dx;
        for (std::size_t j = 1; j + 1 < m; ++j) {
            next[j] = r * (u[j - 1] + u[j + 1]) + c * u[j] + lam * u[j] * w[j];
            check += next[j] * 0.0;
        }
    } else {
        for (std::size_t j = 1; j + 1 < m; ++j) {
            next[j] = r * (u[j - 1] + u[j + 1]) + c * u[j] + sigma(u[j]) * w[j] * inv_dx;
            check += next[j] * 0.0;
        }
    }
    next[0] = u[0];
    next[m - 1] = u[m - 1];
    // x * 0 is NaN exactly when x is not finite.
    if (check != 0.0) {
        abort_at(next, step);
    }
}

Problem::Problem(InitialData u0, SigmaFn sigma, Grid grid, SolveOptions options)
    : u0_(std::move(u0)), sigma_(std::move(sigma)), grid_(grid), options_(options) {
    if (grid_.cells() < 3) {
        throw PreconditionError("solver: grid needs at least three cells");
    }
    boundary_ = boundary_trace(u0_, grid_);
}

std::vector<double> Problem::initial_row() const { return sample_row(u0_.fn, grid_); }

RunSummary Problem::run(const NoiseKey& key, const RowObserver& observer) const {
    const Grid& g = grid_;
    const NoiseSpec spec{key.seed, key.replica, g};
    const auto cells = static_cast<std::size_t>(g.cells());
    std::vector<double> u = initial_row();
    std::vector<double> next(cells);
    std::vector<double> w;
    const bool noisy = !sigma_.is_zero();
    if (noisy) {
        w.resize(cells);
    }
    std::int64_t negatives = 0;
    if (observer) {
        observer(0, u);
    }
    for (std::int64_t n = 0; n < g.n_steps(); ++n) {
        if (noisy) {
            noise_row(spec, n, w);
        }
        step_explicit(u, w, sigma_, g, next, n + 1);
        next.front() = boundary_.left[static_cast<std::size_t>(n + 1)];
        next.back() = boundary_.right[static_cast<std::size_t>(n + 1)];
        for (double& v : next) {
            if (v < 0.0) {
                ++negatives;
                if (options_.clamp_at_zero) {
                    v = 0.0;
                }
            }
        }
        u.swap(next);
        if (observer) {
            observer(n + 1, u);
        }
    }
    RunSummary s;
    s.final_row = std::move(u);
    s.negativity_fraction =
        static_cast<double>(negatives) / static_cast<double>((g.n_steps() + 1) * g.cells());
    return s;
}

SolutionField Problem::solve(const NoiseKey& key) const {
    const std::int64_t entries = (grid_.n_steps() + 1) * grid_.cells();
    if (entries > kMaxNoiseEntries) {
        throw CapacityError("solve: trajectory of " + std::to_string(entries) +
                            " values exceeds capacity; stream with Problem::run");
    }
    SolutionField f{grid_, u0_, sigma_, NoiseSpec{key.seed, key.replica, grid_}, {}, 0.0};
    f.values.reserve(static_cast<std::size_t>(entries));
    const auto summary = run(key, [&](std::int64_t, std::span<const double> row) {
        f.values.insert(f.values.end(), row.begin(), row.end());
    });
    f.negativity_fraction = summary.negativity_fraction;
    return f;
}

CoupledProblem::CoupledProblem(InitialData u0, InitialData v0, SigmaFn sigma, Grid grid)
    : base_(u0, std::move(sigma), grid),
      diff_([u = u0.fn, v = v0.fn](double x) { return v(x) - u(x); }, u0.sup_norm + v0.sup_norm,
            "(" + v0.label + ") - (" + u0.label + ")") {
    diff_boundary_ = boundary_trace(diff_, base_.grid());
}

std::vector<double> CoupledProblem::run(const NoiseKey& key, const PairObserver& observer) const {
    const Grid& g = base_.grid();
    const SigmaFn& sigma = base_.sigma();
    const NoiseSpec spec{key.seed, key.replica, g};
    const auto cells = static_cast<std::size_t>(g.cells());
    std::vector<double> u = base_.initial_row();
    std::vector<double> d = sample_row(diff_.fn, g);
    std::vector<double> un(cells), dn(cells), w(cells), inc(cells);
    const double r = g.dt() / (2.0 * g.dx() * g.dx());
    const double c = 1.0 - 2.0 * r;
    const double inv_dx = 1.0 / g.dx();
    if (observer) {
        observer(0, u, d);
    }
    for (std::int64_t n = 0; n < g.n_steps(); ++n) {
        noise_row(spec, n, w);
        step_explicit(u, w, sigma, g, un, n + 1);
        for (std::size_t j = 0; j < cells; ++j) {
            inc[j] = sigma.increment(u[j], d[j]) * w[j] * inv_dx;
        }
        for (std::size_t j = 1; j + 1 < cells; ++j) {
            dn[j] = r * (d[j - 1] + d[j + 1]) + c * d[j] + inc[j];
            if (!std::isfinite(dn[j])) {
                throw ReplicaAbort(n + 1, static_cast<std::int64_t>(j));
            }
        }
        const auto k = static_cast<std::size_t>(n + 1);
        un.front() = base_.boundary().left[k];
        un.back() = base_.boundary().right[k];
        dn.front() = diff_boundary_.left[k];
        dn.back() = diff_boundary_.right[k];
        u.swap(un);
        d.swap(dn);
        if (observer) {
            observer(n + 1, u, d);
        }
    }
    return d;
}

SolutionField solve(const InitialData& u0, const SigmaFn& sigma, double T, const Grid& grid,
                    const NoiseSpec& noise_spec, SolveOptions options) {
    if (std::abs(T - grid.final_time()) > 1e-12) {
        throw PreconditionError("solve: T must equal n_steps * dt of the grid");
    }
    if (noise_spec.grid.cells() != grid.cells() || noise_spec.grid.dx() != grid.dx() ||
        noise_spec.grid.dt() != grid.dt() || noise_spec.grid.centre_index() != grid.centre_index()) {
        throw PreconditionError("solve: noise grid differs from the solution grid");
    }
    return Problem(u0, sigma, grid, options).solve(noise_spec.key());
}

void write_csv(const SolutionField& f, const std::filesystem::path& path, std::int64_t stride) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_csv: cannot open " + path.string());
    }
    out << std::setprecision(17);
    out << "t,x,value\n";
    const std::int64_t rows = static_cast<std::int64_t>(f.values.size()) / f.grid.cells();
    for (std::int64_t n = 0; n < rows; n += std::max<std::int64_t>(stride, 1)) {
        for (std::int64_t j = 0; j < f.grid.cells(); ++j) {
            out << f.grid.time(n) << ',' << f.grid.x(j) << ',' << f(n, j) << '\n';
        }
    }
}

void write_binary(const SolutionField& f, const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little, "binary dumps assume a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("write_binary: cannot open " + path.string());
    }
    const std::int64_t rows = static_cast<std::int64_t>(f.values.size()) / f.grid.cells();
    nlohmann::json header = {
        {"format", "float64-le-row-major"},
        {"rows", rows},
        {"cells", f.grid.cells()},
        {"dx", f.grid.dx()},
        {"dt", f.grid.dt()},
        {"x0", f.grid.left()},
        {"halfwidth", f.grid.halfwidth()},
        {"centre", f.grid.centre()},
        {"profile", f.profile.label},
        {"sigma", f.sigma.describe()},
        {"seed", f.noise_spec.seed},
        {"replica", f.noise_spec.replica_id},
    };
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(f.values.data()),
              static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

BinaryDump read_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("read_binary: cannot open " + path.string());
    }
    std::string line;
    std::getline(in, line);
    const auto header = nlohmann::json::parse(line);
    BinaryDump d;
    d.rows = header.at("rows").get<std::int64_t>();
    d.cells = header.at("cells").get<std::int64_t>();
    d.values.resize(static_cast<std::size_t>(d.rows * d.cells));
    in.read(reinterpret_cast<char*>(d.values.data()), static_cast<std::streamsize>(d.values.size() * sizeof(double)));
    if (!in) {
        throw std::runtime_error("read_binary: truncated file " + path.string());
    }
    return d;
}

}  // namespace she
