#include "she/picard.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "she/errors.hpp"

namespace she {

std::vector<SolutionField> picard_iterate(const InitialData& u0, const SigmaFn& sigma, double t, const Grid& grid,
                                          const NoiseSpec& noise_spec, int n_iters) {
    if (n_iters < 0) {
        throw PreconditionError("picard_iterate: n_iters must be non-negative");
    }
    if (std::abs(t - grid.final_time()) > 1e-12) {
        throw PreconditionError("picard_iterate: t must equal n_steps * dt of the grid");
    }
    const Problem heat(u0, SigmaFn::zero(), grid);
    const NoiseField noise = sample_noise({noise_spec.seed, noise_spec.replica_id, grid});
    const std::int64_t steps = grid.n_steps();
    const auto cells = static_cast<std::size_t>(grid.cells());
    const double r = grid.dt() / (2.0 * grid.dx() * grid.dx());
    const double c = 1.0 - 2.0 * r;
    const double inv_dx = 1.0 / grid.dx();

    std::vector<SolutionField> out;
    out.reserve(static_cast<std::size_t>(n_iters) + 1);
    SolutionField first{grid, u0, sigma, noise_spec, {}, 0.0};
    const std::vector<double> row0 = heat.initial_row();
    for (std::int64_t n = 0; n <= steps; ++n) {
        first.values.insert(first.values.end(), row0.begin(), row0.end());
    }
    out.push_back(std::move(first));

    for (int k = 0; k < n_iters; ++k) {
        const SolutionField& prev = out.back();
        SolutionField next{grid, u0, sigma, noise_spec, {}, 0.0};
        next.values.resize(prev.values.size());
        std::copy(row0.begin(), row0.end(), next.values.begin());
        std::int64_t negatives = 0;
        for (std::int64_t m = 0; m < steps; ++m) {
            const double* v = next.values.data() + m * grid.cells();
            double* vn = next.values.data() + (m + 1) * grid.cells();
            const double* p = prev.values.data() + m * grid.cells();
            const auto w = noise.row(m);
            for (std::size_t j = 1; j + 1 < cells; ++j) {
                vn[j] = r * (v[j - 1] + v[j + 1]) + c * v[j] + sigma(p[j]) * w[j] * inv_dx;
                if (!std::isfinite(vn[j])) {
                    throw ReplicaAbort(m + 1, static_cast<std::int64_t>(j));
                }
            }
            vn[0] = heat.boundary().left[static_cast<std::size_t>(m + 1)];
            vn[cells - 1] = heat.boundary().right[static_cast<std::size_t>(m + 1)];
            negatives += std::count_if(vn, vn + cells, [](double x) { return x < 0.0; });
        }
        next.negativity_fraction = static_cast<double>(negatives) / static_cast<double>(next.values.size());
        out.push_back(std::move(next));
    }
    return out;
}

double LocalizedPicard::dependence_radius(int n, double t) {
    return static_cast<double>(n) * std::sqrt(static_cast<double>(n) * t);
}

LocalizedPicard::LocalizedPicard(const InitialData& u0, SigmaFn sigma, Grid grid, double x, int n)
    : sigma_(std::move(sigma)), grid_(grid), n_(n) {
    if (n < 1) {
        throw PreconditionError("localized_picard: n must be at least 1");
    }
    const double t = grid_.final_time();
    const double reach = dependence_radius(n, t);
    if (!grid_.contains(x) || x - reach < grid_.left() || x + reach > grid_.right()) {
        std::ostringstream os;
        os << "localized_picard: window exceeds grid; need [x - " << reach << ", x + " << reach
           << "] inside the grid, i.e. halfwidth >= " << reach << " around x = " << x;
        throw PreconditionError(os.str());
    }
    centre_ = grid_.cell_of(x);
    steps_ = grid_.n_steps();
    window_.resize(static_cast<std::size_t>(steps_ + 1));
    for (std::int64_t m = 0; m <= steps_; ++m) {
        // Open window |y - x| < sqrt(n s): cells strictly inside.
        const double w = std::sqrt(n * grid_.time(m)) / grid_.dx();
        window_[static_cast<std::size_t>(m)] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(w - 1e-9)) - 1);
    }
    const std::int64_t rad0 = n * window_.back();
    if (centre_ - rad0 < 0 || centre_ + rad0 >= grid_.cells()) {
        throw PreconditionError("localized_picard: window exceeds grid after snapping to cells");
    }
    heat_ = Problem(u0, SigmaFn::zero(), grid_).solve({0, 0}).values;

    const double r = grid_.dt() / (2.0 * grid_.dx() * grid_.dx());
    const double c = 1.0 - 2.0 * r;
    const std::int64_t width = 2 * steps_ + 1;
    kernel_.assign(static_cast<std::size_t>(std::max<std::int64_t>(steps_, 1) * width), 0.0);
    kernel_[static_cast<std::size_t>(steps_)] = 1.0;
    for (std::int64_t s = 1; s < steps_; ++s) {
        const double* g = kernel_.data() + (s - 1) * width;
        double* gn = kernel_.data() + s * width;
        for (std::int64_t o = -s; o <= s; ++o) {
            const std::int64_t k = o + steps_;
            const double left = o - 1 >= -(s - 1) ? g[k - 1] : 0.0;
            const double mid = std::abs(o) <= s - 1 ? g[k] : 0.0;
            const double right = o + 1 <= s - 1 ? g[k + 1] : 0.0;
            gn[k] = r * (left + right) + c * mid;
        }
    }
}

LocalizedResult LocalizedPicard::evaluate(const NoiseKey& key, bool record_footprint) const {
    const std::int64_t M = steps_;
    const std::int64_t wM = window_.back();
    const std::int64_t rad0 = n_ * wM;
    const std::int64_t lo = centre_ - rad0;
    const std::int64_t span = 2 * rad0 + 1;
    const std::int64_t cells = grid_.cells();
    const std::int64_t width = 2 * M + 1;
    const double inv_dx = 1.0 / grid_.dx();
    const double scale = std::sqrt(grid_.dt() * grid_.dx());

    // Noise on the dependence window only: W[k][l - lo].
    std::vector<double> noise(static_cast<std::size_t>(M * span));
    if (!sigma_.is_zero()) {
        for (std::int64_t k = 0; k < M; ++k) {
            std::span<double> row(noise.data() + k * span, static_cast<std::size_t>(span));
            standard_normal_row(key, k, grid_.global_index(lo), row);
            for (double& v : row) {
                v *= scale;
            }
        }
    }
    std::vector<char> touched(record_footprint ? noise.size() : 0, 0);

    auto heat_at = [&](std::int64_t m, std::int64_t cell) {
        return heat_[static_cast<std::size_t>(m * cells + cell)];
    };

    LocalizedResult res;
    res.levels.reserve(static_cast<std::size_t>(n_) + 1);
    res.levels.push_back(heat_at(0, centre_));

    // Level j lives on cells centre_ +- (n - j) wM; prev holds level j - 1
    // on its own (wider) range, (M + 1) rows each.
    std::int64_t prev_rad = rad0;
    std::vector<double> prev(static_cast<std::size_t>((M + 1) * (2 * prev_rad + 1)));
    for (std::int64_t m = 0; m <= M; ++m) {
        for (std::int64_t i = -prev_rad; i <= prev_rad; ++i) {
            prev[static_cast<std::size_t>(m * (2 * prev_rad + 1) + i + prev_rad)] = heat_at(0, centre_ + i);
        }
    }
    std::vector<double> forcing;
    for (int j = 1; j <= n_; ++j) {
        const std::int64_t rad = (n_ - j) * wM;
        const std::int64_t pw = 2 * prev_rad + 1;
        forcing.assign(static_cast<std::size_t>(M * pw), 0.0);
        for (std::int64_t k = 0; k < M; ++k) {
            for (std::int64_t i = 0; i < pw; ++i) {
                const std::int64_t l = centre_ - prev_rad + i;
                const double w = noise[static_cast<std::size_t>(k * span + (l - lo))];
                forcing[static_cast<std::size_t>(k * pw + i)] =
                    w == 0.0 ? 0.0 : sigma_(prev[static_cast<std::size_t>(k * pw + i)]) * w * inv_dx;
            }
        }
        const std::int64_t cw = 2 * rad + 1;
        std::vector<double> cur(static_cast<std::size_t>((M + 1) * cw));
        for (std::int64_t m = 0; m <= M; ++m) {
            const std::int64_t wm = window_[static_cast<std::size_t>(m)];
            for (std::int64_t i = -rad; i <= rad; ++i) {
                double acc = 0.0;
                for (std::int64_t k = 0; k < m; ++k) {
                    const std::int64_t s = m - 1 - k;
                    const std::int64_t reach = std::min(wm, s);
                    const double* g = kernel_.data() + s * width + M;
                    const double* f = forcing.data() + k * pw + (i + prev_rad);
                    for (std::int64_t o = -reach; o <= reach; ++o) {
                        acc += g[o] * f[-o];
                    }
                    if (record_footprint) {
                        for (std::int64_t o = -reach; o <= reach; ++o) {
                            touched[static_cast<std::size_t>(k * span + (centre_ + i - o - lo))] = 1;
                        }
                    }
                }
                cur[static_cast<std::size_t>(m * cw + i + rad)] = heat_at(m, centre_ + i) + acc;
            }
        }
        for (double v : cur) {
            if (!std::isfinite(v)) {
                throw ReplicaAbort(M, centre_);
            }
        }
        res.levels.push_back(cur[static_cast<std::size_t>(M * cw + rad)]);
        prev.swap(cur);
        prev_rad = rad;
    }
    res.value = res.levels.back();
    if (record_footprint) {
        for (std::int64_t k = 0; k < M; ++k) {
            for (std::int64_t i = 0; i < span; ++i) {
                if (touched[static_cast<std::size_t>(k * span + i)]) {
                    res.footprint.emplace_back(k, grid_.global_index(lo + i));
                }
            }
        }
    }
    return res;
}

std::vector<NoiseCell> LocalizedPicard::footprint() const { return evaluate({0, 0}, true).footprint; }

double localized_picard(const InitialData& u0, const SigmaFn& sigma, double t, double x, int n,
                        const NoiseSpec& noise_spec) {
    if (std::abs(t - noise_spec.grid.final_time()) > 1e-12) {
        throw PreconditionError("localized_picard: t must equal the final time of the noise grid");
    }
    return LocalizedPicard(u0, sigma, noise_spec.grid, x, n).evaluate(noise_spec.key()).value;
}

}  // namespace she
