#include "she/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>
#include <sstream>

#include "she/bounds.hpp"
#include "she/errors.hpp"

namespace she {

namespace {

std::vector<double> column(const std::vector<std::vector<double>>& rows, std::size_t c) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        out.push_back(r[c]);
    }
    return out;
}

void require_reps(const MCSettings& s, std::int64_t minimum, const char* who) {
    if (s.n_reps < minimum) {
        throw PreconditionError(std::string(who) + ": need at least " + std::to_string(minimum) + " replicas");
    }
}

std::size_t observation_cell(const Grid& g) { return static_cast<std::size_t>(g.half_cells()); }

}  // namespace

Grid local_grid(double x, double t, const MCSettings& s) {
    const double h = s.halfwidth > 0.0 ? s.halfwidth : 6.0 * std::sqrt(t) + 1.0;
    return Grid::make(h, s.dx, t, s.dt, x);
}

// ---- tails ---------------------------------------------------------------

TailPoint mc_tail(const InitialData& u0, const SigmaFn& sigma, double t, double x, double eps, const MCSettings& s) {
    require_reps(s, 100, "mc_tail");
    const Grid g = local_grid(x, t, s);
    const Problem p(u0, sigma, g, s.solve);
    const std::size_t mid = observation_cell(g);
    const auto out = run_replicas(
        s.n_reps, [&](std::uint64_t r) { return p.run({s.seed, r}).final_row[mid] > eps ? 1.0 : 0.0; },
        s.parallelism);
    const auto ind = completed_or_throw(out, "mc_tail");
    TailPoint tp;
    tp.x = g.centre();
    tp.n = static_cast<std::int64_t>(ind.size());
    tp.aborted = out.aborted();
    tp.hits = static_cast<std::int64_t>(std::count(ind.begin(), ind.end(), 1.0));
    tp.p_hat = static_cast<double>(tp.hits) / static_cast<double>(tp.n);
    tp.wilson = wilson_interval(tp.hits, tp.n);
    tp.stat = summarize(ind);
    return tp;
}

void fit_tail_slope(TailCurve& curve) {
    std::vector<double> lx, lp, var;
    for (const auto& pt : curve.points) {
        if (pt.hits > 0) {
            const double n = static_cast<double>(pt.n);
            lx.push_back(std::log(pt.x));
            lp.push_back(std::log(pt.p_hat));
            var.push_back(std::max((1.0 - pt.p_hat) / (n * pt.p_hat), 1.0 / (n * n)));
        }
    }
    curve.fitted_points = static_cast<std::int64_t>(lx.size());
    if (lx.size() < 3) {
        throw ReliabilityError("tail_exponent: slope undefined, only " + std::to_string(lx.size()) +
                               " points with p_hat > 0");
    }
    const auto fit = wls_fit(lx, lp, var);
    curve.slope = fit.slope;
    curve.slope_stderr = fit.slope_stderr;
}

TailCurve tail_exponent(const InitialData& u0, const SigmaFn& sigma, double t, double eps, std::vector<double> x_list,
                        const MCSettings& s) {
    std::sort(x_list.begin(), x_list.end());
    x_list.erase(std::unique(x_list.begin(), x_list.end()), x_list.end());
    if (x_list.size() < 4 || x_list.front() <= 0.0) {
        throw PreconditionError("tail_exponent: need at least 4 distinct positive x values");
    }
    TailCurve c;
    c.epsilon = eps;
    c.t = t;
    for (double x : x_list) {
        c.points.push_back(mc_tail(u0, sigma, t, x, eps, s));
    }
    fit_tail_slope(c);
    return c;
}

// ---- moments -------------------------------------------------------------

std::vector<EnsembleStat> mc_moments(const InitialData& u0, const SigmaFn& sigma, double t, double x,
                                     const std::vector<int>& ks, const MCSettings& s) {
    for (int k : ks) {
        if (k < 1 || k > 4) {
            throw PreconditionError("mc_moment: k must lie in 1..4");
        }
    }
    const Grid g = local_grid(x, t, s);
    const Problem p(u0, sigma, g, s.solve);
    const std::size_t mid = observation_cell(g);
    const auto out =
        run_replicas(s.n_reps, [&](std::uint64_t r) { return p.run({s.seed, r}).final_row[mid]; }, s.parallelism);
    const auto u = completed_or_throw(out, "mc_moment");
    std::vector<EnsembleStat> stats;
    for (int k : ks) {
        std::vector<double> w(u.size()), w2(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) {
            w[i] = std::pow(u[i], k);
            w2[i] = w[i] * w[i];
        }
        const double sw = pairwise_sum(w);
        std::vector<double> aw(w.size());
        std::transform(w.begin(), w.end(), aw.begin(), [](double v) { return std::abs(v); });
        const double saw = pairwise_sum(aw);
        const double sw2 = pairwise_sum(w2);
        if (!std::isfinite(sw) || !std::isfinite(sw2)) {
            throw ReliabilityError("mc_moment: moment of order " + std::to_string(k) + " overflows");
        }
        const double ess = sw2 > 0.0 ? saw * saw / sw2 : 0.0;
        if (ess < 30.0) {
            std::ostringstream os;
            os << "mc_moment: effective sample size " << ess << " < 30 at k = " << k;
            throw ReliabilityError(os.str());
        }
        stats.push_back(summarize(w));
    }
    return stats;
}

EnsembleStat mc_moment(const InitialData& u0, const SigmaFn& sigma, double t, double x, int k, const MCSettings& s) {
    return mc_moments(u0, sigma, t, x, {k}, s).front();
}

double lattice_second_moment(double lam, double dx, double T, std::optional<double> dt) {
    if (T == 0.0) {
        return 1.0;
    }
    // Borrow the grid's step rounding; the lattice itself is infinite.
    const Grid g = Grid::make(dx, dx, T, dt);
    const double r = g.dt() / (2.0 * dx * dx);
    const double a0 = 1.0 - 2.0 * r;
    const double b[5] = {r * r, 2.0 * r * a0, a0 * a0 + 2.0 * r * r, 2.0 * r * a0, r * r};
    const double kick = lam * lam * g.dt() / dx;
    const std::int64_t n = g.n_steps();
    // Beyond 2n cells the lattice values are independent (covariance 1); far
    // inside that, correlations are Gaussian-small anyway.
    const std::int64_t K = std::min<std::int64_t>(2 * n + 2, static_cast<std::int64_t>(std::ceil(20.0 * std::sqrt(T) / dx)) + 4);
    std::vector<double> c(static_cast<std::size_t>(2 * K + 1), 1.0), next(c.size(), 1.0);
    for (std::int64_t step = 0; step < n; ++step) {
        for (std::int64_t k = -K + 2; k <= K - 2; ++k) {
            const auto i = static_cast<std::size_t>(k + K);
            next[i] = b[0] * c[i - 2] + b[1] * c[i - 1] + b[2] * c[i] + b[3] * c[i + 1] + b[4] * c[i + 2];
        }
        next[static_cast<std::size_t>(K)] += kick * c[static_cast<std::size_t>(K)];
        c.swap(next);
    }
    return c[static_cast<std::size_t>(K)];
}

// ---- maxima --------------------------------------------------------------

SupSeries sup_field(const SolutionField& f, double lo, double hi) {
    const Grid& g = f.grid;
    if (!(lo <= hi) || !g.contains(lo) || !g.contains(hi)) {
        throw PreconditionError("sup_field: window must lie inside the grid");
    }
    const std::int64_t j0 = g.cell_of(lo), j1 = g.cell_of(hi);
    SupSeries s;
    s.window_lo = g.x(j0);
    s.window_hi = g.x(j1);
    const std::int64_t rows = static_cast<std::int64_t>(f.values.size()) / g.cells();
    for (std::int64_t n = 0; n < rows; ++n) {
        const auto row = f.row(n);
        s.t_values.push_back(g.time(n));
        s.M.push_back(*std::max_element(row.begin() + j0, row.begin() + j1 + 1));
    }
    return s;
}

std::optional<double> first_exceedance(const SupSeries& s, double level) {
    for (std::size_t i = 0; i < s.M.size(); ++i) {
        if (s.M[i] >= level) {
            return s.t_values[i];
        }
    }
    return std::nullopt;
}

std::optional<double> first_exceedance(const SolutionField& f, double level) {
    return first_exceedance(sup_field(f, f.grid.left(), f.grid.right()), level);
}

// ---- coupling ------------------------------------------------------------

SusceptibilityResult susceptibility_experiment(const InitialData& u0, const InitialData& v0, const SigmaFn& sigma,
                                               double a, double r, std::vector<double> t_list, const MCSettings& s) {
    if (!(r > 0.0) || t_list.empty()) {
        throw PreconditionError("susceptibility: need r > 0 and at least one time");
    }
    std::sort(t_list.begin(), t_list.end());
    if (!(t_list.front() > 0.0)) {
        throw PreconditionError("susceptibility: times must be positive");
    }
    for (int i = 0; i <= 4000; ++i) {
        const double x = a - r + 2.0 * r * i / 4000.0;
        if (u0(x) != v0(x)) {
            std::ostringstream os;
            os << "susceptibility: u0 and v0 differ at x = " << x << " inside [a - r, a + r]";
            throw PreconditionError(os.str());
        }
    }
    const double t_max = t_list.back();
    const double h = s.halfwidth > 0.0 ? s.halfwidth : r + 6.0 * std::sqrt(t_max) + 1.0;
    const Grid g = Grid::make(h, s.dx, t_max, s.dt, a);
    SusceptibilityResult res;
    res.a = a;
    res.r = r;
    for (int i = 0; i <= 20000; ++i) {
        const double x = a - 10.0 * h + 20.0 * h * i / 20000.0;
        res.b_norm = std::max(res.b_norm, std::abs(u0(x) - v0(x)));
    }

    std::vector<std::int64_t> steps;
    for (double t : t_list) {
        steps.push_back(g.step_of(t));
    }
    std::vector<std::int64_t> cells;
    for (std::int64_t j = 0; j < g.cells(); ++j) {
        if (std::abs(g.x(j) - a) <= r / 4.0 + 1e-12) {
            cells.push_back(j);
        }
    }
    const CoupledProblem cp(u0, v0, sigma, g);
    const std::size_t nc = cells.size();
    const auto out = run_replicas(
        s.n_reps,
        [&](std::uint64_t rep) {
            std::vector<double> sq(steps.size() * nc);
            cp.run({s.seed, rep}, [&](std::int64_t n, std::span<const double>, std::span<const double> d) {
                for (std::size_t i = 0; i < steps.size(); ++i) {
                    if (steps[i] == n) {
                        for (std::size_t c = 0; c < nc; ++c) {
                            const double v = d[static_cast<std::size_t>(cells[c])];
                            sq[i * nc + c] = v * v;
                        }
                    }
                }
            });
            return sq;
        },
        s.parallelism);
    const auto rows = completed_or_throw(out, "susceptibility");
    res.aborted = out.aborted();

    std::vector<double> inv_t, log_est;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        SusceptibilityRow row;
        row.t = g.time(steps[i]);
        for (std::size_t c = 0; c < nc; ++c) {
            const auto st = summarize(column(rows, i * nc + c));
            if (c == 0 || st.mean > row.estimate.mean) {
                row.estimate = st;
                row.x_star = g.x(cells[c]);
            }
        }
        row.bound = suscept_bound(sigma.lip(), r, row.t, res.b_norm);
        row.within = row.estimate.mean <= row.bound + 2.0 * row.estimate.ci_halfwidth;
        if (row.estimate.mean > 0.0) {
            inv_t.push_back(1.0 / row.t);
            log_est.push_back(std::log(row.estimate.mean));
        }
        res.rows.push_back(row);
    }
    if (inv_t.size() >= 2) {
        res.slope = ols_fit(inv_t, log_est).slope;
    }
    return res;
}

ComparisonResult comparison_experiment(const InitialData& u0, const InitialData& v0, const SigmaFn& sigma, double t,
                                       const MCSettings& s) {
    const Grid g = local_grid(0.0, t, s);
    for (std::int64_t j = 0; j < g.cells(); ++j) {
        if (u0(g.x(j)) > v0(g.x(j))) {
            throw PreconditionError("comparison: u0 <= v0 fails at x = " + std::to_string(g.x(j)));
        }
    }
    const CoupledProblem cp(u0, v0, sigma, g);
    const auto out = run_replicas(
        s.n_reps,
        [&](std::uint64_t r) {
            const auto d = cp.run({s.seed, r});
            double worst = 0.0;
            for (double v : d) {
                worst = std::max(worst, -v);
            }
            return worst;
        },
        s.parallelism);
    ComparisonResult res;
    res.violation = summarize(completed_or_throw(out, "comparison"));
    res.sup_v0 = v0.sup_norm;
    res.dx = g.dx();
    return res;
}

// ---- Picard --------------------------------------------------------------

PicardContraction picard_contraction(const InitialData& u0, const SigmaFn& sigma, double t, double x, int n_iters,
                                     const MCSettings& s) {
    if (n_iters < 2) {
        throw PreconditionError("picard_contraction: need at least two iterations");
    }
    const Grid g = local_grid(x, t, s);
    const std::int64_t mid = g.half_cells();
    const auto out = run_replicas(
        s.n_reps,
        [&](std::uint64_t r) {
            const auto it = picard_iterate(u0, sigma, t, g, {s.seed, r, g}, n_iters);
            std::vector<double> sq;
            for (int k = 0; k < n_iters; ++k) {
                const double d = it[static_cast<std::size_t>(k + 1)](g.n_steps(), mid) -
                                 it[static_cast<std::size_t>(k)](g.n_steps(), mid);
                sq.push_back(d * d);
            }
            return sq;
        },
        s.parallelism);
    const auto rows = completed_or_throw(out, "picard_contraction");
    PicardContraction pc;
    for (int k = 0; k < n_iters; ++k) {
        pc.increments.push_back(summarize(column(rows, static_cast<std::size_t>(k))));
    }
    for (std::size_t k = 0; k + 1 < pc.increments.size(); ++k) {
        pc.ratios.push_back(pc.increments[k + 1].mean / pc.increments[k].mean);
    }
    return pc;
}

double independence_separation(int n, double t) { return 2.0 * LocalizedPicard::dependence_radius(n, t); }

IndependenceResult independence_experiment(const InitialData& u0, const SigmaFn& sigma, double t, int n,
                                           const std::vector<double>& points, const MCSettings& s) {
    if (points.size() < 2) {
        throw PreconditionError("independence: need at least two points");
    }
    const double sep = independence_separation(n, t);
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            const double d = std::abs(points[i] - points[j]);
            if (d != 0.0 && d < sep) {
                std::ostringstream os;
                os << "independence: points " << points[i] << " and " << points[j] << " are " << d
                   << " apart; need 2 n^{3/2} sqrt(t) = " << sep;
                throw PreconditionError(os.str());
            }
        }
    }
    const double reach = LocalizedPicard::dependence_radius(n, t);
    std::vector<LocalizedPicard> schemes;
    for (double x : points) {
        schemes.emplace_back(u0, sigma, Grid::make(reach + 2.0 * s.dx, s.dx, t, s.dt, x), x, n);
    }
    IndependenceResult res;
    res.points = points;
    res.windows_disjoint = true;
    std::vector<std::vector<NoiseCell>> fps;
    for (const auto& sc : schemes) {
        fps.push_back(sc.footprint());
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (std::size_t j = i + 1; j < points.size(); ++j) {
            if (points[i] == points[j]) {
                continue;
            }
            std::vector<NoiseCell> common;
            std::set_intersection(fps[i].begin(), fps[i].end(), fps[j].begin(), fps[j].end(),
                                  std::back_inserter(common));
            res.windows_disjoint = res.windows_disjoint && common.empty();
        }
    }
    const auto out = run_replicas(
        s.n_reps,
        [&](std::uint64_t r) {
            std::vector<double> v;
            for (const auto& sc : schemes) {
                v.push_back(sc.evaluate({s.seed, r}).value);
            }
            return v;
        },
        s.parallelism);
    const auto rows = completed_or_throw(out, "independence");
    res.aborted = out.aborted();
    const std::size_t k = points.size();
    res.correlation.assign(k, std::vector<double>(k, 1.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i + 1; j < k; ++j) {
            const double c = correlation(column(rows, i), column(rows, j));
            res.correlation[i][j] = res.correlation[j][i] = c;
            if (points[i] != points[j]) {
                res.max_offdiag = std::max(res.max_offdiag, std::abs(c));
            }
        }
    }
    res.threshold = 4.0 / std::sqrt(static_cast<double>(rows.size()));
    return res;
}

// ---- trichotomy ----------------------------------------------------------

TrichotomyMap trichotomy_scan(const std::vector<ScanProfile>& profiles, const SigmaFn& sigma,
                              std::vector<double> t_list, std::vector<double> L_list, const MCSettings& s) {
    if (profiles.empty() || t_list.empty() || L_list.size() < 2) {
        throw PreconditionError("trichotomy: need profiles, times and at least two window sizes");
    }
    std::sort(t_list.begin(), t_list.end());
    std::sort(L_list.begin(), L_list.end());
    if (!(t_list.front() > 0.0) || !(L_list.front() > std::numbers::e)) {
        throw PreconditionError("trichotomy: times must be positive and windows must start beyond e");
    }
    const double t_max = t_list.back();
    TrichotomyMap map;
    for (const auto& prof : profiles) {
        std::vector<TrichotomyCell> cells(t_list.size());
        for (std::size_t i = 0; i < t_list.size(); ++i) {
            cells[i].profile = prof.data.label;
            cells[i].index = prof.index;
            cells[i].t = t_list[i];
            cells[i].L = L_list;
        }
        for (double L : L_list) {
            const double h = 0.5 * L + (s.halfwidth > 0.0 ? s.halfwidth : 6.0 * std::sqrt(t_max) + 1.0);
            const Grid g = Grid::make(h, s.dx, t_max, s.dt, 1.5 * L);
            std::vector<std::int64_t> steps;
            for (double t : t_list) {
                steps.push_back(g.step_of(t));
            }
            const std::int64_t j0 = g.cell_of(L), j1 = g.cell_of(2.0 * L);
            const Problem p(prof.data, sigma, g, s.solve);
            const auto out = run_replicas(
                s.n_reps,
                [&](std::uint64_t r) {
                    std::vector<double> m(steps.size());
                    p.run({s.seed, r}, [&](std::int64_t n, std::span<const double> row) {
                        for (std::size_t i = 0; i < steps.size(); ++i) {
                            if (steps[i] == n) {
                                m[i] = *std::max_element(row.begin() + j0, row.begin() + j1 + 1);
                            }
                        }
                    });
                    return m;
                },
                s.parallelism);
            const auto rows = completed_or_throw(out, "trichotomy");
            map.aborted += out.aborted();
            for (std::size_t i = 0; i < t_list.size(); ++i) {
                cells[i].window_max.push_back(summarize(column(rows, i)));
            }
        }
        for (auto& c : cells) {
            std::vector<double> xs, ys;
            for (std::size_t k = 0; k < c.L.size(); ++k) {
                xs.push_back(std::cbrt(std::pow(std::log(c.L[k]), 2)));
                ys.push_back(c.window_max[k].mean);
            }
            c.slope = ols_fit(xs, ys).slope;
            map.cells.push_back(std::move(c));
        }
    }
    return map;
}

bool decreasing_to_zero(const std::vector<double>& v) {
    if (v.empty() || !(v.front() > 0.0)) {
        return false;
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        const bool ok = v[i - 1] > 0.0 ? v[i] < v[i - 1] : v[i] <= v[i - 1];
        if (!ok) {
            return false;
        }
    }
    return true;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i] > v[i - 1])) {
            return false;
        }
    }
    return true;
}

}  // namespace she
