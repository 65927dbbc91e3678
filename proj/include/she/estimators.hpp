#pragma once

// Monte-Carlo experiments. Every estimator is a deterministic function of its
// arguments and the seed: replicas write their own slots and all reductions
// run in replica order, so the thread count never changes a result.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "she/ensemble.hpp"
#include "she/picard.hpp"
#include "she/profiles.hpp"
#include "she/sigma.hpp"
#include "she/solver.hpp"
#include "she/stats.hpp"

namespace she {

struct MCSettings {
    std::int64_t n_reps = 1000;
    std::uint64_t seed = 1;
    Parallelism parallelism;
    double dx = 0.05;
    std::optional<double> dt;  ///< Defaults to dx^2 / 2.
    /// Half-width of the subgrid around each observation point; 0 picks 6 sqrt(t) + 1.
    double halfwidth = 0.0;
    SolveOptions solve;
};

/// Subgrid centred at x for observing u_t(x).
Grid local_grid(double x, double t, const MCSettings& s);

/// Throws ReliabilityError when every replica aborted; returns the completed values.
template <class R>
std::vector<R> completed_or_throw(const ReplicaOutcomes<R>& out, const char* who) {
    if (out.completed() == 0) {
        throw ReliabilityError(std::string(who) + ": all " + std::to_string(out.aborted()) + " replicas aborted");
    }
    return out.completed_values();
}

// ---- tails ---------------------------------------------------------------

struct TailPoint {
    double x = 0.0;
    std::int64_t hits = 0;
    std::int64_t n = 0;
    std::int64_t aborted = 0;
    double p_hat = 0.0;
    Interval wilson;
    EnsembleStat stat;  ///< Over the indicator {u_t(x) > eps}.
};

/// P{u_t(x) > eps} with a Wilson interval. n_reps >= 100.
TailPoint mc_tail(const InitialData& u0, const SigmaFn& sigma, double t, double x, double eps, const MCSettings& s);

struct TailCurve {
    double epsilon = 0.0;
    double t = 0.0;
    std::vector<TailPoint> points;  ///< Sorted by x.
    double slope = 0.0;             ///< Weighted fit of log p_hat on log x over p_hat > 0.
    double slope_stderr = 0.0;
    std::int64_t fitted_points = 0;
};

/// Weighted least squares of log p_hat on log x, weights from the delta method
/// var(log p_hat) = (1 - p) / (n p). Zero counts are dropped.
/// Throws ReliabilityError with fewer than 3 positive points.
void fit_tail_slope(TailCurve& curve);

/// x_list needs at least 4 distinct positive points.
TailCurve tail_exponent(const InitialData& u0, const SigmaFn& sigma, double t, double eps,
                        std::vector<double> x_list, const MCSettings& s);

// ---- moments -------------------------------------------------------------

/// E u_t(x)^k for k in 1..4. Throws ReliabilityError when the effective
/// sample size (sum w)^2 / sum w^2 of w = |u|^k falls below 30 or overflows.
EnsembleStat mc_moment(const InitialData& u0, const SigmaFn& sigma, double t, double x, int k, const MCSettings& s);

/// Sample moments E u^k for several k from one ensemble (same replicas).
std::vector<EnsembleStat> mc_moments(const InitialData& u0, const SigmaFn& sigma, double t, double x,
                                     const std::vector<int>& ks, const MCSettings& s);

/// E u_n(0)^2 of the explicit scheme for sigma(u) = lam u, u0 == 1 on the
/// infinite lattice, from the exact covariance recursion (no sampling).
double lattice_second_moment(double lam, double dx, double T, std::optional<double> dt = std::nullopt);

// ---- maxima --------------------------------------------------------------

struct SupSeries {
    std::vector<double> t_values;
    std::vector<double> M;  ///< Max over the window cells at each time.
    double window_lo = 0.0;
    double window_hi = 0.0;
};

/// Per-step maximum over the cells of the trajectory inside [lo, hi].
SupSeries sup_field(const SolutionField& f, double lo, double hi);

/// First time with M(t) >= level, or nullopt.
std::optional<double> first_exceedance(const SupSeries& s, double level);
std::optional<double> first_exceedance(const SolutionField& f, double level);

// ---- coupling ------------------------------------------------------------

struct SusceptibilityRow {
    double t = 0.0;
    double x_star = 0.0;   ///< Cell in |x - a| <= r/4 where the estimate peaks.
    EnsembleStat estimate;  ///< Of |u_t(x*) - v_t(x*)|^2.
    double bound = 0.0;
    bool within = false;  ///< estimate <= bound + 2 ci_halfwidth.
};

struct SusceptibilityResult {
    double a = 0.0;
    double r = 0.0;
    double b_norm = 0.0;
    std::vector<SusceptibilityRow> rows;
    double slope = 0.0;  ///< OLS of log estimate on 1/t (rows with positive estimate).
    std::int64_t aborted = 0;
};

/// Requires u0 == v0 on [a - r, a + r]. Both solutions share each replica's noise.
SusceptibilityResult susceptibility_experiment(const InitialData& u0, const InitialData& v0, const SigmaFn& sigma,
                                               double a, double r, std::vector<double> t_list, const MCSettings& s);

struct ComparisonResult {
    EnsembleStat violation;  ///< Of max_x max(0, u_t(x) - v_t(x)).
    double sup_v0 = 0.0;
    double dx = 0.0;
};

/// u0 <= v0 pointwise; common noise.
ComparisonResult comparison_experiment(const InitialData& u0, const InitialData& v0, const SigmaFn& sigma, double t,
                                       const MCSettings& s);

// ---- Picard --------------------------------------------------------------

struct PicardContraction {
    std::vector<EnsembleStat> increments;  ///< E |u^(k+1)_t(x) - u^(k)_t(x)|^2, k = 0 .. n_iters - 1.
    std::vector<double> ratios;            ///< increments[k + 1] / increments[k].
};

PicardContraction picard_contraction(const InitialData& u0, const SigmaFn& sigma, double t, double x, int n_iters,
                                     const MCSettings& s);

struct IndependenceResult {
    std::vector<double> points;
    std::vector<std::vector<double>> correlation;
    double max_offdiag = 0.0;     ///< Over pairs of distinct points.
    double threshold = 0.0;       ///< 4 / sqrt(n_reps).
    bool windows_disjoint = false;
    std::int64_t aborted = 0;
};

/// Minimum separation 2 n^{3/2} sqrt(t) between distinct points.
double independence_separation(int n, double t);

/// Sample correlations of u^(n,n)_t(x_i). Coincident points are allowed (their
/// correlation is 1); distinct points closer than the separation are rejected.
IndependenceResult independence_experiment(const InitialData& u0, const SigmaFn& sigma, double t, int n,
                                           const std::vector<double>& points, const MCSettings& s);

// ---- trichotomy ----------------------------------------------------------

struct ScanProfile {
    InitialData data;
    DecayIndex index;
};

struct TrichotomyCell {
    std::string profile;
    DecayIndex index;
    double t = 0.0;
    std::vector<double> L;
    std::vector<EnsembleStat> window_max;  ///< E max over [L, 2L], per L.
    double slope = 0.0;                    ///< OLS of E max on (log L)^{2/3}.
};

struct TrichotomyMap {
    std::vector<TrichotomyCell> cells;  ///< Profile-major, then t.
    std::int64_t aborted = 0;

    const TrichotomyCell& at(std::size_t profile, std::size_t t_index, std::size_t n_t) const {
        return cells[profile * n_t + t_index];
    }
};

TrichotomyMap trichotomy_scan(const std::vector<ScanProfile>& profiles, const SigmaFn& sigma,
                              std::vector<double> t_list, std::vector<double> L_list, const MCSettings& s);

/// Values in order strictly decrease while positive and then stay at 0
/// (a compactly supported lattice solution is exactly 0 beyond its light cone).
/// The first value must be positive.
bool decreasing_to_zero(const std::vector<double>& v);
bool strictly_increasing(const std::vector<double>& v);

}  // namespace she
