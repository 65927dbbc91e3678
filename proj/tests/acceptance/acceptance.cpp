// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
//   acceptance [--only 1,4,12]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/constants/constants.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <CLI11.hpp>

#include "she/app.hpp"
#include "she/audit.hpp"
#include "she/bounds.hpp"
#include "she/estimators.hpp"
#include "she/kernel.hpp"

using namespace she;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- 1. heat kernel ------------------------------------------------------

Outcome kernel_identities() {
    double worst_norm = 0.0;
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        worst_norm = std::max(worst_norm, normalization_error(t));
    }
    // Both test functions have sup |f| = 1.
    const double e1 = semigroup_error([](double y) { return std::cos(1.3 * y) / (1.0 + 0.1 * y * y); }, 0.3, 0.7);
    const double e2 = semigroup_error([](double y) { return std::tanh(y - 0.4); }, 0.05, 1.5);
    const double worst_sg = std::max(e1, e2);
    return {worst_norm <= 1e-9 && worst_sg <= 1e-6,
            fmt("max |int p_t - 1| = %.2e (<= 1e-9), semigroup sup error = %.2e (<= 1e-6)", worst_norm, worst_sg)};
}

// ---- 2. localisation -----------------------------------------------------

Outcome localisation() {
    const auto a = localisation_audit(50, {0.5, 1.0, 2.0, 4.0}, {0.05, 0.5}, 2);
    return {a.worst_ratio <= 1.0 && a.functions == 50,
            fmt("%d functions, %lld evaluations, worst |p_t*h| / (2|h| e^{-r^2/8t}) = %.3f", a.functions,
                static_cast<long long>(a.evaluations), a.worst_ratio)};
}

// ---- 3. K against 50-digit arithmetic --------------------------------------

using mp = boost::multiprecision::cpp_bin_float_50;

mp k_oracle(mp a, mp t, mp x) {
    const mp pi = boost::math::constants::pi<mp>();
    const mp a2 = a * a;
    const mp p_half = exp(-x * x / t) / sqrt(pi * t);  // p_{t/2}(x)
    const mp phi = boost::math::erfc(-a2 * sqrt(t / 2) / sqrt(mp(2))) / 2;
    return a2 / 2 * p_half * (1 / sqrt(pi * t) + a2 * exp(a2 * a2 * t / 4) * phi);
}

Outcome k_oracle_check() {
    double worst = 0.0;
    int points = 0;
    for (double a : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        for (double t : {0.01, 0.1, 0.5, 1.0, 3.0}) {
            for (double x : {0.0, 0.3, 1.0, 2.5}) {
                const mp ref = k_oracle(mp(a), mp(t), mp(x));
                const double rel = static_cast<double>(abs((mp(kernel_K(a, t, x)) - ref) / ref));
                worst = std::max(worst, rel);
                ++points;
            }
        }
    }
    double worst_id = 0.0;
    for (double a : {0.5, 1.0, 1.5}) {
        for (double t : {0.25, 1.0, 2.0}) {
            worst_id = std::max(worst_id, k_mass_identity_error(a, t));
        }
    }
    const double at_11 = k_mass_identity_error(1.0, 1.0);
    return {points == 100 && worst <= 1e-10 && worst_id <= 1e-8,
            fmt("%d-point lattice max rel error %.2e (<= 1e-10); |d/dt closed form - int K| = %.2e at (1,1), "
                "max %.2e over 9 (alpha,t) (<= 1e-8)",
                points, worst, at_11, worst_id)};
}

// ---- 4, 5. moment oracles --------------------------------------------------

MCSettings flat_settings(double dx, std::uint64_t seed) {
    MCSettings s;
    s.n_reps = 2000;
    s.seed = seed;
    s.dx = dx;
    s.halfwidth = 2.5;
    return s;
}

Outcome mean_oracle() {
    const auto m = mc_moment(InitialProfile::constant(1.0), SigmaFn::linear(1.0), 0.5, 0.0, 1, flat_settings(0.05, 4));
    const double z = std::abs(m.mean - 1.0) / m.standard_error();
    return {z <= 3.0, fmt("E u_T(0) = %.5f, SE %.5f, |mean - 1| = %.2f SE (<= 3)", m.mean, m.standard_error(), z)};
}

Outcome second_moment_oracle() {
    const double exact = pam_second_moment(1.0, 0.5);
    std::vector<double> rel, lat;
    std::string d = fmt("2e^{T/4}Phi(sqrt(T/2)) = %.6f;", exact);
    for (double dx : {0.025, 0.0125}) {
        const auto m =
            mc_moment(InitialProfile::constant(1.0), SigmaFn::linear(1.0), 0.5, 0.0, 2, flat_settings(dx, 5));
        rel.push_back(std::abs(m.mean / exact - 1.0));
        lat.push_back(lattice_second_moment(1.0, dx, 0.5) / exact - 1.0);
        d += fmt(" dx=%g: MC %.5f (SE %.5f, rel err %.4f);", dx, m.mean, m.standard_error(), rel.back());
    }
    d += fmt(" exact lattice bias %+.4f -> %+.4f", lat[0], lat[1]);
    return {rel[0] <= 0.10 && rel[1] < rel[0], d};
}

// ---- 6. comparison ---------------------------------------------------------

Outcome comparison() {
    std::vector<double> v;
    std::string d;
    double sup_v0 = 0.0;
    for (double dx : {0.025, 0.0125}) {
        MCSettings s;
        s.n_reps = 500;
        s.seed = 6;
        s.dx = dx;
        s.halfwidth = 3.5;
        const auto r = comparison_experiment(InitialProfile::bump(1.0, 1.0), InitialProfile::bump(1.0, 2.0),
                                             SigmaFn::linear(2.0), 0.5, s);
        v.push_back(r.violation.mean);
        sup_v0 = r.sup_v0;
        d += fmt("dx=%g: E max(u-v)+ = %.3e (SE %.1e); ", dx, r.violation.mean, r.violation.standard_error());
    }
    d += fmt("limit 1e-3 sup v0 = %.1e; sigma = 2u", 1e-3 * sup_v0);
    return {v[0] <= 1e-3 * sup_v0 && v[1] < v[0], d};
}

// ---- 7. Picard -------------------------------------------------------------

Outcome picard() {
    MCSettings s;
    s.n_reps = 1000;
    s.seed = 7;
    s.dx = 0.05;
    s.halfwidth = 3.0;
    const auto pc = picard_contraction(InitialProfile::constant(1.0), SigmaFn::linear(1.0), 0.25, 0.0, 7, s);
    bool ok = pc.ratios.size() == 6;
    std::string d = "ratios";
    for (double r : pc.ratios) {
        ok = ok && r < 0.9;
        d += fmt(" %.3f", r);
    }
    return {ok, d + " (each < 0.9)"};
}

// ---- 8. independence ---------------------------------------------------------

Outcome independence() {
    MCSettings s;
    s.n_reps = 2000;
    s.seed = 8;
    s.dx = 0.1;
    const double sep = independence_separation(3, 0.25);
    const auto r = independence_experiment(InitialProfile::constant(1.0), SigmaFn::linear(1.0), 0.25, 3,
                                           {0.0, sep, 2.0 * sep}, s);
    return {r.windows_disjoint && r.max_offdiag <= r.threshold,
            fmt("separation %.4f; max |corr| = %.4f (<= %.4f); noise windows disjoint: %s", sep, r.max_offdiag,
                r.threshold, r.windows_disjoint ? "yes" : "no")};
}

// ---- 9. susceptibility -------------------------------------------------------

Outcome susceptibility() {
    MCSettings s;
    s.n_reps = 1000;
    s.seed = 9;
    s.dx = 0.025;
    const InitialData u0 = InitialProfile::lambda_family(1.0);
    const InitialData v0 = splice(u0, InitialProfile::lambda_family(0.5), 8.0, 4.0);
    const auto r = susceptibility_experiment(u0, v0, SigmaFn::linear(1.0), 8.0, 4.0, {0.05, 0.1, 0.2}, s);
    bool ok = r.rows.size() == 3;
    std::string d;
    for (const auto& row : r.rows) {
        ok = ok && row.within;
        d += fmt("t=%g: %.2e <= %.2e; ", row.t, row.estimate.mean, row.bound);
    }
    const double need = -4.0 * 4.0 / 32.0;
    ok = ok && r.slope <= need;
    return {ok, d + fmt("slope vs 1/t = %.2f (<= %.2f)", r.slope, need)};
}

// ---- 10. tail exponents -------------------------------------------------------

Outcome tails() {
    std::vector<double> xs;
    for (double e : {2.0, 8.0 / 3.0, 10.0 / 3.0, 4.0}) {
        xs.push_back(std::exp(e));
    }
    auto curve = [&](double lambda, double t) {
        MCSettings s;
        s.n_reps = 5000;
        s.seed = 10;
        s.dx = 0.05;
        return tail_exponent(InitialProfile::lambda_family(lambda), SigmaFn::linear(1.0), t, 0.1, xs, s);
    };
    const auto a1 = curve(1.0, 0.5), a05 = curve(0.5, 0.5), t025 = curve(1.0, 0.25), t1 = curve(1.0, 1.0);
    const double sep = std::sqrt(a1.slope_stderr * a1.slope_stderr + a05.slope_stderr * a05.slope_stderr);
    const bool lam_ok = a1.slope < a05.slope && a05.slope - a1.slope >= 2.0 * sep;
    const bool t_ok = std::abs(t1.slope) < std::abs(t025.slope);
    return {lam_ok && t_ok,
            fmt("t=0.5: slope(Lambda=1) %.3f +- %.3f vs slope(Lambda=0.5) %.3f +- %.3f, gap %.1f combined SE (>= 2); "
                "Lambda=1: |slope(t=1)| %.3f vs |slope(t=0.25)| %.3f",
                a1.slope, a1.slope_stderr, a05.slope, a05.slope_stderr, (a05.slope - a1.slope) / sep,
                std::abs(t1.slope), std::abs(t025.slope))};
}

// ---- 11. trichotomy -----------------------------------------------------------

Outcome trichotomy() {
    MCSettings s;
    s.n_reps = 500;
    s.seed = 11;
    s.dx = 0.1;
    const std::vector<double> ts{0.25, 2.0};
    const std::vector<ScanProfile> ps{{InitialProfile::bump(1.0, 40.0), DecayIndex::infinity()},
                                      {InitialProfile::constant(1.0), DecayIndex::finite(0.0)},
                                      {InitialProfile::lambda_family(1.0), DecayIndex::finite(1.0)}};
    const auto map = trichotomy_scan(ps, SigmaFn::linear(1.0), ts, {25.0, 50.0, 100.0}, s);
    auto means = [](const TrichotomyCell& c) {
        std::vector<double> m;
        for (const auto& st : c.window_max) {
            m.push_back(st.mean);
        }
        return m;
    };
    bool bump_ok = true, flat_ok = true;
    std::string d;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const auto b = means(map.at(0, i, ts.size()));
        const auto f = means(map.at(1, i, ts.size()));
        bump_ok = bump_ok && decreasing_to_zero(b);
        flat_ok = flat_ok && strictly_increasing(f);
        d += fmt("t=%g bump %.3g,%.3g,%.3g flat %.4g,%.4g,%.4g; ", ts[i], b[0], b[1], b[2], f[0], f[1], f[2]);
    }
    const double s0 = map.at(2, 0, ts.size()).slope, s1 = map.at(2, 1, ts.size()).slope;
    d += fmt("lambda(1) slope %.3f (t=0.25) -> %.3f (t=2)", s0, s1);
    return {bump_ok && flat_ok && s1 > s0, d};
}

// ---- 12. determinism ----------------------------------------------------------

Outcome determinism() {
    std::vector<ExperimentConfig> configs;
    {
        ExperimentConfig c;
        c.experiment = Experiment::simulate;
        c.n_reps = 200;
        c.grid.dx = 0.1;
        c.grid.T = 0.5;
        c.observe_x = {-1.0, 0.0, 1.0};
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = Experiment::tails;
        c.n_reps = 200;
        c.grid.dx = 0.1;
        configs.push_back(c);
    }
    {
        ExperimentConfig c;
        c.experiment = Experiment::suscept;
        c.n_reps = 100;
        c.grid.dx = 0.05;
        configs.push_back(c);
    }
    bool ok = true;
    std::string d;
    for (auto& c : configs) {
        std::string ref;
        bool same = true;
        for (int p : {1, 4, 0}) {
            c.parallelism = p;
            const auto r = execute(c);
            const std::string bytes = r.statistics.dump() + csv_text(r.csv);
            if (ref.empty()) {
                ref = bytes;
            }
            same = same && bytes == ref;
        }
        ok = ok && same;
        d += fmt("%s: %s (%zu bytes); ", std::string(to_string(c.experiment)).c_str(), same ? "identical" : "DIFFERENT",
                 ref.size());
    }
    return {ok, d + "parallelism 1, 4, auto"};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"acceptance criteria"};
    std::vector<int> only;
    cli.add_option("--only", only, "Run only these criteria")->delimiter(',');
    CLI11_PARSE(cli, argc, argv);
    const std::set<int> chosen(only.begin(), only.end());

    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"kernel identities", kernel_identities},
        {"localisation bound 2|h|e^{-r^2/8t}", localisation},
        {"K against high precision; mass identity", k_oracle_check},
        {"mean oracle", mean_oracle},
        {"second-moment oracle", second_moment_oracle},
        {"comparison coupling", comparison},
        {"Picard contraction", picard},
        {"independence of localized iterates", independence},
        {"susceptibility bound", susceptibility},
        {"tail directionality", tails},
        {"trichotomy scan", trichotomy},
        {"determinism across parallelism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!chosen.empty() && !chosen.count(id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failed += !o.pass;
        std::printf("%s %2d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
