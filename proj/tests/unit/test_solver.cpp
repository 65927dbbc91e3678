#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>
#include <vector>

#include "she/ensemble.hpp"
#include "she/errors.hpp"
#include "she/kernel.hpp"
#include "she/picard.hpp"
#include "she/sigma.hpp"
#include "she/solver.hpp"
#include "she/stats.hpp"

using namespace she;

TEST_CASE("sigma family") {
    CHECK(audit(SigmaFn::linear(1.0)).ok());
    CHECK(audit(SigmaFn::wobble(1.0)).ok());
    CHECK(audit(SigmaFn::wobble(2.5)).ok());
    const auto w = SigmaFn::wobble(1.0);
    CHECK(w(0.0) == 0.0);
    CHECK(w.lip() == 1.5);
    CHECK(w.ell_lower() == 0.5);
    for (double u : {-3.0, 0.1, 2.0, 40.0}) {
        for (double d : {1e-14, 1e-3, 0.7}) {
            CHECK(w.increment(u, d) == doctest::Approx(w(u + d) - w(u)).epsilon(1e-9 / d + 1e-12));
        }
    }
    // u (1 + sin(u) / 2) grows faster than linearly in slope: not Lipschitz.
    const auto bad = SigmaFn::custom([](double u) { return u * (1.0 + 0.5 * std::sin(u)); }, 1.5, 0.5, "u(1+sin/2)");
    CHECK_FALSE(audit(bad).ok());
    CHECK_FALSE(audit(SigmaFn::custom([](double u) { return u + 1.0; }, 1.0, 0.0, "shift")).ok());
    CHECK_THROWS_AS(SigmaFn::linear(0.0), DomainError);
}

TEST_CASE("step_explicit") {
    const auto g = Grid::make(1.0, 0.1, 0.1);
    const auto cells = static_cast<std::size_t>(g.cells());
    std::vector<double> u(cells, 2.0), next(cells), zero(cells, 0.0);

    SUBCASE("constant state without noise stays constant") {
        step_explicit(u, zero, SigmaFn::linear(1.0), g, next);
        for (double v : next) {
            CHECK(v == 2.0);
        }
    }
    SUBCASE("noise enters as sigma(u) W / dx") {
        std::vector<double> w(cells, 0.0);
        w[5] = 1e-3;
        step_explicit(u, w, SigmaFn::linear(3.0), g, next);
        CHECK(next[5] == doctest::Approx(2.0 + 3.0 * 2.0 * 1e-3 / 0.1));
        CHECK(next[4] == 2.0);
    }
    SUBCASE("non-finite values abort with the step") {
        u[3] = std::numeric_limits<double>::infinity();
        try {
            step_explicit(u, zero, SigmaFn::linear(1.0), g, next, 17);
            FAIL("expected ReplicaAbort");
        } catch (const ReplicaAbort& a) {
            CHECK(a.step() == 17);
            CHECK(a.cell() >= 2);
            CHECK(a.cell() <= 4);
        }
    }
}

TEST_CASE("deterministic limit matches the heat semigroup") {
    const auto bump = InitialProfile::bump(1.0, 1.0);
    const auto g = Grid::make(5.0, 0.025, 0.5);
    const auto f = Problem(bump, SigmaFn::zero(), g).run({1, 0});
    double num = 0.0, den = 0.0;
    for (std::int64_t j = 0; j < g.cells(); ++j) {
        const double exact = semigroup_apply(bump, 0.5, g.x(j), {}).value;
        num += std::pow(f.final_row[static_cast<std::size_t>(j)] - exact, 2);
        den += exact * exact;
    }
    CHECK(std::sqrt(num / den) <= 0.01);
    CHECK(f.negativity_fraction == 0.0);
}

TEST_CASE("solution field and linearity") {
    const auto g = Grid::make(2.0, 0.1, 0.2);
    const auto u0 = InitialProfile::lambda_family(0.5);
    const NoiseSpec spec{3, 1, g};
    const auto a = solve(u0, SigmaFn::linear(1.0), 0.2, g, spec);
    REQUIRE(a.values.size() == static_cast<std::size_t>((g.n_steps() + 1) * g.cells()));
    for (std::int64_t j = 0; j < g.cells(); ++j) {
        CHECK(a(0, j) == u0(g.x(j)));
    }
    const InitialData scaled([&](double x) { return 3.0 * u0(x); }, 3.0 * u0.sup_norm(), "3u0");
    const auto b = solve(scaled, SigmaFn::linear(1.0), 0.2, g, spec);
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        CHECK(b.values[i] == doctest::Approx(3.0 * a.values[i]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(solve(u0, SigmaFn::linear(1.0), 0.3, g, spec), PreconditionError);

    const auto flat = Problem(InitialProfile::constant(1.0), SigmaFn::linear(1.0), g);
    NoiseKey key{0, 0};
    // The scheme is linear, so a zero noise field can only come from sigma == 0.
    const auto still = Problem(InitialProfile::constant(1.0), SigmaFn::zero(), g).run(key);
    for (double v : still.final_row) {
        CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(flat.boundary().left.front() == 1.0);
}

TEST_CASE("wobble smoke run on a bump") {
    const auto g = Grid::make(3.0, 0.05, 0.5);
    const auto f = solve(InitialProfile::bump(1.0, 1.0), SigmaFn::wobble(1.0), 0.5, g, {11, 0, g});
    CHECK(std::all_of(f.values.begin(), f.values.end(), [](double v) { return std::isfinite(v); }));
    CHECK(f.negativity_fraction >= 0.0);
    CHECK(f.negativity_fraction <= 0.05);
}

TEST_CASE("ensemble mean follows the heat equation") {
    const auto g = Grid::make(2.5, 0.1, 0.5);
    const Problem p(InitialProfile::lambda_family(1.0), SigmaFn::linear(1.0), g);
    const std::int64_t mid = g.cell_of(0.0);
    auto out = run_replicas(800, [&](std::uint64_t r) {
        return p.run({21, r}).final_row[static_cast<std::size_t>(mid)];
    });
    const auto s = summarize(out.completed_values());
    const double truth = semigroup_apply(InitialProfile::lambda_family(1.0), 0.5, 0.0, {}).value;
    CHECK(std::abs(s.mean - truth) <= 3.0 * s.standard_error());
}

TEST_CASE("parallel replicas equal the serial reference") {
    const auto g = Grid::make(1.5, 0.1, 0.2);
    const Problem p(InitialProfile::constant(1.0), SigmaFn::wobble(1.0), g);
    auto fn = [&](std::uint64_t r) { return p.run({5, r}).final_row; };
    const auto a = run_replicas(16, fn, Parallelism{4});
    const auto b = run_replicas_serial(16, fn);
    CHECK(a.completed_values() == b.completed_values());
}

TEST_CASE("coupled pair") {
    const auto g = Grid::make(3.0, 0.05, 0.2, std::nullopt, 8.0);
    const auto u0 = InitialProfile::lambda_family(1.0);
    SUBCASE("identical data give identical paths") {
        const auto d = CoupledProblem(u0, u0, SigmaFn::linear(1.0), g).run({1, 2});
        CHECK(std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; }));
    }
    SUBCASE("difference equals v - u from separate runs") {
        const auto v0 = InitialData([&](double x) { return 1.5 * u0(x); }, 1.5 * u0.sup_norm(), "1.5u0");
        const auto d = CoupledProblem(u0, v0, SigmaFn::wobble(1.0), g).run({1, 2});
        const auto a = Problem(u0, SigmaFn::wobble(1.0), g).run({1, 2}).final_row;
        const auto b = Problem(v0, SigmaFn::wobble(1.0), g).run({1, 2}).final_row;
        for (std::size_t j = 0; j < d.size(); ++j) {
            CHECK(d[j] == doctest::Approx(b[j] - a[j]).epsilon(1e-9).scale(1e-12));
        }
    }
}

TEST_CASE("trajectory export") {
    const auto g = Grid::make(0.5, 0.1, 0.02);
    const auto f = solve(InitialProfile::bump(1.0, 1.0), SigmaFn::linear(1.0), 0.02, g, {1, 0, g});
    const auto dir = std::filesystem::temp_directory_path() / "she_test_export";
    std::filesystem::create_directories(dir);
    write_binary(f, dir / "u.bin");
    const auto d = read_binary(dir / "u.bin");
    CHECK(d.rows == g.n_steps() + 1);
    CHECK(d.cells == g.cells());
    CHECK(d.values == f.values);
    write_csv(f, dir / "u.csv", 2);
    CHECK(std::filesystem::file_size(dir / "u.csv") > 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("Picard iterates") {
    const auto g = Grid::make(2.0, 0.1, 0.25);
    const auto u0 = InitialProfile::lambda_family(0.5);
    const NoiseSpec spec{8, 0, g};

    SUBCASE("zero iterations give the initial profile") {
        const auto it = picard_iterate(u0, SigmaFn::linear(1.0), 0.25, g, spec, 0);
        REQUIRE(it.size() == 1);
        for (std::int64_t j = 0; j < g.cells(); ++j) {
            CHECK(it[0](g.n_steps(), j) == u0(g.x(j)));
        }
    }
    SUBCASE("without noise the first iterate is the heat flow and later ones repeat it") {
        const auto it = picard_iterate(u0, SigmaFn::zero(), 0.25, g, spec, 3);
        const auto heat = Problem(u0, SigmaFn::zero(), g).run({0, 0}).final_row;
        for (std::int64_t j = 0; j < g.cells(); ++j) {
            const double exact = semigroup_apply(u0, 0.25, g.x(j), {}).value;
            CHECK(it[1](g.n_steps(), j) == doctest::Approx(exact).epsilon(1e-3));
            CHECK(it[1](g.n_steps(), j) == heat[static_cast<std::size_t>(j)]);
        }
        CHECK(it[2].values == it[1].values);
        CHECK(it[3].values == it[1].values);
    }
    SUBCASE("iterates converge to the scheme's solution") {
        const auto it = picard_iterate(u0, SigmaFn::wobble(1.0), 0.25, g, spec, 20);
        const auto exact = solve(u0, SigmaFn::wobble(1.0), 0.25, g, spec);
        double prev = 1e300;
        for (std::size_t k = 4; k < it.size(); k += 4) {
            double err = 0.0;
            for (std::size_t i = 0; i < exact.values.size(); ++i) {
                err = std::max(err, std::abs(it[k].values[i] - exact.values[i]));
            }
            CHECK(err < prev);
            prev = err;
        }
        CHECK(prev < 1e-5);
    }
}

TEST_CASE("localized Picard") {
    const double t = 0.25;
    const int n = 2;
    const double reach = LocalizedPicard::dependence_radius(n, t);
    const auto g = Grid::make(reach + 0.5, 0.1, t);
    const auto u0 = InitialProfile::lambda_family(0.5);

    SUBCASE("without noise every level is the heat flow") {
        const LocalizedPicard lp(u0, SigmaFn::zero(), g, 0.3, n);
        const auto r = lp.evaluate({1, 1});
        const double heat = Problem(u0, SigmaFn::zero(), g).run({0, 0}).final_row[static_cast<std::size_t>(g.cell_of(0.3))];
        REQUIRE(r.levels.size() == 3);
        CHECK(r.levels[1] == doctest::Approx(heat).epsilon(1e-13));
        CHECK(r.value == doctest::Approx(heat).epsilon(1e-13));
    }
    SUBCASE("window outside the grid is rejected with the required halfwidth") {
        CHECK_THROWS_WITH_AS(LocalizedPicard(u0, SigmaFn::linear(1.0), g, 1.0, n), doctest::Contains("halfwidth >="),
                             PreconditionError);
    }
    SUBCASE("footprint stays inside the dependence cone and ignores noise values") {
        const LocalizedPicard lp(u0, SigmaFn::linear(1.0), g, 0.0, n);
        const auto fp = lp.footprint();
        REQUIRE_FALSE(fp.empty());
        for (const auto& [k, cell] : fp) {
            CHECK(std::abs(static_cast<double>(cell) * g.dx()) <= reach + 1e-9);
            CHECK(k < g.n_steps());
        }
        CHECK(lp.evaluate({9, 4}, true).footprint == fp);
    }
    SUBCASE("with windows covering the cone, the n = 1 level is one Picard step") {
        const LocalizedPicard lp(u0, SigmaFn::linear(1.0), g, 0.0, 1);
        const auto it = picard_iterate(u0, SigmaFn::linear(1.0), t, g, {3, 7, g}, 1);
        const double full = it[1](g.n_steps(), g.cell_of(0.0));
        // Truncation to the window drops only far noise: small but non-zero.
        CHECK(lp.evaluate({3, 7}).value == doctest::Approx(full).epsilon(0.05));
    }
}

TEST_CASE("localized values approach the solution as n grows") {
    const double t = 0.25;
    const auto g = Grid::make(LocalizedPicard::dependence_radius(4, t) + 1.0, 0.1, t);
    const auto u0 = InitialProfile::constant(1.0);
    const Problem full(u0, SigmaFn::linear(1.0), g);
    std::vector<LocalizedPicard> schemes;
    for (int n = 1; n <= 4; ++n) {
        schemes.emplace_back(u0, SigmaFn::linear(1.0), g, 0.0, n);
    }
    const std::size_t mid = static_cast<std::size_t>(g.cell_of(0.0));
    auto out = run_replicas(300, [&](std::uint64_t r) {
        const double u = full.run({17, r}).final_row[mid];
        std::vector<double> err;
        for (const auto& s : schemes) {
            err.push_back(std::pow(s.evaluate({17, r}).value - u, 2));
        }
        return err;
    });
    std::vector<double> mse(4, 0.0);
    for (const auto& e : out.completed_values()) {
        for (std::size_t i = 0; i < 4; ++i) {
            mse[i] += e[i] / 300.0;
        }
    }
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(mse[i] < mse[i - 1]);
    }
}
