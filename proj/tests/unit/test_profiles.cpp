#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "she/errors.hpp"
#include "she/profiles.hpp"

using namespace she;

TEST_CASE("lambda_profile") {
    for (double x : {-50.0, 0.0, 3.0, 1e6}) {
        CHECK(lambda_profile(0.0, x) == 1.0);
    }
    for (double x : {0.0, 1.0, -2.5, std::numbers::e}) {
        CHECK(lambda_profile(1.7, x) == doctest::Approx(std::exp(-1.7)).epsilon(1e-15));
    }
    CHECK(lambda_profile(1.0, std::exp(8.0)) == doctest::Approx(0.018315638888734180).epsilon(1e-13));
    CHECK_THROWS_AS(lambda_profile(-0.1, 1.0), DomainError);
}

TEST_CASE("estimate_lambda recovers the family index") {
    const std::vector<double> xs{std::exp(2.0), std::exp(4.0), std::exp(8.0), std::exp(16.0)};
    CHECK(estimate_lambda(InitialProfile::lambda_family(0.7), xs) == doctest::Approx(0.7).epsilon(1e-9));
    for (double lam : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0}) {
        CHECK(std::abs(estimate_lambda(InitialProfile::lambda_family(lam), xs) - lam) <= 1e-6);
    }
    CHECK(std::abs(estimate_lambda(InitialProfile::constant(0.3), xs)) <= 1e-12);
}

TEST_CASE("estimate_lambda on an interpolated table") {
    std::vector<std::pair<double, double>> knots;
    for (int i = 0; i < 20; ++i) {
        const double lx = 1.0 + 15.0 * i / 19.0;
        const double x = std::exp(lx);
        knots.emplace_back(x, std::exp(-2.0 * std::cbrt(lx * lx)));
    }
    const auto tab = InitialProfile::table(knots);
    const std::vector<double> xs{std::exp(2.0), std::exp(4.0), std::exp(8.0), std::exp(12.0)};
    CHECK(std::abs(estimate_lambda(tab, xs) - 2.0) <= 0.05);
    CHECK_FALSE(tab.decay_index().has_value());
}

TEST_CASE("estimate_lambda errors") {
    const std::vector<double> xs{std::exp(2.0), std::exp(3.0)};
    CHECK_THROWS_AS(estimate_lambda(make_bump(1.0, 1.0), xs), DomainError);
    const std::vector<double> small{1.0, std::exp(3.0)};
    CHECK_THROWS_AS(estimate_lambda(InitialProfile::lambda_family(1.0), small), DomainError);
}

TEST_CASE("bump profile") {
    const auto b = make_bump(1.0, 1.0);
    CHECK(b(0.0) == 1.0);
    CHECK(b(1.0) == 0.0);
    CHECK(b(-1.0) == 0.0);
    CHECK(make_bump(2.0, 4.0)(2.0) == 1.0);
    REQUIRE(b.decay_index().has_value());
    CHECK(b.decay_index()->infinite);
    CHECK(b.decay_index()->to_string() == "inf");
    CHECK_THROWS_AS(make_bump(0.0, 1.0), DomainError);
}

TEST_CASE("every constructed profile passes the audit") {
    std::vector<InitialProfile> ps{InitialProfile::lambda_family(0.0), InitialProfile::lambda_family(0.5),
                                   InitialProfile::lambda_family(4.0), InitialProfile::constant(2.0),
                                   make_bump(3.0, 0.7),
                                   InitialProfile::table({{0.0, 1.0}, {1.0, 1.2}, {2.0, 0.4}, {5.0, -0.1}})};
    for (const auto& p : ps) {
        CAPTURE(p.describe());
        CHECK(audit(p, 200.0).ok());
    }
}

TEST_CASE("audit flags a non-monotone function") {
    // Table construction repairs monotonicity, so check the repair itself.
    const auto t = InitialProfile::table({{0.0, 1.0}, {1.0, 2.0}, {2.0, 0.5}});
    CHECK(t(1.0) == 1.0);
    CHECK(t(0.5) == 1.0);
    CHECK(t(1.5) == doctest::Approx(0.75));
    CHECK(t(-1.5) == t(1.5));
}

TEST_CASE("table CSV loader mirrors to negative x") {
    const auto path = std::filesystem::temp_directory_path() / "she_profile_table.csv";
    {
        std::ofstream out(path);
        out << "x,value\n0,1\n1,0.5\n3,0.25\n";
    }
    const auto p = InitialProfile::load_table_csv(path);
    CHECK(p(0.5) == doctest::Approx(0.75));
    CHECK(p(-0.5) == doctest::Approx(0.75));
    CHECK(p(-2.0) == doctest::Approx(0.375));
    CHECK(p.sup_norm() == 1.0);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(InitialProfile::load_table_csv("/nonexistent/she.csv"), DomainError);
}

TEST_CASE("splice keeps the inside data on the interval") {
    const InitialData a = InitialProfile::lambda_family(1.0);
    const InitialData b = InitialProfile::lambda_family(0.5);
    const auto s = splice(a, b, 8.0, 4.0);
    CHECK(s(8.0) == a(8.0));
    CHECK(s(4.0) == a(4.0));
    CHECK(s(12.5) == b(12.5));
    CHECK(s(0.0) == b(0.0));
    CHECK(s.sup_norm == b.sup_norm);
}
