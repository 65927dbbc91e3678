#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "she/errors.hpp"
#include "she/kernel.hpp"

using namespace she;

namespace {

// Values frozen from 40-digit mpmath evaluations.
constexpr double kHeatHalfOne = 0.20755374871029735;
constexpr double kPhiInvSqrt2 = 0.76024993890652327;
constexpr double kKernelK110 = 0.43453030592364549;
constexpr double kUnitIntervalMass = 0.68268949213708590;
constexpr double kTwoSidedTailOne = 0.31731050786291410;

double closed_form_K_integral(double alpha, double t) {
    const double a4 = std::pow(alpha, 4);
    return 2.0 * std::exp(a4 * t / 4.0) * normal_cdf(alpha * alpha * std::sqrt(t / 2.0)) - 1.0;
}

}  // namespace

TEST_CASE("heat_kernel values") {
    CHECK(heat_kernel(1.0, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(heat_kernel(2.0, 0.0) == doctest::Approx(1.0 / std::sqrt(4.0 * std::numbers::pi)).epsilon(1e-15));
    CHECK(heat_kernel(0.5, 1.0) == doctest::Approx(kHeatHalfOne).epsilon(1e-14));
    CHECK(heat_kernel(0.3, 1.7) == heat_kernel(0.3, -1.7));
    CHECK_THROWS_AS(heat_kernel(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(heat_kernel(-1.0, 1.0), DomainError);
}

TEST_CASE("normal_cdf") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(std::abs(normal_cdf(40.0) - 1.0) <= 1e-15);
    CHECK(std::abs(normal_cdf(1.0 / std::numbers::sqrt2) - kPhiInvSqrt2) <= 1e-12);
    for (double x : {0.1, 0.7, 1.3, 3.0, 6.5, 9.0}) {
        CHECK(std::abs(normal_cdf(-x) - (1.0 - normal_cdf(x))) <= 1e-15);
        CHECK(normal_ccdf(x) == doctest::Approx(normal_cdf(-x)).epsilon(1e-14));
    }
    double prev = 0.0;
    for (double x = -10.0; x <= 10.0; x += 0.01) {
        const double v = normal_cdf(x);
        CHECK(v >= prev);
        prev = v;
    }
    // Upper tail keeps relative accuracy where 1 - Phi would cancel.
    CHECK(normal_ccdf(10.0) == doctest::Approx(7.6198530241605269e-24).epsilon(1e-12));
}

TEST_CASE("normal_quantile inverts normal_cdf") {
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
        CHECK(normal_cdf(normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK_THROWS_AS(normal_quantile(0.0), DomainError);
    CHECK_THROWS_AS(normal_quantile(1.0), DomainError);
}

TEST_CASE("normal_quantile agrees with boost erfc_inv") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-300.0, -1e-3);
    for (int i = 0; i < 2000; ++i) {
        const double p = i % 2 == 0 ? std::pow(10.0, u(rng) / 20.0) : 0.5 + 0.49 * std::sin(i);
        const double ref = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
        CHECK(normal_quantile(p) == doctest::Approx(ref).epsilon(1e-14));
    }
}

TEST_CASE("kernel_K") {
    CHECK(kernel_K(1.0, 1.0, 0.0) == doctest::Approx(kKernelK110).epsilon(1e-13));
    CHECK(kernel_K(1e-9, 1.0, 0.0) < 1e-17);
    CHECK(kernel_K(1.0, 1.0, 2.0) == kernel_K(1.0, 1.0, -2.0));
    CHECK_THROWS_AS(kernel_K(10.0, 100.0, 0.0), OverflowError);
    CHECK_THROWS_AS(kernel_K(0.0, 1.0, 0.0), DomainError);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ua(0.1, 3.0), ut(0.1, 4.0), ux(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const double a = ua(rng), t = ut(rng), x = ux(rng);
        const double k = kernel_K(a, t, x);
        CHECK(k > 0.0);
        CHECK(k == kernel_K(a, t, -x));
    }
}

TEST_CASE("kernel_K mass matches the derivative of the second-moment closed form") {
    for (double a : {0.5, 1.0, 1.5}) {
        for (double t : {0.1, 1.0, 2.0}) {
            const double h = 1e-4 * t;
            const double fd = (closed_form_K_integral(a, t + h) - closed_form_K_integral(a, t - h)) / (2.0 * h);
            CHECK(fd == doctest::Approx(kernel_K_mass(a, t)).epsilon(1e-7));
        }
    }
}

TEST_CASE("heat_kernel_squared identity") {
    for (double t : {0.05, 0.5, 3.0}) {
        for (double x : {0.0, 0.3, -1.2}) {
            const double p = heat_kernel(t, x);
            CHECK(heat_kernel_squared(t, x) == doctest::Approx(p * p).epsilon(1e-14));
        }
    }
}

TEST_CASE("semigroup_apply normalisation") {
    QuadratureSpec q;
    q.spatial_step = 0.01;
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        q.spatial_halfwidth = 6.0 * std::sqrt(10.0);
        const auto r = semigroup_apply([](double) { return 1.0; }, t, 0.3, q);
        CHECK(std::abs(r.value - 1.0) <= 1e-9);
    }
}

TEST_CASE("semigroup_apply indicator and warning") {
    QuadratureSpec q;
    q.spatial_step = 1e-4;
    q.spatial_halfwidth = 8.0;
    const auto r = semigroup_apply([](double y) { return std::abs(y) <= 1.0 ? 1.0 : 0.0; }, 1.0, 0.0, q);
    CHECK(std::abs(r.value - kUnitIntervalMass) <= 1e-4);
    CHECK_FALSE(r.domain_warning);

    q.spatial_halfwidth = 1.0;
    q.spatial_step = 0.01;
    CHECK(semigroup_apply([](double) { return 1.0; }, 1.0, 0.0, q).domain_warning);
}

TEST_CASE("semigroup property on a smooth bounded function") {
    QuadratureSpec q;
    q.spatial_step = 0.02;
    q.spatial_halfwidth = 8.0;
    const RealFn f = [](double y) { return std::cos(1.3 * y) / (1.0 + 0.1 * y * y); };
    const double s = 0.3, t = 0.7;
    double worst = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.5) {
        const RealFn inner = [&](double y) { return semigroup_apply(f, t, y, q).value; };
        const double nested = semigroup_apply(inner, s, x, q).value;
        const double direct = semigroup_apply(f, s + t, x, q).value;
        worst = std::max(worst, std::abs(nested - direct));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("gaussian_tail_mass") {
    CHECK(gaussian_tail_mass(1.0, 1.0) == doctest::Approx(kTwoSidedTailOne).epsilon(1e-13));
    CHECK(gaussian_tail_mass(1e-12, 1.0) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(gaussian_tail_mass(0.0, 1.0) == 1.0);
    for (double r : {0.5, 1.0, 2.0, 4.0}) {
        for (double t : {0.1, 1.0}) {
            CHECK(gaussian_tail_mass(r / 2.0, t) <= 2.0 * std::exp(-r * r / (8.0 * t)));
            CHECK(gaussian_tail_mass(r / 2.0, t) <= 2.0 * std::exp(-(r / 2.0) * (r / 2.0) / (2.0 * t)));
        }
    }
}

TEST_CASE("localisation bound for data vanishing on an interval") {
    // Random bounded h, identically zero on [a - r, a + r].
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.2, 5.0), phase(0.0, 6.3);
    QuadratureSpec q;
    q.spatial_step = 2e-3;
    q.spatial_halfwidth = 10.0;
    for (int trial = 0; trial < 10; ++trial) {
        const double a = 3.0 * amp(rng);
        const double c1 = amp(rng), c2 = amp(rng), w1 = freq(rng), w2 = freq(rng), ph = phase(rng);
        for (double r : {0.5, 1.0, 2.0, 4.0}) {
            const RealFn h = [=](double y) {
                if (std::abs(y - a) <= r) {
                    return 0.0;
                }
                return 0.5 * (c1 * std::sin(w1 * y + ph) + c2 * std::cos(w2 * y));
            };
            const double sup = 0.5 * (std::abs(c1) + std::abs(c2));
            for (double t : {0.05, 0.5}) {
                for (double dx : {-0.5, -0.25, 0.0, 0.3, 0.5}) {
                    const double x = a + dx * r;
                    const double v = std::abs(semigroup_apply(h, t, x, q).value);
                    CHECK(v <= 2.0 * sup * std::exp(-r * r / (8.0 * t)));
                }
            }
        }
    }
}

TEST_CASE("space_time_convolve basics") {
    QuadratureSpec q;
    q.spatial_halfwidth = 8.0;
    const SpaceTimeFn zero = [](double, double) { return 0.0; };
    const SpaceTimeFn K1 = [](double s, double y) { return kernel_K(1.0, s, y); };
    CHECK(space_time_convolve(zero, K1, 1.0, 0.2, q) == 0.0);

    const SpaceTimeFn one = [](double, double) { return 1.0; };
    for (double alpha : {0.7, 1.0, 1.4}) {
        for (double t : {0.25, 1.0}) {
            const double got = space_time_convolve(one, [alpha](double s, double y) { return kernel_K(alpha, s, y); },
                                                   t, 0.4, q);
            CHECK(got + 1.0 == doctest::Approx(closed_form_K_integral(alpha, t) + 1.0).epsilon(1e-6));
        }
    }

    const SpaceTimeFn bad = [](double s, double) { return s < 0.5 ? 1.0 : std::nan(""); };
    CHECK_THROWS_AS(space_time_convolve(bad, one, 1.0, 0.0, q), DomainError);
}

TEST_CASE("space_time_convolve is linear in f") {
    QuadratureSpec q;
    q.spatial_halfwidth = 6.0;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    const SpaceTimeFn g = [](double s, double y) { return heat_kernel_squared(s, y); };
    const SpaceTimeFn f1 = [](double s, double y) { return std::exp(-s) * std::cos(y); };
    const SpaceTimeFn f2 = [](double s, double y) { return 1.0 / (1.0 + s + y * y); };
    for (int i = 0; i < 3; ++i) {
        const double a = c(rng), b = c(rng);
        const SpaceTimeFn mix = [&](double s, double y) { return a * f1(s, y) + b * f2(s, y); };
        const double lhs = space_time_convolve(mix, g, 0.6, 0.1, q);
        const double rhs = a * space_time_convolve(f1, g, 0.6, 0.1, q) + b * space_time_convolve(f2, g, 0.6, 0.1, q);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
    }
}

TEST_CASE("renewal term for localised data obeys the insensitivity estimate") {
    // h = B on |y - a| > r, J_s = p_s * h in closed form.
    const double a = 0.0, r = 2.0, B = 0.8;
    auto J = [=](double s, double z) {
        const double sd = std::sqrt(s);
        return B * (normal_cdf((z - (a + r)) / sd) + normal_cdf((a - r - z) / sd));
    };
    QuadratureSpec q;
    q.spatial_halfwidth = 10.0;
    for (double lip : {0.8, 1.0, 1.5}) {
        const double ell = 1.0 + std::pow(lip, 4);
        for (double t : {0.1, 0.3}) {
            const double bound = 48.0 * ell * std::max(1.0, std::pow(lip, -4)) * B * B *
                                 std::exp(-r * r / (16.0 * t) + std::pow(lip, 4) * t / 4.0);
            for (double x : {a - r / 4.0, a, a + r / 4.0}) {
                const double v = space_time_convolve([&](double s, double z) { return J(s, z) * J(s, z); },
                                                     [lip](double s, double y) { return kernel_K(lip, s, y); }, t, x,
                                                     q);
                CHECK(v >= 0.0);
                CHECK(v <= bound);
            }
        }
    }
}
