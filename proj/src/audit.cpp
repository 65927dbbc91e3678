#include "she/audit.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace she {

double normalization_error(double t) {
    QuadratureSpec q;
    q.spatial_step = 0.01;
    q.spatial_halfwidth = 6.0 * std::sqrt(10.0);
    return std::abs(semigroup_apply([](double) { return 1.0; }, t, 0.3, q).value - 1.0);
}

double semigroup_error(const RealFn& f, double s, double t) {
    QuadratureSpec q;
    q.spatial_step = 0.02;
    q.spatial_halfwidth = 8.0;
    double worst = 0.0;
    for (double x = -3.0; x <= 3.0; x += 0.5) {
        const RealFn inner = [&](double y) { return semigroup_apply(f, t, y, q).value; };
        const double nested = semigroup_apply(inner, s, x, q).value;
        const double direct = semigroup_apply(f, s + t, x, q).value;
        worst = std::max(worst, std::abs(nested - direct));
    }
    return worst;
}

LocalisationAudit localisation_audit(int n_functions, const std::vector<double>& r_list,
                                     const std::vector<double>& t_list, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.2, 5.0), phase(0.0, 6.3);
    QuadratureSpec q;
    q.spatial_step = 2e-3;
    q.spatial_halfwidth = 10.0;
    LocalisationAudit out;
    for (int i = 0; i < n_functions; ++i) {
        const double a = 3.0 * amp(rng);
        const double c1 = amp(rng), c2 = amp(rng), w1 = freq(rng), w2 = freq(rng), ph = phase(rng);
        const double sup = 0.5 * (std::abs(c1) + std::abs(c2));
        ++out.functions;
        for (double r : r_list) {
            const RealFn h = [=](double y) {
                return std::abs(y - a) <= r ? 0.0 : 0.5 * (c1 * std::sin(w1 * y + ph) + c2 * std::cos(w2 * y));
            };
            for (double t : t_list) {
                const double bound = 2.0 * sup * std::exp(-r * r / (8.0 * t));
                for (double off : {-0.5, -0.25, 0.0, 0.3, 0.5}) {
                    const double v = std::abs(semigroup_apply(h, t, a + off * r, q).value);
                    out.worst_ratio = std::max(out.worst_ratio, v / bound);
                    ++out.evaluations;
                }
            }
        }
    }
    return out;
}

double k_integral_closed_form(double alpha, double t) {
    const double a2 = alpha * alpha;
    return 2.0 * std::exp(a2 * a2 * t / 4.0) * normal_cdf(a2 * std::sqrt(t / 2.0)) - 1.0;
}

double k_mass_identity_error(double alpha, double t) {
    auto central = [&](double h) {
        return (k_integral_closed_form(alpha, t + h) - k_integral_closed_form(alpha, t - h)) / (2.0 * h);
    };
    const double h = 1e-3 * t;
    const double deriv = (4.0 * central(h / 2.0) - central(h)) / 3.0;
    // K_t is a Gaussian of variance t/2 in y; trapezoid on 20 standard deviations.
    const double sd = std::sqrt(t / 2.0);
    const long n = 4000;
    const double H = 20.0 * sd;
    double integral = 0.0;
    for (long i = -n; i <= n; ++i) {
        const double y = H * static_cast<double>(i) / static_cast<double>(n);
        integral += (i == -n || i == n ? 0.5 : 1.0) * kernel_K(alpha, t, y);
    }
    integral *= H / static_cast<double>(n);
    return std::abs(deriv - integral);
}

std::vector<AuditCheck> kernel_audit(std::uint64_t seed) {
    std::vector<AuditCheck> out;
    auto add = [&](std::string name, double value, double limit, std::string detail = {}) {
        out.push_back({std::move(name), value <= limit, value, limit, std::move(detail)});
    };
    for (double t : {0.01, 0.1, 1.0, 10.0}) {
        std::ostringstream os;
        os << "normalization t=" << t;
        add(os.str(), normalization_error(t), 1e-9);
    }
    add("semigroup cos(1.3y)/(1+0.1y^2), s=0.3, t=0.7",
        semigroup_error([](double y) { return std::cos(1.3 * y) / (1.0 + 0.1 * y * y); }, 0.3, 0.7), 1e-6);
    const auto loc = localisation_audit(50, {0.5, 1.0, 2.0, 4.0}, {0.05, 0.5}, seed);
    add("localisation 2|h| exp(-r^2/8t)", loc.worst_ratio, 1.0,
        std::to_string(loc.evaluations) + " evaluations, worst value/bound ratio");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ua(0.1, 3.0), ut(0.1, 4.0), ux(-5.0, 5.0);
    int bad = 0;
    for (int i = 0; i < 1000; ++i) {
        const double a = ua(rng), t = ut(rng), x = ux(rng);
        const double k = kernel_K(a, t, x);
        bad += !(k > 0.0) || k != kernel_K(a, t, -x);
    }
    add("K positive and even (1000 samples)", bad, 0.0);
    double worst = 0.0;
    for (double a : {0.5, 1.0, 1.5}) {
        for (double t : {0.1, 1.0, 2.0}) {
            worst = std::max(worst, k_mass_identity_error(a, t) / kernel_K_mass(a, t));
        }
    }
    add("d/dt closed form = int K (relative)", worst, 1e-8);

    QuadratureSpec q;
    q.spatial_halfwidth = 6.0;
    const SpaceTimeFn g = [](double s, double y) { return heat_kernel_squared(s, y); };
    const SpaceTimeFn f1 = [](double s, double y) { return std::exp(-s) * std::cos(y); };
    const SpaceTimeFn f2 = [](double s, double y) { return 1.0 / (1.0 + s + y * y); };
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    double lin = 0.0;
    for (int i = 0; i < 3; ++i) {
        const double a = c(rng), b = c(rng);
        const SpaceTimeFn mix = [&](double s, double y) { return a * f1(s, y) + b * f2(s, y); };
        const double lhs = space_time_convolve(mix, g, 0.6, 0.1, q);
        const double rhs = a * space_time_convolve(f1, g, 0.6, 0.1, q) + b * space_time_convolve(f2, g, 0.6, 0.1, q);
        lin = std::max(lin, std::abs(lhs - rhs) / std::abs(rhs));
    }
    add("convolution linear in f (relative)", lin, 1e-9);
    return out;
}

}  // namespace she
