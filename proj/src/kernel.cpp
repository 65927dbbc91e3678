#include "she/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

#include "she/errors.hpp"

namespace she {

namespace {

constexpr double kMaxExponent = 700.0;

void require_positive_time(double t, const char* what) {
    if (!(t > 0.0)) {
        std::ostringstream os;
        os << what << ": time must be positive, got " << t;
        throw DomainError(os.str());
    }
}

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussRule(int n) {
        for (double z : boost::math::legendre_p_zeros<double>(n)) {
            const double d = boost::math::legendre_p_prime(n, z);
            const double w = 2.0 / ((1.0 - z * z) * d * d);
            nodes.push_back(z);
            weights.push_back(w);
            if (z != 0.0) {
                nodes.push_back(-z);
                weights.push_back(w);
            }
        }
    }

    template <class F>
    double integrate(F&& f, double a, double b) const {
        const double half = 0.5 * (b - a);
        const double mid = 0.5 * (a + b);
        double sum = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            sum += weights[i] * f(mid + half * nodes[i]);
        }
        return half * sum;
    }
};

const GaussRule& spatial_rule() {
    static const GaussRule rule(20);
    return rule;
}

// Breakpoints for the spatial integral around the centres of both factors.
std::vector<double> spatial_breaks(double x, double lo, double hi, double scale_at_zero,
                                   double scale_at_x, double max_width) {
    std::vector<double> br{lo, hi};
    auto graded = [&](double centre, double scale) {
        if (centre < lo || centre > hi) {
            return;
        }
        br.push_back(centre);
        double w = std::max(scale, 1e-12) / 4.0;
        while (w < hi - lo) {
            for (double c : {centre - w, centre + w}) {
                if (c > lo && c < hi) {
                    br.push_back(c);
                }
            }
            w *= 2.0;
        }
    };
    graded(0.0, std::sqrt(scale_at_zero));
    graded(x, std::sqrt(scale_at_x));
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());

    std::vector<double> out;
    out.reserve(br.size() * 2);
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        out.push_back(br[i]);
        const double gap = br[i + 1] - br[i];
        if (gap > max_width) {
            const auto pieces = static_cast<int>(std::ceil(gap / max_width));
            for (int k = 1; k < pieces; ++k) {
                out.push_back(br[i] + gap * k / pieces);
            }
        }
    }
    out.push_back(br.back());
    return out;
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(spatial_step > 0.0) || !(spatial_halfwidth > 0.0)) {
        throw DomainError("quadrature: spatial_step and spatial_halfwidth must be positive");
    }
    if (time_substeps < 8) {
        throw DomainError("quadrature: time_substeps must be at least 8");
    }
}

double heat_kernel(double t, double x) {
    require_positive_time(t, "heat_kernel");
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_ccdf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: probability must lie in (0, 1)");
    }
    // Wichura, Algorithm AS 241 (PPND16), relative accuracy about 1e-16.
    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r +
                    45921.953931549871457) * r + 13731.693765509461125) * r + 1971.5909503065514427) * r +
                 133.14166789178437745) * r + 3.387132872796366608) /
               (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r +
                    21213.794301586595867) * r + 5394.1960214247511077) * r + 687.1870074920579083) * r +
                 42.313330701600911252) * r + 1.0);
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double z;
    if (r <= 5.0) {
        r -= 1.6;
        z = (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r +
                 1.27045825245236838258) * r + 3.64784832476320460504) * r + 5.7694972214606914055) * r +
              4.6303378461565452959) * r + 1.42343711074968357734) /
            (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966) * r +
                 0.14810397642748007459) * r + 0.68976733498510000455) * r + 1.6763848301838038494) * r +
              2.05319162663775882187) * r + 1.0);
    } else {
        r -= 5.0;
        z = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r +
                 0.026532189526576123093) * r + 0.29656057182850489123) * r + 1.7848265399172913358) * r +
              5.4637849111641143699) * r + 6.6579046435011037772) /
            (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r + 1.8463183175100546818e-5) * r +
                 7.868691311456132591e-4) * r + 0.0148753612908506148525) * r + 0.13692988092273580531) * r +
              0.59983220655588793769) * r + 1.0);
    }
    return q < 0.0 ? -z : z;
}

double kernel_K(double alpha, double t, double x) {
    require_positive_time(t, "kernel_K");
    if (!(alpha > 0.0)) {
        throw DomainError("kernel_K: alpha must be positive");
    }
    const double a2 = alpha * alpha;
    const double expo = a2 * a2 * t / 4.0;
    if (expo > kMaxExponent) {
        throw OverflowError("kernel_K: alpha^4 t / 4 exceeds the exponent range");
    }
    const double bracket =
        1.0 / std::sqrt(std::numbers::pi * t) + a2 * std::exp(expo) * normal_cdf(a2 * std::sqrt(t / 2.0));
    const double value = 0.5 * a2 * heat_kernel(t / 2.0, x) * bracket;
    if (!std::isfinite(value)) {
        throw OverflowError("kernel_K: value is not representable");
    }
    return value;
}

double kernel_K_mass(double alpha, double t) {
    require_positive_time(t, "kernel_K_mass");
    const double a2 = alpha * alpha;
    const double expo = a2 * a2 * t / 4.0;
    if (expo > kMaxExponent) {
        throw OverflowError("kernel_K_mass: alpha^4 t / 4 exceeds the exponent range");
    }
    return 0.5 * a2 *
           (1.0 / std::sqrt(std::numbers::pi * t) + a2 * std::exp(expo) * normal_cdf(a2 * std::sqrt(t / 2.0)));
}

double heat_kernel_squared(double t, double x) {
    require_positive_time(t, "heat_kernel_squared");
    return heat_kernel(t / 2.0, x) / (2.0 * std::sqrt(std::numbers::pi * t));
}

QuadratureResult semigroup_apply(const RealFn& f, double t, double x, const QuadratureSpec& q) {
    require_positive_time(t, "semigroup_apply");
    q.validate();
    const double sd = std::sqrt(t);
    QuadratureResult res;
    res.domain_warning = q.spatial_halfwidth < 6.0 * sd || q.spatial_step > 0.5 * sd;

    const auto n = static_cast<long>(std::ceil(q.spatial_halfwidth / q.spatial_step));
    const double h = q.spatial_halfwidth / static_cast<double>(n);
    double sum = 0.0;
    for (long k = -n; k <= n; ++k) {
        const double w = h * static_cast<double>(k);
        const double term = heat_kernel(t, w) * f(x - w);
        sum += (k == -n || k == n) ? 0.5 * term : term;
    }
    sum *= h;
    if (q.tail_handling) {
        // Beyond the truncation f is frozen at its edge values.
        const double tail = normal_ccdf(q.spatial_halfwidth / sd);
        sum += tail * (f(x - q.spatial_halfwidth) + f(x + q.spatial_halfwidth));
    }
    res.value = sum;
    return res;
}

double gaussian_tail_mass(double a, double t) {
    require_positive_time(t, "gaussian_tail_mass");
    if (!(a >= 0.0)) {
        throw DomainError("gaussian_tail_mass: a must be non-negative");
    }
    return std::erfc(a / std::sqrt(2.0 * t));
}

double space_time_convolve(const SpaceTimeFn& f, const SpaceTimeFn& g, double t, double x,
                           const QuadratureSpec& q) {
    require_positive_time(t, "space_time_convolve");
    q.validate();
    const double lo = x - q.spatial_halfwidth;
    const double hi = x + q.spatial_halfwidth;
    const double max_width = std::max(q.spatial_step * 16.0, 0.25);

    auto inner = [&](double s) {
        const auto br = spatial_breaks(x, lo, hi, s, t - s, max_width);
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < br.size(); ++i) {
            acc += spatial_rule().integrate(
                [&](double y) {
                    const double v = f(t - s, x - y) * g(s, y);
                    if (!std::isfinite(v)) {
                        std::ostringstream os;
                        os.precision(17);
                        os << "space_time_convolve: non-finite integrand at (s=" << s << ", y=" << y << ")";
                        throw DomainError(os.str());
                    }
                    return v;
                },
                br[i], br[i + 1]);
        }
        return acc;
    };

    // Geometric grading toward s = 0 and s = t, ratio 2, 8 levels each side.
    constexpr int kLevels = 8;
    std::vector<double> br;
    br.push_back(0.0);
    for (int k = kLevels; k >= 1; --k) {
        br.push_back(0.5 * t * std::ldexp(1.0, -k));
    }
    br.push_back(0.5 * t);
    for (int k = 1; k <= kLevels; ++k) {
        br.push_back(t - 0.5 * t * std::ldexp(1.0, -k));
    }
    br.push_back(t);

    const GaussRule time_rule(q.time_substeps);
    double total = 0.0;
    const std::size_t last = br.size() - 2;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
        const double a = br[i];
        const double b = br[i + 1];
        const double h = b - a;
        if (i == 0) {
            total += time_rule.integrate([&](double tau) { return inner(a + h * tau * tau) * 2.0 * h * tau; }, 0.0, 1.0);
        } else if (i == last) {
            total += time_rule.integrate([&](double tau) { return inner(b - h * tau * tau) * 2.0 * h * tau; }, 0.0, 1.0);
        } else {
            total += time_rule.integrate(inner, a, b);
        }
    }
    return total;
}

}  // namespace she
