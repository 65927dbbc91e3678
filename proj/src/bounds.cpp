#include "she/bounds.hpp"

#include <cmath>
#include <sstream>

#include "she/errors.hpp"
#include "she/kernel.hpp"

namespace she {

namespace {

constexpr double kMaxExponent = 700.0;

double guarded_exp(double e, const char* who) {
    if (e > kMaxExponent) {
        std::ostringstream os;
        os << who << ": exponent " << e << " exceeds the double range";
        throw OverflowError(os.str());
    }
    return std::exp(e);
}

void require(bool ok, const char* msg) {
    if (!ok) {
        throw DomainError(msg);
    }
}

}  // namespace

double suscept_bound(double lip, double r, double t, double b_norm) {
    require(lip > 0.0 && r > 0.0 && t > 0.0 && b_norm >= 0.0, "suscept_bound: need lip, r, t > 0 and b_norm >= 0");
    const double l4 = std::pow(lip, 4);
    const double c = 96.0 * std::max(1.0, 1.0 / l4);
    const double ell = 1.0 + l4;
    return c * ell * b_norm * b_norm * guarded_exp(-r * r / (16.0 * t) + l4 * t / 4.0, "suscept_bound");
}

double suscept_bound_argmin(double lip, double r, double t_lo, double t_hi, double tol) {
    require(0.0 < t_lo && t_lo < t_hi, "suscept_bound_argmin: need 0 < t_lo < t_hi");
    // The bound is unimodal in t; search its logarithm to stay in range.
    auto f = [&](double t) { return -r * r / (16.0 * t) + std::pow(lip, 4) * t / 4.0; };
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = t_lo, b = t_hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol * (std::abs(a) + std::abs(b))) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

MomentBounds moment_bounds(int k, double t, double u0_val, double a_const) {
    require(k >= 2, "moment_bounds: k must be at least 2");
    require(t >= 0.0 && u0_val > 0.0, "moment_bounds: need t >= 0 and u0_val > 0");
    require(a_const > 2.0, "moment_bounds: A must exceed 2");
    const double kk = static_cast<double>(k);
    const double k3 = kk * kk * kk;
    const double lu = kk * std::log(u0_val);
    const double la = kk * std::log(a_const);
    MomentBounds m;
    m.lower = guarded_exp(-la + lu + k3 * t / a_const, "moment_bounds");
    m.upper = guarded_exp(la + lu + a_const * k3 * t, "moment_bounds");
    return m;
}

double chebyshev_tail_bound(double epsilon, double t, double u0_val, double a_const) {
    require(t > 0.0 && u0_val > 0.0, "chebyshev_tail_bound: need t > 0 and u0_val > 0");
    require(a_const > 2.0, "chebyshev_tail_bound: A must exceed 2");
    if (!(epsilon > 2.0 * a_const * u0_val)) {
        throw DomainError("chebyshev_tail_bound: need epsilon > 2 A u0_val");
    }
    const double lg = std::log(epsilon / (2.0 * a_const * u0_val));
    return std::exp(-2.0 / (3.0 * std::sqrt(3.0 * a_const * t)) * std::pow(lg, 1.5));
}

double pam_second_moment(double lam, double t) {
    require(lam > 0.0 && t >= 0.0, "pam_second_moment: need lam > 0 and t >= 0");
    const double l2 = lam * lam;
    return 2.0 * guarded_exp(l2 * l2 * t / 4.0, "pam_second_moment") * normal_cdf(l2 * std::sqrt(t / 2.0));
}

ExponentEnvelope tail_exponent_envelope(double lambda_idx, double t, double k_const, double l_const) {
    require(lambda_idx >= 0.0 && t > 0.0, "tail_exponent_envelope: need lambda >= 0 and t > 0");
    require(k_const > 0.0 && k_const <= l_const, "tail_exponent_envelope: need 0 < K <= L");
    const double s = std::pow(lambda_idx, 1.5) / std::sqrt(t);
    return {-l_const * s, -k_const * s};
}

double derived_l_const(double a_const) {
    require(a_const > 2.0, "derived_l_const: A must exceed 2");
    return 8.0 * std::pow(a_const, 2.5) + std::sqrt(a_const);
}

}  // namespace she
