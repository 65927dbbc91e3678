#pragma once

// Gaussian heat-kernel machinery on the real line.
//
// p_t(x) = exp(-x^2 / (2t)) / sqrt(2 pi t) is the transition density of the
// generator (1/2) d^2/dx^2. Everything here is a pure function of its inputs.

#include <functional>

namespace she {

using RealFn = std::function<double(double)>;
/// f(t, x) for t > 0.
using SpaceTimeFn = std::function<double(double, double)>;

struct QuadratureSpec {
    double spatial_step = 1e-2;
    double spatial_halfwidth = 12.0;
    int time_substeps = 20;     ///< Gauss-Legendre nodes per time panel (>= 8).
    bool tail_handling = true;  ///< Analytic Gaussian mass beyond the truncation.

    /// Throws DomainError on non-positive sizes or fewer than 8 time substeps.
    void validate() const;
};

struct QuadratureResult {
    double value = 0.0;
    /// Set when the truncation or the step is too coarse for the kernel width.
    bool domain_warning = false;
};

double heat_kernel(double t, double x);

/// Standard normal CDF. Absolute error below 1e-15 over the whole line.
double normal_cdf(double x);
/// 1 - normal_cdf(x), evaluated without cancellation for large x.
double normal_ccdf(double x);
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

/// K^(alpha)_t(x) = (alpha^2/2) p_{t/2}(x) [1/sqrt(pi t) + alpha^2 e^{alpha^4 t/4} Phi(alpha^2 sqrt(t/2))].
///
/// Throws OverflowError when alpha^4 t / 4 leaves the double exponent range.
double kernel_K(double alpha, double t, double x);

/// Integral of kernel_K over the line, in closed form.
double kernel_K_mass(double alpha, double t);

/// p_t(x)^2 = p_{t/2}(x) / (2 sqrt(pi t)).
double heat_kernel_squared(double t, double x);

/// (p_t * f)(x) by trapezoidal quadrature on [x - H, x + H].
QuadratureResult semigroup_apply(const RealFn& f, double t, double x, const QuadratureSpec& q);

/// Mass of p_t outside [-a, a], i.e. 2 (1 - Phi(a / sqrt t)).
double gaussian_tail_mass(double a, double t);

/// (f (.) g)_t(x) = int_0^t ds int dy f_{t-s}(x - y) g_s(y).
///
/// Time is integrated on a mesh graded geometrically toward both endpoints;
/// the two end panels use s = a + h tau^2 so 1/sqrt singularities become
/// smooth. Space uses Gauss-Legendre panels refined around y = 0 and y = x,
/// the centres of heat-type kernels at the two time arguments.
/// Throws DomainError naming (s, y) when an integrand sample is not finite.
double space_time_convolve(const SpaceTimeFn& f, const SpaceTimeFn& g, double t, double x,
                           const QuadratureSpec& q);

}  // namespace she
