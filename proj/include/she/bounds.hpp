#pragma once

// Closed-form bounds: insensitivity to far-away initial data, moment and tail
// bounds with a user-supplied stand-in A for the universal constant, and the
// flat-data second moment of the linear equation.

namespace she {

/// Stand-in for the universal constant A > 2 of the moment bounds.
inline constexpr double kDefaultA = 2.001;

struct BoundInputs {
    double lip = 1.0;
    double r = 1.0;
    double t = 1.0;
    double b_norm = 1.0;
    double a_const = kDefaultA;
    double u0_val = 1.0;
    double epsilon = 1.0;
    int k = 2;
    double lambda_idx = 1.0;
    double k_const = 1.0;  ///< Overlay stand-in for K.
    double l_const = 1.0;  ///< Overlay stand-in for L.
};

/// 96 max(1, lip^-4) (1 + lip^4) b^2 exp(-r^2 / (16 t) + lip^4 t / 4).
double suscept_bound(double lip, double r, double t, double b_norm);

/// Minimiser in t of suscept_bound on [t_lo, t_hi] by golden-section search. Both exponent
/// terms grow with t, so this is t_lo up to the tolerance; kept as an audit of that fact.
double suscept_bound_argmin(double lip, double r, double t_lo, double t_hi, double tol = 1e-12);

struct MomentBounds {
    double lower = 0.0;  ///< A^-k u0^k e^{k^3 t / A}
    double upper = 0.0;  ///< A^k u0^k e^{A k^3 t}
};

/// k >= 2, t >= 0, u0_val > 0, a_const > 2.
MomentBounds moment_bounds(int k, double t, double u0_val, double a_const = kDefaultA);

/// exp(-2 / (3 sqrt(3 A t)) [log(eps / (2 A u0))]^{3/2}); requires eps > 2 A u0.
double chebyshev_tail_bound(double epsilon, double t, double u0_val, double a_const = kDefaultA);

/// 2 e^{lam^4 t / 4} Phi(lam^2 sqrt(t / 2)): E u_t(x)^2 for sigma(u) = lam u and u0 == 1.
double pam_second_moment(double lam, double t);

struct ExponentEnvelope {
    double lower = 0.0;  ///< -L Lambda^{3/2} / sqrt t
    double upper = 0.0;  ///< -K Lambda^{3/2} / sqrt t
};

/// Requires lambda_idx >= 0, t > 0 and 0 < k_const <= l_const.
ExponentEnvelope tail_exponent_envelope(double lambda_idx, double t, double k_const = 1.0, double l_const = 1.0);

/// 8 A^{5/2} + A^{1/2}, the composite constant L expressed through A.
double derived_l_const(double a_const);

}  // namespace she
