#pragma once

// Invariant checks of the kernel machinery, shared by the CLI and the tests.

#include <cstdint>
#include <string>
#include <vector>

#include "she/kernel.hpp"

namespace she {

struct AuditCheck {
    std::string name;
    bool pass = false;
    double value = 0.0;  ///< Measured quantity (error, worst ratio, ...).
    double limit = 0.0;
    std::string detail;
};

/// |int p_t - 1| by quadrature on [-6 sqrt(10), 6 sqrt(10)] with the tail correction.
double normalization_error(double t);

/// sup over x in [-3, 3] of |p_s * (p_t * f) - p_{s+t} * f|, for sup|f| <= 1.
double semigroup_error(const RealFn& f, double s, double t);

struct LocalisationAudit {
    int functions = 0;
    std::int64_t evaluations = 0;
    double worst_ratio = 0.0;  ///< max |p_t * h|(x) / (2 |h|_inf e^{-r^2/(8t)}).
};

/// Random bounded h vanishing on [a - r, a + r], evaluated at |x - a| <= r/2.
LocalisationAudit localisation_audit(int n_functions, const std::vector<double>& r_list,
                                     const std::vector<double>& t_list, std::uint64_t seed);

/// 2 e^{alpha^4 t/4} Phi(alpha^2 sqrt(t/2)) - 1, the integral of K^(alpha) over [0, t] x R.
double k_integral_closed_form(double alpha, double t);

/// |d/dt [2 e^{alpha^4 t/4} Phi(alpha^2 sqrt(t/2))] - int K_t^(alpha)(y) dy|, the derivative by
/// Richardson-extrapolated central differences and the integral by quadrature.
double k_mass_identity_error(double alpha, double t);

/// The full suite run by the kernel-audit experiment.
std::vector<AuditCheck> kernel_audit(std::uint64_t seed = 1);

}  // namespace she
