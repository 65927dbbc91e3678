#pragma once

// Noise coefficients sigma with sigma(0) = 0, Lipschitz, and |sigma(w) / w| >= L > 0.

#include <functional>
#include <string>
#include <vector>

namespace she {

class SigmaFn {
public:
    enum class Kind { linear, wobble, custom };

    /// sigma(u) = lam u.
    static SigmaFn linear(double lam);
    /// sigma(u) = lam (u + sin(u) / 2); derivative in [lam / 2, 3 lam / 2].
    static SigmaFn wobble(double lam);
    /// User function with declared constants; audit() checks them on samples.
    static SigmaFn custom(std::function<double(double)> fn, double lip, double ell_lower, std::string name);
    /// sigma == 0. Degenerate (L_sigma = 0): only for deterministic audits.
    static SigmaFn zero();

    double operator()(double u) const;
    /// sigma(u + d) - sigma(u), computed without cancellation for the built-in kinds.
    double increment(double u, double d) const;

    Kind kind() const noexcept { return kind_; }
    double lam() const noexcept { return lam_; }
    double lip() const noexcept { return lip_; }
    double ell_lower() const noexcept { return ell_lower_; }
    bool is_zero() const noexcept { return kind_ == Kind::custom && name_ == "zero"; }
    std::string describe() const;

private:
    SigmaFn() = default;

    Kind kind_ = Kind::linear;
    double lam_ = 1.0;
    double lip_ = 1.0;
    double ell_lower_ = 1.0;
    std::function<double(double)> fn_;
    std::string name_;
};

struct SigmaAudit {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// sigma(0) = 0, Lipschitz bound on pairs and |sigma(w)/w| >= ell_lower on a grid of [-w_max, w_max].
SigmaAudit audit(const SigmaFn& s, double w_max = 50.0, int points = 2001);

}  // namespace she
