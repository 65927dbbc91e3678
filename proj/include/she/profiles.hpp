#pragma once

// Admissible initial data: bounded, non-negative, even, non-increasing in |x|.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace she {

/// Decay index Lambda = lim |log u0(x)| / (log |x|)^{2/3}. Infinity is a tag, never a float.
struct DecayIndex {
    bool infinite = false;
    double value = 0.0;  ///< Meaningful only when !infinite.

    static DecayIndex finite(double v) { return {false, v}; }
    static DecayIndex infinity() { return {true, 0.0}; }

    std::string to_string() const;
};

/// exp(-lambda (log max(|x|, e))^{2/3}).
double lambda_profile(double lambda, double x);

class InitialProfile {
public:
    enum class Kind { lambda_family, constant, bump, table };

    static InitialProfile lambda_family(double lambda);
    static InitialProfile constant(double level);
    static InitialProfile bump(double peak, double halfwidth);
    /// Knots (x >= 0, value) for the right half; mirrored to x < 0. Values are
    /// clamped to be non-negative and made non-increasing by a running minimum.
    static InitialProfile table(std::vector<std::pair<double, double>> knots);
    /// Two-column CSV "x,value"; an optional non-numeric header row is skipped.
    static InitialProfile load_table_csv(const std::filesystem::path& path);

    double operator()(double x) const;
    double value(double x) const { return (*this)(x); }

    Kind kind() const noexcept { return kind_; }
    double sup_norm() const noexcept { return sup_norm_; }
    double lambda() const noexcept { return lambda_; }
    double level() const noexcept { return level_; }
    double peak() const noexcept { return peak_; }
    double support_halfwidth() const noexcept { return halfwidth_; }
    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }

    /// Exact index for the parametric kinds; nullopt for tables.
    std::optional<DecayIndex> decay_index() const;

    /// Short human-readable descriptor, e.g. "lambda(1)".
    std::string describe() const;

private:
    InitialProfile() = default;

    Kind kind_ = Kind::constant;
    double lambda_ = 0.0;
    double level_ = 1.0;
    double peak_ = 0.0;
    double halfwidth_ = 0.0;
    std::vector<std::pair<double, double>> knots_;
    double sup_norm_ = 0.0;
};

/// Least-squares slope of |log u0(x)| against (log x)^{2/3}.
/// Requires every sample >= e^2 and a positive profile value there.
double estimate_lambda(const std::function<double(double)>& profile, std::span<const double> x_samples);

InitialProfile make_bump(double peak, double halfwidth);

struct ProfileAudit {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Symmetry at 1e-12, monotonicity on a 10^4-point grid of [0, x_max], and 0 <= u0 <= sup_norm.
ProfileAudit audit(const InitialProfile& p, double x_max);

/// Arbitrary bounded initial data, for runs whose data need not be admissible
/// (e.g. a profile spliced with another outside an interval).
struct InitialData {
    std::function<double(double)> fn;
    double sup_norm = 0.0;
    std::string label;

    InitialData() = default;
    InitialData(std::function<double(double)> f, double sup, std::string name)
        : fn(std::move(f)), sup_norm(sup), label(std::move(name)) {}
    // NOLINTNEXTLINE(google-explicit-constructor)
    InitialData(const InitialProfile& p) : fn(p), sup_norm(p.sup_norm()), label(p.describe()) {}

    double operator()(double x) const { return fn(x); }
};

/// inside on [centre - r, centre + r], outside elsewhere.
InitialData splice(const InitialData& inside, const InitialData& outside, double centre, double r);

}  // namespace she
