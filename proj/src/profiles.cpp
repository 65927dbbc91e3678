#include "she/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "she/errors.hpp"

namespace she {

std::string DecayIndex::to_string() const {
    if (infinite) {
        return "inf";
    }
    std::ostringstream os;
    os << value;
    return os.str();
}

double lambda_profile(double lambda, double x) {
    if (!(lambda >= 0.0)) {
        throw DomainError("lambda_profile: lambda must be non-negative");
    }
    const double ax = std::max(std::abs(x), std::numbers::e);
    return std::exp(-lambda * std::cbrt(std::pow(std::log(ax), 2)));
}

InitialProfile InitialProfile::lambda_family(double lambda) {
    if (!(lambda >= 0.0)) {
        throw DomainError("lambda_family: lambda must be non-negative");
    }
    InitialProfile p;
    p.kind_ = Kind::lambda_family;
    p.lambda_ = lambda;
    p.sup_norm_ = std::exp(-lambda);
    return p;
}

InitialProfile InitialProfile::constant(double level) {
    if (!(level > 0.0)) {
        throw DomainError("constant profile: level must be positive");
    }
    InitialProfile p;
    p.kind_ = Kind::constant;
    p.level_ = level;
    p.sup_norm_ = level;
    return p;
}

InitialProfile InitialProfile::bump(double peak, double halfwidth) {
    if (!(peak > 0.0) || !(halfwidth > 0.0)) {
        throw DomainError("bump profile: peak and halfwidth must be positive");
    }
    InitialProfile p;
    p.kind_ = Kind::bump;
    p.peak_ = peak;
    p.halfwidth_ = halfwidth;
    p.sup_norm_ = peak;
    return p;
}

InitialProfile make_bump(double peak, double halfwidth) { return InitialProfile::bump(peak, halfwidth); }

InitialProfile InitialProfile::table(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) {
        throw DomainError("table profile: at least one knot is required");
    }
    for (const auto& [x, v] : knots) {
        if (!std::isfinite(x) || !std::isfinite(v) || x < 0.0) {
            throw DomainError("table profile: knots must be finite with x >= 0");
        }
    }
    std::sort(knots.begin(), knots.end());
    double running = std::max(knots.front().second, 0.0);
    for (auto& kv : knots) {
        running = std::min(running, std::max(kv.second, 0.0));
        kv.second = running;
    }
    InitialProfile p;
    p.kind_ = Kind::table;
    p.sup_norm_ = knots.front().second;
    p.knots_ = std::move(knots);
    return p;
}

InitialProfile InitialProfile::load_table_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DomainError("table profile: cannot open " + path.string());
    }
    std::vector<std::pair<double, double>> knots;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x = 0.0, v = 0.0;
        if (!(ls >> x >> v)) {
            if (lineno == 1) {
                continue;  // header
            }
            throw DomainError("table profile: malformed line " + std::to_string(lineno) + " in " + path.string());
        }
        knots.emplace_back(x, v);
    }
    return table(std::move(knots));
}

double InitialProfile::operator()(double x) const {
    const double ax = std::abs(x);
    switch (kind_) {
        case Kind::lambda_family:
            return lambda_profile(lambda_, x);
        case Kind::constant:
            return level_;
        case Kind::bump:
            return peak_ * std::max(0.0, 1.0 - ax / halfwidth_);
        case Kind::table: {
            if (ax <= knots_.front().first) {
                return knots_.front().second;
            }
            if (ax >= knots_.back().first) {
                return knots_.back().second;
            }
            const auto hi = std::upper_bound(knots_.begin(), knots_.end(), ax,
                                             [](double v, const auto& kv) { return v < kv.first; });
            const auto lo = hi - 1;
            const double w = (ax - lo->first) / (hi->first - lo->first);
            return lo->second + w * (hi->second - lo->second);
        }
    }
    return 0.0;
}

std::optional<DecayIndex> InitialProfile::decay_index() const {
    switch (kind_) {
        case Kind::lambda_family:
            return DecayIndex::finite(lambda_);
        case Kind::constant:
            return DecayIndex::finite(0.0);
        case Kind::bump:
            return DecayIndex::infinity();
        case Kind::table:
            return std::nullopt;
    }
    return std::nullopt;
}

std::string InitialProfile::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::lambda_family:
            os << "lambda(" << lambda_ << ")";
            break;
        case Kind::constant:
            os << "constant(" << level_ << ")";
            break;
        case Kind::bump:
            os << "bump(" << peak_ << "," << halfwidth_ << ")";
            break;
        case Kind::table:
            os << "table(" << knots_.size() << " knots)";
            break;
    }
    return os.str();
}

double estimate_lambda(const std::function<double(double)>& profile, std::span<const double> x_samples) {
    if (x_samples.size() < 2) {
        throw DomainError("estimate_lambda: need at least two samples");
    }
    const double x_min = std::exp(2.0);
    std::vector<double> a, b;
    for (double x : x_samples) {
        if (x < x_min * (1.0 - 1e-12)) {
            throw DomainError("estimate_lambda: samples must be >= e^2");
        }
        const double v = profile(x);
        if (!(v > 0.0)) {
            std::ostringstream os;
            os << "estimate_lambda: profile is " << v << " at x = " << x << ", log undefined";
            throw DomainError(os.str());
        }
        a.push_back(std::cbrt(std::pow(std::log(x), 2)));
        b.push_back(std::abs(std::log(v)));
    }
    const auto n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0, saa = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
    }
    if (!(saa > 0.0)) {
        throw DomainError("estimate_lambda: samples must not all coincide");
    }
    return sab / saa;
}

ProfileAudit audit(const InitialProfile& p, double x_max) {
    ProfileAudit out;
    constexpr int kPoints = 10000;
    double prev = p(0.0);
    bool mono_reported = false, sym_reported = false, bound_reported = false;
    for (int i = 0; i <= kPoints; ++i) {
        const double x = x_max * static_cast<double>(i) / kPoints;
        const double v = p(x);
        if (!sym_reported && std::abs(v - p(-x)) > 1e-12) {
            out.violations.push_back("symmetry: u0(x) != u0(-x) at x = " + std::to_string(x));
            sym_reported = true;
        }
        if (!mono_reported && v > prev) {
            out.violations.push_back("monotonicity: u0 increases at x = " + std::to_string(x));
            mono_reported = true;
        }
        if (!bound_reported && (v < 0.0 || v > p.sup_norm())) {
            out.violations.push_back("bounds: 0 <= u0 <= sup_norm fails at x = " + std::to_string(x));
            bound_reported = true;
        }
        prev = v;
    }
    return out;
}

InitialData splice(const InitialData& inside, const InitialData& outside, double centre, double r) {
    auto in = inside.fn;
    auto out = outside.fn;
    std::ostringstream label;
    label << inside.label << " on [" << centre - r << "," << centre + r << "], " << outside.label << " elsewhere";
    return InitialData(
        [in, out, centre, r](double x) { return std::abs(x - centre) <= r ? in(x) : out(x); },
        std::max(inside.sup_norm, outside.sup_norm), label.str());
}

}  // namespace she
