#include "she/sigma.hpp"

#include <cmath>
#include <sstream>

#include "she/errors.hpp"

namespace she {

SigmaFn SigmaFn::linear(double lam) {
    if (!(lam > 0.0)) {
        throw DomainError("sigma: lam must be positive");
    }
    SigmaFn s;
    s.kind_ = Kind::linear;
    s.lam_ = lam;
    s.lip_ = lam;
    s.ell_lower_ = lam;
    return s;
}

SigmaFn SigmaFn::wobble(double lam) {
    if (!(lam > 0.0)) {
        throw DomainError("sigma: lam must be positive");
    }
    SigmaFn s;
    s.kind_ = Kind::wobble;
    s.lam_ = lam;
    s.lip_ = 1.5 * lam;
    s.ell_lower_ = 0.5 * lam;
    return s;
}

SigmaFn SigmaFn::custom(std::function<double(double)> fn, double lip, double ell_lower, std::string name) {
    if (!fn) {
        throw DomainError("sigma: custom function is empty");
    }
    SigmaFn s;
    s.kind_ = Kind::custom;
    s.lam_ = lip;
    s.lip_ = lip;
    s.ell_lower_ = ell_lower;
    s.fn_ = std::move(fn);
    s.name_ = std::move(name);
    return s;
}

SigmaFn SigmaFn::zero() { return custom([](double) { return 0.0; }, 0.0, 0.0, "zero"); }

double SigmaFn::operator()(double u) const {
    switch (kind_) {
        case Kind::linear:
            return lam_ * u;
        case Kind::wobble:
            return lam_ * (u + 0.5 * std::sin(u));
        case Kind::custom:
            break;
    }
    return fn_(u);
}

double SigmaFn::increment(double u, double d) const {
    switch (kind_) {
        case Kind::linear:
            return lam_ * d;
        case Kind::wobble:
            // sin(u + d) - sin(u) = 2 cos(u + d/2) sin(d/2)
            return lam_ * (d + std::cos(u + 0.5 * d) * std::sin(0.5 * d));
        case Kind::custom:
            break;
    }
    return fn_(u + d) - fn_(u);
}

std::string SigmaFn::describe() const {
    std::ostringstream os;
    switch (kind_) {
        case Kind::linear:
            os << "linear(" << lam_ << ")";
            break;
        case Kind::wobble:
            os << "wobble(" << lam_ << ")";
            break;
        case Kind::custom:
            os << name_;
            break;
    }
    return os.str();
}

SigmaAudit audit(const SigmaFn& s, double w_max, int points) {
    SigmaAudit a;
    if (s(0.0) != 0.0) {
        a.violations.push_back("sigma(0) != 0");
    }
    std::vector<double> w(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i) {
        w[static_cast<std::size_t>(i)] = -w_max + 2.0 * w_max * i / (points - 1);
    }
    const double tol = 1e-12;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] != 0.0 && std::abs(s(w[i]) / w[i]) < s.ell_lower() * (1.0 - tol)) {
            std::ostringstream os;
            os << "|sigma(w)/w| < " << s.ell_lower() << " at w = " << w[i];
            a.violations.push_back(os.str());
            break;
        }
    }
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        for (std::size_t j : {i + 1, w.size() - 1 - i / 2}) {
            if (j <= i || j >= w.size()) {
                continue;
            }
            const double lhs = std::abs(s(w[i]) - s(w[j]));
            if (lhs > s.lip() * std::abs(w[i] - w[j]) * (1.0 + tol) + tol) {
                std::ostringstream os;
                os << "Lipschitz bound " << s.lip() << " exceeded between " << w[i] << " and " << w[j];
                a.violations.push_back(os.str());
                return a;
            }
        }
    }
    return a;
}

}  // namespace she
