#include "she/stats.hpp"

#include <cmath>
#include <vector>

#include "she/errors.hpp"

namespace she {

namespace {

double pairwise(const double* p, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += p[i];
        }
        return s;
    }
    const std::size_t h = n / 2;
    return pairwise(p, h) + pairwise(p + h, n - h);
}

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw PreconditionError(std::string(what) + ": input sizes differ");
    }
}

}  // namespace

double pairwise_sum(std::span<const double> xs) { return pairwise(xs.data(), xs.size()); }

double EnsembleStat::standard_error() const { return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0; }

EnsembleStat summarize(std::span<const double> xs) {
    EnsembleStat s;
    s.n = static_cast<std::int64_t>(xs.size());
    if (s.n == 0) {
        return s;
    }
    s.mean = pairwise_sum(xs) / static_cast<double>(s.n);
    if (s.n > 1) {
        std::vector<double> dev(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) {
            dev[i] = (xs[i] - s.mean) * (xs[i] - s.mean);
        }
        s.variance = pairwise_sum(dev) / static_cast<double>(s.n - 1);
    }
    s.ci_halfwidth = 1.96 * s.standard_error();
    return s;
}

Interval wilson_interval(std::int64_t k, std::int64_t n, double z) {
    if (n <= 0 || k < 0 || k > n) {
        throw PreconditionError("wilson_interval: need 0 <= k <= n and n > 0");
    }
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval out{std::max(0.0, centre - half), std::min(1.0, centre + half)};
    // Guard rounding so the interval always contains p.
    out.low = std::min(out.low, p);
    out.high = std::max(out.high, p);
    return out;
}

LinearFit ols_fit(std::span<const double> x, std::span<const double> y) {
    require_same_size(x, y, "ols_fit");
    const std::size_t n = x.size();
    if (n < 2) {
        throw PreconditionError("ols_fit: need at least two points");
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw PreconditionError("ols_fit: abscissae must not all coincide");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = y[i] - f.intercept - f.slope * x[i];
            rss += r * r;
        }
        f.slope_stderr = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
    return f;
}

LinearFit wls_fit(std::span<const double> x, std::span<const double> y, std::span<const double> variances) {
    require_same_size(x, y, "wls_fit");
    require_same_size(x, variances, "wls_fit");
    const std::size_t n = x.size();
    if (n < 2) {
        throw PreconditionError("wls_fit: need at least two points");
    }
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(variances[i] > 0.0)) {
            throw PreconditionError("wls_fit: variances must be positive");
        }
        const double w = 1.0 / variances[i];
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
    }
    const double mx = swx / sw;
    const double my = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = 1.0 / variances[i];
        sxx += w * (x[i] - mx) * (x[i] - mx);
        sxy += w * (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw PreconditionError("wls_fit: abscissae must not all coincide");
    }
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.slope_stderr = std::sqrt(1.0 / sxx);
    return f;
}

double correlation(std::span<const double> a, std::span<const double> b) {
    require_same_size(a, b, "correlation");
    const auto sa = summarize(a);
    const auto sb = summarize(b);
    std::vector<double> prod(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        prod[i] = (a[i] - sa.mean) * (b[i] - sb.mean);
    }
    const double cov = pairwise_sum(prod) / static_cast<double>(a.size() - 1);
    const double denom = std::sqrt(sa.variance * sb.variance);
    if (!(denom > 0.0)) {
        throw ReliabilityError("correlation: a sample has zero variance");
    }
    return cov / denom;
}

}  // namespace she
