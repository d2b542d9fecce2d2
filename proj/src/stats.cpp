#include "lutpower/stats.hpp"

#include <cmath>
#include <limits>

#include "lutpower/errors.hpp"

namespace lutpower {

namespace {

// Continued fraction for the regularized incomplete beta, modified Lentz
// method (valid for x < (a+1)/(a+b+2); the symmetry relation covers the rest).
double beta_cf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = std::numeric_limits<double>::epsilon();
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cf(a, b, x) / a;
    }
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double dof) {
    if (dof <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "degrees of freedom must be positive");
    }
    if (std::isinf(t)) return 0.0;
    const double x = dof / (dof + t * t);
    double p = regularized_incomplete_beta(0.5 * dof, 0.5, x);
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

FitStats lls_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw Error(ErrorKind::LengthMismatch, "lls_fit: series lengths differ");
    }
    const std::size_t n = x.size();
    if (n < 3) {
        throw Error(ErrorKind::Validation, "lls_fit: need at least 3 samples");
    }

    const double dn = static_cast<double>(n);
    double mean_x = 0.0, mean_y = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= dn;
    mean_y /= dn;

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        throw Error(ErrorKind::ZeroVariance, "lls_fit: zero sample variance");
    }

    FitStats stats;
    stats.n = n;
    stats.slope = sxy / sxx;
    stats.intercept = mean_y - stats.slope * mean_x;
    double r = sxy / std::sqrt(sxx * syy);
    if (r > 1.0) r = 1.0;
    if (r < -1.0) r = -1.0;
    stats.pcc = r;

    const double dof = dn - 2.0;
    if (std::abs(r) >= 1.0) {
        stats.p_value = 0.0;
    } else {
        const double t = r * std::sqrt(dof / (1.0 - r * r));
        stats.p_value = student_t_two_sided_p(t, dof);
    }
    return stats;
}

namespace {

// Shape errors are raised up front so the worker can only hit the
// zero-variance path, which it handles locally (no exception may cross an
// OpenMP region).
void check_shapes(std::span<const SeriesRef> series) {
    for (const SeriesRef& s : series) {
        if (s.x.size() != s.y.size()) {
            throw Error(ErrorKind::LengthMismatch,
                        "fit_series: lengths differ for event '" + s.event + "'");
        }
        if (s.x.size() < 3) {
            throw Error(ErrorKind::Validation,
                        "fit_series: fewer than 3 samples for event '" + s.event + "'");
        }
    }
}

void fit_one(const SeriesRef& s, FitStats& out, char& zero_var) {
    try {
        out = lls_fit(s.x, s.y);
        out.event = s.event;
        zero_var = 0;
    } catch (const Error&) {
        out = FitStats{};
        out.event = s.event;
        zero_var = 1;
    }
}

}  // namespace

BatchFitResult fit_series_serial(std::span<const SeriesRef> series) {
    check_shapes(series);
    BatchFitResult result;
    result.fits.resize(series.size());
    result.zero_variance.assign(series.size(), 0);
    for (std::size_t i = 0; i < series.size(); ++i) {
        fit_one(series[i], result.fits[i], result.zero_variance[i]);
    }
    return result;
}

BatchFitResult fit_series_parallel(std::span<const SeriesRef> series) {
    check_shapes(series);
    BatchFitResult result;
    result.fits.resize(series.size());
    result.zero_variance.assign(series.size(), 0);
    // Fits are independent and each writes only its own slot, so the result
    // is identical to the serial backend for any thread count.
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(series.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        fit_one(series[i], result.fits[i], result.zero_variance[i]);
    }
    return result;
}

}  // namespace lutpower
