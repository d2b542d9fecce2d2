#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lutpower {

// Per-event ordinary least-squares fit against power, with the Pearson
// correlation and the two-sided significance of "pcc = 0".
struct FitStats {
    std::string event;
    double slope = 0.0;      // watts per (event/s)
    double intercept = 0.0;  // watts
    double pcc = 0.0;
    double p_value = 1.0;
    std::size_t n = 0;
};

// Throws Error{ZeroVariance} when either series is constant,
// Error{LengthMismatch}/Error{Validation} on bad shapes (n >= 3 required).
FitStats lls_fit(std::span<const double> x, std::span<const double> y);

// Two-sided p-value of a Student-t statistic with `dof` degrees of freedom,
// via the regularized incomplete beta function (Lentz continued fraction).
double student_t_two_sided_p(double t, double dof);

double regularized_incomplete_beta(double a, double b, double x);

struct SeriesRef {
    std::string event;
    std::span<const double> x;
    std::span<const double> y;
};

// Outcome per input series: either stats or a zero-variance flag. Both
// backends produce bit-identical results; the parallel one farms independent
// fits out to OpenMP threads.
struct BatchFitResult {
    std::vector<FitStats> fits;             // aligned with input order
    std::vector<char> zero_variance;        // aligned flags
};

BatchFitResult fit_series_serial(std::span<const SeriesRef> series);
BatchFitResult fit_series_parallel(std::span<const SeriesRef> series);

}  // namespace lutpower
