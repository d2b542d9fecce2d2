// Test-side oracles, independent of the library implementations they check.
#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include <Eigen/Dense>

namespace testsupport {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Student-t two-sided p-value by adaptive Simpson quadrature of the density.
// Deliberately a different route than the library's continued-fraction
// incomplete beta.

inline double t_pdf(double x, double nu) {
    const double ln_c = std::lgamma((nu + 1.0) / 2.0) - std::lgamma(nu / 2.0) -
                        0.5 * std::log(nu * kPi);
    return std::exp(ln_c - (nu + 1.0) / 2.0 * std::log1p(x * x / nu));
}

inline double simpson(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson(double a, double b, double fa, double fm, double fb, double whole,
                               double tol, double nu, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = t_pdf(lm, nu);
    const double frm = t_pdf(rm, nu);
    const double left = simpson(a, m, fa, flm, fm);
    const double right = simpson(m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(a, m, fa, flm, fm, left, tol / 2.0, nu, depth - 1) +
           adaptive_simpson(m, b, fm, frm, fb, right, tol / 2.0, nu, depth - 1);
}

inline double t_two_sided_p_quadrature(double t, double nu) {
    const double x = std::abs(t);
    if (x == 0.0) return 1.0;
    // integral of the pdf over [0, x]; two-sided p = 1 - 2 * integral
    const double fa = t_pdf(0.0, nu);
    const double fb = t_pdf(x, nu);
    const double fm = t_pdf(0.5 * x, nu);
    const double whole = simpson(0.0, x, fa, fm, fb);
    const double integral = adaptive_simpson(0.0, x, fa, fm, fb, whole, 1e-14, nu, 48);
    double p = 1.0 - 2.0 * integral;
    if (p < 0.0) p = 0.0;
    if (p > 1.0) p = 1.0;
    return p;
}

// Pearson correlation straight from the textbook formula.
inline double pearson_reference(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    const double dn = static_cast<double>(n);
    return (dn * sxy - sx * sy) /
           std::sqrt((dn * sxx - sx * sx) * (dn * syy - sy * sy));
}

// ---------------------------------------------------------------------------
// Pairwise (tree) summation for the energy oracle.

inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 4) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double energy_pairwise(const std::vector<double>& p, const std::vector<double>& d) {
    std::vector<double> terms(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) terms[i] = p[i] * d[i];
    return terms.empty() ? 0.0 : pairwise_sum(terms, 0, terms.size());
}

// ---------------------------------------------------------------------------
// Exhaustive active-set NNLS: try every support, solve unconstrained LS on it,
// keep the feasible minimum.

struct BruteNnls {
    Eigen::VectorXd weights;
    double objective = 0.0;  // ||Aw - b||
};

inline BruteNnls brute_force_nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const int p = static_cast<int>(A.cols());
    BruteNnls best;
    best.weights = Eigen::VectorXd::Zero(p);
    best.objective = b.norm();
    for (std::uint32_t mask = 1; mask < (1u << p); ++mask) {
        std::vector<int> support;
        for (int j = 0; j < p; ++j) {
            if (mask & (1u << j)) support.push_back(j);
        }
        Eigen::MatrixXd As(A.rows(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t i = 0; i < support.size(); ++i) {
            As.col(static_cast<Eigen::Index>(i)) = A.col(support[i]);
        }
        const Eigen::VectorXd ws = As.colPivHouseholderQr().solve(b);
        bool feasible = true;
        for (Eigen::Index i = 0; i < ws.size(); ++i) {
            if (ws[i] < 0.0) {
                feasible = false;
                break;
            }
        }
        if (!feasible) continue;
        Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
        for (std::size_t i = 0; i < support.size(); ++i) {
            w[support[i]] = ws[static_cast<Eigen::Index>(i)];
        }
        const double obj = (A * w - b).norm();
        if (obj < best.objective) {
            best.objective = obj;
            best.weights = w;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Step-by-step greedy selection, re-written independently of the library.

template <typename CanSchedule>
inline std::vector<std::string> greedy_reference(const std::vector<std::string>& ranked,
                                                 CanSchedule can_schedule, std::size_t k) {
    std::vector<std::string> picked;
    for (const std::string& event : ranked) {
        if (picked.size() == k) break;
        std::vector<std::string> trial = picked;
        trial.push_back(event);
        if (can_schedule(trial)) picked = trial;
    }
    return picked;
}

// ---------------------------------------------------------------------------
// Scratch directory, removed on destruction.

class TempDir {
  public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lutpower_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
};

inline bool bits_equal(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace testsupport
