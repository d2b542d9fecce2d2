#include "lutpower/nnls.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "lutpower/errors.hpp"

namespace lutpower {

namespace {

// Least-squares solve restricted to the passive columns.
Eigen::VectorXd solve_passive(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                              const std::vector<int>& passive) {
    Eigen::MatrixXd Ap(A.rows(), static_cast<Eigen::Index>(passive.size()));
    for (std::size_t i = 0; i < passive.size(); ++i) {
        Ap.col(static_cast<Eigen::Index>(i)) = A.col(passive[i]);
    }
    return Ap.colPivHouseholderQr().solve(b);
}

}  // namespace

NnlsSolution nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
    const Eigen::Index n = A.rows();
    const Eigen::Index p = A.cols();
    if (n < 1 || p < 1 || b.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "nnls: bad problem dimensions");
    }
    if (!A.allFinite() || !b.allFinite()) {
        throw Error(ErrorKind::Validation, "nnls: non-finite input");
    }

    const Eigen::MatrixXd gram = A.transpose() * A;
    const double tol = 1e-10 * gram.cwiseAbs().rowwise().sum().maxCoeff();
    const int max_iterations = 10 * static_cast<int>(p);

    NnlsSolution best;
    best.weights = Eigen::VectorXd::Zero(p);
    best.residual_norm = b.norm();

    Eigen::VectorXd x = Eigen::VectorXd::Zero(p);
    std::vector<int> passive;
    std::vector<char> in_passive(static_cast<std::size_t>(p), 0);
    int iterations = 0;

    auto record_best = [&](const Eigen::VectorXd& candidate) {
        const double res = (A * candidate - b).norm();
        if (res < best.residual_norm) {
            best.residual_norm = res;
            best.weights = candidate;
        }
    };

    while (true) {
        const Eigen::VectorXd dual = A.transpose() * (b - A * x);

        // Columns rejected for near-dependence stay masked until the dual is
        // recomputed after the next successful move.
        std::vector<char> masked(static_cast<std::size_t>(p), 0);
        int candidate = -1;
        while (static_cast<Eigen::Index>(passive.size()) < n) {
            double wmax = tol;
            candidate = -1;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (in_passive[static_cast<std::size_t>(j)] || masked[static_cast<std::size_t>(j)]) {
                    continue;
                }
                if (dual[j] > wmax) {
                    wmax = dual[j];
                    candidate = static_cast<int>(j);
                }
            }
            if (candidate < 0) break;

            passive.push_back(candidate);
            Eigen::VectorXd z = solve_passive(A, b, passive);
            ++iterations;
            if (z[static_cast<Eigen::Index>(passive.size()) - 1] > 0.0) {
                break;  // accepted; finish the move in the inner loop below
            }
            // Degenerate candidate (dependent column): back out and retry.
            passive.pop_back();
            masked[static_cast<std::size_t>(candidate)] = 1;
            candidate = -1;
        }
        if (candidate < 0) {
            // Dual feasible (or no admissible column left): done.
            record_best(x);
            NnlsSolution out;
            out.weights = x;
            out.residual_norm = (A * x - b).norm();
            out.iterations = iterations;
            out.converged = true;
            return out;
        }
        in_passive[static_cast<std::size_t>(candidate)] = 1;

        // Inner loop: pull x toward the unconstrained solution on the passive
        // set, dropping variables that hit zero.
        while (true) {
            Eigen::VectorXd z = solve_passive(A, b, passive);

            bool all_positive = true;
            for (std::size_t i = 0; i < passive.size(); ++i) {
                if (z[static_cast<Eigen::Index>(i)] <= 0.0) {
                    all_positive = false;
                    break;
                }
            }
            if (all_positive) {
                x.setZero();
                for (std::size_t i = 0; i < passive.size(); ++i) {
                    x[passive[i]] = z[static_cast<Eigen::Index>(i)];
                }
                break;
            }

            double alpha = std::numeric_limits<double>::infinity();
            std::size_t drop = passive.size();
            for (std::size_t i = 0; i < passive.size(); ++i) {
                const double zi = z[static_cast<Eigen::Index>(i)];
                if (zi <= 0.0) {
                    const double xi = x[passive[i]];
                    const double t = xi / (xi - zi);
                    if (t < alpha) {
                        alpha = t;
                        drop = i;
                    }
                }
            }
            for (std::size_t i = 0; i < passive.size(); ++i) {
                const int j = passive[i];
                x[j] += alpha * (z[static_cast<Eigen::Index>(i)] - x[j]);
            }
            // The blocking variable lands on zero by construction; anything
            // else that rounded through zero goes with it.
            x[passive[drop]] = 0.0;
            std::vector<int> kept;
            for (std::size_t i = 0; i < passive.size(); ++i) {
                const int j = passive[i];
                if (i != drop && x[j] > 0.0) {
                    kept.push_back(j);
                } else {
                    x[j] = 0.0;
                    in_passive[static_cast<std::size_t>(j)] = 0;
                }
            }
            passive = std::move(kept);
            ++iterations;
            if (iterations >= max_iterations) break;
            if (passive.empty()) break;
        }
        record_best(x);

        if (iterations >= max_iterations) {
            NnlsSolution out = best;
            out.iterations = iterations;
            out.converged = false;
            return out;
        }
    }
}

double nnls_kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& w) {
    const Eigen::VectorXd dual = A.transpose() * (b - A * w);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < w.size(); ++j) {
        if (w[j] > 0.0) {
            worst = std::max(worst, std::abs(dual[j]));
        } else {
            worst = std::max(worst, dual[j]);  // positive dual on an active bound
        }
    }
    return worst;
}

}  // namespace lutpower
