#pragma once

#include <Eigen/Dense>

namespace lutpower {

struct NnlsSolution {
    Eigen::VectorXd weights;      // all >= 0
    double residual_norm = 0.0;   // ||A w - b||_2
    int iterations = 0;           // least-squares subproblem solves
    bool converged = true;        // false when the iteration cap was hit
};

// min ||A w - b||_2 s.t. w >= 0, Lawson-Hanson active-set method.
// Dual feasibility tolerance 1e-10 * ||A^T A||_inf, iteration cap 10 * p
// (best-so-far returned with converged = false beyond it).
NnlsSolution nnls(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

// max KKT violation of w for min ||Aw-b|| s.t. w >= 0: |gradient| on free
// weights, negative-part of the dual on active ones.
double nnls_kkt_residual(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& w);

}  // namespace lutpower
