#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "core_linalg.hpp"

namespace pellip {

using SpC = Eigen::SparseMatrix<cplx>;

struct PencilResult {
    double value = 0;
    CVec vector;
    double residual = 0;
    int iterations = 0;
    bool converged = false;
};

struct PencilOptions {
    double tol = 1e-10;
    int krylov = 120;
    int max_restarts = 60;
    Eigen::Index dense_limit = 600;
};

/// Largest eigenvalue of the Hermitian pencil B x = theta A x, A positive definite.
inline PencilResult pencil_top_dense(const CMat& B, const CMat& A) {
    Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(B, A);
    if (es.info() != Eigen::Success) throw std::runtime_error("pencil: dense solver failed (A not positive definite?)");
    PencilResult r;
    const Eigen::Index n = B.rows();
    r.value = es.eigenvalues()(n - 1);
    r.vector = es.eigenvectors().col(n - 1);
    const CVec res = B * r.vector - r.value * (A * r.vector);
    r.residual = res.norm() / std::max(1e-300, (B * r.vector).norm() + std::abs(r.value) * (A * r.vector).norm());
    r.converged = true;
    return r;
}

/// Lanczos on A^{-1}B in the A inner product with full reorthogonalization,
/// restarted from the current top Ritz vector.
inline PencilResult pencil_top(const SpC& B, const SpC& A, const PencilOptions& opt = {}) {
    const Eigen::Index n = A.rows();
    if (B.rows() != n || A.cols() != n || B.cols() != n) throw std::invalid_argument("pencil: size mismatch");
    if (n == 0) throw std::invalid_argument("pencil: empty problem");
    if (n <= opt.dense_limit) return pencil_top_dense(CMat(B), CMat(A));
    Eigen::SimplicialLLT<SpC> llt(A);
    if (llt.info() != Eigen::Success) throw std::runtime_error("pencil: A is not positive definite");
    PencilResult r;
    CVec start = CVec::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) start(i) += cplx(0.37 * std::sin(1.7 * i), 0.11 * std::cos(0.9 * i));
    const int m = static_cast<int>(std::min<Eigen::Index>(opt.krylov, n));
    for (int restart = 0; restart < opt.max_restarts; ++restart) {
        std::vector<CVec> Q;
        std::vector<CVec> AQ;
        RVec alpha(m), beta(m);
        CVec q = start / std::sqrt(std::max(1e-300, (start.dot(A * start)).real()));
        int k = 0;
        for (; k < m; ++k) {
            Q.push_back(q);
            AQ.push_back(A * q);
            CVec w = llt.solve(B * q);
            alpha(k) = AQ[k].dot(w).real();
            for (int j = 0; j <= k; ++j) w -= AQ[j].dot(w) * Q[j];
            for (int j = 0; j <= k; ++j) w -= AQ[j].dot(w) * Q[j];
            const double b = std::sqrt(std::max(0.0, w.dot(A * w).real()));
            beta(k) = b;
            ++r.iterations;
            if (b < 1e-14 * (std::abs(alpha(k)) + 1e-300)) {
                ++k;
                break;
            }
            q = w / b;
        }
        RMat T = RMat::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            T(i, i) = alpha(i);
            if (i + 1 < k) T(i, i + 1) = T(i + 1, i) = beta(i);
        }
        Eigen::SelfAdjointEigenSolver<RMat> es(T);
        const RVec y = es.eigenvectors().col(k - 1);
        CVec x = CVec::Zero(n);
        for (int i = 0; i < k; ++i) x += y(i) * Q[i];
        r.value = es.eigenvalues()(k - 1);
        r.vector = x;
        const CVec Bx = B * x, Ax = A * x;
        r.residual = (Bx - r.value * Ax).norm() / std::max(1e-300, Bx.norm() + std::abs(r.value) * Ax.norm());
        if (r.residual <= opt.tol) {
            r.converged = true;
            return r;
        }
        start = x;
    }
    return r;
}

}  // namespace pellip
