#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace pellip {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using RMat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr double default_rtol = 1e-9;

/// Real 2d x 2d form [[Re A, -Im A], [Im A, Re A]].
inline RMat real_form(const CMat& A) {
    const Eigen::Index d = A.rows();
    if (A.cols() != d) throw std::invalid_argument("real_form: matrix not square");
    RMat M(2 * d, 2 * d);
    M.topLeftCorner(d, d) = A.real();
    M.topRightCorner(d, d) = -A.imag();
    M.bottomLeftCorner(d, d) = A.imag();
    M.bottomRightCorner(d, d) = A.real();
    return M;
}

/// V(xi) = (Re xi, Im xi).
inline RVec identify(const CVec& xi) {
    const Eigen::Index k = xi.size();
    RVec x(2 * k);
    x.head(k) = xi.real();
    x.tail(k) = xi.imag();
    return x;
}

inline CVec unidentify(const RVec& x) {
    if (x.size() % 2 != 0) throw std::invalid_argument("unidentify: odd length");
    const Eigen::Index k = x.size() / 2;
    CVec xi(k);
    for (Eigen::Index i = 0; i < k; ++i) xi(i) = cplx(x(i), x(k + i));
    return xi;
}

/// W_{k,d}: applies identify to each of the k blocks of length d.
inline RVec identify_blocks(const CVec& Xi, Eigen::Index k) {
    if (k <= 0 || Xi.size() % k != 0) throw std::invalid_argument("identify_blocks: bad block count");
    const Eigen::Index d = Xi.size() / k;
    RVec w(2 * Xi.size());
    for (Eigen::Index j = 0; j < k; ++j) w.segment(2 * d * j, 2 * d) = identify(Xi.segment(d * j, d));
    return w;
}

inline CVec unidentify_blocks(const RVec& w, Eigen::Index k) {
    if (k <= 0 || w.size() % (2 * k) != 0) throw std::invalid_argument("unidentify_blocks: bad block count");
    const Eigen::Index d = w.size() / (2 * k);
    CVec Xi(k * d);
    for (Eigen::Index j = 0; j < k; ++j) Xi.segment(d * j, d) = unidentify(w.segment(2 * d * j, 2 * d));
    return Xi;
}

/// <(D2 (x) I_d) W(Xi), (M(A_1) + ... + M(A_k)) W(Xi)>, with the Kronecker
/// factor applied blockwise. hess is indexed in W_{k,1} coordinates
/// (Re z1, Im z1, Re z2, Im z2, ...).
inline double gen_hessian(const RMat& hess, const std::vector<CMat>& mats, const CVec& Xi) {
    const auto k = static_cast<Eigen::Index>(mats.size());
    if (k == 0 || hess.rows() != 2 * k || hess.cols() != 2 * k)
        throw std::invalid_argument("gen_hessian: hessian size does not match number of matrices");
    if (Xi.size() % k != 0) throw std::invalid_argument("gen_hessian: Xi length not divisible by k");
    const Eigen::Index d = Xi.size() / k;
    std::vector<RVec> w(2 * k), m(2 * k);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (mats[j].rows() != d || mats[j].cols() != d)
            throw std::invalid_argument("gen_hessian: matrix dimension mismatch");
        const CVec X = Xi.segment(d * j, d);
        const CVec AX = mats[j] * X;
        w[2 * j] = X.real();
        w[2 * j + 1] = X.imag();
        m[2 * j] = AX.real();
        m[2 * j + 1] = AX.imag();
    }
    double s = 0.0;
    for (Eigen::Index a = 0; a < 2 * k; ++a)
        for (Eigen::Index b = 0; b < 2 * k; ++b)
            if (hess(a, b) != 0.0) s += hess(a, b) * w[b].dot(m[a]);
    return s;
}

inline bool is_symmetric(const RMat& H, double rtol = 1e-12) {
    const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
    return (H - H.transpose()).cwiseAbs().maxCoeff() <= rtol * scale;
}

/// Largest singular value.
inline double op_norm(const CMat& A) {
    if (A.size() == 0) return 0.0;
    Eigen::JacobiSVD<CMat> svd(A);
    return svd.singularValues()(0);
}

/// min over unit xi of Re<A xi, xi>.
inline double hermitian_floor(const CMat& A) {
    const CMat H = 0.5 * (A + A.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline bool close_rel(double a, double b, double rtol = default_rtol, double atol = 0.0) {
    return std::abs(a - b) <= atol + rtol * std::max(std::abs(a), std::abs(b));
}

}  // namespace pellip
