#pragma once

#include <boost/math/special_functions/erf.hpp>

#include <functional>
#include <string>

#include "core_linalg.hpp"
#include "grid.hpp"
#include "util.hpp"

namespace pellip {

/// One complex d x d matrix per grid cell, or a single constant matrix.
struct MatrixField {
    std::vector<CMat> values;

    static MatrixField constant(const CMat& A) { return MatrixField{{A}}; }

    static MatrixField on_grid(const Grid& g, const std::function<CMat(std::array<double, 2>)>& fn) {
        MatrixField f;
        f.values.reserve(g.cells());
        for (int c = 0; c < g.cells(); ++c) f.values.push_back(fn(g.cell_center(c)));
        return f;
    }

    int dim() const { return static_cast<int>(values.front().rows()); }
    int cells() const { return static_cast<int>(values.size()); }
    bool is_constant() const { return values.size() == 1; }
    const CMat& at(int cell) const { return is_constant() ? values[0] : values.at(cell); }

    MatrixField map(const std::function<CMat(const CMat&)>& fn) const {
        MatrixField f;
        f.values.reserve(values.size());
        for (const auto& A : values) f.values.push_back(fn(A));
        return f;
    }

    MatrixField adjoint() const {
        return map([](const CMat& A) { return CMat(A.adjoint()); });
    }

    /// A - s I in every cell.
    MatrixField shifted(cplx s) const {
        return map([s](const CMat& A) { return CMat(A - s * CMat::Identity(A.rows(), A.cols())); });
    }

    MatrixField scaled(cplx s) const {
        return map([s](const CMat& A) { return CMat(s * A); });
    }

    /// lambda(A): min over cells and unit xi of Re<A xi, xi>.
    double lambda() const {
        double m = inf;
        for (const auto& A : values) m = std::min(m, hermitian_floor(A));
        return m;
    }

    /// Lambda(A): max over cells of the operator norm.
    double Lambda() const {
        double m = 0.0;
        for (const auto& A : values) m = std::max(m, op_norm(A));
        return m;
    }

    bool consistent_with(const Grid& g) const {
        return !values.empty() && dim() == g.dim && (is_constant() || cells() == g.cells());
    }
};

enum class Verdict { p_elliptic, weakly_p_elliptic, not_p_elliptic };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::p_elliptic: return "p-elliptic";
        case Verdict::weakly_p_elliptic: return "weakly p-elliptic";
        default: return "not p-elliptic";
    }
}

inline constexpr double verdict_tol = 1e-8;

inline Verdict classify(double value, double tol = verdict_tol) {
    if (value > tol) return Verdict::p_elliptic;
    if (value >= -tol) return Verdict::weakly_p_elliptic;
    return Verdict::not_p_elliptic;
}

struct EllipticityReport {
    double p = 2.0;
    double delta_p = 0.0;
    double alpha = 0.0;
    Verdict verdict = Verdict::not_p_elliptic;
    int witness_cell = 0;
    CVec witness_xi;
    double search_value = std::numeric_limits<double>::quiet_NaN();
};

inline double conjugate(double p) { return p / (p - 1.0); }

/// Symmetric real matrix whose quadratic form on V(xi) is Re<A xi, xi + c conj(xi)>.
inline RMat delta_form(const CMat& A, double p) {
    const double c = std::abs(1.0 - 2.0 / p);
    const Eigen::Index d = A.rows();
    RMat J = RMat::Identity(2 * d, 2 * d);
    J.bottomRightCorner(d, d) *= -1.0;
    const RMat T = (RMat::Identity(2 * d, 2 * d) + c * J) * real_form(A);
    return 0.5 * (T + T.transpose());
}

/// Re<A xi, xi + |1-2/p| conj(xi)>.
inline double delta_objective(const CMat& A, double p, const CVec& xi) {
    const double c = std::abs(1.0 - 2.0 / p);
    const CVec Ax = A * xi;
    return (xi.adjoint() * Ax)(0).real() + c * (xi.transpose() * Ax)(0).real();
}

/// Exact min over the unit sphere, with the minimizing xi.
inline std::pair<double, CVec> delta_p_matrix(const CMat& A, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("delta_p: p must exceed 1");
    Eigen::SelfAdjointEigenSolver<RMat> es(delta_form(A, p));
    return {es.eigenvalues()(0), unidentify(es.eigenvectors().col(0))};
}

/// Multi-start projected gradient descent on the unit sphere, plus a
/// quasi-random sweep for d <= 3. Independent of delta_p_matrix except
/// for sharing the objective.
inline std::pair<double, CVec> delta_p_search(const CMat& A, double p, std::uint64_t seed = 7,
                                              int restarts = 64, std::size_t sweep = 100000) {
    if (!(p > 1.0)) throw std::invalid_argument("delta_p: p must exceed 1");
    const Eigen::Index d = A.rows();
    const RMat S = delta_form(A, p);
    const double step = 0.5 / std::max(1e-12, S.cwiseAbs().rowwise().sum().maxCoeff());
    Rng g = make_rng(seed, 11);
    double best = inf;
    RVec best_x;
    auto consider = [&](const RVec& x) {
        const double f = x.dot(S * x);
        if (f < best) {
            best = f;
            best_x = x;
        }
    };
    for (int r = 0; r < restarts; ++r) {
        RVec x(2 * d);
        for (Eigen::Index i = 0; i < 2 * d; ++i) x(i) = normal(g);
        x.normalize();
        for (int it = 0; it < 20000; ++it) {
            const RVec Sx = S * x;
            const RVec grad = 2.0 * (Sx - x.dot(Sx) * x);
            if (grad.norm() < 1e-13) break;
            x = (x - step * grad).normalized();
        }
        consider(x);
    }
    if (d <= 3 && sweep > 0) {
        // Gaussian transform of Sobol points gives an isotropic sphere cover.
        const auto pts = sobol_points(static_cast<unsigned>(2 * d), sweep);
        for (const auto& u : pts) {
            RVec x(2 * d);
            for (Eigen::Index i = 0; i < 2 * d; ++i) {
                const double a = u[i];
                x(i) = std::sqrt(2.0) * boost::math::erf_inv(2.0 * a - 1.0);
            }
            const double nrm = x.norm();
            if (nrm > 0) consider(x / nrm);
        }
    }
    return {best, unidentify(best_x)};
}

inline EllipticityReport delta_p(const MatrixField& A, double p, bool with_search = false, std::uint64_t seed = 7) {
    if (!(p > 1.0)) throw std::invalid_argument("delta_p: p must exceed 1");
    EllipticityReport r;
    r.p = p;
    r.delta_p = inf;
    for (int c = 0; c < A.cells(); ++c) {
        auto [v, xi] = delta_p_matrix(A.at(c), p);
        if (v < r.delta_p) {
            r.delta_p = v;
            r.witness_cell = c;
            r.witness_xi = xi;
        }
    }
    if (with_search) {
        double s = inf;
        for (int c = 0; c < A.cells(); ++c) s = std::min(s, delta_p_search(A.at(c), p, seed + c).first);
        r.search_value = s;
    }
    r.verdict = classify(r.delta_p);
    return r;
}

/// Report on Delta_p(A - alpha (pq/4) I).
inline EllipticityReport is_perturbed_p_elliptic(const MatrixField& A, double alpha, double p, bool with_search = false) {
    if (alpha < 0) throw std::invalid_argument("perturbed ellipticity: alpha must be nonnegative");
    if (!(p > 1.0)) throw std::invalid_argument("delta_p: p must exceed 1");
    const double shift = alpha * p * conjugate(p) / 4.0;
    auto r = delta_p(A.shifted(shift), p, with_search);
    r.alpha = alpha;
    return r;
}

struct ExponentWindow {
    double p_minus = 1.0;
    double p_plus = inf;
    bool plus_unbounded = true;
};

inline ExponentWindow exponent_window(double alpha) {
    if (alpha < 0 || alpha >= 1) throw std::domain_error("exponent_window: alpha must lie in [0,1)");
    ExponentWindow w;
    const double r = std::sqrt(1.0 - alpha);
    w.p_minus = 2.0 / (1.0 + r);
    if (alpha == 0.0) {
        w.plus_unbounded = true;
        w.p_plus = inf;
    } else {
        w.plus_unbounded = false;
        w.p_plus = 2.0 / (1.0 - r);
    }
    return w;
}

/// arctan(sqrt(Lambda^2 - lambda^2) / lambda(A - alpha I)).
inline double sector_angle(const MatrixField& A, double alpha) {
    const double lam = A.lambda(), Lam = A.Lambda();
    const double lam_shift = lam - alpha;
    if (!(lam_shift > 0)) throw std::domain_error("sector_angle: A - alpha I is not accretive");
    return std::atan(std::sqrt(std::max(0.0, Lam * Lam - lam * lam)) / lam_shift);
}

/// Largest theta such that Delta_p(e^{i phi} A - alpha cos(phi) (pq/4) I) > tol
/// for all sampled phi in [-theta, theta].
inline double rotation_margin(const MatrixField& A, double alpha, double p, double tol_rad = 1e-4, int nphi = 33) {
    const double pq4 = p * conjugate(p) / 4.0;
    auto ok = [&](double theta) {
        for (int k = 0; k < nphi; ++k) {
            const double phi = nphi == 1 ? 0.0 : -theta + 2.0 * theta * k / (nphi - 1);
            const auto B = A.scaled(std::polar(1.0, phi)).shifted(alpha * std::cos(phi) * pq4);
            if (delta_p(B, p).delta_p <= verdict_tol) return false;
        }
        return true;
    };
    if (!ok(0.0)) return 0.0;
    double lo = 0.0, hi = pi / 2;
    while (hi - lo > tol_rad) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

/// Largest eps (bisection, capped at eps_max) with Delta_{p+eps}(A - alpha (r r'/4) I) > tol, r = p + eps.
inline double open_endedness(const MatrixField& A, double alpha, double p, double eps_max = 8.0) {
    auto val = [&](double e) { return is_perturbed_p_elliptic(A, alpha, p + e).delta_p; };
    if (val(0.0) <= verdict_tol) return 0.0;
    if (val(eps_max) > verdict_tol) return eps_max;
    double lo = 0.0, hi = eps_max;
    for (int it = 0; it < 60 && hi - lo > 1e-12 * (1 + hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (val(mid) > verdict_tol ? lo : hi) = mid;
    }
    return lo;
}

struct LipschitzCheck {
    double difference = 0.0;
    double distance = 0.0;
    double elementary_bound = 0.0;
    double sharp_bound = 0.0;
    bool elementary_holds = false;
    bool sharp_holds = false;
};

/// |Delta_p(A) - Delta_p(B)| against (1+|1-2/p|)||A-B|| and ||A-B||/min{p,q}.
inline LipschitzCheck lipschitz_check(const MatrixField& A, const MatrixField& B, double p, double slack = 1e-12) {
    if (A.cells() != B.cells()) throw std::invalid_argument("lipschitz_check: fields differ in size");
    LipschitzCheck r;
    for (int c = 0; c < A.cells(); ++c) r.distance = std::max(r.distance, op_norm(A.at(c) - B.at(c)));
    r.difference = std::abs(delta_p(A, p).delta_p - delta_p(B, p).delta_p);
    r.elementary_bound = (1.0 + std::abs(1.0 - 2.0 / p)) * r.distance;
    r.sharp_bound = r.distance / std::min(p, conjugate(p));
    r.elementary_holds = r.difference <= r.elementary_bound + slack;
    r.sharp_holds = r.difference <= r.sharp_bound + slack;
    return r;
}

}  // namespace pellip
