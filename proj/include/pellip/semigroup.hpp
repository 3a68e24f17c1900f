#pragma once

#include <unsupported/Eigen/MatrixFunctions>
#include <Eigen/SparseLU>

#include <fstream>
#include <map>
#include <optional>

#include "potentials.hpp"
#include "util.hpp"

namespace pellip {

/// Smallest eigenvalue of the Hermitian part of K + M V against M (the
/// accretivity margin in the discrete L^2 inner product).
inline double accretivity_margin(const DiscreteOperator& op) {
    auto [Hr, Hi] = hermitian_parts(op.form_matrix());
    (void)Hi;
    return -pencil_top(SpC(-Hr), op.mass_matrix()).value;
}

inline bool is_accretive(const DiscreteOperator& op, double tol = 1e-10) {
    double s = 0;
    for (int k = 0; k < op.K.outerSize(); ++k)
        for (SpC::InnerIterator it(op.K, k); it; ++it) s = std::max(s, std::abs(it.value()));
    return accretivity_margin(op) >= -tol * s / op.mass.maxCoeff();
}

/// e^{-zL} on free nodes, L = M^{-1}(K + M V).
class Propagator {
public:
    enum class Method { spectral, eigen, expm, crank_nicolson };

    static constexpr Eigen::Index dense_limit = 1024;

    /// `force` selects expm or Crank-Nicolson regardless of size and structure.
    explicit Propagator(const DiscreteOperator& op, bool cone_gate = true, std::optional<Method> force = std::nullopt)
        : op_(op), gate_(cone_gate) {
        const Eigen::Index n = op.size();
        if (n > dense_limit || force == Method::crank_nicolson) {
            method_ = Method::crank_nicolson;
            return;
        }
        if (force == Method::expm) {
            L_ = CMat(op.operator_matrix());
            method_ = Method::expm;
            return;
        }
        const SpC S = op.form_matrix();
        const bool herm = is_hermitian_sparse(S);
        if (herm) {
            const RVec is = op.mass.cwiseSqrt().cwiseInverse();
            const CMat H = is.cast<cplx>().asDiagonal() * CMat(S) * is.cast<cplx>().asDiagonal();
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
            lambda_ = es.eigenvalues().cast<cplx>();
            left_ = is.cast<cplx>().asDiagonal() * es.eigenvectors();
            right_ = es.eigenvectors().adjoint() * op.mass.cwiseSqrt().cast<cplx>().asDiagonal();
            method_ = Method::spectral;
            return;
        }
        L_ = CMat(op.operator_matrix());
        Eigen::ComplexEigenSolver<CMat> es(L_);
        if (es.info() == Eigen::Success) {
            const CMat& X = es.eigenvectors();
            Eigen::JacobiSVD<CMat> svd(X);
            const auto& sv = svd.singularValues();
            const double cond = sv(0) / std::max(1e-300, sv(sv.size() - 1));
            const double defect = (L_ * X - X * es.eigenvalues().asDiagonal()).norm() / std::max(1e-300, L_.norm());
            if (cond < 1e6 && defect < 1e-12) {
                lambda_ = es.eigenvalues();
                left_ = X;
                right_ = X.partialPivLu().inverse();
                method_ = Method::eigen;
                return;
            }
        }
        method_ = Method::expm;
    }

    Method method() const { return method_; }
    const DiscreteOperator& op() const { return op_; }

    /// Largest |arg| of the discrete numerical range.
    double numerical_range_angle() const {
        if (theta0_ < 0) theta0_ = std::atan(numerical_range_ratio(op_));
        return theta0_;
    }

    /// Half-opening of the analyticity cone.
    double cone_half_angle() const { return 0.5 * pi - numerical_range_angle(); }

    void check_cone(cplx z) const {
        if (z.real() < 0) throw std::domain_error("propagate: Re z must be nonnegative");
        if (!gate_ || z.imag() == 0) return;
        if (std::abs(std::arg(z)) >= cone_half_angle()) throw std::domain_error("propagate: z outside the analyticity cone");
    }

    CVec propagate(const CVec& f, cplx z) const {
        CMat F = f;
        return apply(F, z).col(0);
    }

    /// Columns of F propagated to the same z.
    CMat apply(const CMat& F, cplx z) const {
        if (F.rows() != op_.size()) throw std::invalid_argument("propagate: vector size mismatch");
        check_cone(z);
        if (z == cplx(0)) return F;
        switch (method_) {
            case Method::spectral:
            case Method::eigen: {
                CVec e(lambda_.size());
                for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = std::exp(-z * lambda_(i));
                return left_ * (e.asDiagonal() * (right_ * F));
            }
            case Method::expm: {
                const CMat E = (CMat(-z * L_)).exp();
                return E * F;
            }
            case Method::crank_nicolson: return crank_nicolson(F, z);
        }
        return F;
    }

    /// ||(d/dt + L) u|| / ||f|| at z along the ray through z, by central differences.
    double defect(const CVec& f, cplx z) const {
        const cplx dz = 1e-4 * z;
        const CVec up = propagate(f, z + dz), um = propagate(f, z - dz), u = propagate(f, z);
        const CVec du = (up - um) / (2.0 * dz);
        const CVec Lu = op_.minv_sparse() * (op_.form_matrix() * u);
        return (du + Lu).norm() / std::max(1e-300, f.norm());
    }

private:
    static bool is_hermitian_sparse(const SpC& S) {
        const SpC D = SpC(S - SpC(S.adjoint()));
        double m = 0, s = 0;
        for (int k = 0; k < D.outerSize(); ++k)
            for (SpC::InnerIterator it(D, k); it; ++it) m = std::max(m, std::abs(it.value()));
        for (int k = 0; k < S.outerSize(); ++k)
            for (SpC::InnerIterator it(S, k); it; ++it) s = std::max(s, std::abs(it.value()));
        return m <= 1e-14 * s;
    }

    CMat crank_nicolson(const CMat& F, cplx z) const {
        const int steps = 1000;
        const cplx dz = z / static_cast<double>(steps);
        const SpC M = op_.mass_matrix(), S = op_.form_matrix();
        const SpC lhs = SpC(M + (0.5 * dz) * S), rhs = SpC(M - (0.5 * dz) * S);
        Eigen::SparseLU<SpC> lu;
        lu.compute(lhs);
        if (lu.info() != Eigen::Success) throw std::runtime_error("propagate: Crank-Nicolson factorization failed");
        CMat U = F;
        for (int s = 0; s < steps; ++s) U = lu.solve(rhs * U);
        return U;
    }

    DiscreteOperator op_;
    bool gate_ = true;
    Method method_ = Method::expm;
    CVec lambda_;
    CMat left_, right_, L_;
    mutable double theta0_ = -1;
};

inline const char* to_string(Propagator::Method m) {
    switch (m) {
        case Propagator::Method::spectral: return "spectral";
        case Propagator::Method::eigen: return "eigen";
        case Propagator::Method::expm: return "expm";
        case Propagator::Method::crank_nicolson: return "crank-nicolson";
    }
    return "?";
}

struct Trajectory {
    std::vector<cplx> times;
    std::vector<CVec> states;
    std::map<double, std::vector<double>> norms;  // r -> ||u(t)||_r
};

inline Trajectory trajectory(const Propagator& P, const CVec& f, const std::vector<cplx>& times,
                             const std::vector<double>& r_list) {
    if (times.empty() || times.front() != cplx(0)) throw std::invalid_argument("trajectory: times must start at 0");
    Trajectory tr;
    tr.times = times;
    for (cplx z : times) tr.states.push_back(P.propagate(f, z));
    for (double r : r_list)
        for (const auto& u : tr.states) tr.norms[r].push_back(P.op().lp_norm(u, r));
    return tr;
}

inline void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "re_t,im_t";
    for (const auto& [r, v] : tr.norms) out << ",norm_" << r;
    out << "\n";
    out.precision(17);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        out << tr.times[i].real() << "," << tr.times[i].imag();
        for (const auto& [r, v] : tr.norms) out << "," << v[i];
        out << "\n";
    }
}

/// Log-spaced times in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> t(n);
    for (int i = 0; i < n; ++i) t[i] = lo * std::pow(hi / lo, n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    return t;
}

struct ContractivityEntry {
    double p = 2;
    double max_ratio = 0;
    int worst_sample = -1;
    double worst_t = 0;
    bool contractive = true;
};

struct ContractivityReport {
    std::vector<ContractivityEntry> entries;
    bool all_contractive() const {
        for (const auto& e : entries)
            if (!e.contractive) return false;
        return true;
    }
};

/// max over samples and times of ||T_t f||_p / ||f||_p for each p.
inline ContractivityReport contractivity_sweep(const Propagator& P, const std::vector<double>& p_list,
                                               const std::vector<CVec>& samples, const std::vector<double>& t_grid,
                                               double slack = 1e-8) {
    const Eigen::Index n = P.op().size();
    CMat F(n, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j) F.col(j) = samples[j];
    std::vector<CMat> U(t_grid.size());
    parallel_for(t_grid.size(), [&](std::size_t i) { U[i] = P.apply(F, t_grid[i]); });
    ContractivityReport rep;
    for (double p : p_list) {
        ContractivityEntry e;
        e.p = p;
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const double f0 = P.op().lp_norm(samples[j], p);
            for (std::size_t i = 0; i < t_grid.size(); ++i) {
                const double r = P.op().lp_norm(U[i].col(j), p) / f0;
                if (r > e.max_ratio) {
                    e.max_ratio = r;
                    e.worst_sample = static_cast<int>(j);
                    e.worst_t = t_grid[i];
                }
            }
        }
        e.contractive = e.max_ratio <= 1.0 + slack;
        rep.entries.push_back(e);
    }
    return rep;
}

struct ConeCheck {
    double max_ratio = 0;   // max ||T_z f||_2 / ||f||_2 over samples and rays
    double half_angle = 0;  // pi/2 - theta_0
    bool contractive = true;
};

/// L^2 contractivity on real times and on rays at `fraction` of the cone half-angle.
inline ConeCheck l2_cone_check(const Propagator& P, const std::vector<CVec>& samples, const std::vector<double>& radii,
                               double fraction = 0.95, double slack = 1e-10) {
    ConeCheck c;
    c.half_angle = P.cone_half_angle();
    const double th = fraction * c.half_angle;
    for (double r : radii)
        for (double a : {0.0, th, -th}) {
            const cplx z = std::polar(r, a);
            for (const auto& f : samples) {
                const double ratio = P.op().lp_norm(P.propagate(f, z), 2.0) / P.op().lp_norm(f, 2.0);
                c.max_ratio = std::max(c.max_ratio, ratio);
            }
        }
    c.contractive = c.max_ratio <= 1.0 + slack;
    return c;
}

/// min_i Re(T_t f)_i / max|f| for real nonnegative f (should be >= -1e-10).
inline double positivity_defect(const Propagator& P, const RVec& f, double t) {
    const CVec u = P.propagate(f.cast<cplx>(), t);
    return u.real().minCoeff() / std::max(1e-300, f.maxCoeff());
}

struct OffDiagonalEntry {
    cplx z;
    double ratio = 0;  // sup over f on E of ||T_z f||_{l2(F)} / ||f||_{l2(E)}
    double bound = 0;
    bool pass = true;
};

struct OffDiagonalReport {
    double distance = 0;
    double C = 0;
    double garding = 0;
    std::vector<OffDiagonalEntry> entries;
};

/// Off-diagonal decay between node sets E and F (grid indices) against
/// exp(-d(E,F)^2 / (4 C |z|)), C = Lambda + Lambda^2 / (c cos(psi + theta0)).
inline OffDiagonalReport offdiagonal_check(const Propagator& P, const std::vector<int>& E, const std::vector<int>& F,
                                           const std::vector<cplx>& z_list) {
    const DiscreteOperator& op = P.op();
    auto to_free = [&](const std::vector<int>& S) {
        std::vector<int> out;
        for (int k : S) {
            if (k < 0 || k >= op.grid.nodes()) throw std::invalid_argument("offdiagonal_check: node out of range");
            if (op.slot[k] >= 0) out.push_back(op.slot[k]);
        }
        return out;
    };
    for (int a : E)
        for (int b : F)
            if (a == b) throw std::invalid_argument("offdiagonal_check: E and F overlap");
    const auto e = to_free(E), f = to_free(F);
    if (e.empty() || f.empty()) throw std::invalid_argument("offdiagonal_check: E or F has no free nodes");
    OffDiagonalReport rep;
    rep.distance = inf;
    for (int a : E)
        for (int b : F) rep.distance = std::min(rep.distance, op.grid.distance(a, b));
    rep.garding = garding_constant(op);
    const double Lam = op.A.Lambda();
    const double theta0 = P.numerical_range_angle();
    CMat In = CMat::Zero(op.size(), static_cast<Eigen::Index>(e.size()));
    for (std::size_t j = 0; j < e.size(); ++j) In(e[j], j) = 1.0 / std::sqrt(op.mass(e[j]));
    for (cplx z : z_list) {
        OffDiagonalEntry ent;
        ent.z = z;
        const CMat U = P.apply(In, z);
        CMat T(static_cast<Eigen::Index>(f.size()), U.cols());
        for (std::size_t i = 0; i < f.size(); ++i) T.row(i) = std::sqrt(op.mass(f[i])) * U.row(f[i]);
        ent.ratio = Eigen::JacobiSVD<CMat>(T).singularValues()(0);
        const double psi = std::abs(std::arg(z));
        const double cosang = std::cos(psi + theta0);
        if (!(rep.garding > 0) || !(cosang > 0)) {
            ent.bound = 1.0;
        } else {
            const double C = Lam + Lam * Lam / (rep.garding * cosang);
            if (z == z_list.front()) rep.C = C;
            ent.bound = std::exp(-rep.distance * rep.distance / (4.0 * C * std::abs(z)));
        }
        // Round-off in the propagated columns sits near 1e-15; smaller bounds are not resolvable.
        ent.pass = ent.ratio <= ent.bound * (1 + 1e-10) + 1e-12;
        rep.entries.push_back(ent);
    }
    return rep;
}

struct TruncationEntry {
    double n = 0;
    double grad_discrepancy = 0;
    double potential_discrepancy = 0;
};

struct TruncationReport {
    double max_minus = 0;
    std::vector<TruncationEntry> entries;
    bool exact_beyond_max = true;   // both discrepancies exactly 0 for n >= max V_-
    bool nonincreasing = true;
};

/// Discrepancies of e^{-z L_n} f against e^{-z L} f for L_n assembled with truncate(V, n).
inline TruncationReport truncation_convergence(const Grid& g, const MatrixField& A, const Potential& V,
                                               const BoundaryCondition& bc, const CVec& f, cplx z,
                                               const std::vector<double>& n_list) {
    const DiscreteOperator ref = assemble(g, A, V, bc);
    const Propagator Pref(ref);
    const CVec u = Pref.propagate(f, z);
    const CVec ufull = ref.to_full(u);
    TruncationReport rep;
    rep.max_minus = V.max_minus();
    std::vector<TruncationEntry> out(n_list.size());
    parallel_for(n_list.size(), [&](std::size_t k) {
        const double n = n_list[k];
        const DiscreteOperator opn = assemble(g, A, truncate(V, n), bc);
        const Propagator Pn(opn);
        const CVec un = Pn.propagate(f, z);
        const CVec unfull = opn.to_full(un);
        TruncationEntry e;
        e.n = n;
        double gd = 0;
        for (const auto& s : ref.samples) gd += s.weight * (ref.gradient(unfull, s) - ref.gradient(ufull, s)).squaredNorm();
        double pd = 0;
        for (Eigen::Index i = 0; i < opn.size(); ++i) {
            const double an = std::sqrt(std::abs(opn.potential()(i))), a = std::sqrt(std::abs(ref.potential()(i)));
            pd += opn.mass(i) * std::norm(an * un(i) - a * u(i));
        }
        e.grad_discrepancy = std::sqrt(gd);
        e.potential_discrepancy = std::sqrt(pd);
        out[k] = e;
    });
    rep.entries = out;
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out[k].n >= rep.max_minus && (out[k].grad_discrepancy != 0 || out[k].potential_discrepancy != 0))
            rep.exact_beyond_max = false;
        if (k > 0 && out[k].n >= out[k - 1].n &&
            (out[k].grad_discrepancy > out[k - 1].grad_discrepancy * (1 + 1e-9) + 1e-14 ||
             out[k].potential_discrepancy > out[k - 1].potential_discrepancy * (1 + 1e-9) + 1e-14))
            rep.nonincreasing = false;
    }
    return rep;
}

}  // namespace pellip
