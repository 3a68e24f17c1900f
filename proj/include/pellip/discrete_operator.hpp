#pragma once

#include <Eigen/Sparse>

#include "ellipticity.hpp"
#include "grid.hpp"
#include "pencil.hpp"

namespace pellip {

/// Nodal potential V = v_plus - v_minus with v_plus, v_minus >= 0.
struct Potential {
    std::vector<double> v_plus, v_minus;

    static Potential zero(int nodes) { return {std::vector<double>(nodes, 0.0), std::vector<double>(nodes, 0.0)}; }

    static Potential from_signed(const std::vector<double>& V) {
        Potential P = zero(static_cast<int>(V.size()));
        for (std::size_t i = 0; i < V.size(); ++i) {
            if (V[i] >= 0) P.v_plus[i] = V[i];
            else P.v_minus[i] = -V[i];
        }
        return P;
    }

    int size() const { return static_cast<int>(v_plus.size()); }
    double value(int i) const { return v_plus[i] - v_minus[i]; }
    double max_minus() const {
        double m = 0;
        for (double v : v_minus) m = std::max(m, v);
        return m;
    }
    bool has_negative_part() const { return max_minus() > 0; }

    bool valid() const {
        if (v_plus.size() != v_minus.size()) return false;
        for (std::size_t i = 0; i < v_plus.size(); ++i) {
            if (!(v_plus[i] >= 0) || !(v_minus[i] >= 0)) return false;
            if (v_plus[i] * v_minus[i] != 0) return false;
        }
        return true;
    }

    Potential scaled(double c) const {
        Potential P = *this;
        for (auto& v : P.v_plus) v *= c;
        for (auto& v : P.v_minus) v *= c;
        return P;
    }
};

/// One gradient sample: the corner of a cell, with the edge differences meeting there.
struct GradSample {
    int cell = 0;
    int node = 0;  // corner node (potential and value sample)
    double weight = 0;
    std::array<std::array<int, 2>, 2> edge{};  // edge[k] = (from, to) nodes for component k
    std::array<double, 2> inv_h{};
};

struct DiscreteOperator {
    Grid grid;
    BoundaryCondition bc;
    MatrixField A;
    Potential V;
    std::vector<int> free;       // free node -> grid node
    std::vector<int> slot;       // grid node -> free index or -1
    std::vector<GradSample> samples;
    SpC K;                       // stiffness on free nodes: a_h(u, v) = v^H (K + M V) u
    RVec mass;                   // lumped mass on free nodes
    RVec vplus, vminus;          // potential on free nodes
    bool accretive = true;       // lambda(A) > 0

    Eigen::Index size() const { return static_cast<Eigen::Index>(free.size()); }
    int dim() const { return grid.dim; }

    CVec to_full(const CVec& u) const {
        CVec x = CVec::Zero(grid.nodes());
        for (std::size_t i = 0; i < free.size(); ++i) x(free[i]) = u(i);
        return x;
    }

    CVec restrict_to_free(const CVec& x) const {
        CVec u(size());
        for (std::size_t i = 0; i < free.size(); ++i) u(i) = x(free[i]);
        return u;
    }

    RVec potential() const { return vplus - vminus; }

    /// Gradient of a full nodal vector at sample s.
    CVec gradient(const CVec& full, const GradSample& s) const {
        CVec g(grid.dim);
        for (int k = 0; k < grid.dim; ++k) g(k) = (full(s.edge[k][1]) - full(s.edge[k][0])) * s.inv_h[k];
        return g;
    }

    /// a_h(u, v) = sum w <A g_u, g_v> + sum m V u conj(v), u, v on free nodes.
    cplx form(const CVec& u, const CVec& v) const {
        const CVec Mu = (mass.array() * potential().array()).cast<cplx>().matrix().cwiseProduct(u);
        return v.dot(K * u) + v.dot(Mu);
    }

    /// sum w |g_u|^2.
    double grad_norm2(const CVec& u) const {
        const CVec x = to_full(u);
        double s = 0;
        for (const auto& g : samples) s += g.weight * gradient(x, g).squaredNorm();
        return s;
    }

    /// Sparse K + M V on free nodes.
    SpC form_matrix() const { return K + diag_sparse((mass.array() * potential().array()).matrix()); }

    /// L = M^{-1}(K + M V).
    SpC operator_matrix() const { return minv_sparse() * form_matrix(); }

    /// L^{A,0} = M^{-1} K.
    SpC principal_operator_matrix() const { return minv_sparse() * K; }

    SpC mass_matrix() const { return diag_sparse(mass); }

    static SpC diag_sparse(const RVec& d) {
        SpC D(d.size(), d.size());
        std::vector<Eigen::Triplet<cplx>> t;
        for (Eigen::Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
        D.setFromTriplets(t.begin(), t.end());
        return D;
    }

    SpC minv_sparse() const { return diag_sparse(mass.cwiseInverse()); }

    /// Mass-weighted l^p norm.
    double lp_norm(const CVec& u, double p) const {
        double s = 0;
        for (Eigen::Index i = 0; i < u.size(); ++i) s += mass(i) * std::pow(std::abs(u(i)), p);
        return std::pow(s, 1.0 / p);
    }

    bool hermitian(double rtol = 1e-13) const {
        const SpC D = SpC(K - SpC(K.adjoint()));
        double m = 0, s = 0;
        for (int k = 0; k < D.outerSize(); ++k)
            for (SpC::InnerIterator it(D, k); it; ++it) m = std::max(m, std::abs(it.value()));
        for (int k = 0; k < K.outerSize(); ++k)
            for (SpC::InnerIterator it(K, k); it; ++it) s = std::max(s, std::abs(it.value()));
        return m <= rtol * s;
    }
};

/// Corner gradient samples: every cell contributes 2^d samples of weight |cell|/2^d.
inline std::vector<GradSample> corner_samples(const Grid& g) {
    std::vector<GradSample> out;
    const double vol = g.cell_volume();
    for (int c = 0; c < g.cells(); ++c) {
        const auto [ci, cj] = g.cell_ij(c);
        if (g.dim == 1) {
            for (int corner = 0; corner < 2; ++corner) {
                GradSample s;
                s.cell = c;
                s.node = g.index(ci + corner);
                s.weight = vol / 2.0;
                s.edge[0] = {g.index(ci), g.index(ci + 1)};
                s.inv_h = {1.0 / g.h(0), 0.0};
                out.push_back(s);
            }
        } else {
            for (int cy = 0; cy < 2; ++cy)
                for (int cx = 0; cx < 2; ++cx) {
                    GradSample s;
                    s.cell = c;
                    s.node = g.index(ci + cx, cj + cy);
                    s.weight = vol / 4.0;
                    s.edge[0] = {g.index(ci, cj + cy), g.index(ci + 1, cj + cy)};
                    s.edge[1] = {g.index(ci + cx, cj), g.index(ci + cx, cj + 1)};
                    s.inv_h = {1.0 / g.h(0), 1.0 / g.h(1)};
                    out.push_back(s);
                }
        }
    }
    return out;
}

/// Assembles the form sum_corners w <A_c g_u, g_v> + sum_i m_i V_i u_i conj(v_i)
/// with Dirichlet nodes eliminated. Neumann boundaries need no closure: the
/// natural boundary condition is built into the form.
inline DiscreteOperator assemble(const Grid& grid, const MatrixField& A, const Potential& V, const BoundaryCondition& bc) {
    grid.validate();
    if (!A.consistent_with(grid)) throw std::invalid_argument("assemble: matrix field does not match grid");
    if (V.size() != grid.nodes()) throw std::invalid_argument("assemble: potential does not match grid");
    if (!V.valid()) throw std::invalid_argument("assemble: potential parts must be nonnegative with disjoint support");
    if (!bc.valid_for(grid)) throw std::invalid_argument("assemble: Dirichlet mask must be a subset of the boundary");
    DiscreteOperator op;
    op.grid = grid;
    op.bc = bc;
    op.A = A;
    op.V = V;
    op.free = bc.free_nodes();
    if (op.free.empty()) throw std::invalid_argument("assemble: no free nodes");
    op.slot.assign(grid.nodes(), -1);
    for (std::size_t i = 0; i < op.free.size(); ++i) op.slot[op.free[i]] = static_cast<int>(i);
    op.samples = corner_samples(grid);
    op.accretive = A.lambda() > 0;

    const Eigen::Index n = op.size();
    std::vector<Eigen::Triplet<cplx>> trip;
    RVec full_mass = RVec::Zero(grid.nodes());
    for (const auto& s : op.samples) {
        full_mass(s.node) += s.weight;
        const CMat& Ac = A.at(s.cell);
        // D row k: -inv_h at edge[k][0], +inv_h at edge[k][1]; K += w D^H A D.
        for (int j = 0; j < grid.dim; ++j)
            for (int k = 0; k < grid.dim; ++k) {
                const cplx a = Ac(j, k) * s.weight * s.inv_h[j] * s.inv_h[k];
                if (a == cplx(0)) continue;
                for (int sj = 0; sj < 2; ++sj)
                    for (int sk = 0; sk < 2; ++sk) {
                        const int row = op.slot[s.edge[j][sj]], col = op.slot[s.edge[k][sk]];
                        if (row < 0 || col < 0) continue;
                        const double sign = (sj == sk) ? 1.0 : -1.0;
                        trip.emplace_back(row, col, sign * a);
                    }
            }
    }
    op.K.resize(n, n);
    op.K.setFromTriplets(trip.begin(), trip.end());
    op.K.makeCompressed();
    op.mass.resize(n);
    op.vplus.resize(n);
    op.vminus.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        op.mass(i) = full_mass(op.free[i]);
        op.vplus(i) = V.v_plus[op.free[i]];
        op.vminus(i) = V.v_minus[op.free[i]];
    }
    return op;
}

/// Hermitian and skew parts of the form matrix: S = Hr + i Hi.
inline std::pair<SpC, SpC> hermitian_parts(const SpC& S) {
    const SpC Sa = SpC(S.adjoint());
    SpC Hr = 0.5 * (S + Sa);
    SpC Hi = cplx(0, -0.5) * (S - Sa);
    return {Hr, Hi};
}

struct NumericalRange {
    double angle = 0;   // max |arg a_h(u,u)| over u
    double bound = 0;   // sector_angle(A, alpha), NaN if undefined
    bool within = true;
};

/// Exact max |Im a_h(u,u)| / Re a_h(u,u) via the pencil (Hi, Hr).
inline double numerical_range_ratio(const DiscreteOperator& op) {
    auto [Hr, Hi] = hermitian_parts(op.form_matrix());
    double himax = 0;
    for (int k = 0; k < Hi.outerSize(); ++k)
        for (SpC::InnerIterator it(Hi, k); it; ++it) himax = std::max(himax, std::abs(it.value()));
    if (himax == 0) return 0.0;
    // Regularize a possible kernel (pure Neumann, V = 0); constants lie in ker Hi as well.
    double hr = 0;
    for (int k = 0; k < Hr.outerSize(); ++k)
        for (SpC::InnerIterator it(Hr, k); it; ++it) hr = std::max(hr, std::abs(it.value()));
    const SpC Hreg = Hr + DiscreteOperator::diag_sparse(op.mass * (1e-13 * hr / op.mass.maxCoeff()));
    const double up = pencil_top(Hi, Hreg).value;
    const double down = pencil_top(SpC(-Hi), Hreg).value;
    return std::max({0.0, up, down});
}

inline NumericalRange numerical_range_angle(const DiscreteOperator& op, double alpha) {
    NumericalRange r;
    r.angle = std::atan(numerical_range_ratio(op));
    try {
        r.bound = sector_angle(op.A, alpha);
        r.within = r.angle <= r.bound + 1e-9;
    } catch (const std::domain_error&) {
        r.bound = std::numeric_limits<double>::quiet_NaN();
        r.within = false;
    }
    return r;
}

/// Re a_h(u, |u|^{p-2} u).
inline double lp_dissipativity(const DiscreteOperator& op, double p, const CVec& u) {
    if (!(p > 1.0)) throw std::invalid_argument("lp_dissipativity: p must exceed 1");
    CVec w(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double a = std::abs(u(i));
        w(i) = a > 0 ? std::pow(a, p - 2.0) * u(i) : cplx(0.0);
    }
    return op.form(u, w).real();
}

/// Smallest eigenvalue of the Hermitian part of the form against K_I + M V_+,
/// i.e. the best c with Re a_h(u,u) >= c (||grad u||^2 + ||V_+^{1/2} u||^2).
inline double garding_constant(const DiscreteOperator& op) {
    auto [Hr, Hi] = hermitian_parts(op.form_matrix());
    (void)Hi;
    // Reference form with A = I.
    DiscreteOperator lap = assemble(op.grid, MatrixField::constant(CMat::Identity(op.dim(), op.dim())),
                                    Potential::zero(op.grid.nodes()), op.bc);
    SpC ref = lap.K + DiscreteOperator::diag_sparse(op.mass.cwiseProduct(op.vplus));
    double rmax = 0;
    for (int k = 0; k < ref.outerSize(); ++k)
        for (SpC::InnerIterator it(ref, k); it; ++it) rmax = std::max(rmax, std::abs(it.value()));
    ref += DiscreteOperator::diag_sparse(op.mass * (1e-13 * rmax / op.mass.maxCoeff()));
    return -pencil_top(SpC(-Hr), ref).value;
}

}  // namespace pellip
