#pragma once

#include "bellman.hpp"
#include "semigroup.hpp"

namespace pellip {

struct FlowReport {
    std::vector<double> t;
    std::vector<double> E;
    std::vector<double> dE;          // Richardson central difference, NaN at t = 0
    std::vector<double> I1, I2, I3;  // -E' = I1 + I2 - I3
    std::vector<double> I1_hessian;  // corner quadrature of the generalized Hessian (diagnostic)
    double max_decomposition_error = 0;  // max |E' + I1 + I2 - I3| / (1e-4 |E'| + 1e-10)
    double worst_increase = 0;           // max (E(t_{k+1}) - E(t_k)) / E(0)
    bool decomposition_ok = true;
    bool monotone = true;
};

namespace detail {

inline void check_same_layout(const DiscreteOperator& a, const DiscreteOperator& b) {
    if (a.grid.dim != b.grid.dim || a.grid.n != b.grid.n || a.grid.lo != b.grid.lo || a.grid.hi != b.grid.hi ||
        a.free != b.free)
        throw std::invalid_argument("flows: operators live on different grids or boundary masks");
}

inline double energy(const BellmanParams& P, const RVec& m, const CVec& u, const CVec& v) {
    double s = 0;
    for (Eigen::Index i = 0; i < u.size(); ++i) s += m(i) * q_value(P, u(i), v(i));
    return s;
}

}  // namespace detail

/// Samples E(t) = sum m Q(T_t^A f, T_t^B g) and the three terms of -E'.
inline FlowReport heat_flow(const BellmanParams& P, const DiscreteOperator& LA, const DiscreteOperator& LB,
                            const CVec& f, const CVec& g, const std::vector<double>& t_grid) {
    detail::check_same_layout(LA, LB);
    if (f.size() != LA.size() || g.size() != LB.size()) throw std::invalid_argument("heat_flow: data size mismatch");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (t_grid[i] < 0 || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw std::invalid_argument("heat_flow: t_grid must be nonnegative and increasing");
    const Propagator PA(LA), PB(LB);
    const RVec& m = LA.mass;
    auto E_at = [&](double t) { return detail::energy(P, m, PA.propagate(f, t), PB.propagate(g, t)); };
    FlowReport rep;
    rep.t = t_grid;
    const std::size_t N = t_grid.size();
    rep.E.resize(N);
    rep.dE.assign(N, std::numeric_limits<double>::quiet_NaN());
    rep.I1.resize(N);
    rep.I2.resize(N);
    rep.I3.resize(N);
    rep.I1_hessian.resize(N);
    const RVec VA = LA.potential(), VB = LB.potential();
    parallel_for(N, [&](std::size_t k) {
        const double t = t_grid[k];
        const CVec u = PA.propagate(f, t), v = PB.propagate(g, t);
        rep.E[k] = detail::energy(P, m, u, v);
        const CVec Ku = LA.K * u, Kv = LB.K * v;
        double i1 = 0, i2 = 0, i3 = 0;
        for (Eigen::Index i = 0; i < u.size(); ++i) {
            const auto [gz, ge] = q_grad(P, u(i), v(i));
            i1 += 2.0 * (gz * Ku(i) + ge * Kv(i)).real();
            i2 += 2.0 * m(i) * (gz * LA.vplus(i) * u(i) + ge * LB.vplus(i) * v(i)).real();
            i3 += 2.0 * m(i) * (gz * LA.vminus(i) * u(i) + ge * LB.vminus(i) * v(i)).real();
        }
        rep.I1[k] = i1;
        rep.I2[k] = i2;
        rep.I3[k] = i3;
        // Generalized Hessian at cell corners; corners where v vanishes are skipped.
        const CVec uf = LA.to_full(u), vf = LB.to_full(v);
        double ih = 0;
        for (const auto& s : LA.samples) {
            const cplx a = uf(s.node), b = vf(s.node);
            if (std::abs(b) == 0 || std::abs(a) == 0) continue;
            ih += s.weight * q_gen_hessian(P, a, b, LA.A.at(s.cell), LB.A.at(s.cell), LA.gradient(uf, s), LB.gradient(vf, s));
        }
        rep.I1_hessian[k] = ih;
        if (t > 0) {
            const double h = 1e-3 * t;
            auto D = [&](double hh) { return (E_at(t + hh) - E_at(t - hh)) / (2 * hh); };
            rep.dE[k] = (4.0 * D(0.5 * h) - D(h)) / 3.0;
        }
    });
    const double E0 = rep.E.empty() ? 0.0 : rep.E.front();
    for (std::size_t k = 0; k < N; ++k) {
        if (k > 0) {
            const double inc = rep.E[k] - rep.E[k - 1];
            if (E0 > 0) rep.worst_increase = std::max(rep.worst_increase, inc / E0);
            if (inc > 1e-8 * E0) rep.monotone = false;
        }
        if (!std::isnan(rep.dE[k])) {
            const double err = std::abs(rep.dE[k] + rep.I1[k] + rep.I2[k] - rep.I3[k]);
            const double tol = 1e-4 * std::abs(rep.dE[k]) + 1e-10;
            rep.max_decomposition_error = std::max(rep.max_decomposition_error, err / tol);
            if (err > tol) rep.decomposition_ok = false;
        }
    }
    return rep;
}

struct BilinearResult {
    double value = 0;
    double ratio = 0;
    double tail = 0;
    bool tail_ok = true;  // false: no exponential decay seen at T_max, value is up to T_max
};

/// sqrt(|grad u|^2 + |V||u|^2) sqrt(|grad v|^2 + |W||v|^2) summed over corner samples.
inline double bilinear_integrand(const DiscreteOperator& LA, const DiscreteOperator& LB, const CVec& u, const CVec& v) {
    const CVec uf = LA.to_full(u), vf = LB.to_full(v);
    double s = 0;
    for (const auto& c : LA.samples) {
        const double a = LA.gradient(uf, c).squaredNorm() + std::abs(LA.V.value(c.node)) * std::norm(uf(c.node));
        const double b = LB.gradient(vf, c).squaredNorm() + std::abs(LB.V.value(c.node)) * std::norm(vf(c.node));
        s += c.weight * std::sqrt(a * b);
    }
    return s;
}

/// Default horizon 50 / min(accretivity margins).
inline double default_horizon(const DiscreteOperator& LA, const DiscreteOperator& LB) {
    const double lam = std::min(accretivity_margin(LA), accretivity_margin(LB));
    if (!(lam > 1e-9)) throw std::invalid_argument("bilinear: operators not coercive; give T_max explicitly");
    return 50.0 / lam;
}

/// Bilinear integrals along rays t e^{i theta} (A side) and t e^{i phi} (B side)
/// for all pairs (F.col(j), G.col(j)).
inline std::vector<BilinearResult> bilinear_batch(const Propagator& PA, const Propagator& PB, const CMat& F,
                                                  const CMat& G, double theta, double phi, double T_max, double p,
                                                  int nodes = 200) {
    const DiscreteOperator &LA = PA.op(), &LB = PB.op();
    detail::check_same_layout(LA, LB);
    if (F.cols() != G.cols()) throw std::invalid_argument("bilinear: sample count mismatch");
    if (!(T_max > 0)) throw std::invalid_argument("bilinear: T_max must be positive");
    PA.check_cone(std::polar(1.0, theta));
    PB.check_cone(std::polar(1.0, phi));
    std::vector<double> t{0.0};
    for (double x : log_grid(1e-6 * T_max, T_max, nodes)) t.push_back(x);
    const Eigen::Index J = F.cols();
    RMat vals(static_cast<Eigen::Index>(t.size()), J);
    parallel_for(t.size(), [&](std::size_t k) {
        const CMat U = PA.apply(F, std::polar(t[k], theta));
        const CMat V = PB.apply(G, std::polar(t[k], phi));
        for (Eigen::Index j = 0; j < J; ++j) vals(k, j) = bilinear_integrand(LA, LB, U.col(j), V.col(j));
    });
    const double q = conjugate(p);
    std::vector<BilinearResult> out(J);
    for (Eigen::Index j = 0; j < J; ++j) {
        BilinearResult r;
        double s = 0;
        for (std::size_t k = 0; k + 1 < t.size(); ++k) s += 0.5 * (t[k + 1] - t[k]) * (vals(k, j) + vals(k + 1, j));
        const std::size_t n = t.size() - 1;
        const double a = vals(n - 1, j), b = vals(n, j);
        if (b == 0) {
            r.tail = 0;
        } else if (a > b) {
            const double kappa = std::log(a / b) / (t[n] - t[n - 1]);
            r.tail = b / kappa;
        } else {
            r.tail_ok = false;
        }
        r.value = s + r.tail;
        const double nf = LA.lp_norm(F.col(j), p), ng = LB.lp_norm(G.col(j), q);
        r.ratio = (nf > 0 && ng > 0) ? r.value / (nf * ng) : 0.0;
        out[j] = r;
    }
    return out;
}

inline BilinearResult bilinear_estimate(const BellmanParams& P, const DiscreteOperator& LA, const DiscreteOperator& LB,
                                        const CVec& f, const CVec& g, double theta, double phi, double T_max) {
    const Propagator PA(LA), PB(LB);
    return bilinear_batch(PA, PB, CMat(f), CMat(g), theta, phi, T_max, P.p).front();
}

/// Sum of a few random cosine modes with decaying amplitudes; with any Dirichlet
/// nodes the sum is damped to zero on the whole boundary.
inline CVec smooth_random(const DiscreteOperator& op, Rng& rng, int modes = 5, bool complex_values = true) {
    const Grid& g = op.grid;
    std::vector<std::array<double, 6>> c;
    for (int k = 0; k < modes; ++k)
        c.push_back({uniform(rng, 0.5, 3.0), uniform(rng, 0.5, 3.0), uniform(rng, 0, 2 * pi), uniform(rng, 0, 2 * pi),
                     normal(rng) / (1.0 + k), complex_values ? normal(rng) / (1.0 + k) : 0.0});
    CVec u(op.size());
    for (Eigen::Index i = 0; i < op.size(); ++i) {
        const auto x = g.coord(op.free[i]);
        const double sx = (x[0] - g.lo[0]) / (g.hi[0] - g.lo[0]);
        const double sy = g.dim == 2 ? (x[1] - g.lo[1]) / (g.hi[1] - g.lo[1]) : 0.0;
        cplx s = 0;
        for (const auto& m : c) {
            const double w = std::cos(pi * m[0] * sx + m[2]) * (g.dim == 2 ? std::cos(pi * m[1] * sy + m[3]) : 1.0);
            s += cplx(m[4], m[5]) * w;
        }
        const double env = op.bc.any() ? 4 * sx * (1 - sx) * (g.dim == 2 ? 4 * sy * (1 - sy) : 1.0) : 1.0;
        u(i) = env * s;
    }
    return u;
}

}  // namespace pellip
