#pragma once

#include <array>
#include <string>

#include "core_linalg.hpp"
#include "ellipticity.hpp"
#include "util.hpp"

namespace pellip {

struct BellmanParams {
    double p = 2.0;
    double q = 2.0;
    double delta = 0.05;

    BellmanParams() = default;

    /// allow_zero_delta admits delta = 0 (the plain L^2 energy when p = 2).
    BellmanParams(double p_, double delta_, bool allow_zero_delta = false) : p(p_), q(conjugate(p_)), delta(delta_) {
        if (!(p >= 2.0)) throw std::invalid_argument("BellmanParams: p must be >= 2");
        const bool ok = allow_zero_delta ? (delta >= 0.0 && delta < 1.0) : (delta > 0.0 && delta < 1.0);
        if (!ok) throw std::invalid_argument("BellmanParams: delta out of range");
    }
};

enum class Regime { below, above, boundary };

/// Above means |z|^p >= |e|^q; that branch also takes the interface.
inline bool above_branch(const BellmanParams& P, double r, double s) { return std::pow(r, P.p) >= std::pow(s, P.q); }

inline Regime regime(const BellmanParams& P, cplx z, cplx e, double rtol = 1e-12) {
    const double a = std::pow(std::abs(z), P.p), b = std::pow(std::abs(e), P.q);
    if (std::abs(a - b) <= rtol * std::max(a, b)) return Regime::boundary;
    return a < b ? Regime::below : Regime::above;
}

inline double q_value(const BellmanParams& P, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    if (above_branch(P, r, s))
        return (1.0 + 2.0 * P.delta / P.p) * std::pow(r, P.p) + (1.0 + P.delta * (2.0 / P.q - 1.0)) * std::pow(s, P.q);
    return std::pow(r, P.p) + std::pow(s, P.q) + P.delta * r * r * std::pow(s, 2.0 - P.q);
}

/// Below-branch formula evaluated regardless of regime (interface checks).
inline double q_value_below_formula(const BellmanParams& P, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    return std::pow(r, P.p) + std::pow(s, P.q) + P.delta * r * r * std::pow(s, 2.0 - P.q);
}

inline double q_value_above_formula(const BellmanParams& P, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    return (1.0 + 2.0 * P.delta / P.p) * std::pow(r, P.p) + (1.0 + P.delta * (2.0 / P.q - 1.0)) * std::pow(s, P.q);
}

/// Q = F(|z|, |e|): F_r/r, F_rr, F_s/s, F_ss, F_rs.
struct RadialDerivs {
    double fr_r = 0, frr = 0, fs_s = 0, fss = 0, frs = 0;
};

inline RadialDerivs q_radial(const BellmanParams& P, double r, double s) {
    const double p = P.p, q = P.q, d = P.delta;
    RadialDerivs D;
    if (above_branch(P, r, s)) {
        const double a = p + 2.0 * d, b = q + (2.0 - q) * d;
        D.fr_r = a * std::pow(r, p - 2.0);
        D.frr = a * (p - 1.0) * std::pow(r, p - 2.0);
        D.fs_s = s > 0 ? b * std::pow(s, q - 2.0) : inf;
        D.fss = s > 0 ? b * (q - 1.0) * std::pow(s, q - 2.0) : inf;
        D.frs = 0.0;
    } else {
        const double s2q = std::pow(s, 2.0 - q);
        D.fr_r = p * std::pow(r, p - 2.0) + 2.0 * d * s2q;
        D.frr = p * (p - 1.0) * std::pow(r, p - 2.0) + 2.0 * d * s2q;
        D.fs_s = q * std::pow(s, q - 2.0) + (2.0 - q) * d * r * r * std::pow(s, -q);
        D.fss = q * (q - 1.0) * std::pow(s, q - 2.0) + (2.0 - q) * (1.0 - q) * d * r * r * std::pow(s, -q);
        D.frs = 2.0 * (2.0 - q) * d * r * std::pow(s, 1.0 - q);
    }
    return D;
}

/// Wirtinger derivatives (dQ/dz, dQ/de), d = (d1 - i d2)/2.
inline std::pair<cplx, cplx> q_grad(const BellmanParams& P, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    const double p = P.p, q = P.q, d = P.delta;
    cplx gz, ge;
    if (above_branch(P, r, s)) {
        gz = 0.5 * std::conj(z) * (p + 2.0 * d) * std::pow(r, p - 2.0);
        ge = s > 0 ? 0.5 * std::conj(e) * (q + (2.0 - q) * d) * std::pow(s, q - 2.0) : cplx(0.0);
    } else {
        gz = 0.5 * std::conj(z) * (p * std::pow(r, p - 2.0) + 2.0 * d * std::pow(s, 2.0 - q));
        ge = 0.5 * std::conj(e) * (q * std::pow(s, q - 2.0) + (2.0 - q) * d * r * r * std::pow(s, -q));
    }
    return {gz, ge};
}

/// 2x2 Hessian of a radial function f(|x|) on R^2.
inline Eigen::Matrix2d radial_block(double frr, double fr_r, double x1, double x2) {
    const double n = std::hypot(x1, x2);
    Eigen::Vector2d u = n > 0 ? Eigen::Vector2d(x1 / n, x2 / n) : Eigen::Vector2d(1.0, 0.0);
    const Eigen::Matrix2d uu = u * u.transpose();
    return frr * uu + fr_r * (Eigen::Matrix2d::Identity() - uu);
}

/// D^2 Q in (Re z, Im z, Re e, Im e), valid off the singular set.
inline RMat q_hessian(const BellmanParams& P, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    const auto D = q_radial(P, r, s);
    RMat H = RMat::Zero(4, 4);
    H.topLeftCorner(2, 2) = radial_block(D.frr, D.fr_r, z.real(), z.imag());
    H.bottomRightCorner(2, 2) = radial_block(D.fss, D.fs_s, e.real(), e.imag());
    if (D.frs != 0.0 && r > 0 && s > 0) {
        Eigen::Vector2d zh(z.real() / r, z.imag() / r), eh(e.real() / s, e.imag() / s);
        H.topRightCorner(2, 2) = D.frs * zh * eh.transpose();
        H.bottomLeftCorner(2, 2) = D.frs * eh * zh.transpose();
    }
    return H;
}

/// Generalized Hessian H_Q^{(A,B)}[(z,e); (X,Y)].
inline double q_gen_hessian(const BellmanParams& P, cplx z, cplx e, const CMat& A, const CMat& B, const CVec& X, const CVec& Y) {
    CVec Xi(X.size() + Y.size());
    Xi << X, Y;
    return gen_hessian(q_hessian(P, z, e), {A, B}, Xi);
}

inline double tau(const BellmanParams& P, cplx z, cplx e) {
    return std::max(std::pow(std::abs(z), P.p - 2.0), std::pow(std::abs(e), 2.0 - P.q));
}

inline double tau_inv(const BellmanParams& P, cplx z, cplx e) {
    const double t = tau(P, z, e);
    if (!(t > 0)) throw std::domain_error("tau: reciprocal requested at a zero");
    return 1.0 / t;
}

inline double tau_CD(const BellmanParams& P, double D, cplx z, cplx e) {
    const double r = std::abs(z), s = std::abs(e);
    if (r == 0 && s == 0) throw std::domain_error("tau_CD: undefined at the origin");
    if (above_branch(P, r, s)) return (P.p - 1.0) * std::pow(r, P.p - 2.0);
    return D * std::pow(s, 2.0 - P.q);
}

/// sign(conj z) X with sign(0) = 1.
inline CVec unrotate(cplx z, const CVec& X) {
    const double r = std::abs(z);
    const cplx ph = r > 0 ? std::conj(z) / r : cplx(1.0);
    return ph * X;
}

/// H_{F_r}^{I}[z; X] for F_r(z) = |z|^r.
inline double hessF_identity(double r, cplx z, const CVec& X) {
    if (!(r > 1.0)) throw std::invalid_argument("hessF_identity: r must exceed 1");
    const double m = std::abs(z);
    if (m == 0) {
        if (r < 2.0) throw std::domain_error("hessF_identity: singular at z = 0 for r < 2");
        return r == 2.0 ? 2.0 * X.squaredNorm() : 0.0;
    }
    const CVec W = unrotate(z, X);
    const double rp = conjugate(r);
    return 0.5 * r * r * std::pow(m, r - 2.0) * ((2.0 / rp) * W.real().squaredNorm() + (2.0 / r) * W.imag().squaredNorm());
}

/// D^2 F_r in (Re z, Im z).
inline RMat hessF_matrix(double r, cplx z) {
    const double m = std::abs(z);
    return radial_block(r * (r - 1.0) * std::pow(m, r - 2.0), r * std::pow(m, r - 2.0), z.real(), z.imag());
}

inline double g_p(const BellmanParams& P, cplx z, const CVec& X) {
    const CVec W = unrotate(z, X);
    const double p = P.p;
    return 0.5 * p * std::pow(std::abs(z), p - 2.0) * (0.5 * p * W.real().squaredNorm() + (2.0 / p) * W.imag().squaredNorm());
}

inline double b_p(const BellmanParams& P, cplx z, cplx e, const CVec& X, const CVec& Y) {
    const double s = std::abs(e);
    if (s == 0) throw std::domain_error("b_p: undefined at e = 0");
    const double r = std::abs(z), q = P.q, k = 1.0 - 0.5 * q;
    const RVec ReX = unrotate(z, X).real(), ReY = unrotate(e, Y).real();
    return std::pow(s, 2.0 - q) * X.squaredNorm() + k * k * r * r * std::pow(s, -q) * ReY.squaredNorm() +
           2.0 * k * r * std::pow(s, 1.0 - q) * ReX.dot(ReY);
}

inline double h_p(const BellmanParams& P, cplx z, cplx e, const CVec& X, const CVec& Y) {
    if (above_branch(P, std::abs(z), std::abs(e))) return g_p(P, z, X);
    return b_p(P, z, e, X, Y);
}

inline double K_q(const BellmanParams& P, cplx e, const CVec& X, const CVec& Y) {
    const double s = std::abs(e);
    if (s == 0) throw std::domain_error("K_q: undefined at e = 0");
    const double q = P.q, k = 1.0 - 0.5 * q, nx = X.norm(), ny = Y.norm();
    return std::pow(s, 2.0 - q) * nx * nx + 2.0 * k * nx * ny + k * k * std::pow(s, q - 2.0) * ny * ny;
}

struct HGB {
    double b = 0, g = 0, h = 0, K = 0;
};

inline HGB hgb_values(const BellmanParams& P, cplx z, cplx e, const CVec& X, const CVec& Y) {
    HGB v;
    v.b = b_p(P, z, e, X, Y);
    v.g = g_p(P, z, X);
    v.h = above_branch(P, std::abs(z), std::abs(e)) ? v.g : v.b;
    v.K = K_q(P, e, X, Y);
    return v;
}

/// G_p(u, v) = u max{|u|^{p/2-1}, |v|^{1-q/2}}.
inline cplx G_p(const BellmanParams& P, cplx u, cplx v) {
    return u * std::max(std::pow(std::abs(u), 0.5 * P.p - 1.0), std::pow(std::abs(v), 1.0 - 0.5 * P.q));
}

/// Gradient of G_p(u, v) from the values and gradients of u and v.
inline CVec chain_grad_Gp(const BellmanParams& P, cplx u, cplx v, const CVec& Xu, const CVec& Xv) {
    const double a = std::abs(u), b = std::abs(v);
    if (above_branch(P, a, b)) {
        const double e = 0.5 * P.p - 1.0;
        if (a == 0) return e == 0.0 ? Xu : CVec(CVec::Zero(Xu.size()));
        const cplx su = u / a;
        const RVec re = (std::conj(su) * Xu).real();
        return std::pow(a, e) * (Xu + (e * su) * re.cast<cplx>());
    }
    const double e = 1.0 - 0.5 * P.q;
    const cplx sv = v / b;
    const RVec re = (std::conj(sv) * Xv).real();
    return std::pow(b, e) * (Xu + (e * u / b) * re.cast<cplx>());
}

/// Analytic constants for the growth and lower bounds of Q.
struct GrowthConstants {
    double value = 0;      // Q <= C (|z|^p + |e|^q)
    double grad_z = 0;     // |dQ/dz| <= C max{|z|^{p-1}, |e|}
    double grad_e = 0;     // |dQ/de| <= C |e|^{q-1}
    double lower_z = 0;    // Re(dQ/dz z) >= C tau |z|^2
    double lower_e = 0;    // Re(dQ/de e) >= C tau^{-1} |e|^2
};

inline GrowthConstants growth_constants(const BellmanParams& P) {
    GrowthConstants c;
    c.value = 1.0 + P.delta;
    c.grad_z = 0.5 * P.p + P.delta;
    c.grad_e = 0.5 * (P.q + (2.0 - P.q) * P.delta);
    c.lower_z = std::min(P.delta, 0.5 * P.p);
    c.lower_e = 0.5 * P.q;
    return c;
}

struct PointSample {
    cplx z, e;
    CVec X, Y;
    int cell = 0;
};

struct ConvexityCertificate {
    BellmanParams params;
    double mu = 0, sigma = 0;
    double Ctilde = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
    double worst_slack = inf;
    double worst_relative_slack = inf;
    std::size_t negative_count = 0;
    PointSample witness;
    bool passed() const { return negative_count == 0; }
};

struct SlackParts {
    double lhs = 0, rest = 0, tau_term = 0;
};

/// lhs = H_Q^{(A,B)}; rest = mu(pq/4)H_{F_p} + sigma[q+(2-q)delta](p/4)H_{F_q} + 2 delta mu h_p;
/// tau_term = tau|X|^2 + tau^{-1}|Y|^2.
inline SlackParts convexity_parts(const BellmanParams& P, const CMat& A, const CMat& B, double mu, double sigma, const PointSample& s) {
    SlackParts o;
    o.lhs = q_gen_hessian(P, s.z, s.e, A, B, s.X, s.Y);
    const double p = P.p, q = P.q;
    o.rest = mu * (p * q / 4.0) * hessF_identity(p, s.z, s.X) +
             sigma * (q + (2.0 - q) * P.delta) * (p / 4.0) * hessF_identity(q, s.e, s.Y) +
             2.0 * P.delta * mu * h_p(P, s.z, s.e, s.X, s.Y);
    const double t = tau(P, s.z, s.e);
    o.tau_term = t * s.X.squaredNorm() + s.Y.squaredNorm() / t;
    return o;
}

inline bool near_singular_set(const BellmanParams& P, cplx z, cplx e, double rtol = 1e-9) {
    if (std::abs(e) == 0) return true;
    const double a = std::pow(std::abs(z), P.p), b = std::pow(std::abs(e), P.q);
    return std::abs(a - b) <= rtol * (a + b);
}

/// Log-uniform moduli in [1e-3, 1e3]; |X| = 1 and |Y| = tau * t with t log-uniform,
/// so both sides of tau|X|^2 + tau^{-1}|Y|^2 get coverage.
inline PointSample draw_sample(const BellmanParams& P, int d, int cells, Rng& g) {
    PointSample s;
    do {
        s.z = log_uniform(g, 1e-3, 1e3) * random_phase(g);
        s.e = log_uniform(g, 1e-3, 1e3) * random_phase(g);
    } while (near_singular_set(P, s.z, s.e));
    s.X = random_unit_cvec(g, d);
    s.Y = random_unit_cvec(g, d) * (tau(P, s.z, s.e) * log_uniform(g, 1e-3, 1e3));
    s.cell = cells > 1 ? static_cast<int>(std::uniform_int_distribution<int>(0, cells - 1)(g)) : 0;
    return s;
}

inline double relative_slack(const SlackParts& o) {
    const double scale = std::abs(o.lhs) + std::abs(o.rest);
    return scale > 0 ? (o.lhs - o.rest) / scale : 0.0;
}

/// Local random search lowering the relative slack around a sample.
inline PointSample refine_sample(const BellmanParams& P, const MatrixField& A, const MatrixField& B, double mu, double sigma,
                                 PointSample s, Rng& g, int iters = 400) {
    auto score = [&](const PointSample& t) {
        return relative_slack(convexity_parts(P, A.at(t.cell), B.at(t.cell % B.cells()), mu, sigma, t));
    };
    double best = score(s);
    double step = 0.3;
    for (int it = 0; it < iters; ++it) {
        PointSample t = s;
        t.z *= std::exp(step * normal(g)) * std::polar(1.0, step * normal(g));
        t.e *= std::exp(step * normal(g)) * std::polar(1.0, step * normal(g));
        if (near_singular_set(P, t.z, t.e)) continue;
        const double nx = t.X.norm(), ny = t.Y.norm();
        t.X = (t.X + step * nx * random_cvec(g, t.X.size())).normalized() * nx;
        t.Y = (t.Y + step * ny * random_cvec(g, t.Y.size())).normalized() * ny * std::exp(step * normal(g));
        const double v = score(t);
        if (v < best) {
            best = v;
            s = t;
        } else if (it % 50 == 49) {
            step *= 0.5;
        }
    }
    return s;
}

/// Sampled check of
///   H_Q^{(A,B)} >= C~(tau|X|^2 + tau^{-1}|Y|^2) + mu(pq/4)H_{F_p}^I[z;X]
///                 + sigma[q+(2-q)delta](p/4)H_{F_q}^I[e;Y] + 2 delta mu h_p.
/// worst_slack is taken at C~ = 0; Ctilde is the largest value keeping all
/// sampled slacks nonnegative (0 if some slack is already negative).
inline ConvexityCertificate certify_convexity(const BellmanParams& P, const MatrixField& A, const MatrixField& B, double mu,
                                              double sigma, std::size_t n_samples, bool refine = false,
                                              std::uint64_t seed = 1) {
    if (n_samples == 0) throw std::invalid_argument("certify_convexity: n_samples must be positive");
    if (A.dim() != B.dim()) throw std::invalid_argument("certify_convexity: A and B differ in dimension");
    ConvexityCertificate c;
    c.params = P;
    c.mu = mu;
    c.sigma = sigma;
    c.samples = n_samples;
    c.seed = seed;
    const int d = A.dim();
    const std::size_t blocks = 64;
    const std::size_t per = (n_samples + blocks - 1) / blocks;
    struct Part {
        double worst = inf, worst_rel = inf, cmin = inf;
        std::size_t neg = 0;
        PointSample wit;
    };
    std::vector<Part> parts(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        Rng g = make_rng(seed, 1000 + b);
        Part& pt = parts[b];
        const std::size_t lo = b * per, hi = std::min(n_samples, lo + per);
        for (std::size_t i = lo; i < hi; ++i) {
            PointSample s = draw_sample(P, d, A.cells(), g);
            const auto o = convexity_parts(P, A.at(s.cell), B.at(s.cell % B.cells()), mu, sigma, s);
            const double slack = o.lhs - o.rest;
            const double rel = relative_slack(o);
            if (rel < -1e-12) ++pt.neg;
            if (slack < pt.worst) pt.worst = slack;
            if (rel < pt.worst_rel) {
                pt.worst_rel = rel;
                pt.wit = s;
            }
            if (o.tau_term > 0) pt.cmin = std::min(pt.cmin, slack / o.tau_term);
        }
    });
    double cmin = inf;
    for (const auto& pt : parts) {
        c.negative_count += pt.neg;
        c.worst_slack = std::min(c.worst_slack, pt.worst);
        if (pt.worst_rel < c.worst_relative_slack) {
            c.worst_relative_slack = pt.worst_rel;
            c.witness = pt.wit;
        }
        cmin = std::min(cmin, pt.cmin);
    }
    if (refine) {
        Rng g = make_rng(seed, 7);
        PointSample s = refine_sample(P, A, B, mu, sigma, c.witness, g);
        const auto o = convexity_parts(P, A.at(s.cell), B.at(s.cell % B.cells()), mu, sigma, s);
        const double rel = relative_slack(o);
        if (rel < c.worst_relative_slack) {
            if (rel < -1e-12 && c.worst_relative_slack >= -1e-12) ++c.negative_count;
            c.worst_relative_slack = rel;
            c.witness = s;
        }
        c.worst_slack = std::min(c.worst_slack, o.lhs - o.rest);
        if (o.tau_term > 0) cmin = std::min(cmin, (o.lhs - o.rest) / o.tau_term);
    }
    c.Ctilde = std::max(0.0, cmin);
    return c;
}

struct FirstOrderCheck {
    std::size_t samples = 0;
    double max_identity_error = 0;  // relative error of the first-order identity in z
    double min_e_ratio = inf, max_e_ratio = 0;  // 2Re(dQ/de e) / |e|^q
    std::size_t growth_violations = 0;
    std::size_t e_ratio_violations = 0;
    bool passed(double tol = 1e-12) const {
        return max_identity_error <= tol && growth_violations == 0 && e_ratio_violations == 0;
    }
};

/// 2Re[dQ/dz z] = p|z|^p + 2 delta |z max{|z|^{p/2-1}, |e|^{1-q/2}}|^2, the bounds
/// q <= 2Re[dQ/de e]/|e|^q <= q + (2-q) delta and the growth constants, at
/// seeded points with log-uniform moduli in [1e-3, 1e3].
inline FirstOrderCheck first_order_check(const BellmanParams& P, std::size_t n, std::uint64_t seed = 1) {
    FirstOrderCheck c;
    c.samples = n;
    const auto G = growth_constants(P);
    const double p = P.p, q = P.q, d = P.delta, slack = 1e-12;
    Rng g = make_rng(seed, 31);
    for (std::size_t i = 0; i < n; ++i) {
        const cplx z = log_uniform(g, 1e-3, 1e3) * random_phase(g);
        const cplx e = log_uniform(g, 1e-3, 1e3) * random_phase(g);
        const double r = std::abs(z), s = std::abs(e);
        const auto [gz, ge] = q_grad(P, z, e);
        const double m = std::max(std::pow(r, 0.5 * p - 1.0), std::pow(s, 1.0 - 0.5 * q));
        const double rhs = p * std::pow(r, p) + 2.0 * d * r * r * m * m;
        const double lhs = 2.0 * (gz * z).real();
        c.max_identity_error = std::max(c.max_identity_error, std::abs(lhs - rhs) / rhs);
        const double er = 2.0 * (ge * e).real() / std::pow(s, q);
        c.min_e_ratio = std::min(c.min_e_ratio, er);
        c.max_e_ratio = std::max(c.max_e_ratio, er);
        if (er < q * (1 - slack) || er > (q + (2.0 - q) * d) * (1 + slack)) ++c.e_ratio_violations;
        const double Q = q_value(P, z, e), t = tau(P, z, e);
        bool ok = Q >= 0 && Q <= G.value * (std::pow(r, p) + std::pow(s, q)) * (1 + slack);
        ok = ok && std::abs(gz) <= G.grad_z * std::max(std::pow(r, p - 1.0), s) * (1 + slack);
        ok = ok && std::abs(ge) <= G.grad_e * std::pow(s, q - 1.0) * (1 + slack);
        ok = ok && (gz * z).real() >= G.lower_z * t * r * r * (1 - slack);
        ok = ok && (ge * e).real() >= G.lower_e * s * s / t * (1 - slack);
        if (!ok) ++c.growth_violations;
    }
    return c;
}

/// Largest delta in the geometric sweep whose certificate passes; 0 if none.
inline double delta_sweep(double p, const MatrixField& A, const MatrixField& B, double mu, double sigma,
                          std::size_t n_samples, std::uint64_t seed = 1, bool refine = false) {
    for (double d : {0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001}) {
        BellmanParams P(p, d);
        if (certify_convexity(P, A, B, mu, sigma, n_samples, refine, seed).passed()) return d;
    }
    return 0.0;
}

}  // namespace pellip
