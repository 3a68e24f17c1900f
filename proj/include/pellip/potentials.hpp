#pragma once

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <fstream>
#include <sstream>

#include "discrete_operator.hpp"

namespace pellip {

/// V_- = dist(x, D)^{-power}, capped at the value one cell away from D.
inline Potential hardy_preset(const Grid& g, const std::vector<bool>& D, double power) {
    if (static_cast<int>(D.size()) != g.nodes()) throw std::invalid_argument("hardy_preset: mask size mismatch");
    std::vector<int> dn;
    for (int k = 0; k < g.nodes(); ++k)
        if (D[k]) {
            if (!g.on_boundary(k)) throw std::invalid_argument("hardy_preset: D must be a subset of the boundary");
            dn.push_back(k);
        }
    if (dn.empty() && power > 0) throw std::invalid_argument("hardy_preset: distance to an empty set is undefined");
    const double hmin = g.dim == 1 ? g.h(0) : std::min(g.h(0), g.h(1));
    const double cap = std::pow(hmin, -power);
    Potential P = Potential::zero(g.nodes());
    for (int k = 0; k < g.nodes(); ++k) {
        double d = inf;
        for (int j : dn) d = std::min(d, g.distance(k, j));
        P.v_minus[k] = (d < hmin) ? cap : std::min(cap, std::pow(d, -power));
    }
    return P;
}

struct Box {
    std::array<double, 2> lo{-inf, -inf};
    std::array<double, 2> hi{inf, inf};
    bool contains(std::array<double, 2> x, int dim) const {
        for (int a = 0; a < dim; ++a)
            if (x[a] < lo[a] - 1e-12 || x[a] > hi[a] + 1e-12) return false;
        return true;
    }
};

/// Signed nodal values V(x).
inline std::vector<double> signed_values(const Potential& P) {
    std::vector<double> v(P.size());
    for (int i = 0; i < P.size(); ++i) v[i] = P.value(i);
    return v;
}

/// Canonical decomposition of a sum of signed fields.
inline Potential combine(const std::vector<Potential>& parts, int nodes) {
    std::vector<double> v(nodes, 0.0);
    for (const auto& P : parts)
        for (int i = 0; i < nodes; ++i) v[i] += P.value(i);
    return Potential::from_signed(v);
}

inline Potential well_preset(const Grid& g, double depth, const Box& region) {
    Potential P = Potential::zero(g.nodes());
    for (int k = 0; k < g.nodes(); ++k)
        if (region.contains(g.coord(k), g.dim)) P.v_minus[k] = depth;
    return P;
}

inline Potential ridge_preset(const Grid& g, double height, const Box& region) {
    Potential P = Potential::zero(g.nodes());
    for (int k = 0; k < g.nodes(); ++k)
        if (region.contains(g.coord(k), g.dim)) P.v_plus[k] = height;
    return P;
}

/// V_- = min(c / |x - center|, cap).
inline Potential coulomb_preset(const Grid& g, double c, std::array<double, 2> center, double cap) {
    Potential P = Potential::zero(g.nodes());
    for (int k = 0; k < g.nodes(); ++k) {
        const auto x = g.coord(k);
        const double r = std::hypot(x[0] - center[0], x[1] - center[1]);
        P.v_minus[k] = r > 0 ? std::min(cap, c / r) : cap;
    }
    return P;
}

/// Signed nodal values separated by commas, whitespace or newlines, in node order.
inline Potential potential_from_csv(const Grid& g, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("potential csv: cannot open " + path);
    std::vector<double> v;
    std::string tok;
    std::stringstream all;
    all << in.rdbuf();
    std::string text = all.str();
    for (char& ch : text)
        if (ch == ',' || ch == ';') ch = ' ';
    std::istringstream ss(text);
    double x;
    while (ss >> x) v.push_back(x);
    if (static_cast<int>(v.size()) != g.nodes())
        throw std::runtime_error("potential csv: expected " + std::to_string(g.nodes()) + " values, got " + std::to_string(v.size()));
    return Potential::from_signed(v);
}

/// U_n = U_+ - min(U_-, n).
inline Potential truncate(const Potential& V, double n) {
    if (n < 0) throw std::invalid_argument("truncate: n must be nonnegative");
    Potential P = V;
    for (auto& v : P.v_minus) v = std::min(v, n);
    return P;
}

struct SubcriticalCertificate {
    std::vector<std::pair<double, double>> alpha_curve;  // (beta, alpha(beta))
    double alpha_star = 0;                               // alpha at the largest swept beta
    std::vector<double> residuals;
    bool deflated_constants = false;
};

/// Stiffness of -Laplace with the given boundary mask (free nodes) and the mass.
inline DiscreteOperator laplacian(const Grid& g, const BoundaryCondition& bc) {
    return assemble(g, MatrixField::constant(CMat::Identity(g.dim, g.dim)), Potential::zero(g.nodes()), bc);
}

/// alpha(beta) = max(0, top eigenvalue of M(V_- - beta V_+) u = mu K u).
inline SubcriticalCertificate solve_subcritical(const Grid& g, const Potential& V, const BoundaryCondition& bc,
                                                const std::vector<double>& betas) {
    for (double b : betas)
        if (b < 0 || b >= 1) throw std::invalid_argument("solve_subcritical: beta must lie in [0,1)");
    const DiscreteOperator lap = laplacian(g, bc);
    const Eigen::Index n = lap.size();
    RVec vm(n), vp(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vm(i) = V.v_minus[lap.free[i]];
        vp(i) = V.v_plus[lap.free[i]];
    }
    SubcriticalCertificate cert;
    const bool neumann = !bc.any();
    for (double beta : betas) {
        double alpha = 0, res = 0;
        if (vm.maxCoeff() <= 0) {
            alpha = 0;
        } else {
            const RVec b = lap.mass.cwiseProduct(vm - beta * vp);
            if (!neumann) {
                const auto r = pencil_top(DiscreteOperator::diag_sparse(b), lap.K);
                if (!r.converged) throw std::runtime_error("solve_subcritical: eigensolver did not converge");
                alpha = std::max(0.0, r.value);
                res = r.residual;
            } else {
                // Constants lie in ker K: the quotient is unbounded unless 1^T B 1 < 0,
                // in which case they are removed by a rank-one correction.
                const double m = b.sum();
                if (m >= 0) {
                    alpha = inf;
                } else {
                    if (n > 2500) throw std::runtime_error("solve_subcritical: pure Neumann deflation limited to 2500 nodes");
                    cert.deflated_constants = true;
                    CMat B = (RMat(b.asDiagonal()) - b * b.transpose() / m).cast<cplx>();
                    const RVec Mone = lap.mass;
                    const double scale = RMat(CMat(lap.K).real()).diagonal().maxCoeff() / (Mone.squaredNorm());
                    CMat Kt = CMat(lap.K) + (scale * Mone * Mone.transpose()).cast<cplx>();
                    const auto r = pencil_top_dense(B, Kt);
                    alpha = std::max(0.0, r.value);
                    res = r.residual;
                }
            }
        }
        cert.alpha_curve.emplace_back(beta, alpha);
        cert.residuals.push_back(res);
    }
    if (!cert.alpha_curve.empty()) {
        auto it = std::max_element(cert.alpha_curve.begin(), cert.alpha_curve.end());
        cert.alpha_star = it->second;
    }
    return cert;
}

/// Graded 1D mesh on [0,1]: 2m geometric intervals refined towards both ends
/// (first interval [0, rmin]), then `levels` nested bisections.
inline std::vector<double> graded_mesh(int base_intervals, int levels, double rmin = 1e-8) {
    if (base_intervals < 4 || base_intervals % 2) throw std::invalid_argument("graded_mesh: need an even count >= 4");
    const int m = base_intervals / 2;
    std::vector<double> half{0.0};
    for (int k = 1; k <= m; ++k) half.push_back(0.5 * std::pow(2.0 * rmin, static_cast<double>(m - k) / (m - 1)));
    std::vector<double> x = half;
    for (int k = m - 1; k >= 0; --k) x.push_back(1.0 - half[k]);
    for (int l = 0; l < levels; ++l) {
        std::vector<double> y;
        for (std::size_t i = 0; i + 1 < x.size(); ++i) {
            y.push_back(x[i]);
            y.push_back(0.5 * (x[i] + x[i + 1]));
        }
        y.push_back(x.back());
        x.swap(y);
    }
    return x;
}

/// P1 Rayleigh-Ritz value of max int V u^2 / int u'^2 over u in H^1_0(0,1)
/// on the given mesh, V(x) = dist(x, {0,1})^{-power}; V enters through
/// 8-point Gauss quadrature, so no cap is needed.
inline double hardy_constant_1d(const std::vector<double>& x, double power = 2.0) {
    using boost::math::quadrature::gauss;
    const Eigen::Index n = static_cast<Eigen::Index>(x.size()) - 2;
    if (n < 1) throw std::invalid_argument("hardy_constant_1d: mesh too small");
    CMat K = CMat::Zero(n, n), B = CMat::Zero(n, n);
    for (std::size_t e = 0; e + 1 < x.size(); ++e) {
        const double a = x[e], b = x[e + 1], h = b - a;
        const Eigen::Index i0 = static_cast<Eigen::Index>(e) - 1, i1 = static_cast<Eigen::Index>(e);
        double m00 = 0, m01 = 0, m11 = 0;
        const auto& abs = gauss<double, 8>::abscissa();
        const auto& wts = gauss<double, 8>::weights();
        for (std::size_t k = 0; k < abs.size(); ++k) {
            for (int sgn : {-1, 1}) {
                if (k == 0 && sgn == -1 && abs.size() % 2 == 1) continue;
                const double s = 0.5 * (1 + sgn * abs[k]);
                const double xx = a + s * h;
                const double v = std::pow(std::min(xx, 1 - xx), -power);
                const double w = 0.5 * h * wts[k];
                m00 += w * v * (1 - s) * (1 - s);
                m01 += w * v * (1 - s) * s;
                m11 += w * v * s * s;
            }
        }
        const double kk = 1.0 / h;
        auto add = [&](Eigen::Index i, Eigen::Index j, double kv, double bv) {
            if (i < 0 || j < 0 || i >= n || j >= n) return;
            K(i, j) += kv;
            B(i, j) += bv;
        };
        add(i0, i0, kk, m00);
        add(i0, i1, -kk, m01);
        add(i1, i0, -kk, m01);
        add(i1, i1, kk, m11);
    }
    return pencil_top_dense(B, K).value;
}

inline double unit_ball_volume(int d) { return std::pow(pi, 0.5 * d) / boost::math::tgamma(0.5 * d + 1.0); }

struct VolumeModel {
    enum class Kind { polynomial, half_space } kind = Kind::polynomial;
    int dim = 3;        // polynomial: exponent d in c r^d
    double c = 0;       // polynomial constant; 0 means the unit-ball volume in dimension dim

    double operator()(std::array<double, 2> x, int grid_dim, double r) const {
        if (kind == Kind::polynomial) return (c > 0 ? c : unit_ball_volume(dim)) * std::pow(r, dim);
        const double a = std::max(0.0, grid_dim == 1 ? x[0] : x[1]);
        if (grid_dim == 1) return r + std::min(r, a);
        if (a >= r) return pi * r * r;
        return pi * r * r - (r * r * std::acos(a / r) - a * std::sqrt(r * r - a * a));
    }
};

struct VolNormResult {
    double value = 0;
    double small_t = 0, large_t = 0;
    double slope_small = 0, slope_large = 0;  // d log G / d log t at the ends
    bool finite = true;
};

/// Both t-integrals of the vol norm of V_-^{1/2} on log-spaced t nodes, with
/// power-law tails extrapolated from the end slopes.
inline VolNormResult vol_norm(const Grid& g, const Potential& V, double r1, double r2, const VolumeModel& model,
                              double t_min = 1e-8, double t_max = 1e8, int nodes = 400) {
    if (!(r1 > 2 && r2 > 2)) throw std::invalid_argument("vol_norm: exponents must exceed 2");
    VolNormResult out;
    if (V.max_minus() <= 0) {
        out.value = 0;
        return out;
    }
    // Lumped node weights over the whole grid.
    std::vector<double> w(g.nodes(), 0.0);
    for (const auto& s : corner_samples(g)) w[s.node] += s.weight;
    auto G = [&](double t, double r) {
        double s = 0;
        for (int k = 0; k < g.nodes(); ++k)
            if (V.v_minus[k] > 0) s += w[k] * std::pow(V.v_minus[k], 0.5 * r) / model(g.coord(k), g.dim, std::sqrt(t));
        return std::pow(s, 1.0 / r) * std::sqrt(t);  // integrand in d(log t)
    };
    auto piece = [&](double lo, double hi, double r, double& slope_lo, double& slope_hi) {
        const double a = std::log(lo), b = std::log(hi), ds = (b - a) / (nodes - 1);
        std::vector<double> v(nodes);
        for (int i = 0; i < nodes; ++i) v[i] = G(std::exp(a + i * ds), r);
        double s = 0;
        for (int i = 0; i + 1 < nodes; ++i) s += 0.5 * ds * (v[i] + v[i + 1]);
        slope_lo = (std::log(v[1]) - std::log(v[0])) / ds;
        slope_hi = (std::log(v[nodes - 1]) - std::log(v[nodes - 2])) / ds;
        return std::make_pair(s, std::make_pair(v.front(), v.back()));
    };
    double s0a, s0b, s1a, s1b;
    const auto [i1, e1] = piece(t_min, 1.0, r1, s0a, s0b);
    const auto [i2, e2] = piece(1.0, t_max, r2, s1a, s1b);
    out.slope_small = s0a;
    out.slope_large = s1b;
    const double tol = 1e-3;
    out.finite = s0a > tol && s1b < -tol;
    out.small_t = i1 + (s0a > tol ? e1.first / s0a : inf);
    out.large_t = i2 + (s1b < -tol ? e2.second / (-s1b) : inf);
    out.value = out.small_t + out.large_t;
    return out;
}

/// Neumann heat kernel of the half-space {x_d > 0}.
inline double halfspace_kernel(double t, const std::vector<double>& x, const std::vector<double>& y) {
    if (!(t > 0)) throw std::invalid_argument("halfspace_kernel: t must be positive");
    if (x.size() != y.size() || x.empty()) throw std::invalid_argument("halfspace_kernel: dimension mismatch");
    const std::size_t d = x.size();
    double a = 0, b = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const double yr = (i + 1 == d) ? -y[i] : y[i];
        a += (x[i] - y[i]) * (x[i] - y[i]);
        b += (x[i] - yr) * (x[i] - yr);
    }
    return (std::exp(-a / (4 * t)) + std::exp(-b / (4 * t))) / std::pow(4 * pi * t, 0.5 * d);
}

/// Integral over the half-plane (d = 2) by nested Gauss-Kronrod on a box
/// covering +-L standard deviations.
template <class F>
inline double halfplane_integral(F&& f, std::array<double, 2> center, double spread) {
    using boost::math::quadrature::gauss_kronrod;
    const double L = 14.0 * spread;
    auto inner = [&](double y1) {
        auto g = [&](double y2) { return f(y1, y2); };
        return gauss_kronrod<double, 31>::integrate(g, 0.0, center[1] + L, 12, 1e-13);
    };
    return gauss_kronrod<double, 31>::integrate(inner, center[0] - L, center[0] + L, 12, 1e-13);
}

inline double halfspace_mass(double t, std::array<double, 2> x) {
    return halfplane_integral([&](double y1, double y2) { return halfspace_kernel(t, {x[0], x[1]}, {y1, y2}); }, x,
                              std::sqrt(t));
}

/// int k_t(x,y) k_s(y,z) dy over the half-plane.
inline double halfspace_compose(double t, double s, std::array<double, 2> x, std::array<double, 2> z) {
    const std::array<double, 2> c{0.5 * (x[0] + z[0]), 0.5 * (x[1] + z[1])};
    const double spread = std::sqrt(std::max(t, s)) + 0.5 * std::hypot(x[0] - z[0], x[1] - z[1]);
    return halfplane_integral(
        [&](double y1, double y2) {
            return halfspace_kernel(t, {x[0], x[1]}, {y1, y2}) * halfspace_kernel(s, {y1, y2}, {z[0], z[1]});
        },
        c, spread);
}

/// sup over samples of k_t(x,y) v(x, sqrt t) e^{c|x-y|^2/t} for the half-plane.
inline double halfspace_gaussian_constant(double c, const std::vector<std::array<double, 5>>& samples) {
    VolumeModel hv;
    hv.kind = VolumeModel::Kind::half_space;
    double C = 0;
    for (const auto& s : samples) {
        const double t = s[0];
        const std::vector<double> x{s[1], s[2]}, y{s[3], s[4]};
        const double r2 = (x[0] - y[0]) * (x[0] - y[0]) + (x[1] - y[1]) * (x[1] - y[1]);
        C = std::max(C, halfspace_kernel(t, x, y) * hv({x[0], x[1]}, 2, std::sqrt(t)) * std::exp(c * r2 / t));
    }
    return C;
}

}  // namespace pellip
