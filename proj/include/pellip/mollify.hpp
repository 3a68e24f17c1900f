#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>

#include "bellman.hpp"

namespace pellip {

/// phi(x) = c exp(-1/(1-|x|^2)) on the unit ball of R^4, c from the exact
/// radial integral.
inline double bump_normalization() {
    using boost::math::quadrature::gauss_kronrod;
    auto f = [](double r) { return r < 1.0 ? r * r * r * std::exp(-1.0 / (1.0 - r * r)) : 0.0; };
    const double radial = gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 15, 1e-14);
    return 1.0 / (2.0 * pi * pi * radial);
}

inline double bump_profile(double r) {
    static const double c = bump_normalization();
    return r < 1.0 ? c * std::exp(-1.0 / (1.0 - r * r)) : 0.0;
}

/// Midpoint tensor rule on [-1,1]^4 restricted to the unit ball, weights
/// renormalized to unit discrete mass. Points are scaled by nu at use.
struct Mollifier {
    double nu = 0.5;
    int resolution = 17;
    std::vector<std::array<double, 4>> points;
    std::vector<double> weights;
    double raw_mass = 0.0;  // midpoint integral of the analytically normalized bump

    explicit Mollifier(double nu_ = 0.5, int res = 17) : nu(nu_), resolution(res) {
        if (!(nu > 0.0 && nu <= 1.0)) throw std::invalid_argument("Mollifier: nu must lie in (0,1]");
        if (res < 3) throw std::invalid_argument("Mollifier: resolution too small");
        const double h = 2.0 / res;
        const double h4 = h * h * h * h;
        std::vector<double> w;
        for (int a = 0; a < res; ++a)
            for (int b = 0; b < res; ++b)
                for (int c = 0; c < res; ++c)
                    for (int d = 0; d < res; ++d) {
                        const std::array<double, 4> x{-1 + (a + 0.5) * h, -1 + (b + 0.5) * h, -1 + (c + 0.5) * h,
                                                      -1 + (d + 0.5) * h};
                        const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
                        if (r2 >= 1.0) continue;
                        points.push_back(x);
                        w.push_back(bump_profile(std::sqrt(r2)) * h4);
                    }
        raw_mass = 0.0;
        for (double v : w) raw_mass += v;
        weights.resize(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) weights[i] = w[i] / raw_mass;
    }

    double mass() const {
        double s = 0.0;
        for (double v : weights) s += v;
        return s;
    }

    std::pair<cplx, cplx> shifted(cplx z, cplx e, std::size_t i) const {
        const auto& x = points[i];
        return {z - nu * cplx(x[0], x[1]), e - nu * cplx(x[2], x[3])};
    }

    /// (F * phi_nu)(z, e) for F(z, e) -> double.
    template <class F>
    double convolve(F&& f, cplx z, cplx e) const {
        double s = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto [a, b] = shifted(z, e, i);
            s += weights[i] * f(a, b);
        }
        return s;
    }

    /// Convolution of a pair-valued (gradient) function.
    template <class F>
    std::pair<cplx, cplx> convolve_grad(F&& f, cplx z, cplx e) const {
        cplx gz = 0, ge = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto [a, b] = shifted(z, e, i);
            const auto [u, v] = f(a, b);
            gz += weights[i] * u;
            ge += weights[i] * v;
        }
        return {gz, ge};
    }
};

/// f_n(t) = n^{-eps} t^{p+eps} for t <= n, ((p+eps)/2) n^{p-2} t^2 + (1-(p+eps)/2) n^p beyond.
inline double fn_value(double p, double n, double eps, double t) {
    if (t < 0 || n < 1) throw std::invalid_argument("fn_value: need t >= 0 and n >= 1");
    const double r = p + eps;
    if (t <= n) return std::pow(n, -eps) * std::pow(t, r);
    return 0.5 * r * std::pow(n, p - 2.0) * t * t + (1.0 - 0.5 * r) * std::pow(n, p);
}

inline double fn_deriv(double p, double n, double eps, double t) {
    const double r = p + eps;
    if (t <= n) return r * std::pow(n, -eps) * std::pow(t, r - 1.0);
    return r * std::pow(n, p - 2.0) * t;
}

/// f_n'(t)/t.
inline double gn_value(double p, double n, double eps, double t) {
    const double r = p + eps;
    if (t <= n) return r * std::pow(n, -eps) * std::pow(t, r - 2.0);
    return r * std::pow(n, p - 2.0);
}

inline double omega_norm(cplx z, cplx e) { return std::sqrt(std::norm(z) + std::norm(e)); }

/// P_n = f_n(|(z,e)|) + K (f_n(|z|) + f_n(|e|)).
inline double pn_value(double p, double n, double eps, double K, cplx z, cplx e) {
    return fn_value(p, n, eps, omega_norm(z, e)) + K * (fn_value(p, n, eps, std::abs(z)) + fn_value(p, n, eps, std::abs(e)));
}

inline std::pair<cplx, cplx> pn_grad(double p, double n, double eps, double K, cplx z, cplx e) {
    const double gw = gn_value(p, n, eps, omega_norm(z, e));
    return {0.5 * std::conj(z) * (gw + K * gn_value(p, n, eps, std::abs(z))),
            0.5 * std::conj(e) * (gw + K * gn_value(p, n, eps, std::abs(e)))};
}

struct Reflection {
    double P = 0;
    std::array<double, 2> R{0, 0};
};

/// P_z(w) = <z, z - w>, R_z(w) = w + 2 P_z(w) z / |z|^2.
inline Reflection reflection(std::array<double, 2> z, std::array<double, 2> w) {
    const double n2 = z[0] * z[0] + z[1] * z[1];
    if (n2 == 0) throw std::invalid_argument("reflection: z must be nonzero");
    Reflection r;
    r.P = z[0] * (z[0] - w[0]) + z[1] * (z[1] - w[1]);
    r.R = {w[0] + 2 * r.P * z[0] / n2, w[1] + 2 * r.P * z[1] / n2};
    return r;
}

/// Smooth step: 1 on [0,3], 0 on [4,inf).
inline double cutoff_profile(double rho) {
    auto h = [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; };
    const double a = h(4.0 - rho), b = h(rho - 3.0);
    return a / (a + b);
}

inline double cutoff_derivative(double rho) {
    if (rho <= 3.0 || rho >= 4.0) return 0.0;
    auto h = [](double x) { return std::exp(-1.0 / x); };
    auto dh = [&](double x) { return h(x) / (x * x); };
    const double a = h(4.0 - rho), b = h(rho - 3.0);
    const double da = -dh(4.0 - rho), db = dh(rho - 3.0);
    return (da * b - a * db) / ((a + b) * (a + b));
}

/// psi_n(w) = cutoff_profile(|w|/n).
inline double psi_n(double n, cplx z, cplx e) { return cutoff_profile(omega_norm(z, e) / n); }

/// (d psi_n/dz, d psi_n/de).
inline std::pair<cplx, cplx> psi_n_grad(double n, cplx z, cplx e) {
    const double w = omega_norm(z, e);
    if (w == 0) return {0.0, 0.0};
    const double f = cutoff_derivative(w / n) / (n * 2.0 * w);
    return {f * std::conj(z), f * std::conj(e)};
}

struct RegularizedBellman {
    BellmanParams params;
    double n = 1;
    double eps = 0.1;
    double K = 1.0;
    double C1 = 1.0;
};

enum class PositivityKind { Q_conv, Pn_conv, Rnnu };

/// Per-sample pieces of Re(z d_z R) (or the e-analogue):
/// cut = Re(z d_z psi_n) (Q*phi), q = psi_n Re(z (d_z Q * phi)), pen = Re(z (d_z P_n * phi)).
struct RPieces {
    double cut_z = 0, q_z = 0, pen_z = 0;
    double cut_e = 0, q_e = 0, pen_e = 0;
};

inline RPieces r_pieces(const RegularizedBellman& R, const Mollifier& m, cplx z, cplx e) {
    const auto& P = R.params;
    const double qc = m.convolve([&](cplx a, cplx b) { return q_value(P, a, b); }, z, e);
    const auto gq = m.convolve_grad([&](cplx a, cplx b) { return q_grad(P, a, b); }, z, e);
    const auto gp = m.convolve_grad([&](cplx a, cplx b) { return pn_grad(P.p, R.n, R.eps, R.K, a, b); }, z, e);
    const auto gpsi = psi_n_grad(R.n, z, e);
    const double psi = psi_n(R.n, z, e);
    RPieces o;
    o.cut_z = (z * gpsi.first).real() * qc;
    o.cut_e = (e * gpsi.second).real() * qc;
    o.q_z = psi * (z * gq.first).real();
    o.q_e = psi * (e * gq.second).real();
    o.pen_z = (z * gp.first).real();
    o.pen_e = (e * gp.second).real();
    return o;
}

struct PositivityReport {
    double worst = inf;
    cplx witness_z = 0, witness_e = 0;
    // Pn_conv only: min over samples with |w| >= 2n of 2Re(s (d_s P_n*phi)) - (p+eps)n^{p-2}|s|^2, relative.
    double worst_quantitative = inf;
    std::size_t quantitative_samples = 0;
};

/// Minimum over samples of Re(z d_z F) and Re(e d_e F), F = Q*phi, P_n*phi or R_{n,nu}.
inline PositivityReport positivity_scan(PositivityKind kind, const RegularizedBellman& R, const Mollifier& m,
                                        const std::vector<std::pair<cplx, cplx>>& samples) {
    const auto& P = R.params;
    std::vector<double> worst(samples.size(), inf), quant(samples.size(), inf);
    parallel_for(samples.size(), [&](std::size_t i) {
        const auto [z, e] = samples[i];
        double vz = 0, ve = 0;
        if (kind == PositivityKind::Q_conv) {
            const auto g = m.convolve_grad([&](cplx a, cplx b) { return q_grad(P, a, b); }, z, e);
            vz = (z * g.first).real();
            ve = (e * g.second).real();
        } else if (kind == PositivityKind::Pn_conv) {
            const auto g = m.convolve_grad([&](cplx a, cplx b) { return pn_grad(P.p, R.n, R.eps, R.K, a, b); }, z, e);
            vz = (z * g.first).real();
            ve = (e * g.second).real();
            if (omega_norm(z, e) >= 2.0 * R.n) {
                const double lb = (P.p + R.eps) * std::pow(R.n, P.p - 2.0);
                const double qz = std::norm(z) > 0 ? (2.0 * vz - lb * std::norm(z)) / (lb * std::norm(z)) : 0.0;
                const double qe = std::norm(e) > 0 ? (2.0 * ve - lb * std::norm(e)) / (lb * std::norm(e)) : 0.0;
                quant[i] = std::min(qz, qe);
            }
        } else {
            const auto o = r_pieces(R, m, z, e);
            const double w = R.C1 * std::pow(m.nu, P.q - 2.0);
            vz = o.cut_z + o.q_z + w * o.pen_z;
            ve = o.cut_e + o.q_e + w * o.pen_e;
        }
        worst[i] = std::min(vz, ve);
    });
    PositivityReport r;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (worst[i] < r.worst) {
            r.worst = worst[i];
            r.witness_z = samples[i].first;
            r.witness_e = samples[i].second;
        }
        if (quant[i] < inf) {
            ++r.quantitative_samples;
            r.worst_quantitative = std::min(r.worst_quantitative, quant[i]);
        }
    }
    return r;
}

/// Uniform directions in R^4 with |w| uniform in [rmin, rmax].
inline std::vector<std::pair<cplx, cplx>> shell_samples(std::size_t count, double rmin, double rmax, std::uint64_t seed) {
    Rng g = make_rng(seed, 4);
    std::vector<std::pair<cplx, cplx>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Eigen::Vector4d x;
        for (int k = 0; k < 4; ++k) x(k) = normal(g);
        x *= uniform(g, rmin, rmax) / x.norm();
        out.push_back({cplx(x(0), x(1)), cplx(x(2), x(3))});
    }
    return out;
}

/// Log-uniform moduli in [lo, hi] with uniform phases.
inline std::vector<std::pair<cplx, cplx>> modulus_samples(std::size_t count, double lo, double hi, std::uint64_t seed) {
    Rng g = make_rng(seed, 5);
    std::vector<std::pair<cplx, cplx>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const cplx z = log_uniform(g, lo, hi) * random_phase(g);
        const cplx e = log_uniform(g, lo, hi) * random_phase(g);
        out.push_back({z, e});
    }
    return out;
}

inline std::vector<double> c1_sweep_values() {
    std::vector<double> v;
    for (int k = -4; k <= 6; ++k) v.push_back(std::pow(10.0, k));
    return v;
}

struct C1Calibration {
    double C1 = 0;
    bool exhausted = false;
    int sweep_index = -1;
    double C0 = 0;  // max over samples of n^2 |d_z psi_n| / |z| (and the e-analogue)
};

/// Smallest sweep value for which Re(z d_z R) and Re(e d_e R) are >= -tol on all samples.
inline C1Calibration calibrate_C1(RegularizedBellman R, const Mollifier& m, const std::vector<std::pair<cplx, cplx>>& samples) {
    const auto& P = R.params;
    std::vector<RPieces> pieces(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { pieces[i] = r_pieces(R, m, samples[i].first, samples[i].second); });
    C1Calibration out;
    for (const auto& [z, e] : samples) {
        const auto g = psi_n_grad(R.n, z, e);
        if (std::abs(z) > 0) out.C0 = std::max(out.C0, R.n * R.n * std::abs(g.first) / std::abs(z));
        if (std::abs(e) > 0) out.C0 = std::max(out.C0, R.n * R.n * std::abs(g.second) / std::abs(e));
    }
    const auto sweep = c1_sweep_values();
    const double scale = std::pow(m.nu, P.q - 2.0);
    for (std::size_t k = 0; k < sweep.size(); ++k) {
        const double w = sweep[k] * scale;
        bool ok = true;
        for (const auto& o : pieces) {
            const double vz = o.cut_z + o.q_z + w * o.pen_z;
            const double ve = o.cut_e + o.q_e + w * o.pen_e;
            const double tz = 1e-9 * (std::abs(o.cut_z) + std::abs(o.q_z) + std::abs(w * o.pen_z)) + 1e-300;
            const double te = 1e-9 * (std::abs(o.cut_e) + std::abs(o.q_e) + std::abs(w * o.pen_e)) + 1e-300;
            if (vz < -tz || ve < -te) {
                ok = false;
                break;
            }
        }
        if (ok) {
            out.C1 = sweep[k];
            out.sweep_index = static_cast<int>(k);
            return out;
        }
    }
    out.exhausted = true;
    out.C1 = sweep.back();
    return out;
}

struct MollifiedSlack {
    double lhs = 0, rhs = 0;
};

/// Both sides of the convexity bound with every term convolved against phi_nu
/// (H_{Q*phi}, tau*phi, tau^{-1}*phi, H_{F_p*phi}, H_{F_q*phi}, h_p*phi).
inline MollifiedSlack mollified_convexity(const BellmanParams& P, const CMat& A, const CMat& B, double mu, double sigma,
                                          double Ctilde, const Mollifier& m, const PointSample& s) {
    MollifiedSlack o;
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        const auto [a, b] = m.shifted(s.z, s.e, i);
        if (std::abs(b) == 0) continue;
        PointSample t = s;
        t.z = a;
        t.e = b;
        const auto parts = convexity_parts(P, A, B, mu, sigma, t);
        o.lhs += m.weights[i] * parts.lhs;
        o.rhs += m.weights[i] * (parts.rest + Ctilde * parts.tau_term);
    }
    return o;
}

}  // namespace pellip
