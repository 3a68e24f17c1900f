#include <gtest/gtest.h>

#include <pellip/mollify.hpp>

using namespace pellip;

namespace {

// Wirtinger derivative d/dz = (d/dx - i d/dy)/2 by central differences.
template <class F>
std::pair<cplx, cplx> fd_wirtinger(F&& f, cplx z, cplx e, double h = 1e-6) {
    const cplx i(0, 1);
    auto d = [&](cplx dz, cplx de) { return (f(z + dz, e + de) - f(z - dz, e - de)) / (2 * h); };
    return {0.5 * (d(h, 0) - i * d(i * h, 0)), 0.5 * (d(0, h) - i * d(0, i * h))};
}

const Mollifier& coarse() {
    static const Mollifier m(0.2, 9);
    return m;
}

}  // namespace

TEST(Mollifier, UnitDiscreteMass) {
    for (int res : {5, 9, 17}) EXPECT_NEAR(Mollifier(0.5, res).mass(), 1.0, 1e-13);
}

TEST(Mollifier, RawMassConvergesToOne) {
    const double e9 = std::abs(Mollifier(0.5, 9).raw_mass - 1.0);
    const double e25 = std::abs(Mollifier(0.5, 25).raw_mass - 1.0);
    EXPECT_LT(e25, e9);
    EXPECT_LT(e25, 1e-2);
}

TEST(Mollifier, RejectsBadArguments) {
    EXPECT_THROW(Mollifier(0.0, 9), std::invalid_argument);
    EXPECT_THROW(Mollifier(1.5, 9), std::invalid_argument);
    EXPECT_THROW(Mollifier(0.5, 2), std::invalid_argument);
}

TEST(Mollifier, PointsInsideScaledBall) {
    const auto& m = coarse();
    for (std::size_t i = 0; i < m.points.size(); ++i) {
        const auto [a, b] = m.shifted(1.0, cplx(0, 2), i);
        EXPECT_LT(omega_norm(a - 1.0, b - cplx(0, 2)), m.nu);
    }
}

TEST(Mollifier, ConstantsAndAffineFunctionsAreFixed) {
    const auto& m = coarse();
    const cplx z(0.3, -1.1), e(2.0, 0.4);
    EXPECT_NEAR(m.convolve([](cplx, cplx) { return 1.0; }, z, e), 1.0, 1e-13);
    auto lin = [](cplx a, cplx b) { return 2.0 * a.real() - 3.0 * a.imag() + 0.5 * b.real() + b.imag() + 7.0; };
    EXPECT_NEAR(m.convolve(lin, z, e), lin(z, e), 1e-12);
}

TEST(Mollifier, ConvolutionConvergesAsNuShrinks) {
    const BellmanParams P(3.0, 0.05);
    const cplx z(0.7, 0.2), e(-0.4, 0.9);
    const double exact = q_value(P, z, e);
    double prev = inf;
    for (double nu : {0.4, 0.1, 0.025}) {
        const Mollifier m(nu, 9);
        const double err = std::abs(m.convolve([&](cplx a, cplx b) { return q_value(P, a, b); }, z, e) - exact);
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-2);
}

TEST(Mollifier, GradientOfConvolutionMatchesConvolvedGradient) {
    const BellmanParams P(3.0, 0.05);
    const auto& m = coarse();
    const cplx z(0.8, -0.3), e(0.5, 1.2);
    const auto g = m.convolve_grad([&](cplx a, cplx b) { return q_grad(P, a, b); }, z, e);
    const auto fd = fd_wirtinger([&](cplx a, cplx b) { return m.convolve([&](cplx x, cplx y) { return q_value(P, x, y); }, a, b); },
                                 z, e, 1e-5);
    EXPECT_LT(std::abs(g.first - fd.first), 1e-6);
    EXPECT_LT(std::abs(g.second - fd.second), 1e-6);
}

TEST(Profile, ValuesAtZeroAndAtJunction) {
    for (double p : {2.5, 3.0, 4.0})
        for (double eps : {0.0, 0.2}) {
            const double n = 4.0;
            EXPECT_EQ(fn_value(p, n, eps, 0.0), 0.0);
            EXPECT_NEAR(fn_value(p, n, eps, n), std::pow(n, p), 1e-10 * std::pow(n, p));
            EXPECT_NEAR(fn_value(p, n, eps, n * (1 + 1e-12)), fn_value(p, n, eps, n), 1e-8 * std::pow(n, p));
            EXPECT_NEAR(fn_deriv(p, n, eps, n * (1 + 1e-12)), fn_deriv(p, n, eps, n), 1e-8 * std::pow(n, p));
        }
}

TEST(Profile, PowerBranchWithoutEps) {
    for (double t : {0.1, 1.0, 2.5}) EXPECT_NEAR(fn_value(3.0, 4.0, 0.0, t), t * t * t, 1e-13);
}

TEST(Profile, DerivativeMatchesDifferences) {
    const double p = 3.0, n = 2.0, eps = 0.15, h = 1e-6;
    for (double t : {0.3, 1.0, 1.9, 2.5, 7.0}) {
        const double fd = (fn_value(p, n, eps, t + h) - fn_value(p, n, eps, t - h)) / (2 * h);
        EXPECT_NEAR(fn_deriv(p, n, eps, t), fd, 1e-6 * (1 + std::abs(fd)));
        EXPECT_NEAR(gn_value(p, n, eps, t), fn_deriv(p, n, eps, t) / t, 1e-12 * (1 + gn_value(p, n, eps, t)));
    }
}

TEST(Profile, QuadraticBeyondJunction) {
    const double p = 3.0, n = 2.0, eps = 0.1;
    // Second difference is constant: (p+eps) n^{p-2}.
    const double h = 0.5, t = 5.0;
    const double dd = (fn_value(p, n, eps, t + h) - 2 * fn_value(p, n, eps, t) + fn_value(p, n, eps, t - h)) / (h * h);
    EXPECT_NEAR(dd, (p + eps) * std::pow(n, p - 2), 1e-10);
}

TEST(Profile, RejectsBadArguments) {
    EXPECT_THROW(fn_value(3.0, 2.0, 0.1, -1.0), std::invalid_argument);
    EXPECT_THROW(fn_value(3.0, 0.5, 0.1, 1.0), std::invalid_argument);
}

TEST(Penalty, GradientMatchesDifferences) {
    const double p = 3.0, n = 2.0, eps = 0.2, K = 1.5;
    Rng g = make_rng(21);
    for (int k = 0; k < 20; ++k) {
        const CVec w = 2.0 * random_cvec(g, 2);
        const auto an = pn_grad(p, n, eps, K, w(0), w(1));
        const auto fd = fd_wirtinger([&](cplx a, cplx b) { return pn_value(p, n, eps, K, a, b); }, w(0), w(1));
        EXPECT_LT(std::abs(an.first - fd.first), 1e-6 * (1 + std::abs(an.first)));
        EXPECT_LT(std::abs(an.second - fd.second), 1e-6 * (1 + std::abs(an.second)));
    }
}

TEST(Reflection, FixesBasePointAndIsInvolution) {
    Rng g = make_rng(22);
    for (int k = 0; k < 30; ++k) {
        const std::array<double, 2> z{normal(g), normal(g)}, w{normal(g), normal(g)};
        const auto rz = reflection(z, z);
        EXPECT_NEAR(rz.P, 0.0, 1e-14);
        EXPECT_NEAR(rz.R[0], z[0], 1e-14);
        const auto r1 = reflection(z, w);
        const auto r2 = reflection(z, r1.R);
        EXPECT_NEAR(r2.R[0], w[0], 1e-12);
        EXPECT_NEAR(r2.R[1], w[1], 1e-12);
        EXPECT_NEAR(r2.P, -r1.P, 1e-12);
        // Distance to z is preserved.
        EXPECT_NEAR(std::hypot(r1.R[0] - z[0], r1.R[1] - z[1]), std::hypot(w[0] - z[0], w[1] - z[1]), 1e-12);
    }
    EXPECT_THROW(reflection({0, 0}, {1, 0}), std::invalid_argument);
}

TEST(Cutoff, PlateauAndSupport) {
    for (double r : {0.0, 1.0, 3.0}) EXPECT_EQ(cutoff_profile(r), 1.0);
    for (double r : {4.0, 5.0, 100.0}) EXPECT_EQ(cutoff_profile(r), 0.0);
    double prev = 1.0;
    for (double r = 3.0; r <= 4.0; r += 0.01) {
        const double v = cutoff_profile(r);
        EXPECT_LE(v, prev);
        prev = v;
    }
}

TEST(Cutoff, DerivativeMatchesDifferences) {
    const double h = 1e-6;
    for (double r : {3.1, 3.5, 3.9}) {
        const double fd = (cutoff_profile(r + h) - cutoff_profile(r - h)) / (2 * h);
        EXPECT_NEAR(cutoff_derivative(r), fd, 1e-6);
    }
    EXPECT_EQ(cutoff_derivative(2.0), 0.0);
    const double n = 2.0;
    const cplx z(5.0, 2.0), e(-3.0, 2.5);
    const auto an = psi_n_grad(n, z, e);
    const auto fd = fd_wirtinger([&](cplx a, cplx b) { return psi_n(n, a, b); }, z, e);
    EXPECT_LT(std::abs(an.first - fd.first), 1e-7);
    EXPECT_LT(std::abs(an.second - fd.second), 1e-7);
}

TEST(Positivity, MollifiedBellmanIsRadiallyIncreasing) {
    const RegularizedBellman R{BellmanParams(3.0, 0.05), 4.0, 0.2, 1.0, 1.0};
    const auto rep = positivity_scan(PositivityKind::Q_conv, R, coarse(), modulus_samples(60, 1e-2, 4.0, 3));
    EXPECT_GE(rep.worst, 0.0);
}

TEST(Positivity, MollifiedPenaltyIsRadiallyIncreasing) {
    const RegularizedBellman R{BellmanParams(3.0, 0.05), 2.0, 0.2, 1.0, 1.0};
    const auto rep = positivity_scan(PositivityKind::Pn_conv, R, coarse(), shell_samples(60, 0.1, 10.0, 4));
    EXPECT_GT(rep.worst, 0.0);
    EXPECT_GT(rep.quantitative_samples, 0u);
    EXPECT_GT(rep.worst_quantitative, 0.0);
}

TEST(Positivity, SamplersRespectRanges) {
    for (const auto& [z, e] : shell_samples(200, 2.0, 5.0, 7)) {
        EXPECT_GE(omega_norm(z, e), 2.0 - 1e-12);
        EXPECT_LE(omega_norm(z, e), 5.0 + 1e-12);
    }
    for (const auto& [z, e] : modulus_samples(200, 0.01, 3.0, 7)) {
        EXPECT_GE(std::abs(z), 0.01 - 1e-14);
        EXPECT_LE(std::abs(e), 3.0 + 1e-12);
    }
    EXPECT_EQ(shell_samples(5, 1, 2, 9)[3], shell_samples(5, 1, 2, 9)[3]);
}

TEST(Calibration, ReturnedConstantIsSmallestPassing) {
    RegularizedBellman R{BellmanParams(3.0, 0.05), 2.0, 0.2, 1.0, 1.0};
    const auto& m = coarse();
    const auto samples = shell_samples(60, 0.1, 4.5 * R.n, 11);
    const auto cal = calibrate_C1(R, m, samples);
    ASSERT_FALSE(cal.exhausted);
    EXPECT_GT(cal.C0, 0.0);
    const auto sweep = c1_sweep_values();
    EXPECT_EQ(sweep[cal.sweep_index], cal.C1);
    R.C1 = cal.C1;
    const auto ok = positivity_scan(PositivityKind::Rnnu, R, m, samples);
    EXPECT_GE(ok.worst, -1e-6 * std::abs(ok.worst) - 1e-9);
    if (cal.sweep_index > 0) {
        R.C1 = sweep[cal.sweep_index - 1];
        EXPECT_LT(positivity_scan(PositivityKind::Rnnu, R, m, samples).worst, 0.0);
    }
}

TEST(Calibration, InsidePlateauNoPenaltyNeeded) {
    // With every sample inside |w| < 3n the cutoff is flat and Q*phi alone is radially increasing.
    RegularizedBellman R{BellmanParams(3.0, 0.05), 8.0, 0.2, 1.0, 1.0};
    const auto cal = calibrate_C1(R, coarse(), shell_samples(40, 0.5, 2.0 * R.n, 12));
    EXPECT_FALSE(cal.exhausted);
    EXPECT_EQ(cal.sweep_index, 0);
    EXPECT_EQ(cal.C0, 0.0);
}

TEST(MollifiedConvexity, ApproachesPointwiseBoundAsNuShrinks) {
    const BellmanParams P(3.0, 0.05);
    Rng g = make_rng(31);
    CMat A = CMat::Identity(1, 1), B = CMat::Identity(1, 1);
    PointSample s;
    s.z = cplx(0.9, 0.3);
    s.e = cplx(0.2, -0.7);
    s.X = random_cvec(g, 1);
    s.Y = random_cvec(g, 1);
    const auto exact = convexity_parts(P, A, B, 0.5, 0.5, s);
    const auto mol = mollified_convexity(P, A, B, 0.5, 0.5, 0.1, Mollifier(1e-3, 7), s);
    EXPECT_NEAR(mol.lhs, exact.lhs, 1e-2 * std::abs(exact.lhs));
    EXPECT_NEAR(mol.rhs, exact.rest + 0.1 * exact.tau_term, 1e-2 * std::abs(mol.rhs));
}
