#include <gtest/gtest.h>

#include <pellip/bellman.hpp>

using namespace pellip;

namespace {

MatrixField eye(int d) { return MatrixField::constant(CMat::Identity(d, d)); }

/// Point with log-uniform moduli, kept away from the interface and from e = 0.
std::pair<cplx, cplx> off_interface(const BellmanParams& P, Rng& g, double lo = 0.05, double hi = 5.0) {
    for (;;) {
        const cplx z = log_uniform(g, lo, hi) * random_phase(g), e = log_uniform(g, lo, hi) * random_phase(g);
        const double a = std::pow(std::abs(z), P.p), b = std::pow(std::abs(e), P.q);
        if (std::abs(a - b) > 0.05 * (a + b)) return {z, e};
    }
}

/// Wirtinger derivative d/dz = (d/dx - i d/dy)/2 by central differences.
cplx wirtinger(const std::function<double(cplx)>& f, cplx z, double h) {
    const double dx = (f(z + h) - f(z - h)) / (2 * h);
    const double dy = (f(z + cplx(0, h)) - f(z - cplx(0, h))) / (2 * h);
    return 0.5 * cplx(dx, -dy);
}

}  // namespace

TEST(Params, Validation) {
    EXPECT_THROW(BellmanParams(1.5, 0.1), std::invalid_argument);
    EXPECT_THROW(BellmanParams(3.0, 0.0), std::invalid_argument);
    EXPECT_THROW(BellmanParams(3.0, 1.0), std::invalid_argument);
    EXPECT_NO_THROW(BellmanParams(2.0, 0.0, true));
    const BellmanParams P(3.0, 0.1);
    EXPECT_DOUBLE_EQ(1.0 / P.p + 1.0 / P.q, 1.0);
}

TEST(QValue, Examples) {
    const BellmanParams P(4.0, 0.1);
    EXPECT_EQ(q_value(P, 0.0, 0.0), 0.0);
    EXPECT_NEAR(q_value(P, 1.0, 0.0), 1.05, 1e-15);
}

TEST(QValue, BranchesAgreeOnInterface) {
    Rng g = make_rng(1);
    for (double p : {2.5, 3.0, 4.0, 7.0}) {
        const BellmanParams P(p, 0.1);
        for (int k = 0; k < 50; ++k) {
            const double s = log_uniform(g, 1e-2, 1e2);
            const double r = std::pow(s, P.q / P.p);
            const cplx z = r * random_phase(g), e = s * random_phase(g);
            const double a = q_value_above_formula(P, z, e), b = q_value_below_formula(P, z, e);
            EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST(QValue, RotationInvariant) {
    Rng g = make_rng(2);
    const BellmanParams P(3.0, 0.2);
    for (int k = 0; k < 100; ++k) {
        const cplx z = random_cvec(g, 1)(0), e = random_cvec(g, 1)(0);
        EXPECT_EQ(q_value(P, z, e), q_value(P, std::abs(z), std::abs(e)));
        EXPECT_NEAR(q_value(P, z * random_phase(g), e * random_phase(g)), q_value(P, z, e), 1e-13 * q_value(P, z, e));
    }
}

TEST(QGrad, FirstOrderIdentityExample) {
    const BellmanParams P(4.0, 0.1);
    const auto [gz, ge] = q_grad(P, 1.0, 0.0);
    EXPECT_NEAR(2.0 * (gz * cplx(1.0)).real(), 4.2, 1e-14);
    EXPECT_EQ(ge, cplx(0.0));
}

TEST(QGrad, MatchesCentralDifferences) {
    Rng g = make_rng(3);
    for (double p : {2.5, 4.0}) {
        const BellmanParams P(p, 0.1);
        for (int k = 0; k < 200; ++k) {
            const auto [z, e] = off_interface(P, g);
            const auto [gz, ge] = q_grad(P, z, e);
            const cplx nz = wirtinger([&](cplx a) { return q_value(P, a, e); }, z, 1e-5);
            const cplx ne = wirtinger([&](cplx b) { return q_value(P, z, b); }, e, 1e-5);
            EXPECT_LT(std::abs(gz - nz), 1e-6 * std::max(1.0, std::abs(gz)));
            EXPECT_LT(std::abs(ge - ne), 1e-6 * std::max(1.0, std::abs(ge)));
        }
    }
}

TEST(QGrad, FirstOrderIdentityAndBounds) {
    for (double p : {2.0, 2.5, 4.0, 10.0}) {
        const auto c = first_order_check(BellmanParams(p, 0.1), 5000, 4);
        EXPECT_TRUE(c.passed()) << p << " " << c.max_identity_error;
        EXPECT_GE(c.min_e_ratio, conjugate(p) * (1 - 1e-12));
    }
}

TEST(QHessian, MatchesDifferencesOfGradient) {
    Rng g = make_rng(5);
    const BellmanParams P(3.0, 0.1);
    for (int k = 0; k < 50; ++k) {
        const auto [z, e] = off_interface(P, g, 0.2, 3.0);
        const RMat H = q_hessian(P, z, e);
        // Real gradient (dQ/dx1, dQ/dy1, dQ/dx2, dQ/dy2) = 2 (Re, -Im) of the Wirtinger pair.
        auto grad = [&](cplx a, cplx b) {
            const auto [gz, ge] = q_grad(P, a, b);
            RVec v(4);
            v << 2 * gz.real(), -2 * gz.imag(), 2 * ge.real(), -2 * ge.imag();
            return v;
        };
        const double h = 1e-6;
        for (int j = 0; j < 4; ++j) {
            cplx dz = 0, de = 0;
            (j < 2 ? dz : de) = j % 2 == 0 ? cplx(h, 0) : cplx(0, h);
            const RVec col = (grad(z + dz, e + de) - grad(z - dz, e - de)) / (2 * h);
            EXPECT_LT((col - H.col(j)).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, H.cwiseAbs().maxCoeff()));
        }
    }
}

TEST(Tau, Examples) {
    const BellmanParams P(4.0, 0.1);
    EXPECT_EQ(tau(P, 2.0, 1.0), 4.0);
    const cplx e(0.3, 0.4);
    EXPECT_NEAR(tau(P, 0.0, e), std::pow(0.5, 2.0 - P.q), 1e-15);
    Rng g = make_rng(6);
    for (int k = 0; k < 100; ++k) {
        const CVec w = random_cvec(g, 2);
        EXPECT_GT(tau(P, w(0), w(1)), 0.0);
    }
    EXPECT_THROW(tau_inv(P, 0.0, 0.0), std::domain_error);
    EXPECT_THROW(tau_CD(P, 1.0, 0.0, 0.0), std::domain_error);
    EXPECT_NEAR(tau_CD(P, 1.0, 2.0, 1.0), 3.0 * 4.0, 1e-14);
    EXPECT_NEAR(tau_CD(P, 2.0, 0.1, 1.0), 2.0, 1e-14);
}

TEST(HessF, Examples) {
    Rng g = make_rng(7);
    for (int k = 0; k < 20; ++k) {
        const cplx z = random_cvec(g, 1)(0);
        const CVec X = random_cvec(g, 3);
        EXPECT_NEAR(hessF_identity(2.0, z, X), 2.0 * X.squaredNorm(), 1e-12 * X.squaredNorm());
        EXPECT_EQ(hessF_identity(3.0, z, CVec::Zero(3)), 0.0);
    }
    EXPECT_THROW(hessF_identity(1.5, 0.0, CVec::Ones(2)), std::domain_error);
    EXPECT_THROW(hessF_identity(1.0, 1.0, CVec::Ones(2)), std::invalid_argument);
}

TEST(HessF, DominatesGradientOfPowerForm) {
    // (q/4) H_{F_p}[z;X] >= |grad(|u|^{p/2-1}u)|^2 expressed pointwise.
    Rng g = make_rng(8);
    for (double p : {2.5, 4.0, 8.0}) {
        const BellmanParams P(p, 0.1);
        for (int k = 0; k < 100; ++k) {
            const cplx z = random_cvec(g, 1)(0);
            const CVec X = random_cvec(g, 2);
            const CVec W = unrotate(z, X);
            const double grad2 = std::pow(std::abs(z), p - 2) * (0.25 * p * p * W.real().squaredNorm() + W.imag().squaredNorm());
            EXPECT_NEAR(chain_grad_Gp(P, z, 0.0, X, CVec::Zero(2)).squaredNorm(), grad2, 1e-10 * (1 + grad2));
            EXPECT_GE(0.25 * P.q * hessF_identity(p, z, X), grad2 * (1 - 1e-12));
        }
    }
}

TEST(HGB, Examples) {
    Rng g = make_rng(9);
    const BellmanParams P(3.0, 0.1);
    for (int k = 0; k < 50; ++k) {
        const CVec w = random_cvec(g, 2);
        const CVec X = random_cvec(g, 2), Y = random_cvec(g, 2);
        const auto v0 = hgb_values(P, w(0), w(1), X, CVec::Zero(2));
        const double base = std::pow(std::abs(w(1)), 2 - P.q) * X.squaredNorm();
        EXPECT_NEAR(v0.b, base, 1e-12 * base);
        EXPECT_NEAR(v0.K, base, 1e-12 * base);
        const auto v = hgb_values(P, w(0), w(1), X, Y);
        if (above_branch(P, std::abs(w(0)), std::abs(w(1)))) {
            EXPECT_EQ(v.h, v.g);
            EXPECT_EQ(v.h, hgb_values(P, w(0), w(1), X, 7.0 * Y).h);
        } else {
            EXPECT_EQ(v.h, v.b);
            EXPECT_LE(v.b, v.K * (1 + 1e-12));
        }
    }
    EXPECT_THROW(b_p(P, 1.0, 0.0, CVec::Ones(1), CVec::Ones(1)), std::domain_error);
    EXPECT_THROW(K_q(P, 0.0, CVec::Ones(1), CVec::Ones(1)), std::domain_error);
}

TEST(ChainRule, ZeroGradients) {
    const BellmanParams P(3.0, 0.1);
    EXPECT_EQ(chain_grad_Gp(P, cplx(0.3, 0.1), cplx(2.0, 0.5), CVec::Zero(2), CVec::Zero(2)), CVec::Zero(2));
    EXPECT_EQ(chain_grad_Gp(P, cplx(2.0, 0.1), cplx(0.1, 0.5), CVec::Zero(2), CVec::Zero(2)), CVec::Zero(2));
}

TEST(ChainRule, SquaredNormMatchesHp) {
    // |grad G_p|^2 = h_p: g_p above the interface, b_p below.
    Rng g = make_rng(10);
    const BellmanParams P(3.0, 0.1);
    for (int k = 0; k < 100; ++k) {
        const auto [u, v] = off_interface(P, g);
        const CVec Xu = random_cvec(g, 2), Xv = random_cvec(g, 2);
        const double n2 = chain_grad_Gp(P, u, v, Xu, Xv).squaredNorm();
        const double h = h_p(P, u, v, Xu, Xv);
        EXPECT_NEAR(n2, h, 1e-10 * h);
    }
}

TEST(ChainRule, MatchesFiniteDifferences) {
    // One-dimensional line through (u, v) with direction (Xu, Xv): d/dt G_p(u + t Xu, v + t Xv).
    Rng g = make_rng(11);
    for (double p : {2.5, 3.0, 5.0}) {
        const BellmanParams P(p, 0.1);
        for (int k = 0; k < 100; ++k) {
            const auto [u, v] = off_interface(P, g, 0.2, 3.0);
            const cplx a = random_cvec(g, 1)(0), b = random_cvec(g, 1)(0);
            CVec Xu(1), Xv(1);
            Xu << a;
            Xv << b;
            const double h = 1e-6;
            const cplx fd = (G_p(P, u + h * a, v + h * b) - G_p(P, u - h * a, v - h * b)) / (2 * h);
            const cplx an = chain_grad_Gp(P, u, v, Xu, Xv)(0);
            EXPECT_LT(std::abs(fd - an), 1e-6 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST(ChainRule, BranchGradientsAgreeOnInterface) {
    // If |u|^p = |v|^q along a curve, both branch formulas give the same derivative there.
    Rng g = make_rng(12);
    const BellmanParams P(3.0, 0.1);
    for (int k = 0; k < 50; ++k) {
        const cplx u = log_uniform(g, 0.1, 10) * random_phase(g), phase = random_phase(g);
        CVec Xu(1);
        Xu << random_cvec(g, 1)(0);
        // v = |u|^{p/q} phase, so grad v = (p/q) |u|^{p/q-1} Re(sign(conj u) Xu) phase.
        const double r = std::abs(u), e = P.p / P.q;
        const cplx v = std::pow(r, e) * phase;
        CVec Xv(1);
        Xv << e * std::pow(r, e - 1) * (std::conj(u) / r * Xu(0)).real() * phase;
        const CVec above = chain_grad_Gp(P, u, v, Xu, Xv);
        const CVec below = chain_grad_Gp(P, u, v * (1 + 1e-12), Xu, Xv);
        ASSERT_FALSE(above_branch(P, std::abs(u), std::abs(v * (1 + 1e-12))));
        EXPECT_LT((above - below).norm(), 1e-9 * std::max(1.0, above.norm()));
    }
}

TEST(Growth, ConstantsHoldOnSamples) {
    for (double p : {2.0, 3.0, 6.0})
        for (double d : {0.01, 0.3}) {
            const auto c = first_order_check(BellmanParams(p, d), 20000, 13);
            EXPECT_EQ(c.growth_violations, 0u) << p << " " << d;
        }
}

TEST(Certificate, PTwoNoPerturbation) {
    for (double d : {0.05, 0.3}) {
        const auto c = certify_convexity(BellmanParams(2.0, d), eye(2), eye(2), 0.0, 0.0, 5000, false, 3);
        EXPECT_TRUE(c.passed());
        EXPECT_GE(c.worst_slack, 0.0);
    }
}

TEST(Certificate, ZeroDirectionsHaveZeroSlack) {
    const BellmanParams P(3.0, 0.1);
    PointSample s{cplx(0.7, 0.2), cplx(1.3, -0.4), CVec::Zero(2), CVec::Zero(2), 0};
    const auto o = convexity_parts(P, CMat::Identity(2, 2), CMat::Identity(2, 2), 0.5, 0.5, s);
    EXPECT_EQ(o.lhs, 0.0);
    EXPECT_EQ(o.rest, 0.0);
    EXPECT_EQ(o.tau_term, 0.0);
}

TEST(Certificate, SupercriticalMuFindsWitness) {
    for (double p : {2.5, 4.0}) {
        const double th = 4.0 / (p * conjugate(p));
        const auto c = certify_convexity(BellmanParams(p, 0.05), eye(2), eye(2), 1.2 * th, 0.0, 5000, true, 4);
        EXPECT_FALSE(c.passed());
        EXPECT_LT(c.worst_slack, 0.0);
    }
}

TEST(Certificate, SubcriticalMuPassesAndGivesPositiveCtilde) {
    const double p = 3.0, th = 4.0 / (p * conjugate(p));
    const auto c = certify_convexity(BellmanParams(p, 0.05), eye(2), eye(2), 0.5 * th, 0.5 * th, 10000, true, 5);
    EXPECT_TRUE(c.passed());
    EXPECT_GT(c.Ctilde, 0.0);
}

TEST(Certificate, DeterministicAndRejectsZeroSamples) {
    const BellmanParams P(3.0, 0.05);
    const auto a = certify_convexity(P, eye(2), eye(2), 0.3, 0.3, 3000, false, 6);
    const auto b = certify_convexity(P, eye(2), eye(2), 0.3, 0.3, 3000, false, 6);
    EXPECT_EQ(a.worst_slack, b.worst_slack);
    EXPECT_EQ(a.Ctilde, b.Ctilde);
    EXPECT_THROW(certify_convexity(P, eye(2), eye(2), 0.3, 0.3, 0), std::invalid_argument);
}

TEST(Certificate, DeltaSweepReturnsPassingDelta) {
    const double p = 4.0, th = 4.0 / (p * conjugate(p));
    const double d = delta_sweep(p, eye(2), eye(2), 0.5 * th, 0.5 * th, 5000, 1, true);
    ASSERT_GT(d, 0.0);
    EXPECT_TRUE(certify_convexity(BellmanParams(p, d), eye(2), eye(2), 0.5 * th, 0.5 * th, 5000, true, 1).passed());
}
