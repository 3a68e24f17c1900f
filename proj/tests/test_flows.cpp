#include <gtest/gtest.h>

#include <pellip/flows.hpp>

using namespace pellip;

namespace {

CMat complex_2x2() {
    CMat A(2, 2);
    A << cplx(1, 0.3), cplx(0.2, -0.1), cplx(-0.1, 0.2), cplx(1.2, -0.2);
    return A;
}

struct Pair {
    DiscreteOperator LA, LB;
};

Pair make_pair_ops(bool with_potential) {
    const Grid g = Grid::square(9);
    const auto bc = BoundaryCondition::full_dirichlet(g);
    Potential V = Potential::zero(g.nodes());
    if (with_potential) V = combine({well_preset(g, 2.0, Box{{0.3, 0.3}, {0.7, 0.7}}), ridge_preset(g, 5.0, Box{{0.0, 0.0}, {0.2, 1.0}})}, g.nodes());
    const auto A = MatrixField::constant(complex_2x2());
    return {assemble(g, A, V, bc), assemble(g, A.adjoint(), V, bc)};
}

std::vector<double> times() {
    std::vector<double> t{0.0};
    for (double x : log_grid(1e-3, 0.5, 8)) t.push_back(x);
    return t;
}

}  // namespace

TEST(HeatFlow, ZeroDataGivesZeroEnergy) {
    const auto ops = make_pair_ops(false);
    const CVec z = CVec::Zero(ops.LA.size());
    const auto rep = heat_flow(BellmanParams(3.0, 0.05), ops.LA, ops.LB, z, z, times());
    for (double e : rep.E) EXPECT_EQ(e, 0.0);
    EXPECT_TRUE(rep.monotone);
    EXPECT_TRUE(rep.decomposition_ok);
    EXPECT_TRUE(std::isnan(rep.dE.front()));
}

TEST(HeatFlow, QuadraticCaseIsTheL2EnergyIdentity) {
    const auto ops = make_pair_ops(true);
    Rng rng = make_rng(1);
    const CVec f = smooth_random(ops.LA, rng), g = smooth_random(ops.LB, rng);
    const BellmanParams P(2.0, 0.0, true);
    const std::vector<double> t{0.0, 0.01, 0.05};
    const auto rep = heat_flow(P, ops.LA, ops.LB, f, g, t);
    const Propagator PA(ops.LA), PB(ops.LB);
    for (std::size_t k = 0; k < t.size(); ++k) {
        const CVec u = PA.propagate(f, t[k]), v = PB.propagate(g, t[k]);
        const double l2 = std::pow(ops.LA.lp_norm(u, 2), 2) + std::pow(ops.LB.lp_norm(v, 2), 2);
        EXPECT_NEAR(rep.E[k], l2, 1e-12 * l2);
        const double rate = 2.0 * (ops.LA.form(u, u) + ops.LB.form(v, v)).real();
        EXPECT_NEAR(rep.I1[k] + rep.I2[k] - rep.I3[k], rate, 1e-10 * std::abs(rate));
        if (k > 0) EXPECT_NEAR(-rep.dE[k], rate, 1e-5 * std::abs(rate));
    }
}

TEST(HeatFlow, DerivativeDecomposes) {
    const auto ops = make_pair_ops(true);
    Rng rng = make_rng(2);
    const CVec f = smooth_random(ops.LA, rng), g = smooth_random(ops.LB, rng);
    for (double p : {1.5, 3.0}) {
        const auto rep = heat_flow(BellmanParams(std::max(p, conjugate(p)), 0.05), ops.LA, ops.LB, f, g, times());
        EXPECT_TRUE(rep.decomposition_ok) << rep.max_decomposition_error;
        EXPECT_LT(rep.max_decomposition_error, 1.0);
        for (std::size_t k = 0; k < rep.t.size(); ++k) {
            EXPECT_GE(rep.I2[k], 0.0);
            EXPECT_GE(rep.I3[k], 0.0);
        }
    }
}

TEST(HeatFlow, IdentityCoefficientsDecrease) {
    const Grid g = Grid::square(9);
    const auto bc = BoundaryCondition::full_dirichlet(g);
    const auto L = laplacian(g, bc);
    Rng rng = make_rng(3);
    const CVec f = smooth_random(L, rng), h = smooth_random(L, rng);
    const auto rep = heat_flow(BellmanParams(3.0, 0.05), L, L, f, h, times());
    EXPECT_TRUE(rep.monotone) << rep.worst_increase;
    EXPECT_TRUE(rep.decomposition_ok);
    EXPECT_LT(rep.E.back(), rep.E.front());
}

TEST(HeatFlow, InputValidation) {
    const auto ops = make_pair_ops(false);
    const Grid g1 = Grid::line(9);
    const auto other = laplacian(g1, BoundaryCondition::full_dirichlet(g1));
    const CVec f = CVec::Ones(ops.LA.size());
    const BellmanParams P(3.0, 0.05);
    EXPECT_THROW(heat_flow(P, ops.LA, other, f, CVec::Ones(other.size()), {0.0}), std::invalid_argument);
    EXPECT_THROW(heat_flow(P, ops.LA, ops.LB, f, CVec::Ones(3), {0.0}), std::invalid_argument);
    EXPECT_THROW(heat_flow(P, ops.LA, ops.LB, f, f, {0.1, 0.05}), std::invalid_argument);
    EXPECT_THROW(heat_flow(P, ops.LA, ops.LB, f, f, {-0.1}), std::invalid_argument);
}

TEST(Bilinear, IntegrandReducesToDirichletEnergy) {
    const Grid g = Grid::square(8);
    const auto L = laplacian(g, BoundaryCondition::full_dirichlet(g));
    Rng rng = make_rng(4);
    const CVec u = random_cvec(rng, L.size());
    EXPECT_NEAR(bilinear_integrand(L, L, u, u), L.grad_norm2(u), 1e-12 * L.grad_norm2(u));
}

TEST(Bilinear, ZeroDataAndScaling) {
    const auto ops = make_pair_ops(true);
    const Propagator PA(ops.LA), PB(ops.LB);
    Rng rng = make_rng(5);
    const CVec f = smooth_random(ops.LA, rng), g = smooth_random(ops.LB, rng);
    const double T = default_horizon(ops.LA, ops.LB);
    EXPECT_GT(T, 0.0);
    CMat F(f.size(), 3), G(g.size(), 3);
    F << CVec::Zero(f.size()), f, cplx(0, 2.5) * f;
    G << g, g, g;
    const auto r = bilinear_batch(PA, PB, F, G, 0.0, 0.0, T, 3.0);
    EXPECT_EQ(r[0].value, 0.0);
    EXPECT_EQ(r[0].ratio, 0.0);
    EXPECT_GT(r[1].value, 0.0);
    EXPECT_TRUE(r[1].tail_ok);
    EXPECT_NEAR(r[2].value, 2.5 * r[1].value, 1e-10 * r[2].value);
    EXPECT_NEAR(r[2].ratio, r[1].ratio, 1e-10 * r[1].ratio);
    const auto one = bilinear_estimate(BellmanParams(3.0, 0.05), ops.LA, ops.LB, f, g, 0.0, 0.0, T);
    EXPECT_NEAR(one.value, r[1].value, 1e-12 * one.value);
}

TEST(Bilinear, InputValidation) {
    const auto ops = make_pair_ops(false);
    const Propagator PA(ops.LA), PB(ops.LB);
    const CMat F = CMat::Ones(ops.LA.size(), 2), G = CMat::Ones(ops.LB.size(), 1);
    EXPECT_THROW(bilinear_batch(PA, PB, F, G, 0, 0, 1.0, 3.0), std::invalid_argument);
    EXPECT_THROW(bilinear_batch(PA, PB, F, F, 0, 0, 0.0, 3.0), std::invalid_argument);
    EXPECT_THROW(bilinear_batch(PA, PB, F, F, 1.6, 0, 1.0, 3.0), std::domain_error);
    const Grid g = Grid::square(6);
    const auto neu = laplacian(g, BoundaryCondition::neumann(g));
    EXPECT_THROW(default_horizon(neu, neu), std::invalid_argument);
}

TEST(SmoothRandom, DeterministicAndVanishingAtTheBoundary) {
    const Grid g = Grid::square(11);
    const auto mixed = laplacian(g, BoundaryCondition::mixed_left_edge(g));
    Rng a = make_rng(9), b = make_rng(9);
    const CVec u = smooth_random(mixed, a), v = smooth_random(mixed, b);
    EXPECT_EQ(u, v);
    for (Eigen::Index i = 0; i < mixed.size(); ++i)
        if (g.on_boundary(mixed.free[i])) EXPECT_LT(std::abs(u(i)), 1e-14);
    Rng c = make_rng(9);
    const CVec r = smooth_random(mixed, c, 5, false);
    EXPECT_EQ(r.imag().cwiseAbs().maxCoeff(), 0.0);
    const auto neu = laplacian(g, BoundaryCondition::neumann(g));
    Rng d = make_rng(9);
    EXPECT_GT(smooth_random(neu, d).cwiseAbs().maxCoeff(), 0.0);
}
