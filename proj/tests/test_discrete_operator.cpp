#include <gtest/gtest.h>

#include <pellip/potentials.hpp>

using namespace pellip;

namespace {

CMat dense(const SpC& S) { return CMat(S); }

MatrixField random_field(const Grid& g, Rng& rng, double shift) {
    MatrixField f;
    for (int c = 0; c < g.cells(); ++c) f.values.push_back(random_cmat(rng, g.dim) + shift * CMat::Identity(g.dim, g.dim));
    return f;
}

// Smallest eigenvalue of M^{-1} K for a Hermitian K.
double lowest(const DiscreteOperator& op) {
    Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(dense(op.K), CMat(op.mass.cast<cplx>().asDiagonal()));
    return es.eigenvalues()(0);
}

DiscreteOperator laplace(const Grid& g, const BoundaryCondition& bc) { return laplacian(g, bc); }

}  // namespace

TEST(Assemble, OneDimensionalStencil) {
    const Grid g = Grid::line(5);
    const auto op = laplace(g, BoundaryCondition::full_dirichlet(g));
    ASSERT_EQ(op.size(), 3);
    const double h = 0.25;
    CMat want = CMat::Zero(3, 3);
    for (int i = 0; i < 3; ++i) {
        want(i, i) = 2.0 / h;
        if (i > 0) want(i, i - 1) = want(i - 1, i) = -1.0 / h;
    }
    EXPECT_LT((dense(op.K) - want).cwiseAbs().maxCoeff(), 1e-12);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(op.mass(i), h, 1e-15);
}

TEST(Assemble, FivePointStencilInTwoDimensions) {
    const Grid g = Grid::square(6);
    const auto op = laplace(g, BoundaryCondition::full_dirichlet(g));
    const CMat K = dense(op.K);
    const int c = op.slot[g.index(2, 2)];
    EXPECT_NEAR(K(c, c).real(), 4.0, 1e-12);
    EXPECT_NEAR(K(c, op.slot[g.index(3, 2)]).real(), -1.0, 1e-12);
    EXPECT_NEAR(K(c, op.slot[g.index(2, 1)]).real(), -1.0, 1e-12);
    EXPECT_NEAR(std::abs(K(c, op.slot[g.index(3, 3)])), 0.0, 1e-12);
    EXPECT_NEAR(op.mass(c), g.cell_volume(), 1e-15);
}

TEST(Assemble, NeumannAnnihilatesConstants) {
    Rng rng = make_rng(1);
    for (const Grid& g : {Grid::line(9), Grid::square(7)}) {
        const auto op = assemble(g, random_field(g, rng, 3.0), Potential::zero(g.nodes()), BoundaryCondition::neumann(g));
        const CVec one = CVec::Ones(op.size());
        EXPECT_LT((op.K * one).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(std::abs(op.form(one, one)), 0.0, 1e-12);
        EXPECT_NEAR(op.mass.sum(), 1.0, 1e-12);
    }
}

TEST(Assemble, RealPartBoundedBelowByLambda) {
    Rng rng = make_rng(2);
    const Grid g = Grid::square(7);
    const auto A = random_field(g, rng, 3.0);
    ASSERT_GT(A.lambda(), 0.0);
    const auto op = assemble(g, A, Potential::zero(g.nodes()), BoundaryCondition::mixed_left_edge(g));
    for (int k = 0; k < 30; ++k) {
        const CVec u = random_cvec(rng, op.size());
        EXPECT_GE(op.form(u, u).real(), A.lambda() * op.grad_norm2(u) - 1e-10);
        EXPECT_LE(std::abs(op.form(u, u)), A.Lambda() * op.grad_norm2(u) + 1e-10);
    }
}

TEST(Assemble, AdjointFieldGivesAdjointForm) {
    Rng rng = make_rng(3);
    const Grid g = Grid::square(6);
    const auto A = random_field(g, rng, 1.0);
    Potential V = Potential::zero(g.nodes());
    for (int k = 0; k < g.nodes(); ++k) (k % 3 ? V.v_plus : V.v_minus)[k] = uniform(rng, 0, 2);
    const auto bc = BoundaryCondition::full_dirichlet(g);
    const auto op = assemble(g, A, V, bc), adj = assemble(g, A.adjoint(), V, bc);
    for (int k = 0; k < 10; ++k) {
        const CVec u = random_cvec(rng, op.size()), v = random_cvec(rng, op.size());
        EXPECT_LT(std::abs(adj.form(u, v) - std::conj(op.form(v, u))), 1e-11);
    }
    EXPECT_FALSE(op.hermitian());
    EXPECT_TRUE(laplace(g, bc).hermitian());
}

TEST(Assemble, PotentialEntersThroughLumpedMass) {
    const Grid g = Grid::line(7);
    const auto bc = BoundaryCondition::full_dirichlet(g);
    const auto V = well_preset(g, 2.0, Box{});
    const auto op = assemble(g, MatrixField::constant(CMat::Identity(1, 1)), V, bc);
    const auto lap = laplace(g, bc);
    const CVec u = CVec::Ones(op.size());
    EXPECT_NEAR((op.form(u, u) - lap.form(u, u)).real(), -2.0 * op.mass.sum(), 1e-12);
}

TEST(Assemble, GalerkinEigenvaluesConvergeQuadratically) {
    auto err1 = [](int n) {
        const Grid g = Grid::line(n);
        return std::abs(lowest(laplace(g, BoundaryCondition::full_dirichlet(g))) - pi * pi);
    };
    const double e1 = err1(17), e2 = err1(33);
    EXPECT_NEAR(std::log2(e1 / e2), 2.0, 0.1);
    auto err2 = [](int n) {
        const Grid g = Grid::square(n);
        return std::abs(lowest(laplace(g, BoundaryCondition::full_dirichlet(g))) - 2 * pi * pi);
    };
    EXPECT_NEAR(std::log2(err2(9) / err2(17)), 2.0, 0.15);
}

TEST(Assemble, MoreDirichletNodesRaiseTheBottom) {
    const Grid g = Grid::square(9);
    const double full = lowest(laplace(g, BoundaryCondition::full_dirichlet(g)));
    const double mixed = lowest(laplace(g, BoundaryCondition::mixed_left_edge(g)));
    const double neu = lowest(laplace(g, BoundaryCondition::neumann(g)));
    EXPECT_GT(full, mixed);
    EXPECT_GT(mixed, neu);
    EXPECT_NEAR(neu, 0.0, 1e-10);
}

TEST(Assemble, InputValidation) {
    const Grid g = Grid::square(5);
    const auto I = MatrixField::constant(CMat::Identity(2, 2));
    const auto bc = BoundaryCondition::full_dirichlet(g);
    EXPECT_THROW(assemble(g, I, Potential::zero(3), bc), std::invalid_argument);
    EXPECT_THROW(assemble(g, MatrixField::constant(CMat::Identity(1, 1)), Potential::zero(g.nodes()), bc),
                 std::invalid_argument);
    Potential bad = Potential::zero(g.nodes());
    bad.v_plus[7] = bad.v_minus[7] = 1.0;
    EXPECT_THROW(assemble(g, I, bad, bc), std::invalid_argument);
    BoundaryCondition inner = BoundaryCondition::neumann(g);
    inner.dirichlet[g.index(2, 2)] = true;
    EXPECT_THROW(assemble(g, I, Potential::zero(g.nodes()), inner), std::invalid_argument);
}

TEST(NumericalRange, HermitianFormsAreReal) {
    const Grid g = Grid::square(7);
    EXPECT_EQ(numerical_range_ratio(laplace(g, BoundaryCondition::full_dirichlet(g))), 0.0);
}

TEST(NumericalRange, RatioBoundsRandomVectors) {
    Rng rng = make_rng(4);
    const Grid g = Grid::square(7);
    const auto A = random_field(g, rng, 2.5);
    const auto op = assemble(g, A, Potential::zero(g.nodes()), BoundaryCondition::full_dirichlet(g));
    const double ratio = numerical_range_ratio(op);
    double seen = 0;
    for (int k = 0; k < 200; ++k) {
        const CVec u = random_cvec(rng, op.size());
        const cplx a = op.form(u, u);
        seen = std::max(seen, std::abs(a.imag()) / a.real());
    }
    EXPECT_LE(seen, ratio * (1 + 1e-8));
    // Dense generalized eigenvalues of (Hi, Hr) as the reference.
    const CMat S = dense(op.form_matrix());
    const CMat Hr = 0.5 * (S + S.adjoint()), Hi = cplx(0, -0.5) * (S - S.adjoint());
    const RVec ev = Eigen::GeneralizedSelfAdjointEigenSolver<CMat>(Hi, Hr).eigenvalues();
    EXPECT_NEAR(ratio, std::max(ev.maxCoeff(), -ev.minCoeff()), 1e-8 * ratio);
    const auto nr = numerical_range_angle(op, 0.0);
    EXPECT_TRUE(nr.within);
    EXPECT_NEAR(nr.angle, std::atan(ratio), 1e-14);
}

TEST(NumericalRange, UndefinedBoundIsReported) {
    const Grid g = Grid::line(9);
    const auto op = laplace(g, BoundaryCondition::full_dirichlet(g));
    const auto nr = numerical_range_angle(op, 2.0);
    EXPECT_TRUE(std::isnan(nr.bound));
    EXPECT_FALSE(nr.within);
}

TEST(Dissipativity, LaplacianIsDissipativeForEveryP) {
    Rng rng = make_rng(5);
    for (const Grid& g : {Grid::line(21), Grid::square(8)}) {
        const auto op = laplace(g, BoundaryCondition::full_dirichlet(g));
        for (double p : {1.2, 2.0, 3.0, 8.0})
            for (int k = 0; k < 20; ++k) EXPECT_GE(lp_dissipativity(op, p, random_cvec(rng, op.size())), -1e-12);
    }
}

TEST(Dissipativity, PTwoIsTheRealPartOfTheForm) {
    Rng rng = make_rng(6);
    const Grid g = Grid::square(6);
    const auto op = assemble(g, random_field(g, rng, 1.0), Potential::zero(g.nodes()), BoundaryCondition::neumann(g));
    const CVec u = random_cvec(rng, op.size());
    EXPECT_NEAR(lp_dissipativity(op, 2.0, u), op.form(u, u).real(), 1e-10);
    EXPECT_EQ(lp_dissipativity(op, 3.0, CVec::Zero(op.size())), 0.0);
    EXPECT_THROW(lp_dissipativity(op, 1.0, u), std::invalid_argument);
}

TEST(Garding, ScalesWithCoefficient) {
    const Grid g = Grid::square(7);
    const auto bc = BoundaryCondition::full_dirichlet(g);
    const auto Z = Potential::zero(g.nodes());
    EXPECT_NEAR(garding_constant(assemble(g, MatrixField::constant(CMat::Identity(2, 2)), Z, bc)), 1.0, 1e-8);
    EXPECT_NEAR(garding_constant(assemble(g, MatrixField::constant(2.0 * CMat::Identity(2, 2)), Z, bc)), 2.0, 1e-8);
    const auto R = ridge_preset(g, 5.0, Box{{0.0, 0.0}, {0.5, 1.0}});
    EXPECT_NEAR(garding_constant(assemble(g, MatrixField::constant(CMat::Identity(2, 2)), R, bc)), 1.0, 1e-8);
}

TEST(Norms, MassWeightedLp) {
    const Grid g = Grid::line(11);
    const auto op = laplace(g, BoundaryCondition::neumann(g));
    const CVec one = CVec::Ones(op.size());
    EXPECT_NEAR(op.lp_norm(one, 2.0), 1.0, 1e-14);
    EXPECT_NEAR(op.lp_norm(2.0 * one, 3.0), 2.0, 1e-14);
    const CVec x = op.to_full(one);
    EXPECT_EQ(op.restrict_to_free(x), one);
}
