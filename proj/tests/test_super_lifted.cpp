#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace rhilc;
using namespace rhilc::testing;

TEST(BuildSuper, SingleIterationIsLifted) {
    Rng rng(21);
    const auto lifted = build_lifted(rng.system(2, 1), 5);
    const auto s = build_super(lifted, 1);
    EXPECT_EQ(s.G, lifted.G);
    EXPECT_EQ(s.F, lifted.F);
}

TEST(BuildSuper, NilpotentCouplingIsBlockDiagonal) {
    const auto lifted = build_lifted(StateSpaceModel<double>(MatD::Zero(1, 1), MatD::Ones(1, 1)), 3);
    const auto s = build_super(lifted, 3);
    EXPECT_EQ(s.G, MatD::Identity(9, 9));
    EXPECT_EQ(s.F, MatD::Zero(9, 1));
}

TEST(BuildSuper, NominalPlantMatchesChainedSimulation) {
    const auto cfg = nominal_config();
    const StateSpaceModel<double> model(cfg.A, cfg.B);
    const auto s = build_super(build_lifted(model, cfg.n_s), 3);
    Rng rng(22);
    const VecD u = rng.vector(3 * cfg.n_s);
    const VecD x0 = rng.vector(2);
    EXPECT_LE(rel_error(s.predict(u, x0), chained_simulation({model, model, model}, u, x0)), 1e-10);
}

TEST(BuildSuper, BlockStructure) {
    Rng rng(23);
    const auto lifted = build_lifted(rng.system(2, 1), 4);
    const int n_i = 4;
    const auto s = build_super(lifted, n_i);
    const MatD FE = lifted.F * lifted.E_F;
    for (int a = 0; a < n_i; ++a) {
        EXPECT_LE(max_abs(s.F.middleRows(8 * a, 8) - power(FE, a) * lifted.F), 1e-12);
        for (int b = 0; b < n_i; ++b) {
            const MatD block = s.G.block(8 * a, 4 * b, 8, 4);
            if (a < b) EXPECT_EQ(max_abs(block), 0.0);
            else if (a == b) EXPECT_EQ(block, lifted.G);
            else EXPECT_LE(max_abs(block - power(FE, a - b) * lifted.G), 1e-12);
        }
    }
}

TEST(BuildSuperLtv, IdenticalModelsEqualLti) {
    Rng rng(24);
    const auto lifted = build_lifted(rng.system(3, 2), 4);
    const std::vector<LiftedModel<double>> seq(3, lifted);
    const auto a = build_super_ltv<double>(seq);
    const auto b = build_super(lifted, 3);
    EXPECT_LE(max_abs(a.G - b.G), 1e-14);
    EXPECT_LE(max_abs(a.F - b.F), 1e-14);
}

TEST(BuildSuperLtv, TwoScalarModelsByHand) {
    const auto m1 = build_lifted(StateSpaceModel<double>(MatD::Constant(1, 1, 2.0), MatD::Ones(1, 1)), 1);
    const auto m2 = build_lifted(StateSpaceModel<double>(MatD::Constant(1, 1, 3.0), MatD::Constant(1, 1, 5.0)), 1);
    const std::vector<LiftedModel<double>> seq{m1, m2};
    const auto s = build_super_ltv<double>(seq);
    // [[G1, 0], [F2 E_F G1, G2]] and [F1; F2 E_F F1]
    EXPECT_EQ(s.G, (MatD(2, 2) << 1, 0, 3, 5).finished());
    EXPECT_EQ(s.F, (MatD(2, 1) << 2, 6).finished());
}

TEST(BuildSuperLtv, RandomPerIterationModelsMatchChain) {
    Rng rng(25);
    std::vector<StateSpaceModel<double>> plants;
    std::vector<LiftedModel<double>> lifted;
    for (int a = 0; a < 3; ++a) {
        plants.push_back(rng.system(2, 1, 1.05));
        lifted.push_back(build_lifted(plants.back(), 6));
    }
    const auto s = build_super_ltv<double>(lifted);
    const VecD u = rng.vector(18);
    const VecD x0 = rng.vector(2);
    EXPECT_LE(rel_error(s.predict(u, x0), chained_simulation(plants, u, x0)), 1e-10);
}

TEST(BuildSuperLtv, RejectsEmptyAndMismatched) {
    EXPECT_THROW(build_super_ltv<double>(std::span<const LiftedModel<double>>{}), InvalidInput);
    Rng rng(26);
    const std::vector<LiftedModel<double>> seq{build_lifted(rng.system(2, 1), 3), build_lifted(rng.system(2, 1), 4)};
    EXPECT_THROW(build_super_ltv<double>(seq), InvalidInput);
}

TEST(BuildSuper, PropertyChainedOracle) {
    Rng rng(27);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index nx = rng.integer(1, 3);
        const Eigen::Index nu = rng.integer(1, 2);
        const int n_s = rng.integer(1, 10);
        const int n_i = rng.integer(1, 4);
        const auto model = rng.system(nx, nu);
        const auto s = build_super(build_lifted(model, n_s), n_i);
        const VecD u = rng.vector(n_i * n_s * nu);
        const VecD x0 = rng.vector(nx);
        const std::vector<StateSpaceModel<double>> plants(static_cast<std::size_t>(n_i), model);
        ASSERT_LE(rel_error(s.predict(u, x0), chained_simulation(plants, u, x0)), 1e-10);
    }
}

TEST(Operators, DifferencePatternScalar) {
    const auto ops = build_operators<double>(1, 1, 1, 2);
    EXPECT_EQ(ops.D_u, (MatD(1, 2) << 1, -1).finished());
}

TEST(Operators, FirstBlockSelection) {
    const auto ops = build_operators<double>(2, 1, 1, 3);
    const VecD u = (VecD(6) << 1, 2, 3, 4, 5, 6).finished();
    EXPECT_EQ(ops.E_u * u, (VecD(2) << 1, 2).finished());
}

TEST(Operators, SingleIterationDifferenceIsEmpty) {
    const auto ops = build_operators<double>(3, 2, 1, 1);
    EXPECT_EQ(ops.D_u.rows(), 0);
    EXPECT_EQ(ops.D_x.rows(), 0);
    EXPECT_EQ(ops.D_u.cols(), 3);
    const MatD quad = ops.D_u.transpose() * MatD::Zero(0, 0) * ops.D_u;
    EXPECT_EQ(quad, MatD::Zero(3, 3));
    EXPECT_EQ(ops.E_u, MatD::Identity(3, 3));
}

TEST(Operators, StackedConstantHasZeroDifference) {
    Rng rng(28);
    const auto ops = build_operators<double>(4, 2, 2, 4);
    const VecD u = rng.vector(ops.lifted_u());
    EXPECT_EQ(max_abs(ops.D_u * (ops.I_u * u)), 0.0);
    const VecD x = rng.vector(ops.lifted_x());
    EXPECT_EQ(max_abs(ops.D_x * (ops.I_x * x)), 0.0);
}

TEST(SuperError, PerfectTracking) {
    Rng rng(29);
    const auto ops = build_operators<double>(3, 2, 1, 3);
    const VecD r = rng.vector(6);
    EXPECT_EQ(super_error(VecD(ops.I_x * r), r, ops), VecD::Zero(18));
}

TEST(SuperError, ZeroReferenceNegates) {
    Rng rng(30);
    const auto ops = build_operators<double>(3, 2, 1, 2);
    const VecD x = rng.vector(12);
    EXPECT_EQ(super_error(x, VecD(VecD::Zero(6)), ops), -x);
}

TEST(SuperError, Reconstruction) {
    Rng rng(31);
    const auto ops = build_operators<double>(3, 2, 1, 2);
    const VecD x = rng.vector(12);
    const VecD r = rng.vector(6);
    EXPECT_LE(max_abs(super_error(x, r, ops) + x - ops.I_x * r), 1e-15);
}

}  // namespace
