#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace rhilc;
using namespace rhilc::testing;

PlanningProblem random_problem(const Instance& inst, Rng& rng) {
    const auto& ops = inst.ops;
    PlanningProblem p{&inst.weights, &inst.ops, &inst.super_model, &inst.lifted, {}, {}};
    p.state = {rng.vector(ops.lifted_u()), rng.vector(ops.lifted_x()), rng.vector(ops.n_x), rng.vector(ops.n_x)};
    p.r = p.state.e_prev + p.x_prev();
    return p;
}

double stationarity(const PlanningProblem& p, const VecD& u) {
    const double scale = 1.0 + fd_gradient(p, VecD::Zero(u.size())).cwiseAbs().maxCoeff();
    return fd_gradient(p, u).cwiseAbs().maxCoeff() / scale;
}

TEST(Synthesize, NoTrackingIncentive) {
    Rng rng(61);
    const auto model = rng.system(2, 1);
    const auto lifted = build_lifted(model, 4);
    const auto ops = build_operators<double>(4, 2, 1, 2);
    WeightConfig<double> cfg;
    cfg.q_u = VecD::Ones(1);
    cfg.q_delta_u = VecD::Constant(1, 0.2);
    cfg.q_x = cfg.q_e = cfg.s_x = VecD::Zero(2);
    cfg.q_delta_x = VecD::Constant(2, 0.1);
    const auto w = assemble_weights(cfg, ops);
    const auto sup = build_super(lifted, 2);
    const auto f = synthesize(sup, lifted, w, ops);
    // the increment weight still shapes L_0 through the hat state weight
    EXPECT_LE(max_abs(f.L_0 - (w.Qh_u + sup.G.transpose() * w.Qh_x * sup.G)), 1e-12);
    EXPECT_EQ(max_abs(f.L_e), 0.0);
    EXPECT_EQ(max_abs(f.L_c), 0.0);
}

TEST(Synthesize, ZeroEconomicTermGivesZeroConstant) {
    Rng rng(62);
    const auto lifted = build_lifted(rng.system(2, 1), 5);
    const auto ops = build_operators<double>(5, 2, 1, 3);
    auto cfg = rng.weight_config(2, 1);
    cfg.s_x.setZero();
    const auto f = synthesize(build_super(lifted, 3), lifted, assemble_weights(cfg, ops), ops);
    EXPECT_EQ(max_abs(f.L_c), 0.0);
}

TEST(Synthesize, SingularL0IsRejected) {
    Rng rng(63);
    const auto lifted = build_lifted(rng.system(2, 1), 3);
    const auto ops = build_operators<double>(3, 2, 1, 1);
    WeightConfig<double> cfg;
    cfg.q_u = cfg.q_delta_u = VecD::Zero(1);
    cfg.q_x = cfg.q_delta_x = cfg.q_e = cfg.s_x = VecD::Zero(2);
    try {
        synthesize(build_super(lifted, 1), lifted, assemble_weights(cfg, ops), ops);
        FAIL() << "expected SynthesisError";
    } catch (const SynthesisError& e) {
        EXPECT_LT(e.rcond(), kMinL0Rcond);
    }
}

TEST(Synthesize, RejectsDimensionMismatch) {
    Rng rng(64);
    const auto lifted = build_lifted(rng.system(2, 1), 3);
    const auto ops = build_operators<double>(4, 2, 1, 2);
    const auto w = assemble_weights(rng.weight_config(2, 1), ops);
    EXPECT_THROW(synthesize(build_super(lifted, 2), lifted, w, ops), InvalidInput);
}

TEST(Synthesize, NominalConfigIsStationary) {
    const auto cfg = nominal_config();
    const StateSpaceModel<double> model(cfg.A, cfg.B);
    const auto lifted = build_lifted(model, cfg.n_s);
    const auto super_model = build_super(lifted, cfg.n_i);
    const auto ops = build_operators<double>(cfg.n_s, 2, 1, cfg.n_i);
    const auto w = assemble_weights(cfg.weights, ops);
    const auto f = synthesize(super_model, lifted, w, ops);
    for (const MatD* M : {&f.L_u, &f.L_e, &f.L_x0j, &f.L_x0j1}) EXPECT_TRUE(M->allFinite());
    Rng rng(65);
    PlanningProblem p{&w, &ops, &super_model, &lifted, {}, {}};
    p.state = {rng.vector(50), rng.vector(100), rng.vector(2), rng.vector(2)};
    p.r = p.state.e_prev + p.x_prev();
    EXPECT_LE(stationarity(p, update_law(f, p.state)), 1e-6);
}

TEST(UpdateLaw, ZeroDataGivesZeroPlan) {
    Rng rng(66);
    auto inst = random_instance(rng, 2, 1, 4, 2);
    inst.filters.L_c.setZero();
    const ControllerState<double> s{VecD::Zero(4), VecD::Zero(8), VecD::Zero(2), VecD::Zero(2)};
    EXPECT_EQ(update_law(inst.filters, s), VecD::Zero(8));
}

TEST(UpdateLaw, MatchesDenseQpAndIsStationary) {
    Rng rng(67);
    for (int trial = 0; trial < 20; ++trial) {
        const int n_i = rng.integer(1, 4);
        const auto inst = random_instance(rng, rng.integer(1, 3), rng.integer(1, 2), rng.integer(1, 6), n_i);
        const auto p = random_problem(inst, rng);
        const VecD u = update_law(inst.filters, p.state);
        ASSERT_LE(rel_error(u, dense_qp_minimizer(p, u.size())), 1e-8);
        ASSERT_LE(stationarity(p, u), 1e-6);
    }
}

TEST(UpdateLaw, SingleIterationHorizonIsStationary) {
    Rng rng(68);
    const auto inst = random_instance(rng, 2, 1, 8, 1);
    const auto p = random_problem(inst, rng);
    const VecD u = receding_step(update_law(inst.filters, p.state), inst.ops);
    EXPECT_LE(stationarity(p, u), 1e-6);
}

TEST(UpdateLaw, Superposition) {
    Rng rng(69);
    const auto inst = random_instance(rng, 2, 2, 4, 3);
    const auto& ops = inst.ops;
    auto rand_state = [&] {
        return ControllerState<double>{rng.vector(ops.lifted_u()), rng.vector(ops.lifted_x()), rng.vector(2),
                                       rng.vector(2)};
    };
    const auto a = rand_state(), b = rand_state();
    const ControllerState<double> sum{a.u_prev + b.u_prev, a.e_prev + b.e_prev, a.x0_prev + b.x0_prev,
                                      a.x0_next + b.x0_next};
    const ControllerState<double> zero{VecD::Zero(ops.lifted_u()), VecD::Zero(ops.lifted_x()), VecD::Zero(2),
                                       VecD::Zero(2)};
    const VecD lhs = update_law(inst.filters, sum) + update_law(inst.filters, zero);
    const VecD rhs = update_law(inst.filters, a) + update_law(inst.filters, b);
    EXPECT_LE(max_abs(lhs - rhs), 1e-12 * (1 + max_abs(rhs)));
}

TEST(UpdateLaw, RejectsWrongState) {
    Rng rng(70);
    const auto inst = random_instance(rng, 2, 1, 4, 2);
    const ControllerState<double> s{VecD::Zero(3), VecD::Zero(8), VecD::Zero(2), VecD::Zero(2)};
    EXPECT_THROW(update_law(inst.filters, s), InvalidInput);
}

TEST(RecedingStep, SingleIterationPassthrough) {
    const auto ops = build_operators<double>(3, 1, 1, 1);
    const VecD u = (VecD(3) << 1, 2, 3).finished();
    EXPECT_EQ(receding_step(u, ops), u);
}

TEST(RecedingStep, FirstBlock) {
    const auto ops = build_operators<double>(2, 1, 1, 3);
    const VecD u = (VecD(6) << 1, 2, 3, 4, 5, 6).finished();
    EXPECT_EQ(receding_step(u, ops), (VecD(2) << 1, 2).finished());
    EXPECT_THROW(receding_step(VecD(VecD::Zero(5)), ops), InvalidInput);
}

}  // namespace
