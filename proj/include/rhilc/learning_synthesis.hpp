#pragma once

#include <cmath>
#include <sstream>

#include "rhilc/performance_index.hpp"

namespace rhilc {

/// Reciprocal condition estimate below which L_0 is rejected.
inline constexpr double kMinL0Rcond = 1e-12;

/**
 * Affine learning filters of the receding-horizon update
 *
 *     u_sup = L_u u_j + L_e e_j + L_x0j x0_j + L_x0j1 x0_{j+1} + L_c
 *
 * obtained by zeroing the gradient of the super-block cost in u_sup, with the
 * previous lifted state written as G u_j + F x0_j and the reference as e_j + x_j:
 *
 *     L_0    = Qh_u + G'(Qh_x + Qh_e)G
 *     L_u    = L_0^{-1}(E_u' Q_du + G' Qh_e I_x G_l + (E_x G)' Q_dx G_l)
 *     L_e    = L_0^{-1} G' Qh_e I_x
 *     L_x0j  = L_0^{-1}((E_x G)' Q_dx F_l + G' Qh_e I_x F_l)
 *     L_x0j1 = -L_0^{-1} G'(Qh_x + Qh_e) F
 *     L_c    = -L_0^{-1} G' s_sup
 *
 * where G, F are super-lifted and G_l, F_l are the single-iteration matrices.
 */
template <std::floating_point Scalar = double>
struct LearningFilters {
    Mat<Scalar> L_u;
    Mat<Scalar> L_e;
    Mat<Scalar> L_x0j;
    Mat<Scalar> L_x0j1;
    Vec<Scalar> L_c;
    Mat<Scalar> L_0;
    Eigen::PartialPivLU<Mat<Scalar>> L0_factor;
    double L0_rcond = 0.0;
};

/// Data from the iteration just completed.
template <std::floating_point Scalar = double>
struct ControllerState {
    Vec<Scalar> u_prev;   // u_j
    Vec<Scalar> e_prev;   // r - x_j (measured)
    Vec<Scalar> x0_prev;  // x0_j
    Vec<Scalar> x0_next;  // x0_{j+1} = E_F x_j
};

template <std::floating_point Scalar>
LearningFilters<Scalar> synthesize(const SuperLiftedModel<Scalar>& super_model,
                                   const LiftedModel<Scalar>& lifted,
                                   const PerformanceWeights<Scalar>& w,
                                   const SuperOperators<Scalar>& ops) {
    if (super_model.n_s != ops.n_s || super_model.n_i != ops.n_i || lifted.n_s != ops.n_s ||
        lifted.n_x != ops.n_x || lifted.n_u != ops.n_u || super_model.n_x != ops.n_x)
        throw InvalidInput("synthesize: model and operator dimensions disagree");
    detail::require(w.Qh_u.rows() == super_model.G.cols() && w.Qh_x.rows() == super_model.G.rows(),
                    "synthesize: weights do not match the super-lifted model");

    const Mat<Scalar>& G = super_model.G;
    const Mat<Scalar> Gt = G.transpose();
    const Mat<Scalar> Qxe = w.Qh_x + w.Qh_e;
    const Mat<Scalar> ExGt = (ops.E_x * G).transpose();
    const Mat<Scalar> GtQeIx = Gt * (w.Qh_e * ops.I_x);

    LearningFilters<Scalar> f;
    f.L_0 = w.Qh_u + Gt * Qxe * G;
    f.L0_factor.compute(f.L_0);
    f.L0_rcond = static_cast<double>(f.L0_factor.rcond());
    if (!std::isfinite(f.L0_rcond) || f.L0_rcond < kMinL0Rcond) {
        std::ostringstream msg;
        msg << "L_0 is numerically singular (reciprocal condition " << f.L0_rcond << ")";
        throw SynthesisError(msg.str(), f.L0_rcond);
    }

    const auto& lu = f.L0_factor;
    f.L_u = lu.solve(ops.E_u.transpose() * w.Q_delta_u + GtQeIx * lifted.G + ExGt * w.Q_delta_x * lifted.G);
    f.L_e = lu.solve(GtQeIx);
    f.L_x0j = lu.solve(ExGt * w.Q_delta_x * lifted.F + GtQeIx * lifted.F);
    f.L_x0j1 = -lu.solve(Gt * Qxe * super_model.F);
    f.L_c = -lu.solve(Gt * w.s_x_sup);
    return f;
}

/// Super-lifted input plan for the next n_i iterations.
template <std::floating_point Scalar>
Vec<Scalar> update_law(const LearningFilters<Scalar>& f, const ControllerState<Scalar>& s) {
    detail::require(s.u_prev.size() == f.L_u.cols() && s.e_prev.size() == f.L_e.cols() &&
                        s.x0_prev.size() == f.L_x0j.cols() && s.x0_next.size() == f.L_x0j1.cols(),
                    "update_law: controller state does not match the filters");
    return f.L_u * s.u_prev + f.L_e * s.e_prev + f.L_x0j * s.x0_prev + f.L_x0j1 * s.x0_next + f.L_c;
}

/// Input applied over the next iteration: the first block of the plan.
template <std::floating_point Scalar>
Vec<Scalar> receding_step(const Vec<Scalar>& u_sup, const SuperOperators<Scalar>& ops) {
    detail::require(u_sup.size() == ops.E_u.cols(), "receding_step: plan has wrong length");
    return u_sup.head(ops.lifted_u());
}

}  // namespace rhilc
