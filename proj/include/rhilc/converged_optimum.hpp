#pragma once

#include <cmath>
#include <limits>
#include <sstream>

#include "rhilc/closed_loop.hpp"

namespace rhilc {

/// E_s z = u and E_e z = x0 for z = [u; x0].
template <std::floating_point Scalar = double>
struct SelectorOperators {
    Mat<Scalar> E_s;
    Mat<Scalar> E_e;
};

template <std::floating_point Scalar = double>
SelectorOperators<Scalar> build_selectors(Eigen::Index lifted_u, Eigen::Index n_x) {
    const Eigen::Index nz = lifted_u + n_x;
    SelectorOperators<Scalar> s;
    s.E_s = Mat<Scalar>::Zero(lifted_u, nz);
    s.E_s.leftCols(lifted_u).setIdentity();
    s.E_e = Mat<Scalar>::Zero(n_x, nz);
    s.E_e.rightCols(n_x).setIdentity();
    return s;
}

/**
 * Repeatable-optimum problem: minimize 1/2 z'Qz + q'z subject to W z = v.
 *
 * With the trajectory held at a repeated input/state pair every difference
 * penalty vanishes, so the stacked weights reduce to
 *
 *     I_u' Qh_u I_u - Q_du = n_i Q_u,   I_x'(Qh_x + Qh_e) I_x - Q_dx = n_i (Q_x + Q_e).
 *
 * Both cost matrices are divided by n_i, which leaves the minimizer and the
 * multipliers independent of the prediction horizon.
 */
template <std::floating_point Scalar = double>
struct ConvergedProblem {
    Mat<Scalar> Q;  // symmetric
    Vec<Scalar> q;
    Mat<Scalar> W;  // E_e - E_F (G E_s + F E_e)
    Vec<Scalar> v;  // E_F d
    Mat<Scalar> M;  // G E_s + F E_e: lifted state (less disturbance) as a function of z
    Vec<Scalar> d;
    Vec<Scalar> r;
    Eigen::Index lifted_u = 0;
    Eigen::Index n_x = 0;

    [[nodiscard]] Scalar objective(const Vec<Scalar>& z) const { return Scalar(0.5) * z.dot(Q * z) + q.dot(z); }
};

template <std::floating_point Scalar = double>
struct ConvergedOptimum {
    Vec<Scalar> z;
    Vec<Scalar> lambda;
    double constraint_residual = 0.0;    // |W z - v|_inf
    double stationarity_residual = 0.0;  // |Q z + W' lambda + q|_inf
    double kkt_rcond = 0.0;
};

template <std::floating_point Scalar>
ConvergedProblem<Scalar> build_problem(const LiftedModel<Scalar>& limit, const PerformanceWeights<Scalar>& w,
                                       const SuperOperators<Scalar>& ops, const Vec<Scalar>& r_lift,
                                       const Vec<Scalar>& d_lift) {
    if (limit.n_s != ops.n_s || limit.n_x != ops.n_x || limit.n_u != ops.n_u)
        throw InvalidInput("build_problem: plant and operator dimensions disagree");
    detail::require(r_lift.size() == ops.lifted_x() && d_lift.size() == ops.lifted_x(),
                    "build_problem: reference or disturbance has wrong length");
    const Eigen::Index lu = ops.lifted_u();
    const auto sel = build_selectors<Scalar>(lu, ops.n_x);

    ConvergedProblem<Scalar> p;
    p.lifted_u = lu;
    p.n_x = ops.n_x;
    p.d = d_lift;
    p.r = r_lift;
    p.M = limit.G * sel.E_s + limit.F * sel.E_e;

    const Scalar n_i = static_cast<Scalar>(ops.n_i);
    const Mat<Scalar> Hu = ops.I_u.transpose() * w.Qh_u * ops.I_u - w.Q_delta_u;
    const Mat<Scalar> Hx = ops.I_x.transpose() * (w.Qh_x + w.Qh_e) * ops.I_x - w.Q_delta_x;
    p.Q = (sel.E_s.transpose() * Hu * sel.E_s + p.M.transpose() * Hx * p.M) / n_i;
    p.Q = (Scalar(0.5) * (p.Q + p.Q.transpose())).eval();
    p.q = p.M.transpose() * (Hx * d_lift + ops.I_x.transpose() * (w.s_x_sup - w.Qh_e * (ops.I_x * r_lift))) / n_i;

    p.W = sel.E_e - limit.E_F * p.M;
    p.v = limit.E_F * d_lift;
    return p;
}

struct DefinitenessVerdict {
    bool satisfied = false;
    double min_eigenvalue = 0.0;
};

inline constexpr double kMinCondition3Eigenvalue = 1e-10;

/// lambda_min(Q + W'W) > 1e-10.
template <std::floating_point Scalar>
DefinitenessVerdict check_condition3(const ConvergedProblem<Scalar>& p) {
    const Mat<Scalar> H = p.Q + p.W.transpose() * p.W;
    Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw AnalysisError("check_condition3: eigenvalue solver failed");
    const double lmin = static_cast<double>(es.eigenvalues().minCoeff());
    return {lmin > kMinCondition3Eigenvalue, lmin};
}

/// Solves [Q W'; W 0][z; lambda] = [-q; v] with a pivoted LU of the saddle matrix.
template <std::floating_point Scalar>
ConvergedOptimum<Scalar> solve_kkt(const ConvergedProblem<Scalar>& p) {
    const auto c3 = check_condition3(p);
    if (!c3.satisfied) {
        std::ostringstream msg;
        msg << "Q + W'W is not positive definite (min eigenvalue " << c3.min_eigenvalue << ")";
        throw SolveError(msg.str(), c3.min_eigenvalue);
    }
    const Eigen::Index nz = p.Q.rows();
    const Eigen::Index nc = p.W.rows();
    Mat<Scalar> K = Mat<Scalar>::Zero(nz + nc, nz + nc);
    K.topLeftCorner(nz, nz) = p.Q;
    K.topRightCorner(nz, nc) = p.W.transpose();
    K.bottomLeftCorner(nc, nz) = p.W;
    Vec<Scalar> rhs(nz + nc);
    rhs << -p.q, p.v;

    Eigen::PartialPivLU<Mat<Scalar>> lu(K);
    ConvergedOptimum<Scalar> opt;
    opt.kkt_rcond = static_cast<double>(lu.rcond());
    if (!(opt.kkt_rcond > std::numeric_limits<double>::epsilon())) {
        std::ostringstream msg;
        msg << "KKT matrix is numerically singular (reciprocal condition " << opt.kkt_rcond << ")";
        throw SolveError(msg.str(), c3.min_eigenvalue);
    }
    const Vec<Scalar> sol = lu.solve(rhs);
    opt.z = sol.head(nz);
    opt.lambda = sol.tail(nc);
    opt.constraint_residual = nc ? static_cast<double>((p.W * opt.z - p.v).cwiseAbs().maxCoeff()) : 0.0;
    opt.stationarity_residual =
        static_cast<double>((p.Q * opt.z + p.W.transpose() * opt.lambda + p.q).cwiseAbs().maxCoeff());
    return opt;
}

/// |terminal - x0| after applying the optimum for one iteration through the lifted plant.
template <std::floating_point Scalar>
double verify_repeatability(const ConvergedOptimum<Scalar>& opt, const LiftedModel<Scalar>& limit,
                            const Vec<Scalar>& d_lift) {
    const auto z = ZVector<Scalar>::split(opt.z, limit.n_s * limit.n_u);
    const Vec<Scalar> x = limit.predict(z.u, z.x0) + d_lift;
    return static_cast<double>((limit.E_F * x - z.x0).cwiseAbs().maxCoeff());
}

/// Same check through the step-by-step plant simulation.
template <std::floating_point Scalar>
double verify_repeatability(const ConvergedOptimum<Scalar>& opt, const StateSpaceModel<Scalar>& plant,
                            const Vec<Scalar>& d_lift) {
    const Eigen::Index nx = plant.nx();
    const auto z = ZVector<Scalar>::split(opt.z, opt.z.size() - nx);
    const Vec<Scalar> x = simulate_iteration(plant, z.x0, z.u, std::optional<Vec<Scalar>>(d_lift));
    return static_cast<double>((x.tail(nx) - z.x0).cwiseAbs().maxCoeff());
}

}  // namespace rhilc
