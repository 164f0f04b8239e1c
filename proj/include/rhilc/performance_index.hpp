#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rhilc/super_lifted.hpp"

namespace rhilc {

/// Per-channel scalar weights; every lifted weighting matrix is built from these.
template <std::floating_point Scalar = double>
struct WeightConfig {
    Vec<Scalar> q_u;        // n_u
    Vec<Scalar> q_delta_u;  // n_u
    Vec<Scalar> q_x;        // n_x
    Vec<Scalar> q_delta_x;  // n_x
    Vec<Scalar> q_e;        // n_x
    Vec<Scalar> s_x;        // n_x, economic gradient replicated over the iteration
    std::optional<Vec<Scalar>> q_sx;  // n_x normalization of s_x, identity when absent

    void validate(Eigen::Index n_x, Eigen::Index n_u) const {
        auto check = [](const Vec<Scalar>& v, Eigen::Index n, const char* name, bool nonneg) {
            if (v.size() != n)
                throw InvalidConfig(name, "expected " + std::to_string(n) + " entries, got " +
                                              std::to_string(v.size()));
            if (!v.allFinite()) throw InvalidConfig(name, "entries must be finite");
            if (nonneg && (v.array() < Scalar(0)).any())
                throw InvalidConfig(name, "weights must be non-negative");
        };
        check(q_u, n_u, "q_u", true);
        check(q_delta_u, n_u, "q_delta_u", true);
        check(q_x, n_x, "q_x", true);
        check(q_delta_x, n_x, "q_delta_x", true);
        check(q_e, n_x, "q_e", true);
        check(s_x, n_x, "s_x", false);
        if (q_sx) check(*q_sx, n_x, "q_sx", true);
    }
};

/// Lifted, super-lifted and hatted weighting matrices plus the economic term.
template <std::floating_point Scalar = double>
struct PerformanceWeights {
    // lifted (single iteration)
    Mat<Scalar> Q_u, Q_delta_u, Q_x, Q_delta_x, Q_e;
    // super-lifted: n_i diagonal copies (n_i - 1 for the difference weights)
    Mat<Scalar> Q_u_sup, Q_delta_u_sup, Q_x_sup, Q_delta_x_sup, Q_e_sup;
    // Qh_u = Q_u_sup + D_u' Q_delta_u_sup D_u + E_u' Q_delta_u E_u, likewise Qh_x; Qh_e = Q_e_sup
    Mat<Scalar> Qh_u, Qh_x, Qh_e;
    Vec<Scalar> s_x_lift;  // n_s n_x
    Vec<Scalar> s_x_sup;   // I_x s_x_lift
};

/// Diagonal matrix with v on the diagonal.
template <std::floating_point Scalar>
Mat<Scalar> diag_from_vector(const Vec<Scalar>& v) {
    return v.asDiagonal();
}

/// C repeated n_b times along the block diagonal.
template <std::floating_point Scalar>
Mat<Scalar> block_repeat(int n_b, const Mat<Scalar>& C) {
    detail::require(n_b >= 0, "block_repeat: negative block count");
    Mat<Scalar> out = Mat<Scalar>::Zero(n_b * C.rows(), n_b * C.cols());
    for (int b = 0; b < n_b; ++b) out.block(b * C.rows(), b * C.cols(), C.rows(), C.cols()) = C;
    return out;
}

template <std::floating_point Scalar>
PerformanceWeights<Scalar> assemble_weights(const WeightConfig<Scalar>& cfg,
                                            const SuperOperators<Scalar>& ops) {
    cfg.validate(ops.n_x, ops.n_u);
    const int n_s = ops.n_s;
    const int n_i = ops.n_i;
    auto lifted = [&](const Vec<Scalar>& q) { return block_repeat<Scalar>(n_s, diag_from_vector(q)); };

    PerformanceWeights<Scalar> w;
    w.Q_u = lifted(cfg.q_u);
    w.Q_delta_u = lifted(cfg.q_delta_u);
    w.Q_x = lifted(cfg.q_x);
    w.Q_delta_x = lifted(cfg.q_delta_x);
    w.Q_e = lifted(cfg.q_e);

    w.Q_u_sup = block_repeat<Scalar>(n_i, w.Q_u);
    w.Q_delta_u_sup = block_repeat<Scalar>(n_i - 1, w.Q_delta_u);
    w.Q_x_sup = block_repeat<Scalar>(n_i, w.Q_x);
    w.Q_delta_x_sup = block_repeat<Scalar>(n_i - 1, w.Q_delta_x);
    w.Q_e_sup = block_repeat<Scalar>(n_i, w.Q_e);

    w.Qh_u = w.Q_u_sup + ops.D_u.transpose() * w.Q_delta_u_sup * ops.D_u +
             ops.E_u.transpose() * w.Q_delta_u * ops.E_u;
    w.Qh_x = w.Q_x_sup + ops.D_x.transpose() * w.Q_delta_x_sup * ops.D_x +
             ops.E_x.transpose() * w.Q_delta_x * ops.E_x;
    w.Qh_e = w.Q_e_sup;

    Vec<Scalar> s = cfg.s_x;
    if (cfg.q_sx) s = s.cwiseProduct(*cfg.q_sx);
    w.s_x_lift = s.replicate(n_s, 1);
    w.s_x_sup = ops.I_x * w.s_x_lift;
    return w;
}

/// Replace the economic term with one computed from an explicit gradient.
template <std::floating_point Scalar>
void set_economic_term(PerformanceWeights<Scalar>& w, const SuperOperators<Scalar>& ops,
                       const Vec<Scalar>& s_x_lift) {
    detail::require(s_x_lift.size() == ops.lifted_x(), "economic term has wrong length");
    w.s_x_lift = s_x_lift;
    w.s_x_sup = ops.I_x * s_x_lift;
}

/// Gradient of an economic objective J_e(x, u) with respect to x.
template <std::floating_point Scalar>
using EconomicGradient = std::function<Vec<Scalar>(const Vec<Scalar>&, const Vec<Scalar>&)>;

/**
 * Stacks grad_x J_e along a nominal trajectory and scales it by Q_sx.
 *
 * `q_sx` is the per-state diagonal of Q_sx (identity when absent).
 */
template <std::floating_point Scalar>
Vec<Scalar> linearize_economic(const EconomicGradient<Scalar>& gradient,
                               const std::vector<Vec<Scalar>>& nominal_states,
                               const std::vector<Vec<Scalar>>& nominal_inputs,
                               const std::optional<Vec<Scalar>>& q_sx = std::nullopt) {
    if (nominal_states.empty() || nominal_states.size() != nominal_inputs.size())
        throw InvalidInput("linearize_economic: need matching non-empty nominal states and inputs");
    const Eigen::Index nx = nominal_states.front().size();
    if (q_sx) detail::require(q_sx->size() == nx, "linearize_economic: q_sx has wrong length");
    Vec<Scalar> out(static_cast<Eigen::Index>(nominal_states.size()) * nx);
    for (std::size_t k = 0; k < nominal_states.size(); ++k) {
        Vec<Scalar> g = gradient(nominal_states[k], nominal_inputs[k]);
        if (g.size() != nx)
            throw InvalidInput("linearize_economic: gradient has " + std::to_string(g.size()) +
                               " entries, expected " + std::to_string(nx));
        if (q_sx) g = g.cwiseProduct(*q_sx);
        out.segment(static_cast<Eigen::Index>(k) * nx, nx) = g;
    }
    return out;
}

/// Lifted inputs and states for iterations j, j+1, ..., j+n_i (index 0 is iteration j).
template <std::floating_point Scalar = double>
struct MultiIterationTrajectory {
    std::vector<Vec<Scalar>> u;
    std::vector<Vec<Scalar>> x;
};

/// Sum over the predicted iterations of the six per-iteration cost terms.
template <std::floating_point Scalar>
Scalar evaluate_longform(const PerformanceWeights<Scalar>& w, const MultiIterationTrajectory<Scalar>& traj,
                         const Vec<Scalar>& r_lift) {
    if (traj.u.size() < 2 || traj.u.size() != traj.x.size())
        throw InvalidInput("evaluate_longform: need the previous iteration plus at least one predicted one");
    Scalar J = 0;
    for (std::size_t k = 1; k < traj.u.size(); ++k) {
        const Vec<Scalar>& u = traj.u[k];
        const Vec<Scalar>& x = traj.x[k];
        detail::require(u.size() == w.Q_u.rows() && x.size() == w.Q_x.rows() &&
                            traj.u[k - 1].size() == u.size() && traj.x[k - 1].size() == x.size(),
                        "evaluate_longform: dimension mismatch");
        const Vec<Scalar> du = u - traj.u[k - 1];
        const Vec<Scalar> dx = x - traj.x[k - 1];
        const Vec<Scalar> e = r_lift - x;
        J += u.dot(w.Q_u * u) + du.dot(w.Q_delta_u * du) + x.dot(w.Q_x * x) + dx.dot(w.Q_delta_x * dx) +
             e.dot(w.Q_e * e) + 2 * w.s_x_lift.dot(x);
    }
    return J;
}

/// The same cost written with super-lifted vectors and the stacking operators.
template <std::floating_point Scalar>
Scalar evaluate_superblock(const PerformanceWeights<Scalar>& w, const SuperOperators<Scalar>& ops,
                           const Vec<Scalar>& u_sup, const Vec<Scalar>& x_sup, const Vec<Scalar>& e_sup,
                           const Vec<Scalar>& u_prev, const Vec<Scalar>& x_prev) {
    detail::require(u_sup.size() == ops.E_u.cols() && x_sup.size() == ops.E_x.cols() &&
                        e_sup.size() == x_sup.size() && u_prev.size() == ops.lifted_u() &&
                        x_prev.size() == ops.lifted_x(),
                    "evaluate_superblock: dimension mismatch");
    const Vec<Scalar> Du = ops.D_u * u_sup;
    const Vec<Scalar> Dx = ops.D_x * x_sup;
    const Vec<Scalar> eu = ops.E_u * u_sup - u_prev;
    const Vec<Scalar> ex = ops.E_x * x_sup - x_prev;
    return u_sup.dot(w.Q_u_sup * u_sup) + Du.dot(w.Q_delta_u_sup * Du) + eu.dot(w.Q_delta_u * eu) +
           x_sup.dot(w.Q_x_sup * x_sup) + Dx.dot(w.Q_delta_x_sup * Dx) + ex.dot(w.Q_delta_x * ex) +
           e_sup.dot(w.Q_e_sup * e_sup) + 2 * w.s_x_sup.dot(x_sup);
}

}  // namespace rhilc
