#pragma once

#include <span>
#include <vector>

#include "rhilc/lifted_model.hpp"

namespace rhilc {

/**
 * Multi-iteration prediction x_sup = G u_sup + F x0 over n_i iterations.
 *
 * Iteration-block (a, b) of G is (F E_F)^{a-b} G_lift for a >= b and zero
 * above the block diagonal; block row a of F is (F E_F)^a F_lift (0-based).
 */
template <std::floating_point Scalar = double>
struct SuperLiftedModel {
    Mat<Scalar> G;
    Mat<Scalar> F;
    int n_i = 0;
    int n_s = 0;
    Eigen::Index n_x = 0;
    Eigen::Index n_u = 0;

    [[nodiscard]] Vec<Scalar> predict(const Vec<Scalar>& u_sup, const Vec<Scalar>& x0) const {
        detail::require(u_sup.size() == G.cols(), "super input has wrong length");
        detail::require(x0.size() == n_x, "initial condition has wrong length");
        return G * u_sup + F * x0;
    }
};

/// Stacking, inter-iteration difference and first-block selection operators.
template <std::floating_point Scalar = double>
struct SuperOperators {
    Mat<Scalar> I_u, I_x;  // n_i stacked identities
    Mat<Scalar> D_u, D_x;  // (n_i-1) x n_i block rows of [I, -I]
    Mat<Scalar> E_u, E_x;  // [I, 0, ..., 0]
    int n_s = 0;
    int n_i = 0;
    Eigen::Index n_x = 0;
    Eigen::Index n_u = 0;

    [[nodiscard]] Eigen::Index lifted_u() const noexcept { return n_s * n_u; }
    [[nodiscard]] Eigen::Index lifted_x() const noexcept { return n_s * n_x; }
};

/// Vertical stack of n_i copies of the n x n identity.
template <std::floating_point Scalar = double>
Mat<Scalar> stacked_identity(Eigen::Index n, int n_i) {
    Mat<Scalar> out(n * n_i, n);
    for (int a = 0; a < n_i; ++a) out.middleRows(a * n, n).setIdentity();
    return out;
}

/// Difference operator with n_i-1 block rows; empty (zero rows) when n_i == 1.
template <std::floating_point Scalar = double>
Mat<Scalar> difference_operator(Eigen::Index n, int n_i) {
    Mat<Scalar> D = Mat<Scalar>::Zero((n_i - 1) * n, n_i * n);
    for (int a = 0; a + 1 < n_i; ++a) {
        D.block(a * n, a * n, n, n).setIdentity();
        D.block(a * n, (a + 1) * n, n, n) = -Mat<Scalar>::Identity(n, n);
    }
    return D;
}

template <std::floating_point Scalar = double>
Mat<Scalar> first_block_selector(Eigen::Index n, int n_i) {
    Mat<Scalar> E = Mat<Scalar>::Zero(n, n_i * n);
    E.leftCols(n).setIdentity();
    return E;
}

template <std::floating_point Scalar = double>
SuperOperators<Scalar> build_operators(int n_s, Eigen::Index n_x, Eigen::Index n_u, int n_i) {
    detail::require(n_s >= 1 && n_x >= 1 && n_u >= 1 && n_i >= 1, "operators need positive sizes");
    SuperOperators<Scalar> ops;
    ops.n_s = n_s;
    ops.n_i = n_i;
    ops.n_x = n_x;
    ops.n_u = n_u;
    const Eigen::Index lu = n_s * n_u;
    const Eigen::Index lx = n_s * n_x;
    ops.I_u = stacked_identity<Scalar>(lu, n_i);
    ops.I_x = stacked_identity<Scalar>(lx, n_i);
    ops.D_u = difference_operator<Scalar>(lu, n_i);
    ops.D_x = difference_operator<Scalar>(lx, n_i);
    ops.E_u = first_block_selector<Scalar>(lu, n_i);
    ops.E_x = first_block_selector<Scalar>(lx, n_i);
    return ops;
}

/// Super-lifted model over n_i iterations with one lifted model per predicted iteration.
///
/// Iteration a starts from the terminal state of iteration a-1, so block (a, b) of G
/// is F_a E_F ... F_{b+1} E_F G_b.
template <std::floating_point Scalar>
SuperLiftedModel<Scalar> build_super_ltv(std::span<const LiftedModel<Scalar>> lifted_seq) {
    if (lifted_seq.empty()) throw InvalidInput("build_super_ltv: empty model sequence");
    const auto& first = lifted_seq.front();
    for (const auto& m : lifted_seq) {
        if (m.n_s != first.n_s || m.n_x != first.n_x || m.n_u != first.n_u)
            throw InvalidInput("build_super_ltv: lifted models have mismatched dimensions");
    }
    const int n_i = static_cast<int>(lifted_seq.size());
    const Eigen::Index nx = first.n_x;
    const Eigen::Index lx = first.n_s * first.n_x;
    const Eigen::Index lu = first.n_s * first.n_u;

    SuperLiftedModel<Scalar> out;
    out.n_i = n_i;
    out.n_s = first.n_s;
    out.n_x = nx;
    out.n_u = first.n_u;
    out.G = Mat<Scalar>::Zero(n_i * lx, n_i * lu);
    out.F = Mat<Scalar>::Zero(n_i * lx, nx);
    for (int a = 0; a < n_i; ++a) {
        const auto& m = lifted_seq[a];
        if (a == 0) {
            out.F.topRows(lx) = m.F;
        } else {
            // F_a E_F X == F_a * (last n_x rows of X)
            out.F.middleRows(a * lx, lx) = m.F * out.F.middleRows(a * lx - nx, nx);
            for (int b = 0; b < a; ++b) {
                out.G.block(a * lx, b * lu, lx, lu) = m.F * out.G.block(a * lx - nx, b * lu, nx, lu);
            }
        }
        out.G.block(a * lx, a * lu, lx, lu) = m.G;
    }
    return out;
}

template <std::floating_point Scalar>
SuperLiftedModel<Scalar> build_super(const LiftedModel<Scalar>& lifted, int n_i) {
    if (n_i < 1) throw InvalidInput("n_i must be positive");
    const std::vector<LiftedModel<Scalar>> seq(static_cast<std::size_t>(n_i), lifted);
    return build_super_ltv<Scalar>(seq);
}

/// e_sup = I_x r - x_sup
template <std::floating_point Scalar>
Vec<Scalar> super_error(const Vec<Scalar>& x_sup, const Vec<Scalar>& r_lift,
                        const SuperOperators<Scalar>& ops) {
    detail::require(r_lift.size() == ops.lifted_x() && x_sup.size() == ops.I_x.rows(),
                    "super_error: dimension mismatch");
    return ops.I_x * r_lift - x_sup;
}

}  // namespace rhilc
