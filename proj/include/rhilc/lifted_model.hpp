#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "rhilc/types.hpp"

namespace rhilc {

/**
 * Discrete-time LTI plant x^{k+1} = A x^k + B u^k.
 *
 * Construction validates that A is square and B has as many rows as A.
 */
template <std::floating_point Scalar = double>
class StateSpaceModel {
public:
    StateSpaceModel(Mat<Scalar> A, Mat<Scalar> B) : A_(std::move(A)), B_(std::move(B)) {
        if (A_.rows() < 1 || A_.rows() != A_.cols())
            throw InvalidModel("state matrix must be square and non-empty");
        if (B_.rows() != A_.rows() || B_.cols() < 1)
            throw InvalidModel("input matrix must have n_x rows and at least one column");
    }

    [[nodiscard]] const Mat<Scalar>& A() const noexcept { return A_; }
    [[nodiscard]] const Mat<Scalar>& B() const noexcept { return B_; }
    [[nodiscard]] Eigen::Index nx() const noexcept { return A_.rows(); }
    [[nodiscard]] Eigen::Index nu() const noexcept { return B_.cols(); }

private:
    Mat<Scalar> A_;
    Mat<Scalar> B_;
};

/**
 * Time-varying plant x^{k+1} = A_k x^k + B_k u^k over one iteration of n_s steps.
 */
template <std::floating_point Scalar = double>
class TimeVaryingModel {
public:
    TimeVaryingModel(std::vector<Mat<Scalar>> A_seq, std::vector<Mat<Scalar>> B_seq)
        : A_seq_(std::move(A_seq)), B_seq_(std::move(B_seq)) {
        if (A_seq_.empty() || A_seq_.size() != B_seq_.size())
            throw InvalidModel("time-varying model needs equal, non-empty A and B sequences");
        const auto nx = A_seq_.front().rows();
        const auto nu = B_seq_.front().cols();
        if (nx < 1 || nu < 1) throw InvalidModel("time-varying model has empty matrices");
        for (std::size_t k = 0; k < A_seq_.size(); ++k) {
            if (A_seq_[k].rows() != nx || A_seq_[k].cols() != nx || B_seq_[k].rows() != nx ||
                B_seq_[k].cols() != nu)
                throw InvalidModel("ragged time-varying model at step " + std::to_string(k));
        }
    }

    /// Constant sequence of length n_s built from an LTI model.
    static TimeVaryingModel constant(const StateSpaceModel<Scalar>& model, int n_s) {
        if (n_s < 1) throw InvalidInput("n_s must be positive");
        return TimeVaryingModel(std::vector<Mat<Scalar>>(n_s, model.A()),
                                std::vector<Mat<Scalar>>(n_s, model.B()));
    }

    [[nodiscard]] const Mat<Scalar>& A(std::size_t k) const { return A_seq_.at(k); }
    [[nodiscard]] const Mat<Scalar>& B(std::size_t k) const { return B_seq_.at(k); }
    [[nodiscard]] int steps() const noexcept { return static_cast<int>(A_seq_.size()); }
    [[nodiscard]] Eigen::Index nx() const noexcept { return A_seq_.front().rows(); }
    [[nodiscard]] Eigen::Index nu() const noexcept { return B_seq_.front().cols(); }

private:
    std::vector<Mat<Scalar>> A_seq_;
    std::vector<Mat<Scalar>> B_seq_;
};

/**
 * Single-iteration lifted model x = G u + F x0.
 *
 * `x` stacks x^1..x^{n_s}, `u` stacks u^0..u^{n_s-1}. `E_F` picks the terminal
 * state out of a lifted state vector.
 */
template <std::floating_point Scalar = double>
struct LiftedModel {
    Mat<Scalar> G;
    Mat<Scalar> F;
    Mat<Scalar> E_F;
    int n_s = 0;
    Eigen::Index n_x = 0;
    Eigen::Index n_u = 0;

    [[nodiscard]] Vec<Scalar> predict(const Vec<Scalar>& u_lift, const Vec<Scalar>& x0) const {
        detail::require(u_lift.size() == G.cols(), "lifted input has wrong length");
        detail::require(x0.size() == n_x, "initial condition has wrong length");
        return G * u_lift + F * x0;
    }
};

/// [0 ... 0 | I]: selects the last n_x entries of a lifted state vector.
template <std::floating_point Scalar = double>
Mat<Scalar> terminal_selector(int n_s, Eigen::Index n_x) {
    detail::require(n_s >= 1 && n_x >= 1, "terminal selector needs positive sizes");
    Mat<Scalar> E = Mat<Scalar>::Zero(n_x, n_s * n_x);
    E.rightCols(n_x).setIdentity();
    return E;
}

namespace detail {

// Lifting by forward recursion over block rows (0-based): block(r, c) = A_r block(r-1, c)
// for c < r, block(r, r) = B_r, and F_r = A_r F_{r-1}. For a constant sequence this is
// exactly the repeated-product construction of A^{r-c} B, so LTI and constant LTV agree
// bit for bit.
template <std::floating_point Scalar, typename AAt, typename BAt>
LiftedModel<Scalar> lift_recursive(int n_s, Eigen::Index nx, Eigen::Index nu, AAt A_at, BAt B_at) {
    LiftedModel<Scalar> out;
    out.n_s = n_s;
    out.n_x = nx;
    out.n_u = nu;
    out.G = Mat<Scalar>::Zero(n_s * nx, n_s * nu);
    out.F = Mat<Scalar>::Zero(n_s * nx, nx);
    for (int r = 0; r < n_s; ++r) {
        const Mat<Scalar>& A = A_at(r);
        if (r == 0) {
            out.F.block(0, 0, nx, nx) = A;
        } else {
            out.F.block(r * nx, 0, nx, nx) = A * out.F.block((r - 1) * nx, 0, nx, nx);
            for (int c = 0; c < r; ++c) {
                out.G.block(r * nx, c * nu, nx, nu) = A * out.G.block((r - 1) * nx, c * nu, nx, nu);
            }
        }
        out.G.block(r * nx, r * nu, nx, nu) = B_at(r);
    }
    out.E_F = terminal_selector<Scalar>(n_s, nx);
    return out;
}

}  // namespace detail

/// Lifted model of an LTI plant over n_s steps.
template <std::floating_point Scalar>
LiftedModel<Scalar> build_lifted(const StateSpaceModel<Scalar>& model, int n_s) {
    if (n_s < 1) throw InvalidInput("n_s must be positive");
    return detail::lift_recursive<Scalar>(
        n_s, model.nx(), model.nu(), [&](int) -> const Mat<Scalar>& { return model.A(); },
        [&](int) -> const Mat<Scalar>& { return model.B(); });
}

/// Lifted model of a time-varying plant; n_s is the sequence length.
template <std::floating_point Scalar>
LiftedModel<Scalar> build_lifted(const TimeVaryingModel<Scalar>& model) {
    return detail::lift_recursive<Scalar>(
        model.steps(), model.nx(), model.nu(),
        [&](int k) -> const Mat<Scalar>& { return model.A(static_cast<std::size_t>(k)); },
        [&](int k) -> const Mat<Scalar>& { return model.B(static_cast<std::size_t>(k)); });
}

/**
 * Step-by-step simulation of one iteration, x^{k+1} = A x^k + B u^k, with the
 * disturbance added to each reported state: x^k + d^k. The offset does not feed
 * back into the recursion, matching the lifted relation x = G u + F x0 + d.
 *
 * Inputs and disturbances are lifted (stacked) vectors; returns the lifted
 * state x^1..x^{n_s}. This is the reference every lifted construction is
 * checked against.
 */
template <std::floating_point Scalar>
Vec<Scalar> simulate_iteration(const TimeVaryingModel<Scalar>& model, const Vec<Scalar>& x0,
                               const Vec<Scalar>& u_lift,
                               const std::optional<Vec<Scalar>>& d_lift = std::nullopt) {
    const auto nx = model.nx();
    const auto nu = model.nu();
    const int n_s = model.steps();
    detail::require(x0.size() == nx, "simulate_iteration: initial condition has wrong length");
    detail::require(u_lift.size() == n_s * nu, "simulate_iteration: input sequence has wrong length");
    detail::require(!d_lift || d_lift->size() == n_s * nx,
                    "simulate_iteration: disturbance sequence has wrong length");

    Vec<Scalar> x_lift(n_s * nx);
    Vec<Scalar> x = x0;
    for (int k = 0; k < n_s; ++k) {
        x = model.A(k) * x + model.B(k) * u_lift.segment(k * nu, nu);
        x_lift.segment(k * nx, nx) = x;
        if (d_lift) x_lift.segment(k * nx, nx) += d_lift->segment(k * nx, nx);
    }
    return x_lift;
}

template <std::floating_point Scalar>
Vec<Scalar> simulate_iteration(const StateSpaceModel<Scalar>& model, const Vec<Scalar>& x0,
                               const Vec<Scalar>& u_lift,
                               const std::optional<Vec<Scalar>>& d_lift = std::nullopt) {
    detail::require(u_lift.size() % model.nu() == 0,
                    "simulate_iteration: input sequence has wrong length");
    const int n_s = static_cast<int>(u_lift.size() / model.nu());
    detail::require(n_s >= 1, "simulate_iteration: empty input sequence");
    return simulate_iteration(TimeVaryingModel<Scalar>::constant(model, n_s), x0, u_lift, d_lift);
}

}  // namespace rhilc
