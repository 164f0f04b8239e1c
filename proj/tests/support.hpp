#pragma once

// Shared fixtures for the unit and acceptance tests: seeded random instances
// and oracles that do not reuse the library's own assembly code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "rhilc/rhilc.hpp"

namespace rhilc::testing {

using MatD = Mat<double>;
using VecD = Vec<double>;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    double normal() { return normal_(gen_); }

    MatD matrix(Eigen::Index rows, Eigen::Index cols) {
        MatD M(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) M(r, c) = normal();
        return M;
    }
    VecD vector(Eigen::Index n) { return matrix(n, 1).col(0); }

    /// Random A rescaled to the given spectral radius.
    MatD scaled_matrix(Eigen::Index n, double radius) {
        MatD A = matrix(n, n);
        const double rho = Eigen::EigenSolver<MatD>(A, false).eigenvalues().cwiseAbs().maxCoeff();
        return rho > 0 ? MatD(A * (radius / rho)) : A;
    }

    StateSpaceModel<double> system(Eigen::Index nx, Eigen::Index nu, double radius = 0.9) {
        return {scaled_matrix(nx, radius), matrix(nx, nu)};
    }

    /// Log-uniform positive weights in [lo, hi].
    VecD weights(Eigen::Index n, double lo, double hi) {
        VecD v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = std::exp(uniform(std::log(lo), std::log(hi)));
        return v;
    }

    WeightConfig<double> weight_config(Eigen::Index nx, Eigen::Index nu) {
        WeightConfig<double> w;
        w.q_u = weights(nu, 1e-2, 1.0);
        w.q_delta_u = weights(nu, 1e-2, 1.0);
        w.q_x = weights(nx, 1e-3, 1e-1);
        w.q_delta_x = weights(nx, 1e-2, 1.0);
        w.q_e = weights(nx, 1e-1, 1.0);
        w.s_x = 0.1 * vector(nx);
        return w;
    }

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// A^p by repeated multiplication.
inline MatD power(const MatD& A, int p) {
    MatD out = MatD::Identity(A.rows(), A.cols());
    for (int i = 0; i < p; ++i) out = A * out;
    return out;
}

inline double max_abs(const MatD& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

inline double rel_error(const MatD& a, const MatD& b) { return max_abs(a - b) / std::max(1.0, max_abs(b)); }

/// Chained step simulation over several iterations with terminal-to-initial handoff.
inline VecD chained_simulation(const std::vector<StateSpaceModel<double>>& plants, const VecD& u_sup,
                               const VecD& x0) {
    const Eigen::Index nu = plants.front().nu();
    const Eigen::Index nx = plants.front().nx();
    const auto n_iter = static_cast<Eigen::Index>(plants.size());
    const Eigen::Index lu = u_sup.size() / n_iter;
    const Eigen::Index lx = lu / nu * nx;
    VecD out(n_iter * lx);
    VecD start = x0;
    for (Eigen::Index a = 0; a < n_iter; ++a) {
        const VecD x = simulate_iteration(plants[static_cast<std::size_t>(a)], start, VecD(u_sup.segment(a * lu, lu)));
        out.segment(a * lx, lx) = x;
        start = x.tail(nx);
    }
    return out;
}

/// One planning problem of the update law, expressed directly through the super-block cost.
struct PlanningProblem {
    const PerformanceWeights<double>* w;
    const SuperOperators<double>* ops;
    const SuperLiftedModel<double>* super_model;
    const LiftedModel<double>* lifted;
    ControllerState<double> state;
    VecD r;

    [[nodiscard]] VecD x_prev() const { return lifted->G * state.u_prev + lifted->F * state.x0_prev; }

    /// Cost of a candidate plan; the reference is recovered as e_j + x_j.
    [[nodiscard]] double cost(const VecD& u_sup) const {
        const VecD xp = x_prev();
        const VecD x_sup = super_model->G * u_sup + super_model->F * state.x0_next;
        const VecD e_sup = ops->I_x * r - x_sup;
        return evaluate_superblock(*w, *ops, u_sup, x_sup, e_sup, state.u_prev, xp);
    }
};

/// Central finite-difference gradient with step 1e-6 * (1 + |entry|).
inline VecD fd_gradient(const PlanningProblem& p, const VecD& u) {
    VecD g(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        const double h = 1e-6 * (1.0 + std::abs(u(i)));
        VecD up = u, dn = u;
        up(i) += h;
        dn(i) -= h;
        g(i) = (p.cost(up) - p.cost(dn)) / (2 * h);
    }
    return g;
}

/// Minimizer of the quadratic cost, recovered from cost evaluations alone.
/// For a quadratic J, the Hessian is H_ik = J(e_i + e_k) - J(e_i) - J(e_k) + J(0)
/// and the gradient at zero is g_i = (J(e_i) - J(-e_i)) / 2.
inline VecD dense_qp_minimizer(const PlanningProblem& p, Eigen::Index n) {
    const VecD zero = VecD::Zero(n);
    const double J0 = p.cost(zero);
    VecD Je(n), g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        VecD ei = zero;
        ei(i) = 1.0;
        Je(i) = p.cost(ei);
        g(i) = 0.5 * (Je(i) - p.cost(-ei));
    }
    MatD H(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = i; k < n; ++k) {
            VecD v = zero;
            v(i) += 1.0;
            v(k) += 1.0;
            H(i, k) = H(k, i) = p.cost(v) - Je(i) - Je(k) + J0;
        }
    }
    return H.ldlt().solve(-g);
}

/// Dominant eigenvalue magnitude by power iteration, |M v| for the converged unit v.
/// Needs a dominant eigenvalue separated in magnitude from the rest.
inline double power_iteration_radius(const MatD& M, int steps, std::uint64_t seed) {
    Rng rng(seed);
    VecD v = rng.vector(M.rows());
    v.normalize();
    for (int k = 0; k < steps; ++k) {
        v = M * v;
        const double n = v.norm();
        if (n == 0.0) return 0.0;
        v /= n;
    }
    return (M * v).norm();
}

/// Nominal plant and weights from the shipped nominal configuration.
inline ExperimentConfig nominal_config() { return parse_config(RHILC_CONFIG_DIR "/nominal.cfg"); }
inline ExperimentConfig uncertain_config() { return parse_config(RHILC_CONFIG_DIR "/uncertain.cfg"); }

/// Random synthesis instance: model, operators, weights, filters.
struct Instance {
    StateSpaceModel<double> model;
    LiftedModel<double> lifted;
    SuperLiftedModel<double> super_model;
    SuperOperators<double> ops;
    PerformanceWeights<double> weights;
    LearningFilters<double> filters;
};

inline Instance random_instance(Rng& rng, Eigen::Index nx, Eigen::Index nu, int n_s, int n_i) {
    auto model = rng.system(nx, nu);
    auto lifted = build_lifted(model, n_s);
    auto super_model = build_super(lifted, n_i);
    auto ops = build_operators<double>(n_s, nx, nu, n_i);
    auto w = assemble_weights(rng.weight_config(nx, nu), ops);
    auto f = synthesize(super_model, lifted, w, ops);
    return {model, lifted, super_model, ops, w, f};
}

}  // namespace rhilc::testing
