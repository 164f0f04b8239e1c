#pragma once

#include <cmath>
#include <sstream>
#include <vector>

#include "rhilc/learning_synthesis.hpp"

namespace rhilc {

/// z = [u; x0], the iteration-domain state of the closed loop.
template <std::floating_point Scalar = double>
struct ZVector {
    Vec<Scalar> u;
    Vec<Scalar> x0;

    [[nodiscard]] Vec<Scalar> stacked() const {
        Vec<Scalar> z(u.size() + x0.size());
        z << u, x0;
        return z;
    }

    static ZVector split(const Vec<Scalar>& z, Eigen::Index lifted_u) {
        detail::require(z.size() > lifted_u, "ZVector::split: vector too short");
        return {z.head(lifted_u), z.tail(z.size() - lifted_u)};
    }
};

/**
 * Iteration-domain map z_{j+1} = A_z z_j + eta(r, d_j) for a controller
 * acting on a (possibly different) plant.
 *
 *     A_z = [T_u       T_x0    ]      eta = [E_u(L_e r + (L_x0j1 E_F - L_e) d + L_c)]
 *           [E_F G_p   E_F F_p ]            [E_F d                                ]
 */
template <std::floating_point Scalar = double>
struct ClosedLoopMap {
    Mat<Scalar> A_z;
    Mat<Scalar> T_u;
    Mat<Scalar> T_x0;
    Mat<Scalar> eta_r;  // d eta / d r
    Mat<Scalar> eta_d;  // d eta / d d
    Vec<Scalar> eta_c;  // constant part from L_c

    [[nodiscard]] Vec<Scalar> eta(const Vec<Scalar>& r_lift, const Vec<Scalar>& d_lift) const {
        detail::require(r_lift.size() == eta_r.cols() && d_lift.size() == eta_d.cols(),
                        "ClosedLoopMap::eta: dimension mismatch");
        return eta_r * r_lift + eta_d * d_lift + eta_c;
    }

    [[nodiscard]] Vec<Scalar> advance(const Vec<Scalar>& z, const Vec<Scalar>& r_lift,
                                      const Vec<Scalar>& d_lift) const {
        detail::require(z.size() == A_z.cols(), "ClosedLoopMap::advance: z has wrong length");
        return A_z * z + eta(r_lift, d_lift);
    }
};

template <std::floating_point Scalar>
ClosedLoopMap<Scalar> build_closed_loop(const LearningFilters<Scalar>& f, const LiftedModel<Scalar>& plant,
                                        const SuperOperators<Scalar>& ops) {
    if (plant.n_s != ops.n_s || plant.n_x != ops.n_x || plant.n_u != ops.n_u ||
        f.L_u.rows() != ops.E_u.cols())
        throw InvalidInput("build_closed_loop: controller and plant dimensions disagree");
    const Eigen::Index lu = ops.lifted_u();
    const Eigen::Index lx = ops.lifted_x();
    const Eigen::Index nx = ops.n_x;

    // E_u picks the leading lu rows of every filter.
    const auto Lu = f.L_u.topRows(lu);
    const auto Le = f.L_e.topRows(lu);
    const auto Lx0 = f.L_x0j.topRows(lu);
    const auto Lx1 = f.L_x0j1.topRows(lu);

    ClosedLoopMap<Scalar> m;
    m.T_u = Lu + Lx1 * (plant.E_F * plant.G) - Le * plant.G;
    m.T_x0 = Lx1 * (plant.E_F * plant.F) + Lx0 - Le * plant.F;
    m.A_z.resize(lu + nx, lu + nx);
    m.A_z << m.T_u, m.T_x0, plant.E_F * plant.G, plant.E_F * plant.F;

    m.eta_r = Mat<Scalar>::Zero(lu + nx, lx);
    m.eta_r.topRows(lu) = Le;
    m.eta_d.resize(lu + nx, lx);
    m.eta_d << Lx1 * plant.E_F - Le, plant.E_F;
    m.eta_c = Vec<Scalar>::Zero(lu + nx);
    m.eta_c.head(lu) = f.L_c.head(lu);
    return m;
}

/// One map per plant iteration, for iteration-varying plants.
template <std::floating_point Scalar>
std::vector<ClosedLoopMap<Scalar>> build_closed_loop(const LearningFilters<Scalar>& f,
                                                     const std::vector<LiftedModel<Scalar>>& plants,
                                                     const SuperOperators<Scalar>& ops) {
    std::vector<ClosedLoopMap<Scalar>> maps;
    maps.reserve(plants.size());
    for (const auto& p : plants) maps.push_back(build_closed_loop(f, p, ops));
    return maps;
}

/// Largest eigenvalue magnitude of a square matrix.
template <std::floating_point Scalar>
Scalar spectral_radius(const Mat<Scalar>& M) {
    detail::require(M.rows() == M.cols(), "spectral_radius: matrix must be square");
    if (M.size() == 0) return Scalar(0);
    Eigen::EigenSolver<Mat<Scalar>> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) throw AnalysisError("spectral_radius: eigenvalue solver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct StabilityVerdict {
    bool stable = false;
    double radius = 0.0;
};

/// rho(A_z) < 1 - margin.
template <std::floating_point Scalar>
StabilityVerdict check_condition1(const ClosedLoopMap<Scalar>& m, double margin = 0.0) {
    const double rho = static_cast<double>(spectral_radius(m.A_z));
    return {rho < 1.0 - margin, rho};
}

/// Below this reciprocal condition (I - A_z) is treated as singular.
inline constexpr double kMinFixedPointRcond = 1e-12;

/// Converged z = (I - A_z)^{-1} eta(r, d) for a stable map.
template <std::floating_point Scalar>
Vec<Scalar> z_infinity(const ClosedLoopMap<Scalar>& m, const Vec<Scalar>& r_lift, const Vec<Scalar>& d_lift) {
    const auto verdict = check_condition1(m);
    if (!verdict.stable) {
        std::ostringstream msg;
        msg << "no attracting fixed point: spectral radius " << verdict.radius << " >= 1";
        throw NoFixedPoint(msg.str(), verdict.radius);
    }
    const Eigen::Index n = m.A_z.rows();
    Eigen::PartialPivLU<Mat<Scalar>> lu(Mat<Scalar>::Identity(n, n) - m.A_z);
    const double rcond = static_cast<double>(lu.rcond());
    if (!(rcond >= kMinFixedPointRcond)) {
        std::ostringstream msg;
        msg << "I - A_z is numerically singular (reciprocal condition " << rcond << ")";
        throw NoFixedPoint(msg.str(), verdict.radius);
    }
    return lu.solve(m.eta(r_lift, d_lift));
}

}  // namespace rhilc
