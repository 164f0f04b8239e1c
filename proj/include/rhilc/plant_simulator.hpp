#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "rhilc/closed_loop.hpp"

namespace rhilc {

/// Purpose tag mixed into every RNG stream seed.
enum class Stream : std::uint64_t {
    Disturbance = 0x64697374,  // "dist"
    UncertaintyG = 0x756e6347,
    UncertaintyF = 0x756e6346,
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Generator for (seed, iteration, purpose); independent of how many other streams were drawn.
inline std::mt19937_64 make_stream(std::uint64_t seed, int iteration, Stream purpose) {
    std::uint64_t h = detail::splitmix64(seed);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(iteration));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return std::mt19937_64(h);
}

template <std::floating_point Scalar = double>
struct DisturbanceSpec {
    Vec<Scalar> mean_per_step;  // n_x, replicated over the iteration
    double sigma = 0.0;
    double noise_decay = 1.0;   // sigma_j = sigma * noise_decay^j; 1 keeps the noise persistent
    std::uint64_t seed = 0;
};

template <std::floating_point Scalar = double>
struct UncertaintySpec {
    double magnitude = 0.0;
    double decay = 0.0;  // in [0, 1)
    std::uint64_t seed = 0;
};

namespace detail {

template <std::floating_point Scalar>
void fill_normal(Mat<Scalar>& out, std::mt19937_64& gen, double scale) {
    std::normal_distribution<double> normal(0.0, 1.0);
    // column-major fill order is part of the reproducibility contract
    for (Eigen::Index c = 0; c < out.cols(); ++c)
        for (Eigen::Index r = 0; r < out.rows(); ++r) out(r, c) = static_cast<Scalar>(scale * normal(gen));
}

}  // namespace detail

/// d_j = replicated mean + sigma_j * standard normal draws.
template <std::floating_point Scalar>
Vec<Scalar> draw_disturbance(const DisturbanceSpec<Scalar>& spec, int iteration, int n_s) {
    if (spec.sigma < 0 || !std::isfinite(spec.sigma)) throw InvalidConfig("disturbance.sigma", "must be >= 0");
    Vec<Scalar> d = spec.mean_per_step.replicate(n_s, 1);
    const double sigma_j = spec.sigma * std::pow(spec.noise_decay, iteration);
    if (sigma_j == 0.0) return d;
    auto gen = make_stream(spec.seed, iteration, Stream::Disturbance);
    Mat<Scalar> noise(d.size(), 1);
    detail::fill_normal<Scalar>(noise, gen, sigma_j);
    d += noise.col(0);
    return d;
}

/// Additive plant perturbations (Delta_G, Delta_F) with entries magnitude * decay^j * N(0, 1).
template <std::floating_point Scalar>
std::pair<Mat<Scalar>, Mat<Scalar>> draw_uncertainty(const UncertaintySpec<Scalar>& spec, int iteration,
                                                     Eigen::Index g_rows, Eigen::Index g_cols,
                                                     Eigen::Index f_rows, Eigen::Index f_cols) {
    if (spec.magnitude < 0 || !std::isfinite(spec.magnitude))
        throw InvalidConfig("uncertainty.magnitude", "must be >= 0");
    if (spec.decay < 0 || spec.decay >= 1) throw InvalidConfig("uncertainty.decay", "must lie in [0, 1)");
    Mat<Scalar> dG = Mat<Scalar>::Zero(g_rows, g_cols);
    Mat<Scalar> dF = Mat<Scalar>::Zero(f_rows, f_cols);
    // pow(0, 0) == 1, so decay = 0 perturbs iteration 0 only
    const double scale = spec.magnitude * std::pow(spec.decay, iteration);
    if (scale == 0.0) return {std::move(dG), std::move(dF)};
    auto gen_g = make_stream(spec.seed, iteration, Stream::UncertaintyG);
    auto gen_f = make_stream(spec.seed, iteration, Stream::UncertaintyF);
    detail::fill_normal<Scalar>(dG, gen_g, scale);
    detail::fill_normal<Scalar>(dF, gen_f, scale);
    return {std::move(dG), std::move(dF)};
}

/// x = (G + dG) u + (F + dF) x0 + d
template <std::floating_point Scalar>
Vec<Scalar> step_plant(const LiftedModel<Scalar>& plant, const Mat<Scalar>& dG, const Mat<Scalar>& dF,
                       const Vec<Scalar>& u_lift, const Vec<Scalar>& x0, const Vec<Scalar>& d_lift) {
    detail::require(dG.rows() == plant.G.rows() && dG.cols() == plant.G.cols() && dF.rows() == plant.F.rows() &&
                        dF.cols() == plant.F.cols() && d_lift.size() == plant.G.rows(),
                    "step_plant: perturbation or disturbance has wrong shape");
    return (plant.G + dG) * u_lift + (plant.F + dF) * x0 + d_lift;
}

/// True plant: nominal lifted model plus optional decaying perturbations and disturbance.
template <std::floating_point Scalar = double>
struct PlantConfig {
    LiftedModel<Scalar> lifted;
    DisturbanceSpec<Scalar> disturbance;
    std::optional<UncertaintySpec<Scalar>> uncertainty;

    /// (Delta_G, Delta_F) at iteration j; zero without an uncertainty model.
    [[nodiscard]] std::pair<Mat<Scalar>, Mat<Scalar>> perturbation(int iteration) const {
        if (!uncertainty)
            return {Mat<Scalar>::Zero(lifted.G.rows(), lifted.G.cols()),
                    Mat<Scalar>::Zero(lifted.F.rows(), lifted.F.cols())};
        return draw_uncertainty(*uncertainty, iteration, lifted.G.rows(), lifted.G.cols(), lifted.F.rows(),
                                lifted.F.cols());
    }

    /// Lifted plant realized at iteration j (perturbations folded in).
    [[nodiscard]] LiftedModel<Scalar> realized(int iteration) const {
        LiftedModel<Scalar> out = lifted;
        auto [dG, dF] = perturbation(iteration);
        out.G += dG;
        out.F += dF;
        return out;
    }
};

template <std::floating_point Scalar = double>
struct RunRecord {
    std::vector<Vec<Scalar>> u;   // u_j
    std::vector<Vec<Scalar>> x;   // x_j
    std::vector<Vec<Scalar>> x0;  // x0_j
    std::vector<Vec<Scalar>> z;   // [u_j; x0_j]
    std::vector<Vec<Scalar>> e;   // r - x_j
    std::vector<Vec<Scalar>> d;   // realized disturbance
    std::vector<Scalar> cost;     // realized single-iteration cost
    int n_i = 0;
    std::uint64_t disturbance_seed = 0;
    std::optional<std::uint64_t> uncertainty_seed;
    StabilityVerdict nominal_condition1;

    [[nodiscard]] std::size_t iterations() const noexcept { return u.size(); }
};

namespace detail {

template <std::floating_point Scalar>
Scalar stage_cost(const PerformanceWeights<Scalar>& w, const Vec<Scalar>& u, const Vec<Scalar>& u_prev,
                  const Vec<Scalar>& x, const Vec<Scalar>& x_prev, const Vec<Scalar>& e) {
    const Vec<Scalar> du = u - u_prev;
    const Vec<Scalar> dx = x - x_prev;
    return u.dot(w.Q_u * u) + du.dot(w.Q_delta_u * du) + x.dot(w.Q_x * x) + dx.dot(w.Q_delta_x * dx) +
           e.dot(w.Q_e * e) + 2 * w.s_x_lift.dot(x);
}

}  // namespace detail

/// Controller pieces needed to close the loop.
template <std::floating_point Scalar = double>
struct Controller {
    LearningFilters<Scalar> filters;
    SuperOperators<Scalar> ops;
    PerformanceWeights<Scalar> weights;
    LiftedModel<Scalar> model;  // controller's (nominal) lifted model
};

/**
 * Continuous operation of the closed loop for `n_iterations` iterations.
 *
 * Iteration 0 applies (u0, x0_0); afterwards each iteration plans with the
 * update law, applies the first block, and starts from the previous terminal
 * state. Throws DivergenceError on non-finite values; `rec` then holds the
 * iterations completed so far.
 */
template <std::floating_point Scalar>
void run_closed_loop(const Controller<Scalar>& ctl, const PlantConfig<Scalar>& plant, const Vec<Scalar>& u0,
                     const Vec<Scalar>& x0_0, int n_iterations, const Vec<Scalar>& r_lift, RunRecord<Scalar>& rec) {
    const auto& ops = ctl.ops;
    detail::require(n_iterations >= 0, "run_closed_loop: negative iteration count");
    detail::require(u0.size() == ops.lifted_u() && x0_0.size() == ops.n_x && r_lift.size() == ops.lifted_x(),
                    "run_closed_loop: initial data or reference has wrong length");
    detail::require(plant.lifted.n_s == ops.n_s && plant.lifted.n_x == ops.n_x && plant.lifted.n_u == ops.n_u,
                    "run_closed_loop: plant dimensions disagree with the controller");

    rec = RunRecord<Scalar>{};
    rec.n_i = ops.n_i;
    rec.disturbance_seed = plant.disturbance.seed;
    if (plant.uncertainty) rec.uncertainty_seed = plant.uncertainty->seed;
    rec.nominal_condition1 = check_condition1(build_closed_loop(ctl.filters, ctl.model, ops));

    Vec<Scalar> u = u0;
    Vec<Scalar> x0 = x0_0;
    for (int j = 0; j < n_iterations; ++j) {
        const Vec<Scalar> d = draw_disturbance(plant.disturbance, j, ops.n_s);
        const auto [dG, dF] = plant.perturbation(j);
        const Vec<Scalar> x = step_plant(plant.lifted, dG, dF, u, x0, d);
        const Vec<Scalar> e = r_lift - x;
        if (!x.allFinite() || !u.allFinite())
            throw DivergenceError("closed loop diverged at iteration " + std::to_string(j), j);

        const Vec<Scalar>& u_prev = j == 0 ? u : rec.u.back();
        const Vec<Scalar>& x_prev = j == 0 ? x : rec.x.back();
        rec.cost.push_back(detail::stage_cost(ctl.weights, u, u_prev, x, x_prev, e));
        rec.u.push_back(u);
        rec.x.push_back(x);
        rec.x0.push_back(x0);
        rec.z.push_back(ZVector<Scalar>{u, x0}.stacked());
        rec.e.push_back(e);
        rec.d.push_back(d);

        ControllerState<Scalar> state{u, e, x0, plant.lifted.E_F * x};
        const Vec<Scalar> plan = update_law(ctl.filters, state);
        u = receding_step(plan, ops);
        x0 = state.x0_next;
    }
}

/// Convenience form returning the record; on divergence the partial record is lost.
template <std::floating_point Scalar>
RunRecord<Scalar> run_closed_loop(const Controller<Scalar>& ctl, const PlantConfig<Scalar>& plant,
                                  const Vec<Scalar>& u0, const Vec<Scalar>& x0_0, int n_iterations,
                                  const Vec<Scalar>& r_lift) {
    RunRecord<Scalar> rec;
    run_closed_loop(ctl, plant, u0, x0_0, n_iterations, r_lift, rec);
    return rec;
}

}  // namespace rhilc
