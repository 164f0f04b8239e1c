#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rhilc/config.hpp"
#include "rhilc/converged_optimum.hpp"

namespace rhilc {

/// Process exit codes shared by every command.
enum ExitCode : int { kExitOk = 0, kExitNumerical = 1, kExitUsage = 2 };

/// Everything derived from a config for one prediction horizon.
struct Pipeline {
    int n_i = 1;
    StateSpaceModel<double> model;       // controller model
    StateSpaceModel<double> true_plant;  // plant operated (equals model when matched)
    LiftedModel<double> model_lifted;
    LiftedModel<double> limit_lifted;  // true plant without perturbations
    SuperOperators<double> ops;
    PerformanceWeights<double> weights;
    Vec<double> r;        // lifted reference
    Vec<double> d_limit;  // deterministic (sigma = 0) disturbance
};

inline Pipeline build_pipeline(const ExperimentConfig& cfg, int n_i) {
    if (n_i < 1) throw InvalidConfig("n_i", "must be a positive integer");
    const StateSpaceModel<double> model(cfg.A, cfg.B);
    const StateSpaceModel<double> truth = cfg.mismatched() ? StateSpaceModel<double>(*cfg.true_A, *cfg.true_B) : model;
    const auto lifted = build_lifted(model, cfg.n_s);
    const auto limit = build_lifted(truth, cfg.n_s);
    auto ops = build_operators<double>(cfg.n_s, cfg.nx(), cfg.nu(), n_i);
    auto w = assemble_weights(cfg.weights, ops);
    Vec<double> d = Vec<double>::Zero(ops.lifted_x());
    if (cfg.disturbance) d = detail::to_vec(cfg.disturbance->mean).replicate(cfg.n_s, 1);
    return Pipeline{n_i, model, truth, lifted, limit, std::move(ops), std::move(w), build_reference(cfg), d};
}

/// Filters designed on the controller model and the map they induce on the limit plant.
struct Analysis {
    LearningFilters<double> filters;
    ClosedLoopMap<double> map;
    StabilityVerdict condition1;
    StabilityVerdict nominal_condition1;  // map on the controller's own model
};

inline Analysis analyze(const Pipeline& p) {
    const auto super_model = build_super(p.model_lifted, p.n_i);
    Analysis a{synthesize(super_model, p.model_lifted, p.weights, p.ops), {}, {}, {}};
    a.map = build_closed_loop(a.filters, p.limit_lifted, p.ops);
    a.condition1 = check_condition1(a.map);
    a.nominal_condition1 = check_condition1(build_closed_loop(a.filters, p.model_lifted, p.ops));
    return a;
}

inline ConvergedProblem<double> optimum_problem(const Pipeline& p) {
    return build_problem(p.limit_lifted, p.weights, p.ops, p.r, p.d_limit);
}

// ---------------------------------------------------------------------------
// serialization

/// Shortest text for a double that still carries 17 significant digits.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline void write_json_value(std::ostream& os, const Json& j, int indent, int depth) {
    const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(indent * depth), ' ');
    switch (j.type()) {
        case Json::value_t::number_float: {
            const double v = j.get<double>();
            // JSON has no non-finite numbers
            os << (std::isfinite(v) ? format_double(v) : "null");
            break;
        }
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                break;
            }
            os << "{\n";
            bool first = true;
            for (const auto& [key, value] : j.items()) {
                if (!first) os << ",\n";
                first = false;
                os << pad << Json(key).dump() << ": ";
                write_json_value(os, value, indent, depth + 1);
            }
            os << '\n' << close_pad << '}';
            break;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                break;
            }
            // numeric arrays stay on one line
            const bool flat = std::all_of(j.begin(), j.end(), [](const Json& v) { return v.is_primitive(); });
            os << '[';
            bool first = true;
            for (const auto& value : j) {
                if (!first) os << (flat ? ", " : ",");
                if (!flat) os << '\n' << pad;
                first = false;
                write_json_value(os, value, indent, depth + 1);
            }
            if (!flat) os << '\n' << close_pad;
            os << ']';
            break;
        }
        default:
            os << j.dump();
    }
}

}  // namespace detail

/// JSON text with every float printed at 17 significant digits.
inline std::string to_json_text(const Json& j) {
    std::ostringstream os;
    detail::write_json_value(os, j, 2, 0);
    os << '\n';
    return os.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

inline Json nullable_vector(const std::optional<Vec<double>>& v) {
    return v ? detail::vector_json(*v) : Json(nullptr);
}

inline Json nullable_number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// check

struct CheckReport {
    int n_i = 1;
    StabilityVerdict condition1;
    StabilityVerdict nominal_condition1;
    DefinitenessVerdict condition3;
    std::optional<std::string> synthesis_error;

    [[nodiscard]] bool satisfied() const { return !synthesis_error && condition1.stable && condition3.satisfied; }

    [[nodiscard]] Json to_json() const {
        Json j;
        j["n_i"] = n_i;
        j["spectral_radius"] = nullable_number(condition1.radius);
        j["condition1"] = condition1.stable;
        j["nominal_spectral_radius"] = nullable_number(nominal_condition1.radius);
        j["min_eigenvalue_Q_plus_WtW"] = nullable_number(condition3.min_eigenvalue);
        j["condition3"] = condition3.satisfied;
        j["synthesis_error"] = synthesis_error ? Json(*synthesis_error) : Json(nullptr);
        j["satisfied"] = satisfied();
        return j;
    }
};

inline CheckReport cmd_check(const ExperimentConfig& cfg, int n_i) {
    const Pipeline p = build_pipeline(cfg, n_i);
    CheckReport rep;
    rep.n_i = n_i;
    rep.condition1.radius = std::numeric_limits<double>::quiet_NaN();
    rep.nominal_condition1.radius = std::numeric_limits<double>::quiet_NaN();
    try {
        const Analysis a = analyze(p);
        rep.condition1 = a.condition1;
        rep.nominal_condition1 = a.nominal_condition1;
    } catch (const SynthesisError& e) {
        rep.synthesis_error = e.what();
    }
    rep.condition3 = check_condition3(optimum_problem(p));
    return rep;
}

// ---------------------------------------------------------------------------
// optimum

struct OptimumReport {
    ConvergedOptimum<double> optimum;
    DefinitenessVerdict condition3;
    double repeatability_residual = 0.0;

    [[nodiscard]] Json to_json() const {
        Json j;
        j["z_opt"] = detail::vector_json(optimum.z);
        j["lambda_opt"] = detail::vector_json(optimum.lambda);
        j["constraint_residual"] = optimum.constraint_residual;
        j["stationarity_residual"] = optimum.stationarity_residual;
        j["repeatability_residual"] = repeatability_residual;
        j["kkt_rcond"] = optimum.kkt_rcond;
        j["min_eigenvalue_Q_plus_WtW"] = condition3.min_eigenvalue;
        return j;
    }
};

/// Throws SolveError (carrying lambda_min) when the problem is not well posed.
inline OptimumReport compute_optimum(const Pipeline& p) {
    const auto problem = optimum_problem(p);
    OptimumReport rep;
    rep.condition3 = check_condition3(problem);
    rep.optimum = solve_kkt(problem);
    rep.repeatability_residual = verify_repeatability(rep.optimum, p.true_plant, p.d_limit);
    return rep;
}

inline OptimumReport cmd_optimum(const ExperimentConfig& cfg, int n_i, const std::filesystem::path& out_dir) {
    const OptimumReport rep = compute_optimum(build_pipeline(cfg, n_i));
    std::filesystem::create_directories(out_dir);
    Json j = rep.to_json();
    j["config"] = cfg.source;
    write_text(out_dir / "optimum.json", to_json_text(j));
    return rep;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepRow {
    int n_i = 0;
    double spectral_radius = std::numeric_limits<double>::quiet_NaN();
    double distance = std::numeric_limits<double>::quiet_NaN();  // |z_inf - z_opt|_2
    double convergence_residual = std::numeric_limits<double>::quiet_NaN();  // |(I - A_z) z_inf - eta|_inf
    double runtime_seconds = 0.0;
    std::optional<Vec<double>> z_inf;
    std::optional<std::string> error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    Vec<double> z_opt;

    [[nodiscard]] bool ok() const {
        return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error; });
    }
};

/// Fixed point for one horizon, compared against a precomputed optimum.
inline SweepRow evaluate_horizon(const ExperimentConfig& cfg, int n_i, const Vec<double>& z_opt) {
    const auto start = std::chrono::steady_clock::now();
    SweepRow row;
    row.n_i = n_i;
    try {
        const Pipeline p = build_pipeline(cfg, n_i);
        const Analysis a = analyze(p);
        row.spectral_radius = a.condition1.radius;
        const Vec<double> z = z_infinity(a.map, p.r, p.d_limit);
        const Vec<double> eta = a.map.eta(p.r, p.d_limit);
        row.convergence_residual = (z - a.map.A_z * z - eta).cwiseAbs().maxCoeff();
        row.distance = (z - z_opt).norm();
        row.z_inf = z;
    } catch (const Error& e) {
        row.error = e.what();
    }
    row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return row;
}

/// Worker count: hardware concurrency, capped by RHILC_THREADS and the job count.
inline unsigned sweep_threads(std::size_t jobs) {
    unsigned n = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("RHILC_THREADS")) {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && cap >= 1) n = std::min(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Horizons run concurrently; the optimum does not depend on n_i and is solved once.
inline SweepResult run_sweep(const ExperimentConfig& cfg, const std::vector<int>& horizons) {
    if (horizons.empty()) throw InvalidConfig("n_i_sweep", "no horizons requested");
    for (int n : horizons)
        if (n < 1) throw InvalidConfig("n_i_sweep", "entries must be positive integers");
    SweepResult res;
    res.z_opt = compute_optimum(build_pipeline(cfg, horizons.front())).optimum.z;
    res.rows.resize(horizons.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < horizons.size(); k = next++)
            res.rows[k] = evaluate_horizon(cfg, horizons[k], res.z_opt);
    };
    const unsigned n_threads = sweep_threads(horizons.size());
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    pool.clear();
    return res;
}

/// Runtime is left out of the file so reruns stay byte-identical.
inline std::string sweep_csv(const SweepResult& res) {
    std::ostringstream os;
    os << "n_i,spectral_radius,distance_zinf_zopt,convergence_residual\n";
    for (const auto& r : res.rows)
        os << r.n_i << ',' << format_double(r.spectral_radius) << ',' << format_double(r.distance) << ','
           << format_double(r.convergence_residual) << '\n';
    return os.str();
}

inline SweepResult cmd_sweep(const ExperimentConfig& cfg, const std::vector<int>& horizons,
                             const std::filesystem::path& out_dir) {
    SweepResult res = run_sweep(cfg, horizons);
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "sweep.csv", sweep_csv(res));
    return res;
}

// ---------------------------------------------------------------------------
// run

struct RunReport {
    RunRecord<double> record;
    StabilityVerdict condition1;
    std::optional<Vec<double>> z_inf;
    std::optional<Vec<double>> z_opt;
    std::vector<double> distances;  // |z_j - z_inf|_2 per recorded iteration
    double distance_zinf_zopt = std::numeric_limits<double>::quiet_NaN();
    std::optional<std::string> error;

    [[nodiscard]] bool ok() const { return !error; }
};

inline PlantConfig<double> make_plant(const ExperimentConfig& cfg, const Pipeline& p) {
    PlantConfig<double> plant;
    plant.lifted = p.limit_lifted;
    plant.disturbance.mean_per_step = Vec<double>::Zero(cfg.nx());
    plant.disturbance.seed = cfg.disturbance_seed();
    if (cfg.disturbance) {
        plant.disturbance.mean_per_step = detail::to_vec(cfg.disturbance->mean);
        plant.disturbance.sigma = cfg.disturbance->sigma;
        plant.disturbance.noise_decay = cfg.disturbance->noise_decay;
    }
    if (cfg.uncertainty) {
        UncertaintySpec<double> u;
        const double gnorm = p.limit_lifted.G.operatorNorm();
        u.magnitude = cfg.uncertainty->magnitude.value_or(cfg.uncertainty->relative_magnitude * gnorm);
        u.decay = cfg.uncertainty->decay;
        u.seed = cfg.uncertainty_seed();
        plant.uncertainty = u;
    }
    return plant;
}

inline std::string trajectory_csv(const RunRecord<double>& rec, const Vec<double>& r, Eigen::Index nx,
                                  Eigen::Index nu) {
    std::ostringstream os;
    os << "iteration,step";
    for (Eigen::Index i = 1; i <= nx; ++i) os << ",x_" << i;
    for (Eigen::Index i = 1; i <= nu; ++i) os << ",u_" << i;
    for (Eigen::Index i = 1; i <= nx; ++i) os << ",r_" << i;
    os << '\n';
    const Eigen::Index n_s = r.size() / nx;
    for (std::size_t j = 0; j < rec.iterations(); ++j) {
        for (Eigen::Index k = 0; k < n_s; ++k) {
            // step k + 1 pairs state x^{k+1} with the input u^k that produced it
            os << j + 1 << ',' << k + 1;
            for (Eigen::Index i = 0; i < nx; ++i) os << ',' << format_double(rec.x[j](k * nx + i));
            for (Eigen::Index i = 0; i < nu; ++i) os << ',' << format_double(rec.u[j](k * nu + i));
            for (Eigen::Index i = 0; i < nx; ++i) os << ',' << format_double(r(k * nx + i));
            os << '\n';
        }
    }
    return os.str();
}

inline std::string convergence_csv(const std::vector<double>& distances) {
    std::ostringstream os;
    os << "iteration,distance_to_zinf\n";
    for (std::size_t j = 0; j < distances.size(); ++j) os << j + 1 << ',' << format_double(distances[j]) << '\n';
    return os.str();
}

inline Json summary_json(const ExperimentConfig& cfg, const RunReport& rep) {
    Json j;
    j["n_i"] = rep.record.n_i;
    j["n_iterations"] = static_cast<int>(rep.record.iterations());
    j["spectral_radius"] = nullable_number(rep.condition1.radius);
    j["condition1"] = rep.condition1.stable;
    j["nominal_spectral_radius"] = nullable_number(rep.record.nominal_condition1.radius);
    j["nominal_condition1"] = rep.record.nominal_condition1.stable;
    j["z_inf"] = nullable_vector(rep.z_inf);
    j["z_opt"] = nullable_vector(rep.z_opt);
    j["distance_zinf_zopt"] = nullable_number(rep.distance_zinf_zopt);
    j["distance_to_zinf_first"] = rep.distances.empty() ? Json(nullptr) : nullable_number(rep.distances.front());
    j["distance_to_zinf_last"] = rep.distances.empty() ? Json(nullptr) : nullable_number(rep.distances.back());
    j["final_cost"] = rep.record.cost.empty() ? Json(nullptr) : nullable_number(rep.record.cost.back());
    Json seeds;
    seeds["seed"] = cfg.seed;
    seeds["disturbance"] = cfg.disturbance_seed();
    seeds["uncertainty"] = cfg.uncertainty ? Json(cfg.uncertainty_seed()) : Json(nullptr);
    j["seeds"] = seeds;
    j["error"] = rep.error ? Json(*rep.error) : Json(nullptr);
    j["config"] = cfg.source;
    return j;
}

/**
 * Closed-loop run plus the limit analysis. Outputs are written even when the
 * run fails; `error` then says why (divergence, no fixed point, ill-posed optimum).
 */
inline RunReport cmd_run(const ExperimentConfig& cfg, int n_i, const std::filesystem::path& out_dir) {
    const Pipeline p = build_pipeline(cfg, n_i);
    const Analysis a = analyze(p);
    RunReport rep;
    rep.condition1 = a.condition1;

    const Controller<double> ctl{a.filters, p.ops, p.weights, p.model_lifted};
    const PlantConfig<double> plant = make_plant(cfg, p);
    try {
        run_closed_loop(ctl, plant, detail::to_vec(cfg.u0), detail::to_vec(cfg.x0), cfg.n_iterations, p.r,
                        rep.record);
    } catch (const DivergenceError& e) {
        rep.error = e.what();
    }
    try {
        rep.z_opt = compute_optimum(p).optimum.z;
    } catch (const SolveError& e) {
        if (!rep.error) rep.error = e.what();
    }
    try {
        rep.z_inf = z_infinity(a.map, p.r, p.d_limit);
    } catch (const NoFixedPoint& e) {
        if (!rep.error) rep.error = e.what();
    }
    if (rep.z_inf) {
        for (const auto& z : rep.record.z) rep.distances.push_back((z - *rep.z_inf).norm());
        if (rep.z_opt) rep.distance_zinf_zopt = (*rep.z_inf - *rep.z_opt).norm();
    }

    std::filesystem::create_directories(out_dir);
    write_text(out_dir / "trajectory.csv", trajectory_csv(rep.record, p.r, cfg.nx(), cfg.nu()));
    write_text(out_dir / "convergence.csv", convergence_csv(rep.distances));
    write_text(out_dir / "summary.json", to_json_text(summary_json(cfg, rep)));
    return rep;
}

}  // namespace rhilc
