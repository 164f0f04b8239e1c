#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhilc/plant_simulator.hpp"

namespace rhilc {

using Json = nlohmann::ordered_json;

/// Reference waveform over one iteration; values are for steps k = 1..n_s.
struct ReferenceSpec {
    enum class Kind { Constant, Sine, Samples };
    Kind kind = Kind::Constant;
    std::vector<double> value;                 // constant: per-state value
    int state = 0;                             // sine: driven state (0-based)
    double amplitude = 1.0;                    // sine
    double periods = 1.0;                      // sine: periods per iteration
    double phase = 0.0;                        // sine: radians
    std::vector<std::vector<double>> samples;  // samples: n_s rows of n_x
};

struct UncertaintyConfig {
    std::optional<double> magnitude;  // absolute; defaults to relative_magnitude * |G*|_2
    double relative_magnitude = 0.01;
    double decay = 0.8;
    std::optional<std::uint64_t> seed;
};

struct DisturbanceConfig {
    std::vector<double> mean;
    double sigma = 0.05;
    double noise_decay = 1.0;
    std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
    Mat<double> A, B;                         // controller model
    std::optional<Mat<double>> true_A, true_B;  // plant actually operated
    int n_s = 0;
    int n_i = 1;
    std::vector<int> n_i_sweep;
    int n_iterations = 10;
    WeightConfig<double> weights;
    ReferenceSpec reference;
    std::optional<DisturbanceConfig> disturbance;
    std::optional<UncertaintyConfig> uncertainty;
    std::vector<double> u0;  // lifted, defaults to zeros
    std::vector<double> x0;  // defaults to zeros
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    Json source;  // resolved configuration, echoed into summaries

    [[nodiscard]] Eigen::Index nx() const { return A.rows(); }
    [[nodiscard]] Eigen::Index nu() const { return B.cols(); }
    [[nodiscard]] bool mismatched() const { return true_A.has_value(); }

    [[nodiscard]] std::uint64_t disturbance_seed() const {
        return disturbance && disturbance->seed ? *disturbance->seed : detail::splitmix64(seed ^ 0xd157ULL);
    }
    [[nodiscard]] std::uint64_t uncertainty_seed() const {
        return uncertainty && uncertainty->seed ? *uncertainty->seed : detail::splitmix64(seed ^ 0x0ACEULL);
    }
};

namespace detail {

inline Mat<double> json_matrix(const Json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw InvalidConfig(field, "expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = j.front().is_array() ? static_cast<Eigen::Index>(j.front().size()) : 0;
    if (cols == 0) throw InvalidConfig(field, "rows must be non-empty arrays");
    Mat<double> M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw InvalidConfig(field, "ragged matrix rows");
        for (Eigen::Index c = 0; c < cols; ++c) {
            const auto& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number()) throw InvalidConfig(field, "entries must be numbers");
            M(r, c) = v.get<double>();
        }
    }
    return M;
}

inline std::vector<double> json_vector(const Json& j, const std::string& field) {
    if (j.is_number()) return {j.get<double>()};
    if (!j.is_array()) throw InvalidConfig(field, "expected a number or an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw InvalidConfig(field, "entries must be numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline Vec<double> to_vec(const std::vector<double>& v) {
    return Eigen::Map<const Vec<double>>(v.data(), static_cast<Eigen::Index>(v.size()));
}

template <typename T>
T json_get(const Json& j, const char* key, const std::string& field, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidConfig(field, "has the wrong type");
    }
}

inline Json matrix_json(const Mat<double>& M) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json vector_json(const Vec<double>& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Vec<double> weight_vector(const Json& w, const char* key, Eigen::Index n, bool required,
                                 double fallback = 0.0) {
    const std::string field = std::string("weights.") + key;
    if (!w.contains(key)) {
        if (required) throw InvalidConfig(field, "is required");
        return Vec<double>::Constant(n, fallback);
    }
    auto v = json_vector(w.at(key), field);
    // a single number is broadcast over the channels
    if (v.size() == 1 && n > 1) v.assign(static_cast<std::size_t>(n), v.front());
    return to_vec(v);
}

}  // namespace detail

/// Parses and validates an experiment configuration; errors name the offending field.
inline ExperimentConfig parse_config_text(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidConfig("<document>", std::string("parse failure: ") + e.what());
    }
    if (!j.is_object()) throw InvalidConfig("<document>", "top level must be an object");

    ExperimentConfig cfg;
    if (!j.contains("plant")) throw InvalidConfig("plant", "is required");
    const Json& plant = j.at("plant");
    if (!plant.contains("A")) throw InvalidConfig("plant.A", "is required");
    if (!plant.contains("B")) throw InvalidConfig("plant.B", "is required");
    cfg.A = detail::json_matrix(plant.at("A"), "plant.A");
    cfg.B = detail::json_matrix(plant.at("B"), "plant.B");
    try {
        StateSpaceModel<double> check(cfg.A, cfg.B);
    } catch (const InvalidModel& e) {
        throw InvalidConfig("plant", e.what());
    }
    if (plant.contains("true_plant")) {
        const Json& tp = plant.at("true_plant");
        if (!tp.contains("A") || !tp.contains("B"))
            throw InvalidConfig("plant.true_plant", "needs both A and B");
        cfg.true_A = detail::json_matrix(tp.at("A"), "plant.true_plant.A");
        cfg.true_B = detail::json_matrix(tp.at("B"), "plant.true_plant.B");
        if (cfg.true_A->rows() != cfg.nx() || cfg.true_A->cols() != cfg.nx() || cfg.true_B->rows() != cfg.nx() ||
            cfg.true_B->cols() != cfg.nu())
            throw InvalidConfig("plant.true_plant", "dimensions must match the controller model");
    }
    const auto nx = cfg.nx();
    const auto nu = cfg.nu();

    cfg.n_s = detail::json_get<int>(j, "n_s", "n_s", 0);
    if (cfg.n_s < 1) throw InvalidConfig("n_s", "must be a positive integer");
    cfg.n_i = detail::json_get<int>(j, "n_i", "n_i", 1);
    if (cfg.n_i < 1) throw InvalidConfig("n_i", "must be a positive integer");
    cfg.n_i_sweep = detail::json_get<std::vector<int>>(j, "n_i_sweep", "n_i_sweep", {});
    for (int n : cfg.n_i_sweep)
        if (n < 1) throw InvalidConfig("n_i_sweep", "entries must be positive integers");
    cfg.n_iterations = detail::json_get<int>(j, "n_iterations", "n_iterations", 10);
    if (cfg.n_iterations < 1) throw InvalidConfig("n_iterations", "must be a positive integer");
    cfg.seed = detail::json_get<std::uint64_t>(j, "seed", "seed", 0);
    cfg.output_dir = detail::json_get<std::string>(j, "output_dir", "output_dir", "out");

    if (!j.contains("weights")) throw InvalidConfig("weights", "is required");
    const Json& w = j.at("weights");
    cfg.weights.q_u = detail::weight_vector(w, "q_u", nu, true);
    cfg.weights.q_delta_u = detail::weight_vector(w, "q_delta_u", nu, true);
    cfg.weights.q_x = detail::weight_vector(w, "q_x", nx, true);
    cfg.weights.q_delta_x = detail::weight_vector(w, "q_delta_x", nx, true);
    cfg.weights.q_e = detail::weight_vector(w, "q_e", nx, true);
    cfg.weights.s_x = detail::weight_vector(w, "s_x", nx, false);
    if (w.contains("q_sx")) cfg.weights.q_sx = detail::weight_vector(w, "q_sx", nx, true);
    try {
        cfg.weights.validate(nx, nu);
    } catch (const InvalidConfig& e) {
        throw InvalidConfig("weights." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }

    // reference
    if (!j.contains("reference")) {
        cfg.reference.kind = ReferenceSpec::Kind::Constant;
        cfg.reference.value.assign(static_cast<std::size_t>(nx), 0.0);
        cfg.reference.value[0] = 1.0;
    } else {
        const Json& r = j.at("reference");
        const auto type = detail::json_get<std::string>(r, "type", "reference.type", "constant");
        if (type == "constant") {
            cfg.reference.kind = ReferenceSpec::Kind::Constant;
            cfg.reference.value =
                r.contains("value") ? detail::json_vector(r.at("value"), "reference.value") : std::vector<double>{};
            if (cfg.reference.value.size() == 1 && nx > 1) cfg.reference.value.resize(static_cast<std::size_t>(nx), 0.0);
            if (static_cast<Eigen::Index>(cfg.reference.value.size()) != nx)
                throw InvalidConfig("reference.value", "needs one entry per state");
        } else if (type == "sine") {
            cfg.reference.kind = ReferenceSpec::Kind::Sine;
            cfg.reference.state = detail::json_get<int>(r, "state", "reference.state", 0);
            cfg.reference.amplitude = detail::json_get<double>(r, "amplitude", "reference.amplitude", 1.0);
            cfg.reference.periods = detail::json_get<double>(r, "periods", "reference.periods", 1.0);
            cfg.reference.phase = detail::json_get<double>(r, "phase", "reference.phase", 0.0);
            if (cfg.reference.state < 0 || cfg.reference.state >= nx)
                throw InvalidConfig("reference.state", "must index a state");
        } else if (type == "samples") {
            cfg.reference.kind = ReferenceSpec::Kind::Samples;
            if (!r.contains("values")) throw InvalidConfig("reference.values", "is required for samples");
            const Mat<double> S = detail::json_matrix(r.at("values"), "reference.values");
            if (S.rows() != cfg.n_s || S.cols() != nx)
                throw InvalidConfig("reference.values", "needs n_s rows of n_x values");
            for (Eigen::Index k = 0; k < S.rows(); ++k) {
                cfg.reference.samples.emplace_back(S.row(k).begin(), S.row(k).end());
            }
        } else {
            throw InvalidConfig("reference.type", "must be constant, sine or samples");
        }
    }

    if (j.contains("disturbance")) {
        const Json& d = j.at("disturbance");
        DisturbanceConfig dc;
        dc.mean = d.contains("mean") ? detail::json_vector(d.at("mean"), "disturbance.mean")
                                     : std::vector<double>(static_cast<std::size_t>(nx), 0.0);
        if (static_cast<Eigen::Index>(dc.mean.size()) != nx)
            throw InvalidConfig("disturbance.mean", "needs one entry per state");
        dc.sigma = detail::json_get<double>(d, "sigma", "disturbance.sigma", 0.05);
        if (!(dc.sigma >= 0)) throw InvalidConfig("disturbance.sigma", "must be >= 0");
        dc.noise_decay = detail::json_get<double>(d, "noise_decay", "disturbance.noise_decay", 1.0);
        if (!(dc.noise_decay >= 0 && dc.noise_decay <= 1))
            throw InvalidConfig("disturbance.noise_decay", "must lie in [0, 1]");
        if (d.contains("seed")) dc.seed = detail::json_get<std::uint64_t>(d, "seed", "disturbance.seed", 0);
        cfg.disturbance = dc;
    }

    if (j.contains("uncertainty")) {
        const Json& u = j.at("uncertainty");
        UncertaintyConfig uc;
        if (u.contains("magnitude")) {
            uc.magnitude = detail::json_get<double>(u, "magnitude", "uncertainty.magnitude", 0.0);
            if (!(*uc.magnitude >= 0)) throw InvalidConfig("uncertainty.magnitude", "must be >= 0");
        }
        uc.relative_magnitude =
            detail::json_get<double>(u, "relative_magnitude", "uncertainty.relative_magnitude", 0.01);
        if (!(uc.relative_magnitude >= 0)) throw InvalidConfig("uncertainty.relative_magnitude", "must be >= 0");
        uc.decay = detail::json_get<double>(u, "decay", "uncertainty.decay", 0.8);
        if (!(uc.decay >= 0 && uc.decay < 1)) throw InvalidConfig("uncertainty.decay", "must lie in [0, 1)");
        if (u.contains("seed")) uc.seed = detail::json_get<std::uint64_t>(u, "seed", "uncertainty.seed", 0);
        cfg.uncertainty = uc;
    }

    const Eigen::Index lu = cfg.n_s * nu;
    if (j.contains("init")) {
        const Json& in = j.at("init");
        if (in.contains("u0")) {
            cfg.u0 = detail::json_vector(in.at("u0"), "init.u0");
            if (cfg.u0.size() == 1 && lu > 1) cfg.u0.assign(static_cast<std::size_t>(lu), cfg.u0.front());
        }
        if (in.contains("x0")) cfg.x0 = detail::json_vector(in.at("x0"), "init.x0");
    }
    if (cfg.u0.empty()) cfg.u0.assign(static_cast<std::size_t>(lu), 0.0);
    if (cfg.x0.empty()) cfg.x0.assign(static_cast<std::size_t>(nx), 0.0);
    if (static_cast<Eigen::Index>(cfg.u0.size()) != lu) throw InvalidConfig("init.u0", "needs n_s * n_u entries");
    if (static_cast<Eigen::Index>(cfg.x0.size()) != nx) throw InvalidConfig("init.x0", "needs n_x entries");

    cfg.source = j;
    return cfg;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("<file>", "cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Lifted reference r = [r^1; ...; r^{n_s}].
inline Vec<double> build_reference(const ExperimentConfig& cfg) {
    const auto nx = cfg.nx();
    Vec<double> r = Vec<double>::Zero(cfg.n_s * nx);
    const auto& spec = cfg.reference;
    for (int k = 1; k <= cfg.n_s; ++k) {
        auto block = r.segment((k - 1) * nx, nx);
        switch (spec.kind) {
            case ReferenceSpec::Kind::Constant:
                block = detail::to_vec(spec.value);
                break;
            case ReferenceSpec::Kind::Sine:
                block(spec.state) = spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.periods * k / cfg.n_s +
                                                              spec.phase);
                break;
            case ReferenceSpec::Kind::Samples:
                block = detail::to_vec(spec.samples[static_cast<std::size_t>(k - 1)]);
                break;
        }
    }
    return r;
}

}  // namespace rhilc
