// Command-line front end: rhilc check|run|sweep|optimum --config <path> [--out <dir>] [--seed <u64>] [--ni <list>]

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rhilc/rhilc.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string ni;
};

std::vector<int> parse_horizons(const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto dash = item.find('-', 1);
        try {
            if (dash != std::string::npos) {
                const int lo = std::stoi(item.substr(0, dash));
                const int hi = std::stoi(item.substr(dash + 1));
                if (hi < lo) throw rhilc::InvalidConfig("--ni", "range '" + item + "' is empty");
                for (int n = lo; n <= hi; ++n) out.push_back(n);
            } else {
                out.push_back(std::stoi(item));
            }
        } catch (const std::logic_error&) {
            throw rhilc::InvalidConfig("--ni", "cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw rhilc::InvalidConfig("--ni", "no horizons given");
    for (int n : out)
        if (n < 1) throw rhilc::InvalidConfig("--ni", "horizons must be positive");
    return out;
}

rhilc::ExperimentConfig load(const Options& opt) {
    auto cfg = rhilc::parse_config(opt.config);
    if (opt.seed) {
        cfg.seed = *opt.seed;
        cfg.source["seed"] = *opt.seed;
    }
    return cfg;
}

std::string out_dir(const Options& opt, const rhilc::ExperimentConfig& cfg) {
    return opt.out.empty() ? cfg.output_dir : opt.out;
}

int single_horizon(const Options& opt, const rhilc::ExperimentConfig& cfg) {
    if (opt.ni.empty()) return cfg.n_i;
    const auto list = parse_horizons(opt.ni);
    if (list.size() != 1) throw rhilc::InvalidConfig("--ni", "this command takes a single horizon");
    return list.front();
}

int run_check(const Options& opt) {
    const auto cfg = load(opt);
    const auto rep = rhilc::cmd_check(cfg, single_horizon(opt, cfg));
    std::cout << rhilc::to_json_text(rep.to_json());
    return rep.satisfied() ? rhilc::kExitOk : rhilc::kExitNumerical;
}

int run_run(const Options& opt) {
    const auto cfg = load(opt);
    const auto dir = out_dir(opt, cfg);
    const auto rep = rhilc::cmd_run(cfg, single_horizon(opt, cfg), dir);
    if (!rep.record.nominal_condition1.stable)
        std::cerr << "warning: controller fails condition 1 on its own model (spectral radius "
                  << rhilc::format_double(rep.record.nominal_condition1.radius) << ")\n";
    std::cout << "spectral_radius " << rhilc::format_double(rep.condition1.radius) << '\n'
              << "distance_zinf_zopt " << rhilc::format_double(rep.distance_zinf_zopt) << '\n'
              << "outputs " << dir << '\n';
    if (rep.error) {
        std::cerr << "error: " << *rep.error << '\n';
        return rhilc::kExitNumerical;
    }
    return rhilc::kExitOk;
}

int run_sweep(const Options& opt) {
    const auto cfg = load(opt);
    std::vector<int> horizons;
    if (!opt.ni.empty()) horizons = parse_horizons(opt.ni);
    else if (!cfg.n_i_sweep.empty()) horizons = cfg.n_i_sweep;
    else horizons = {cfg.n_i};
    const auto dir = out_dir(opt, cfg);
    const auto res = rhilc::cmd_sweep(cfg, horizons, dir);
    std::cout << "n_i spectral_radius distance_zinf_zopt convergence_residual runtime_s\n";
    for (const auto& r : res.rows) {
        std::cout << r.n_i << ' ' << rhilc::format_double(r.spectral_radius) << ' '
                  << rhilc::format_double(r.distance) << ' ' << rhilc::format_double(r.convergence_residual) << ' '
                  << r.runtime_seconds << '\n';
        if (r.error) std::cerr << "n_i = " << r.n_i << ": " << *r.error << '\n';
    }
    return res.ok() ? rhilc::kExitOk : rhilc::kExitNumerical;
}

int run_optimum(const Options& opt) {
    const auto cfg = load(opt);
    const auto dir = out_dir(opt, cfg);
    const auto rep = rhilc::cmd_optimum(cfg, single_horizon(opt, cfg), dir);
    std::cout << "constraint_residual " << rhilc::format_double(rep.optimum.constraint_residual) << '\n'
              << "stationarity_residual " << rhilc::format_double(rep.optimum.stationarity_residual) << '\n'
              << "repeatability_residual " << rhilc::format_double(rep.repeatability_residual) << '\n';
    return rhilc::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Receding-horizon iterative learning control experiments"};
    app.require_subcommand(1);
    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "experiment configuration (JSON, comments allowed)")->required();
        sub->add_option("--out", opt.out, "output directory (default: config output_dir)");
        sub->add_option("--seed", opt.seed, "override the base RNG seed");
        sub->add_option("--ni", opt.ni, "prediction horizon, or a list such as 1,2,3 or 1-6 for sweep");
    };
    auto* check = app.add_subcommand("check", "verify the convergence and optimum conditions");
    auto* run = app.add_subcommand("run", "closed-loop run; writes trajectory, convergence and summary");
    auto* sweep = app.add_subcommand("sweep", "fixed-point distance to the optimum over horizons");
    auto* optimum = app.add_subcommand("optimum", "solve for the repeatable optimum");
    for (auto* sub : {check, run, sweep, optimum}) add_common(sub);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? rhilc::kExitOk : rhilc::kExitUsage;
    }

    try {
        if (*check) return run_check(opt);
        if (*run) return run_run(opt);
        if (*sweep) return run_sweep(opt);
        return run_optimum(opt);
    } catch (const rhilc::InvalidConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return rhilc::kExitUsage;
    } catch (const rhilc::SolveError& e) {
        std::cerr << "error: " << e.what() << " (min eigenvalue "
                  << rhilc::format_double(e.min_eigenvalue()) << ")\n";
        return rhilc::kExitNumerical;
    } catch (const rhilc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return rhilc::kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return rhilc::kExitNumerical;
    }
}
