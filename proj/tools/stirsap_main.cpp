#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stirsap/config_io.hpp"
#include "stirsap/errors.hpp"
#include "stirsap/experiment.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

using namespace stirsap;

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> threads;
    std::optional<std::string> frame;
};

ExperimentConfig resolve_config(const GlobalArgs& args) {
    ExperimentConfig cfg =
        args.config_path.empty() ? ExperimentConfig::defaults() : load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.output_dir = *args.out_dir;
    if (args.threads) cfg.threads = *args.threads;
    if (args.frame) {
        if (*args.frame == "lab") cfg.propagation.frame = Frame::LAB;
        else if (*args.frame == "rotating") cfg.propagation.frame = Frame::ROTATING;
        else throw ConfigError("--frame expects lab|rotating");
    }
    cfg.validate();
    return cfg;
}

int cmd_pulses(const GlobalArgs& args) {
    const auto cfg = resolve_config(args);
    const auto start = Clock::now();
    const auto files = emit_pulses(cfg);
    write_manifest((std::filesystem::path(cfg.output_dir) / "manifest.json").string(),
                   make_manifest(cfg, files, seconds_since(start)));
    for (const auto& f : files) std::cout << f << '\n';
    return 0;
}

int cmd_simulate(const GlobalArgs& args) {
    const auto cfg = resolve_config(args);
    const auto outcome = run_transfer(cfg);
    std::printf("fidelity %.6f  leakage %.6f  intermediate_peak %.6f\n", outcome.report.fidelity,
                outcome.report.leakage, outcome.report.intermediate_peak);
    std::cout << (std::filesystem::path(cfg.output_dir) / "manifest.json").string() << '\n';
    return 0;
}

int cmd_optimize(const GlobalArgs& args) {
    ExperimentConfig cfg = resolve_config(args);
    cfg.protocol = Protocol::STIRSAP_OPT;
    if (!cfg.optimizer) cfg.optimizer = OptimizerSettings{};
    const auto outcome = optimize_protocol(cfg, /*write_logs=*/true);
    std::printf("best cost %.6e after %ld evaluations (%s)\n", outcome.result.best_cost,
                outcome.result.evaluations, to_string(outcome.result.termination).c_str());
    std::printf("alpha_p %.9f alpha_s %.9f beta_p %.9f beta_s %.9f\n", outcome.best.alpha_p,
                outcome.best.alpha_s, outcome.best.beta_p, outcome.best.beta_s);

    ExperimentConfig final_cfg = cfg;
    final_cfg.control = outcome.best;
    const auto transfer = run_transfer(final_cfg);
    std::printf("optimized fidelity %.6f\n", transfer.report.fidelity);
    return 0;
}

int cmd_sweep_time(const GlobalArgs& args) {
    const auto cfg = resolve_config(args);
    if (!cfg.scan || cfg.scan->times.empty())
        throw ConfigError("sweep-time: scan.times must be configured");
    TimeSweepSpec sweep;
    sweep.times = cfg.scan->times;
    sweep.omega0 = cfg.pulse.omega0;
    const auto start = Clock::now();
    const auto rows = sweep_total_time(
        cfg, sweep, {Protocol::STIRAP, Protocol::STIRSAP, Protocol::STIRSAP_OPT});
    std::filesystem::create_directories(cfg.output_dir);
    const auto path = (std::filesystem::path(cfg.output_dir) / "sweep.csv").string();
    write_sweep_csv(path, rows);
    write_manifest((std::filesystem::path(cfg.output_dir) / "manifest.json").string(),
                   make_manifest(cfg, {path}, seconds_since(start)));
    std::cout << path << '\n';
    return 0;
}

int cmd_scan_robustness(const GlobalArgs& args) {
    const auto cfg = resolve_config(args);
    if (!cfg.control)
        throw ConfigError("scan-robustness: a control optimum must be supplied in the config");
    const ScanSettings scan = cfg.scan.value_or(ScanSettings{});
    RobustnessAxes axes;
    axes.reference = *cfg.control;
    axes.eta_values = !scan.eta_values.empty()
                          ? scan.eta_values
                          : RobustnessAxes::symmetric_grid(scan.eta_span, scan.eta_points);
    axes.delta_values = !scan.delta_values.empty()
                            ? scan.delta_values
                            : RobustnessAxes::symmetric_grid(scan.delta_span, scan.delta_points);

    const auto start = Clock::now();
    const auto amplitude = robustness_scan(cfg, axes, ScanMode::AMPLITUDE);
    const auto detuning = robustness_scan(cfg, axes, ScanMode::DETUNING);

    std::filesystem::create_directories(cfg.output_dir);
    const auto dir = std::filesystem::path(cfg.output_dir);
    write_grid_csv((dir / "grid_amplitude.csv").string(), amplitude);
    write_grid_csv((dir / "grid_detuning.csv").string(), detuning);
    const int na = static_cast<int>(axes.eta_values.size());
    const int nd = static_cast<int>(axes.delta_values.size());
    write_antidiagonal_csv((dir / "antidiagonal.csv").string(),
                           antidiagonal_slice(amplitude, na, na),
                           antidiagonal_slice(detuning, nd, nd));
    write_manifest((dir / "manifest.json").string(),
                   make_manifest(cfg,
                                 {(dir / "grid_amplitude.csv").string(),
                                  (dir / "grid_detuning.csv").string(),
                                  (dir / "antidiagonal.csv").string()},
                                 seconds_since(start)));
    std::cout << (dir / "grid_amplitude.csv").string() << '\n'
              << (dir / "grid_detuning.csv").string() << '\n'
              << (dir / "antidiagonal.csv").string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pulse synthesis and simulation for fast Raman state transfer in a transmon qudit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    GlobalArgs args;
    app.add_option("--config", args.config_path, "JSON config file");
    std::uint64_t seed_opt = 0;
    auto* seed_flag = app.add_option("--seed", seed_opt, "override the config seed");
    std::string out_opt;
    auto* out_flag = app.add_option("--out", out_opt, "override the output directory");
    int threads_opt = 0;
    auto* threads_flag = app.add_option("--threads", threads_opt, "worker threads (0 = auto)");
    std::string frame_opt;
    auto* frame_flag =
        app.add_option("--frame", frame_opt, "propagation frame (lab|rotating)");

    auto* pulses = app.add_subcommand("pulses", "write the three protocol envelope CSVs");
    auto* simulate = app.add_subcommand("simulate", "run a single transfer");
    auto* optimize = app.add_subcommand("optimize", "CMA-ES over amplitudes and detunings");
    auto* sweep = app.add_subcommand("sweep-time", "fidelity vs total time for all variants");
    auto* scan = app.add_subcommand("scan-robustness", "amplitude/detuning error grids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*seed_flag) args.seed = seed_opt;
    if (*out_flag) args.out_dir = out_opt;
    if (*threads_flag) args.threads = threads_opt;
    if (*frame_flag) args.frame = frame_opt;

    try {
        if (pulses->parsed()) return cmd_pulses(args);
        if (simulate->parsed()) return cmd_simulate(args);
        if (optimize->parsed()) return cmd_optimize(args);
        if (sweep->parsed()) return cmd_sweep_time(args);
        if (scan->parsed()) return cmd_scan_robustness(args);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
