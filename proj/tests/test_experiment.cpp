#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stirsap/config_io.hpp"
#include "stirsap/errors.hpp"
#include "stirsap/experiment.hpp"

using namespace stirsap;
namespace fs = std::filesystem;

namespace {

// Coarse-dt config so the harness paths stay fast in the unit suite; the acceptance
// binary exercises the production step sizes.
ExperimentConfig quick_config(const std::string& out) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.pulse.omega0 = two_pi * 0.03;
    cfg.pulse.total_time = 32.0;
    cfg.propagation.dt = 0.01;
    cfg.output_dir = out;
    cfg.seed = 9;
    return cfg;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("run_transfer writes trajectory and manifest") {
    const std::string out = "/tmp/stirsap_exp_run";
    fs::remove_all(out);
    auto cfg = quick_config(out);
    const auto outcome = run_transfer(cfg);

    CHECK(outcome.report.fidelity > 0.85);
    CHECK(outcome.report.fidelity < 0.97);
    CHECK(fs::exists(out + "/trajectory.csv"));
    CHECK(fs::exists(out + "/manifest.json"));

    const std::string traj = slurp(out + "/trajectory.csv");
    CHECK(traj.rfind("t_ns,pop0,pop1,pop2,pop3", 0) == 0);

    const std::string manifest = slurp(out + "/manifest.json");
    CHECK(manifest.find("\"fidelity\"") != std::string::npos);
    CHECK(manifest.find("\"tool_version\"") != std::string::npos);
    fs::remove_all(out);
}

TEST_CASE("thermal population switches to density-matrix propagation") {
    auto cfg = quick_config("/tmp/stirsap_exp_thermal");
    cfg.transmon.thermal_pop1 = 0.02;
    const auto report = evaluate_transfer(cfg);
    // the |1> residue transports through the bright sector, costing about p in
    // final target population
    CHECK(report.fidelity < 0.96);
    CHECK(report.fidelity > 0.80);
}

TEST_CASE("manifests are reproducible apart from timing") {
    const std::string out_a = "/tmp/stirsap_exp_rep_a";
    const std::string out_b = "/tmp/stirsap_exp_rep_b";
    fs::remove_all(out_a);
    fs::remove_all(out_b);
    auto cfg = quick_config(out_a);
    run_transfer(cfg);
    cfg.output_dir = out_b;
    run_transfer(cfg);

    CHECK(slurp(out_a + "/trajectory.csv") == slurp(out_b + "/trajectory.csv"));

    auto strip = [](std::string text, const std::string& out_dir) {
        // timestamp/duration/output_dir differ between the two runs
        std::istringstream in(text);
        std::ostringstream kept;
        std::string line;
        while (std::getline(in, line)) {
            if (line.find("\"timestamp\"") != std::string::npos) continue;
            if (line.find("\"duration_seconds\"") != std::string::npos) continue;
            if (line.find(out_dir) != std::string::npos) continue;
            kept << line << '\n';
        }
        return kept.str();
    };
    CHECK(strip(slurp(out_a + "/manifest.json"), out_a) ==
          strip(slurp(out_b + "/manifest.json"), out_b));
    fs::remove_all(out_a);
    fs::remove_all(out_b);
}

TEST_CASE("optimize_protocol improves the dressed baseline") {
    auto cfg = quick_config("/tmp/stirsap_exp_opt");
    fs::remove_all(cfg.output_dir);
    cfg.protocol = Protocol::STIRSAP_OPT;
    OptimizerSettings opt;
    opt.max_evaluations = 400;
    opt.target_cost = 0.01;
    opt.eval_dt = 0.02;
    cfg.optimizer = opt;

    const auto baseline = [&] {
        ExperimentConfig base = cfg;
        base.protocol = Protocol::STIRSAP;
        return evaluate_transfer(base).fidelity;
    }();

    const auto outcome = optimize_protocol(cfg, /*write_logs=*/true);
    CHECK(outcome.result.evaluations <= 400);
    CHECK(1.0 - outcome.result.best_cost > baseline);

    // identity start is inside the bounds, so its cost shows up in the logs
    CHECK(fs::exists(cfg.output_dir + "/cmaes_generations.csv"));
    CHECK(fs::exists(cfg.output_dir + "/cmaes_candidates.csv"));

    // determinism: the same config reproduces the same optimum bit for bit
    const auto again = optimize_protocol(cfg, false);
    CHECK(again.result.best_cost == outcome.result.best_cost);
    CHECK(again.best.alpha_p == outcome.best.alpha_p);
    CHECK(again.best.beta_s == outcome.best.beta_s);
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("identity control start matches the stirsap baseline cost") {
    auto cfg = quick_config("/tmp/stirsap_exp_identity");
    ExperimentConfig dressed = cfg;
    dressed.protocol = Protocol::STIRSAP;
    ExperimentConfig controlled = cfg;
    controlled.protocol = Protocol::STIRSAP_OPT;
    controlled.control = ControlParams::identity();
    CHECK(evaluate_transfer(dressed).fidelity ==
          doctest::Approx(evaluate_transfer(controlled).fidelity).epsilon(1e-12));
}

TEST_CASE("sweep_total_time covers variants and records failures") {
    auto cfg = quick_config("/tmp/stirsap_exp_sweep");
    cfg.propagation.dt = 0.02;
    TimeSweepSpec sweep;
    sweep.times = {20.0, 32.0};
    sweep.omega0 = two_pi * 0.03;
    CHECK(sweep.reference_period() == doctest::Approx(two_pi / (two_pi * 0.03)));

    SUBCASE("all variants with stored control") {
        cfg.control = ControlParams::identity();
        const auto rows = sweep_total_time(
            cfg, sweep, {Protocol::STIRAP, Protocol::STIRSAP, Protocol::STIRSAP_OPT});
        REQUIRE(rows.size() == 6);
        for (const auto& row : rows) {
            CHECK(row.error.empty());
            CHECK(std::isfinite(row.fidelity));
        }
        // short-T ordering: the dressed protocol beats bare stirap at both points
        CHECK(rows[1].fidelity > rows[0].fidelity);
        CHECK(rows[4].fidelity > rows[3].fidelity);

        const std::string path = "/tmp/stirsap_exp_sweep.csv";
        write_sweep_csv(path, rows);
        const std::string text = slurp(path);
        CHECK(text.rfind("T_ns,variant,fidelity,leakage,error", 0) == 0);
        fs::remove(path);
    }
    SUBCASE("opt without control or optimizer yields error rows, not a crash") {
        const auto rows = sweep_total_time(cfg, sweep, {Protocol::STIRSAP_OPT});
        REQUIRE(rows.size() == 2);
        for (const auto& row : rows) {
            CHECK_FALSE(row.error.empty());
            CHECK(std::isnan(row.fidelity));
        }
    }
}

TEST_CASE("robustness scan grids") {
    auto cfg = quick_config("/tmp/stirsap_exp_scan");
    cfg.propagation.dt = 0.02;
    cfg.control = ControlParams::identity();

    RobustnessAxes axes;
    axes.reference = *cfg.control;
    axes.eta_values = RobustnessAxes::symmetric_grid(0.05, 5);
    axes.delta_values = RobustnessAxes::symmetric_grid(0.05, 5);

    const auto amp = robustness_scan(cfg, axes, ScanMode::AMPLITUDE);
    REQUIRE(amp.size() == 25);

    // center cell reproduces the unperturbed run exactly
    const auto center = amp[2 * 5 + 2];
    CHECK(center.err_p == 0.0);
    CHECK(center.err_s == 0.0);
    ExperimentConfig base = cfg;
    base.protocol = Protocol::STIRSAP_OPT;
    CHECK(std::abs(center.fidelity - evaluate_transfer(base).fidelity) < 1e-12);

    const auto det = robustness_scan(cfg, axes, ScanMode::DETUNING);
    REQUIRE(det.size() == 25);

    const auto anti = antidiagonal_slice(amp, 5, 5);
    REQUIRE(anti.size() == 5);
    CHECK(anti[0].err_p == amp[0 * 5 + 4].err_p);
    CHECK(anti[0].err_s == amp[0 * 5 + 4].err_s);

    const std::string dir = "/tmp/stirsap_exp_scan_csv";
    fs::create_directories(dir);
    write_grid_csv(dir + "/grid_amplitude.csv", amp);
    write_antidiagonal_csv(dir + "/antidiagonal.csv", anti, antidiagonal_slice(det, 5, 5));
    CHECK(slurp(dir + "/grid_amplitude.csv").rfind("err_p,err_s,fidelity", 0) == 0);
    CHECK(slurp(dir + "/antidiagonal.csv").rfind("mode,err_p,err_s,fidelity", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("emit_pulses writes the three variant files") {
    auto cfg = quick_config("/tmp/stirsap_exp_pulses");
    fs::remove_all(cfg.output_dir);
    const auto files = emit_pulses(cfg);
    REQUIRE(files.size() == 3);

    const std::string raw = slurp(files[0]);
    CHECK(raw.rfind("t_ns,omega_p,omega_s", 0) == 0);
    const std::string dressed = slurp(files[1]);
    CHECK(dressed.rfind("t_ns,omega_p_tilde,omega_s_tilde,omega_cd,zeta", 0) == 0);

    // sample count = floor(T / sample_step) + 1 rows plus the header
    const auto lines = static_cast<std::size_t>(std::count(raw.begin(), raw.end(), '\n'));
    CHECK(lines == 641 + 1); // floor(32 / 0.05) + 1 samples

    fs::remove_all(cfg.output_dir);
}

TEST_CASE("config validation failures surface as config errors") {
    auto cfg = quick_config("/tmp/stirsap_exp_bad");
    cfg.protocol = Protocol::STIRSAP_OPT;
    CHECK_THROWS_AS(evaluate_transfer(cfg), ConfigError);
    cfg = quick_config("/tmp/stirsap_exp_bad");
    cfg.propagation.dt = 100.0;
    CHECK_THROWS_AS(evaluate_transfer(cfg), ConfigError);
}

TEST_CASE("short-T protocol ordering after optimization") {
    // stirap < stirsap < stirsap_opt on the default model at speed-up time scales
    for (double T : {30.0, 40.0, 50.0}) {
        ExperimentConfig cfg = ExperimentConfig::defaults();
        cfg.pulse.omega0 = two_pi * 0.02;
        cfg.pulse.total_time = T;
        cfg.propagation.dt = 0.01;
        cfg.seed = 3;

        cfg.protocol = Protocol::STIRAP;
        const double f_stirap = evaluate_transfer(cfg).fidelity;
        cfg.protocol = Protocol::STIRSAP;
        const double f_stirsap = evaluate_transfer(cfg).fidelity;

        cfg.protocol = Protocol::STIRSAP_OPT;
        OptimizerSettings opt;
        opt.max_evaluations = 800;
        opt.target_cost = 5e-4;
        opt.eval_dt = 0.02;
        opt.seed = 1;
        cfg.optimizer = opt;
        const auto outcome = optimize_protocol(cfg);
        cfg.control = outcome.best;
        const double f_opt = evaluate_transfer(cfg).fidelity;

        CAPTURE(T);
        CHECK(f_stirap < f_stirsap);
        CHECK(f_stirsap < f_opt);
    }
}

TEST_CASE("stirap fidelity trends upward with total time") {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.propagation.dt = 0.01;
    TimeSweepSpec sweep;
    sweep.times = {100.0, 200.0, 300.0, 400.0, 500.0};
    sweep.omega0 = two_pi * 0.02;
    const auto rows = sweep_total_time(cfg, sweep, {Protocol::STIRAP});
    REQUIRE(rows.size() == 5);
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i].fidelity >= rows[i - 1].fidelity - 0.005);
}
