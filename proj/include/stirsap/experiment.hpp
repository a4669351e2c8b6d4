#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stirsap/cmaes.hpp"
#include "stirsap/metrics.hpp"
#include "stirsap/propagation.hpp"
#include "stirsap/pulse_synthesis.hpp"

namespace stirsap {

struct OptimizerSettings {
    int population = 0;                    // 0 -> CMA-ES default
    double initial_step = 0.0;             // 0 -> CMA-ES default
    double alpha_lo = 0.5, alpha_hi = 1.5;
    double beta_lo = -two_pi * 0.05, beta_hi = two_pi * 0.05;
    long max_evaluations = 2000;
    std::optional<double> target_cost = 1e-4;
    std::uint64_t seed = 0;                // 0 -> derive from the experiment seed
    double eval_dt = 0.0;                  // 0 -> propagation dt; coarser dt for the cost loop
};

struct TimeSweepSpec {
    std::vector<double> times;             // ns, sorted ascending
    double omega0 = 0.0;                   // rad/ns

    double reference_period() const { return two_pi / omega0; }
    void validate() const;
};

struct RobustnessAxes {
    std::vector<double> eta_values;        // dimensionless amplitude errors
    std::vector<double> delta_values;      // rad/ns detuning errors
    ControlParams reference;               // the optimum the scan perturbs

    void validate() const;
    static std::vector<double> symmetric_grid(double span, int points);
};

struct ScanSettings {
    std::vector<double> times;
    double eta_span = 0.2;
    int eta_points = 21;
    double delta_span = two_pi * 0.02;
    int delta_points = 21;
    std::vector<double> eta_values;        // explicit override
    std::vector<double> delta_values;      // explicit override
};

struct ExperimentConfig {
    TransmonSpec transmon;
    Protocol protocol = Protocol::STIRSAP;
    GaussianStirapParams pulse;
    std::optional<ControlParams> control;
    PropagationConfig propagation;
    bool decoherence_enabled = false;
    std::optional<OptimizerSettings> optimizer;
    std::optional<ScanSettings> scan;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    int threads = 0;                       // 0 -> hardware concurrency

    void validate() const;
    static ExperimentConfig defaults();
};

struct RunManifest {
    std::string tool_version;
    std::string timestamp;
    double duration_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string config_json;               // resolved config document
    std::optional<FidelityReport> report;
    std::vector<std::string> files;
};

struct SweepRow {
    double total_time = 0.0;
    Protocol variant = Protocol::STIRAP;
    double fidelity = 0.0;
    double leakage = 0.0;
    std::string error;                     // empty on success
};

struct GridCell {
    double err_p = 0.0;
    double err_s = 0.0;
    double fidelity = 0.0;
    std::string error;
};

enum class ScanMode { AMPLITUDE, DETUNING };

struct TransferOutcome {
    TrajectoryRecord trajectory;
    FidelityReport report;
    RunManifest manifest;
};

// Builds the schedule, propagates (Lindblad when decoherence or thermal population is
// active, pure-state otherwise), writes trajectory.csv + manifest.json under output_dir.
TransferOutcome run_transfer(const ExperimentConfig& cfg);

// Pure computation used by the harness and the optimizer loop; no file output.
FidelityReport evaluate_transfer(const ExperimentConfig& cfg);

struct OptimizeOutcome {
    ControlParams best;
    OptimizationResult result;
};

// CMA-ES over (alpha_p, alpha_s, beta_p, beta_s); cost = 1 - fidelity with
// decoherence disabled inside the loop. Writes cmaes_generations.csv and
// cmaes_candidates.csv when write_logs is set.
OptimizeOutcome optimize_protocol(const ExperimentConfig& cfg, bool write_logs = false);

std::vector<SweepRow> sweep_total_time(const ExperimentConfig& cfg, const TimeSweepSpec& sweep,
                                       const std::vector<Protocol>& variants);

std::vector<GridCell> robustness_scan(const ExperimentConfig& cfg, const RobustnessAxes& axes,
                                      ScanMode mode);

// Cells along the anti-diagonal of a square grid (err_p axis index i, err_s index n-1-i).
std::vector<GridCell> antidiagonal_slice(const std::vector<GridCell>& grid, int rows, int cols);

// Writes pulses_<variant>.csv for the three variants (identity control when none given).
std::vector<std::string> emit_pulses(const ExperimentConfig& cfg);

// Bisects a uniform T1 (all decay channels) so that decoherent STIRAP at T = 500 ns,
// Omega_0 = 2pi*0.02 lands on `target` within `tol`.
double calibrate_t1(const ExperimentConfig& cfg, double target = 0.981, double tol = 0.003);

// Manifest for file-producing runs that carry no single fidelity report.
RunManifest make_manifest(const ExperimentConfig& cfg, std::vector<std::string> files,
                          double duration_seconds);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows);
void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells);
void write_antidiagonal_csv(const std::string& path, const std::vector<GridCell>& amplitude,
                            const std::vector<GridCell>& detuning);
void write_manifest(const std::string& path, const RunManifest& manifest);

} // namespace stirsap
