#include "stirsap/experiment.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>

#include <json.hpp>

#include "stirsap/config_io.hpp"
#include "stirsap/csv.hpp"
#include "stirsap/errors.hpp"
#include "stirsap/parallel.hpp"

namespace stirsap {

namespace fs = std::filesystem;

void TimeSweepSpec::validate() const {
    if (times.empty()) throw ConfigError("sweep: times must be non-empty");
    double prev = 0.0;
    for (double t : times) {
        if (!(t > 0.0)) throw ConfigError("sweep: times must be positive");
        if (t < prev) throw ConfigError("sweep: times must be sorted ascending");
        prev = t;
    }
    if (!(omega0 > 0.0)) throw ConfigError("sweep: omega0 must be positive");
}

void RobustnessAxes::validate() const {
    if (eta_values.empty() && delta_values.empty())
        throw ConfigError("scan: at least one error grid must be non-empty");
    for (double eta : eta_values)
        if (!(eta < 1.0)) throw ConfigError("scan: eta must stay below 1");
    reference.validate();
}

std::vector<double> RobustnessAxes::symmetric_grid(double span, int points) {
    if (points < 1) throw ConfigError("scan: grid needs at least one point");
    std::vector<double> grid(points);
    if (points == 1) {
        grid[0] = 0.0;
        return grid;
    }
    for (int i = 0; i < points; ++i)
        grid[i] = -span + 2.0 * span * static_cast<double>(i) / (points - 1);
    return grid;
}

void ExperimentConfig::validate() const {
    transmon.validate();
    pulse.validate();
    if (control) control->validate();
    propagation.validate(pulse.total_time);
    if (protocol == Protocol::STIRSAP_OPT && !control && !optimizer)
        throw ConfigError("config: stirsap_opt needs either control params or an optimizer section");
    if (threads < 0) throw ConfigError("config: threads must be >= 0");
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.transmon = TransmonSpec::default_spec();
    cfg.protocol = Protocol::STIRSAP;
    cfg.pulse.omega0 = two_pi * 0.03;
    cfg.pulse.total_time = 32.0;
    return cfg;
}

namespace {

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ControlParams control_from_vector(const Eigen::VectorXd& x) {
    ControlParams c;
    c.alpha_p = x(0);
    c.alpha_s = x(1);
    c.beta_p = x(2);
    c.beta_s = x(3);
    return c;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t x = base ^ (salt * 0x9e3779b97f4a7c15ULL);
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    return x == 0 ? 1 : x;
}

} // namespace

FidelityReport evaluate_transfer(const ExperimentConfig& cfg) {
    cfg.validate();
    const PulseSchedule schedule =
        make_protocol_schedule(cfg.protocol, cfg.pulse, cfg.control, cfg.transmon);
    const HamiltonianFn h = schedule_hamiltonian(cfg.transmon, schedule, cfg.propagation.frame);
    const int dim = cfg.transmon.level_count;

    TrajectoryRecord traj;
    if (cfg.decoherence_enabled || cfg.transmon.thermal_pop1 > 0.0) {
        const auto collapse =
            cfg.decoherence_enabled ? collapse_operators(cfg.transmon) : std::vector<CollapseOp>{};
        PropagationConfig lcfg = cfg.propagation;
        lcfg.method = Method::RK4;
        traj = propagate_lindblad(h, collapse,
                                  DensityMatrix::thermal_ground(dim, cfg.transmon.thermal_pop1),
                                  cfg.pulse.total_time, lcfg);
    } else {
        traj = propagate_state(h, QuantumState::basis(dim, 0), cfg.pulse.total_time,
                               cfg.propagation);
    }
    return transfer_report(traj, 2);
}

TransferOutcome run_transfer(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();

    const PulseSchedule schedule =
        make_protocol_schedule(cfg.protocol, cfg.pulse, cfg.control, cfg.transmon);
    const HamiltonianFn h = schedule_hamiltonian(cfg.transmon, schedule, cfg.propagation.frame);
    const int dim = cfg.transmon.level_count;

    TransferOutcome out;
    if (cfg.decoherence_enabled || cfg.transmon.thermal_pop1 > 0.0) {
        const auto collapse =
            cfg.decoherence_enabled ? collapse_operators(cfg.transmon) : std::vector<CollapseOp>{};
        PropagationConfig lcfg = cfg.propagation;
        lcfg.method = Method::RK4;
        out.trajectory = propagate_lindblad(
            h, collapse, DensityMatrix::thermal_ground(dim, cfg.transmon.thermal_pop1),
            cfg.pulse.total_time, lcfg);
    } else {
        out.trajectory =
            propagate_state(h, QuantumState::basis(dim, 0), cfg.pulse.total_time, cfg.propagation);
    }
    out.report = transfer_report(out.trajectory, 2);

    fs::create_directories(cfg.output_dir);
    const fs::path traj_path = fs::path(cfg.output_dir) / "trajectory.csv";
    const fs::path manifest_path = fs::path(cfg.output_dir) / "manifest.json";
    try {
        write_trajectory_csv(traj_path.string(), out.trajectory);

        out.manifest.tool_version = tool_version;
        out.manifest.timestamp = iso_timestamp();
        out.manifest.seed = cfg.seed;
        out.manifest.config_json = config_to_json(cfg);
        out.manifest.report = out.report;
        out.manifest.files = {traj_path.string()};
        out.manifest.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(manifest_path.string(), out.manifest);
    } catch (...) {
        std::error_code ec;
        fs::remove(traj_path, ec);
        fs::remove(manifest_path, ec);
        throw;
    }
    return out;
}

OptimizeOutcome optimize_protocol(const ExperimentConfig& cfg, bool write_logs) {
    cfg.validate();
    if (cfg.protocol != Protocol::STIRSAP_OPT)
        throw ConfigError("optimize_protocol: protocol must be stirsap_opt");
    if (!cfg.optimizer) throw ConfigError("optimize_protocol: optimizer section missing");
    const OptimizerSettings& opt = *cfg.optimizer;

    CmaesConfig cc;
    cc.dimension = 4;
    cc.population = opt.population;
    cc.initial_step = opt.initial_step;
    cc.lower_bounds = Eigen::Vector4d(opt.alpha_lo, opt.alpha_lo, opt.beta_lo, opt.beta_lo);
    cc.upper_bounds = Eigen::Vector4d(opt.alpha_hi, opt.alpha_hi, opt.beta_hi, opt.beta_hi);
    const ControlParams start = cfg.control.value_or(ControlParams::identity());
    cc.initial_mean = Eigen::Vector4d(start.alpha_p, start.alpha_s, start.beta_p, start.beta_s);
    cc.max_evaluations = opt.max_evaluations;
    cc.target_cost = opt.target_cost;
    cc.seed = opt.seed != 0 ? opt.seed : mix_seed(cfg.seed, 0x51ULL);
    // Cost evaluations run on a closed system; decoherence is re-enabled only for the
    // final reporting outside this loop.
    ExperimentConfig eval_cfg = cfg;
    eval_cfg.decoherence_enabled = false;
    eval_cfg.transmon.thermal_pop1 = 0.0;
    if (opt.eval_dt > 0.0) eval_cfg.propagation.dt = opt.eval_dt;

    auto cost_of = [eval_cfg](const Eigen::VectorXd& x) {
        ExperimentConfig c = eval_cfg;
        c.control = control_from_vector(x);
        return cost(evaluate_transfer(c).fidelity);
    };

    const int threads = cfg.threads;
    BatchEvaluator evaluator = [&cost_of, threads](const std::vector<Eigen::VectorXd>& xs) {
        std::vector<double> costs(xs.size(), 0.0);
        std::vector<std::exception_ptr> errors(xs.size());
        parallel_for_indexed(xs.size(), threads, [&](std::size_t i) {
            try {
                costs[i] = cost_of(xs[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (errors[i]) {
                try {
                    std::rethrow_exception(errors[i]);
                } catch (const std::exception& e) {
                    throw NumericalError("cost evaluation failed at candidate (" +
                                         std::to_string(xs[i](0)) + ", " + std::to_string(xs[i](1)) +
                                         ", " + std::to_string(xs[i](2)) + ", " +
                                         std::to_string(xs[i](3)) + "): " + e.what());
                }
            }
        }
        return costs;
    };

    std::unique_ptr<CsvWriter> cand_csv;
    if (write_logs) {
        fs::create_directories(cfg.output_dir);
        cand_csv = std::make_unique<CsvWriter>(
            (fs::path(cfg.output_dir) / "cmaes_candidates.csv").string(),
            std::vector<std::string>{"generation", "index", "x0", "x1", "x2", "x3", "cost"});
    }
    GenerationCallback observer;
    if (write_logs) {
        observer = [&cand_csv](long gen, const std::vector<Eigen::VectorXd>& xs,
                               const std::vector<double>& costs) {
            for (std::size_t i = 0; i < xs.size(); ++i) {
                cand_csv->write_row(std::vector<double>{
                    static_cast<double>(gen), static_cast<double>(i), xs[i](0), xs[i](1), xs[i](2),
                    xs[i](3), costs[i]});
            }
        };
    }

    OptimizeOutcome outcome;
    outcome.result = optimize(evaluator, cc, observer);
    outcome.best = control_from_vector(outcome.result.best_params);

    if (write_logs) {
        CsvWriter gen_csv(
            (fs::path(cfg.output_dir) / "cmaes_generations.csv").string(),
            std::vector<std::string>{"generation", "eval_count", "best_cost", "median_cost",
                                     "sigma"});
        for (const auto& g : outcome.result.history) {
            gen_csv.write_row(std::vector<double>{static_cast<double>(g.generation),
                                                  static_cast<double>(g.eval_count), g.best_cost,
                                                  g.median_cost, g.sigma});
        }
    }
    return outcome;
}

std::vector<SweepRow> sweep_total_time(const ExperimentConfig& cfg, const TimeSweepSpec& sweep,
                                       const std::vector<Protocol>& variants) {
    cfg.validate();
    sweep.validate();
    if (variants.empty()) throw ConfigError("sweep: variant list is empty");

    struct Cell {
        double total_time;
        Protocol variant;
    };
    std::vector<Cell> cells;
    for (double t : sweep.times)
        for (Protocol v : variants) cells.push_back({t, v});

    std::vector<SweepRow> rows(cells.size());
    parallel_for_indexed(cells.size(), cfg.threads, [&](std::size_t i) {
        SweepRow row;
        row.total_time = cells[i].total_time;
        row.variant = cells[i].variant;
        try {
            ExperimentConfig point = cfg;
            point.protocol = cells[i].variant;
            point.pulse.total_time = cells[i].total_time;
            point.pulse.omega0 = sweep.omega0;
            point.threads = 1;
            if (cells[i].variant == Protocol::STIRSAP_OPT && !point.control) {
                if (!point.optimizer)
                    throw ConfigError("sweep: stirsap_opt without control needs an optimizer");
                const auto opt = optimize_protocol(point, false);
                point.control = opt.best;
            }
            const FidelityReport report = evaluate_transfer(point);
            row.fidelity = report.fidelity;
            row.leakage = report.leakage;
        } catch (const std::exception& e) {
            row.fidelity = std::numeric_limits<double>::quiet_NaN();
            row.leakage = std::numeric_limits<double>::quiet_NaN();
            row.error = e.what();
        }
        rows[i] = std::move(row);
    });
    return rows;
}

std::vector<GridCell> robustness_scan(const ExperimentConfig& cfg, const RobustnessAxes& axes,
                                      ScanMode mode) {
    cfg.validate();
    axes.validate();
    const std::vector<double>& grid =
        mode == ScanMode::AMPLITUDE ? axes.eta_values : axes.delta_values;
    if (grid.empty()) throw ConfigError("scan: requested mode has an empty grid");

    const ControlParams& ref = axes.reference;
    const std::size_t n = grid.size();
    std::vector<GridCell> cells(n * n);
    parallel_for_indexed(n * n, cfg.threads, [&](std::size_t k) {
        const std::size_t i = k / n;
        const std::size_t j = k % n;
        GridCell cell;
        cell.err_p = grid[i];
        cell.err_s = grid[j];
        try {
            ControlParams perturbed = ref;
            if (mode == ScanMode::AMPLITUDE) {
                perturbed.alpha_p = (1.0 - grid[i]) * ref.alpha_p;
                perturbed.alpha_s = (1.0 - grid[j]) * ref.alpha_s;
            } else {
                perturbed.beta_p = ref.beta_p + grid[i];
                perturbed.beta_s = ref.beta_s + grid[j];
            }
            ExperimentConfig point = cfg;
            point.protocol = Protocol::STIRSAP_OPT;
            point.control = perturbed;
            point.threads = 1;
            cell.fidelity = evaluate_transfer(point).fidelity;
        } catch (const std::exception& e) {
            cell.fidelity = std::numeric_limits<double>::quiet_NaN();
            cell.error = e.what();
        }
        cells[k] = std::move(cell);
    });
    return cells;
}

std::vector<GridCell> antidiagonal_slice(const std::vector<GridCell>& grid, int rows, int cols) {
    if (rows * cols != static_cast<int>(grid.size()))
        throw ConfigError("antidiagonal: grid shape mismatch");
    if (rows != cols) throw ConfigError("antidiagonal: grid must be square");
    std::vector<GridCell> slice;
    slice.reserve(rows);
    for (int i = 0; i < rows; ++i) slice.push_back(grid[i * cols + (cols - 1 - i)]);
    return slice;
}

std::vector<std::string> emit_pulses(const ExperimentConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.output_dir);
    std::vector<std::string> files;

    const EnvelopePair pair = gaussian_envelopes(cfg.pulse);
    const DressedPulses dressed = sta_dressed_pulses(pair);
    const ControlParams control = cfg.control.value_or(ControlParams::identity());

    {
        const auto path = (fs::path(cfg.output_dir) / "pulses_stirap.csv").string();
        write_envelopes_csv(path,
                            make_protocol_schedule(Protocol::STIRAP, cfg.pulse, {}, cfg.transmon));
        files.push_back(path);
    }
    {
        const auto path = (fs::path(cfg.output_dir) / "pulses_stirsap.csv").string();
        write_envelopes_csv(
            path, make_protocol_schedule(Protocol::STIRSAP, cfg.pulse, {}, cfg.transmon), dressed);
        files.push_back(path);
    }
    {
        const auto path = (fs::path(cfg.output_dir) / "pulses_stirsap_opt.csv").string();
        write_envelopes_csv(
            path, make_protocol_schedule(Protocol::STIRSAP_OPT, cfg.pulse, control, cfg.transmon),
            dressed);
        files.push_back(path);
    }
    return files;
}

double calibrate_t1(const ExperimentConfig& cfg, double target, double tol) {
    ExperimentConfig probe = cfg;
    probe.protocol = Protocol::STIRAP;
    probe.control.reset();
    probe.pulse = GaussianStirapParams{};
    probe.pulse.omega0 = two_pi * 0.02;
    probe.pulse.total_time = 500.0;
    probe.decoherence_enabled = true;

    auto fidelity_at = [&probe](double t1) {
        ExperimentConfig c = probe;
        c.transmon.t1_times =
            std::vector<double>(static_cast<std::size_t>(c.transmon.level_count - 1), t1);
        return evaluate_transfer(c).fidelity;
    };

    double lo = 1.0e3, hi = 2.0e5;
    double f_lo = fidelity_at(lo), f_hi = fidelity_at(hi);
    if (target < f_lo || target > f_hi)
        throw NumericalError("calibrate_t1: target fidelity outside the reachable range");
    double mid = lo;
    for (int iter = 0; iter < 60; ++iter) {
        mid = 0.5 * (lo + hi);
        const double f = fidelity_at(mid);
        if (std::abs(f - target) <= tol) return mid;
        if (f < target) {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
            f_hi = f;
        }
    }
    throw NumericalError("calibrate_t1: bisection did not converge");
}

RunManifest make_manifest(const ExperimentConfig& cfg, std::vector<std::string> files,
                          double duration_seconds) {
    RunManifest manifest;
    manifest.tool_version = tool_version;
    manifest.timestamp = iso_timestamp();
    manifest.duration_seconds = duration_seconds;
    manifest.seed = cfg.seed;
    manifest.config_json = config_to_json(cfg);
    manifest.files = std::move(files);
    return manifest;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    CsvWriter csv(path, {"T_ns", "variant", "fidelity", "leakage", "error"});
    for (const auto& row : rows) {
        csv.write_row(std::vector<std::string>{CsvWriter::format(row.total_time),
                                               to_string(row.variant),
                                               CsvWriter::format(row.fidelity),
                                               CsvWriter::format(row.leakage), row.error});
    }
}

void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells) {
    CsvWriter csv(path, {"err_p", "err_s", "fidelity"});
    for (const auto& cell : cells)
        csv.write_row(std::vector<double>{cell.err_p, cell.err_s, cell.fidelity});
}

void write_antidiagonal_csv(const std::string& path, const std::vector<GridCell>& amplitude,
                            const std::vector<GridCell>& detuning) {
    CsvWriter csv(path, {"mode", "err_p", "err_s", "fidelity"});
    for (const auto& cell : amplitude) {
        csv.write_row(std::vector<std::string>{"amplitude", CsvWriter::format(cell.err_p),
                                               CsvWriter::format(cell.err_s),
                                               CsvWriter::format(cell.fidelity)});
    }
    for (const auto& cell : detuning) {
        csv.write_row(std::vector<std::string>{"detuning", CsvWriter::format(cell.err_p),
                                               CsvWriter::format(cell.err_s),
                                               CsvWriter::format(cell.fidelity)});
    }
}

void write_manifest(const std::string& path, const RunManifest& manifest) {
    nlohmann::json doc;
    doc["tool_version"] = manifest.tool_version;
    doc["timestamp"] = manifest.timestamp;
    doc["duration_seconds"] = manifest.duration_seconds;
    doc["seed"] = manifest.seed;
    doc["config"] = nlohmann::json::parse(manifest.config_json);
    if (manifest.report) {
        nlohmann::json rep;
        rep["fidelity"] = manifest.report->fidelity;
        rep["cost"] = manifest.report->cost;
        rep["leakage"] = manifest.report->leakage;
        rep["intermediate_peak"] = manifest.report->intermediate_peak;
        rep["final_populations"] = manifest.report->final_populations;
        doc["fidelity_report"] = rep;
    }
    doc["files"] = manifest.files;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
    for (const auto& f : manifest.files) {
        std::error_code ec;
        if (!fs::exists(f, ec) || fs::file_size(f, ec) == 0)
            throw IoError("manifest lists a missing or empty file: " + f);
    }
}

} // namespace stirsap
