#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "stirsap/qudit_model.hpp"
#include "stirsap/types.hpp"

namespace stirsap {

enum class Frame { LAB, ROTATING };
enum class Method { PIECEWISE_EXPONENTIAL, RK4 };

std::string to_string(Frame f);
std::string to_string(Method m);

struct QuantumState {
    Vector amplitudes;

    int dim() const { return static_cast<int>(amplitudes.size()); }
    void validate() const;       // unit norm within 1e-9
    static QuantumState basis(int dim, int level);
};

struct DensityMatrix {
    Matrix entries;

    int dim() const { return static_cast<int>(entries.rows()); }
    void validate() const;       // Hermitian 1e-10, unit trace 1e-8, eigenvalues >= -1e-8
    static DensityMatrix pure(const QuantumState& psi);
    static DensityMatrix thermal_ground(int dim, double pop1);
};

struct PropagationConfig {
    Frame frame = Frame::ROTATING;
    double dt = 0.0;             // ns; 0 -> per-frame default below
    Method method = Method::PIECEWISE_EXPONENTIAL;
    int record_stride = 50;
    bool record_snapshots = false;

    // Defaults chosen so halving dt moves final populations by < 1e-6.
    static constexpr double default_dt_lab = 0.001;
    static constexpr double default_dt_rotating = 0.0025;

    double resolved_dt() const;
    void validate(double total_time) const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<std::vector<double>> populations;      // per recorded time
    std::vector<Vector> state_snapshots;               // when record_snapshots
    std::vector<Matrix> density_snapshots;             // when record_snapshots
    std::optional<Vector> final_state;                 // closed-system runs
    std::optional<Matrix> final_density;               // Lindblad runs
    double max_trace_drift = 0.0;
    bool trace_warning = false;                        // drift beyond 1e-6

    int dim() const;
    const std::vector<double>& final_populations() const;
};

using HamiltonianFn = std::function<Matrix(double)>;

TrajectoryRecord propagate_state(const HamiltonianFn& h_of_t, const QuantumState& psi0,
                                 double total_time, const PropagationConfig& cfg);

TrajectoryRecord propagate_lindblad(const HamiltonianFn& h_of_t,
                                    const std::vector<CollapseOp>& collapse,
                                    const DensityMatrix& rho0, double total_time,
                                    const PropagationConfig& cfg);

Matrix total_propagator(const HamiltonianFn& h_of_t, double total_time,
                        const PropagationConfig& cfg);

// Builds the time-indexed Hamiltonian of a schedule in the requested frame.
HamiltonianFn schedule_hamiltonian(const TransmonSpec& spec, const PulseSchedule& schedule,
                                   Frame frame);

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj);

} // namespace stirsap
