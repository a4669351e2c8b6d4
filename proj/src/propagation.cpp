#include "stirsap/propagation.hpp"

#include <cmath>
#include <string>

#include "stirsap/csv.hpp"
#include "stirsap/errors.hpp"
#include "stirsap/pulse_synthesis.hpp"

namespace stirsap {

std::string to_string(Frame f) { return f == Frame::LAB ? "lab" : "rotating"; }

std::string to_string(Method m) {
    return m == Method::PIECEWISE_EXPONENTIAL ? "piecewise_exponential" : "rk4";
}

void QuantumState::validate() const {
    if (amplitudes.size() == 0) throw NumericalError("QuantumState: empty state");
    if (std::abs(amplitudes.norm() - 1.0) > 1e-9)
        throw NumericalError("QuantumState: norm deviates from 1 beyond 1e-9");
}

QuantumState QuantumState::basis(int dim, int level) {
    if (level < 0 || level >= dim) throw ConfigError("QuantumState::basis: level out of range");
    Vector v = Vector::Zero(dim);
    v(level) = 1.0;
    return QuantumState{std::move(v)};
}

void DensityMatrix::validate() const {
    const Matrix& r = entries;
    if (r.rows() != r.cols() || r.rows() == 0)
        throw NumericalError("DensityMatrix: must be square");
    if ((r - r.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw NumericalError("DensityMatrix: not Hermitian within 1e-10");
    if (std::abs(r.trace().real() - 1.0) > 1e-8 || std::abs(r.trace().imag()) > 1e-8)
        throw NumericalError("DensityMatrix: trace deviates from 1 beyond 1e-8");
    Eigen::SelfAdjointEigenSolver<Matrix> solver(r);
    if (solver.eigenvalues().minCoeff() < -1e-8)
        throw NumericalError("DensityMatrix: negative eigenvalue beyond -1e-8");
}

DensityMatrix DensityMatrix::pure(const QuantumState& psi) {
    psi.validate();
    return DensityMatrix{psi.amplitudes * psi.amplitudes.adjoint()};
}

DensityMatrix DensityMatrix::thermal_ground(int dim, double pop1) {
    if (dim < 2) throw ConfigError("thermal_ground: dim must be >= 2");
    if (pop1 < 0.0 || pop1 >= 1.0) throw ConfigError("thermal_ground: pop1 out of range");
    Matrix r = Matrix::Zero(dim, dim);
    r(0, 0) = 1.0 - pop1;
    r(1, 1) = pop1;
    return DensityMatrix{std::move(r)};
}

double PropagationConfig::resolved_dt() const {
    if (dt > 0.0) return dt;
    return frame == Frame::LAB ? default_dt_lab : default_dt_rotating;
}

void PropagationConfig::validate(double total_time) const {
    const double step = resolved_dt();
    if (!(step > 0.0)) throw ConfigError("propagation: dt must be positive");
    if (step > total_time) throw ConfigError("propagation: dt exceeds total time");
    if (record_stride < 1) throw ConfigError("propagation: record_stride must be >= 1");
}

int TrajectoryRecord::dim() const {
    return populations.empty() ? 0 : static_cast<int>(populations.front().size());
}

const std::vector<double>& TrajectoryRecord::final_populations() const {
    if (populations.empty()) throw NumericalError("TrajectoryRecord: empty trajectory");
    return populations.back();
}

namespace {

Matrix hermitian_step_exponential(const Matrix& h, double dt) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw NumericalError("propagator: eigendecomposition failed");
    const auto& w = solver.eigenvalues();
    const Matrix& v = solver.eigenvectors();
    Vector phases(w.size());
    for (Eigen::Index i = 0; i < w.size(); ++i)
        phases(i) = std::polar(1.0, -w(i) * dt);
    return v * phases.asDiagonal() * v.adjoint();
}

std::vector<double> state_populations(const Vector& psi) {
    std::vector<double> pops(psi.size());
    for (Eigen::Index i = 0; i < psi.size(); ++i) pops[i] = std::norm(psi(i));
    return pops;
}

std::vector<double> density_populations(const Matrix& rho) {
    std::vector<double> pops(rho.rows());
    for (Eigen::Index i = 0; i < rho.rows(); ++i) pops[i] = rho(i, i).real();
    return pops;
}

void check_finite(const std::vector<double>& pops, long step) {
    for (double p : pops) {
        if (!std::isfinite(p))
            throw NumericalError("propagation diverged (NaN/Inf) at step " + std::to_string(step));
    }
}

long step_count(double total_time, double dt) {
    long n = static_cast<long>(std::llround(total_time / dt));
    return n < 1 ? 1 : n;
}

} // namespace

TrajectoryRecord propagate_state(const HamiltonianFn& h_of_t, const QuantumState& psi0,
                                 double total_time, const PropagationConfig& cfg) {
    psi0.validate();
    cfg.validate(total_time);
    const long n = step_count(total_time, cfg.resolved_dt());
    const double dt = total_time / static_cast<double>(n);

    Vector psi = psi0.amplitudes;
    if (h_of_t(0.0).rows() != psi.size())
        throw NumericalError("propagate_state: dimension mismatch");

    TrajectoryRecord traj;
    auto record = [&](double t, long step) {
        auto pops = state_populations(psi);
        check_finite(pops, step);
        traj.times.push_back(t);
        traj.populations.push_back(std::move(pops));
        if (cfg.record_snapshots) traj.state_snapshots.push_back(psi);
    };
    record(0.0, 0);

    const bool rk4 = cfg.method == Method::RK4;
    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        if (rk4) {
            // Classic RK4 on i dpsi/dt = H psi, no renormalization: norm drift is the
            // error signal.
            const Complex mi(0.0, -1.0);
            Vector k1 = mi * (h_of_t(t) * psi);
            Vector k2 = mi * (h_of_t(t + dt / 2) * (psi + (dt / 2) * k1));
            Vector k3 = mi * (h_of_t(t + dt / 2) * (psi + (dt / 2) * k2));
            Vector k4 = mi * (h_of_t(t + dt) * (psi + dt * k3));
            psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            try {
                psi = hermitian_step_exponential(h_of_t(t + dt / 2.0), dt) * psi;
            } catch (const NumericalError& e) {
                throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k));
            }
        }
        if ((k + 1) % cfg.record_stride == 0 || k + 1 == n)
            record(static_cast<double>(k + 1) * dt, k + 1);
    }
    traj.final_state = psi;
    return traj;
}

TrajectoryRecord propagate_lindblad(const HamiltonianFn& h_of_t,
                                    const std::vector<CollapseOp>& collapse,
                                    const DensityMatrix& rho0, double total_time,
                                    const PropagationConfig& cfg) {
    rho0.validate();
    cfg.validate(total_time);
    const long n = step_count(total_time, cfg.resolved_dt());
    const double dt = total_time / static_cast<double>(n);

    Matrix rho = rho0.entries;
    if (h_of_t(0.0).rows() != rho.rows())
        throw NumericalError("propagate_lindblad: dimension mismatch");

    std::vector<Matrix> ls, ldl;
    for (const auto& c : collapse) {
        if (!(c.rate >= 0.0)) throw ConfigError("collapse rate must be nonnegative");
        Matrix l = c.rate * c.op;
        ldl.push_back(l.adjoint() * l);
        ls.push_back(std::move(l));
    }

    auto rhs = [&](double t, const Matrix& r) {
        const Matrix h = h_of_t(t);
        Matrix d = Complex(0.0, -1.0) * (h * r - r * h);
        for (std::size_t i = 0; i < ls.size(); ++i) {
            d += ls[i] * r * ls[i].adjoint();
            d -= 0.5 * (ldl[i] * r + r * ldl[i]);
        }
        return d;
    };

    TrajectoryRecord traj;
    auto record = [&](double t, long step) {
        auto pops = density_populations(rho);
        check_finite(pops, step);
        traj.times.push_back(t);
        traj.populations.push_back(std::move(pops));
        if (cfg.record_snapshots) traj.density_snapshots.push_back(rho);
        const double drift = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
        traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    };
    record(0.0, 0);

    for (long k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt;
        Matrix k1 = rhs(t, rho);
        Matrix k2 = rhs(t + dt / 2, rho + (dt / 2) * k1);
        Matrix k3 = rhs(t + dt / 2, rho + (dt / 2) * k2);
        Matrix k4 = rhs(t + dt, rho + dt * k3);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if ((k + 1) % cfg.record_stride == 0 || k + 1 == n)
            record(static_cast<double>(k + 1) * dt, k + 1);
    }
    traj.trace_warning = traj.max_trace_drift > 1e-6;
    traj.final_density = rho;
    return traj;
}

Matrix total_propagator(const HamiltonianFn& h_of_t, double total_time,
                        const PropagationConfig& cfg) {
    cfg.validate(total_time);
    const long n = step_count(total_time, cfg.resolved_dt());
    const double dt = total_time / static_cast<double>(n);
    const Eigen::Index dim = h_of_t(0.0).rows();
    Matrix u = Matrix::Identity(dim, dim);
    for (long k = 0; k < n; ++k) {
        const double t_mid = (static_cast<double>(k) + 0.5) * dt;
        try {
            u = hermitian_step_exponential(h_of_t(t_mid), dt) * u;
        } catch (const NumericalError& e) {
            throw NumericalError(std::string(e.what()) + " at step " + std::to_string(k));
        }
        if (!u.allFinite())
            throw NumericalError("total_propagator diverged at step " + std::to_string(k));
    }
    return u;
}

HamiltonianFn schedule_hamiltonian(const TransmonSpec& spec, const PulseSchedule& schedule,
                                   Frame frame) {
    if (frame == Frame::LAB) {
        return [spec, schedule](double t) {
            return lab_frame_hamiltonian(spec, schedule, t).entries;
        };
    }
    return [spec, schedule](double t) {
        return rotating_frame_hamiltonian(spec, schedule, t).entries;
    };
}

void write_trajectory_csv(const std::string& path, const TrajectoryRecord& traj) {
    std::vector<std::string> header{"t_ns"};
    for (int i = 0; i < traj.dim(); ++i) header.push_back("pop" + std::to_string(i));
    CsvWriter csv(path, header);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        std::vector<double> row{traj.times[k]};
        row.insert(row.end(), traj.populations[k].begin(), traj.populations[k].end());
        csv.write_row(row);
    }
}

} // namespace stirsap
