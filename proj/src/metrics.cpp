#include "stirsap/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "stirsap/errors.hpp"

namespace stirsap {

namespace {

constexpr double psd_clip = 1e-8;

// Eigenvalues in [-clip, 0) are treated as numerical zeros; below -clip is rejected.
Eigen::VectorXd clipped_spectrum(const Matrix& rho, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho);
    if (solver.info() != Eigen::Success)
        throw NumericalError(std::string(what) + ": eigendecomposition failed");
    Eigen::VectorXd w = solver.eigenvalues();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < -psd_clip)
            throw NumericalError(std::string(what) + ": matrix is not positive semidefinite");
        if (w(i) < 0.0) w(i) = 0.0;
    }
    return w;
}

bool is_pure(const Matrix& rho) {
    const double purity = (rho * rho).trace().real();
    return std::abs(purity - 1.0) < 1e-10;
}

} // namespace

double state_fidelity_general(const DensityMatrix& rho_ideal, const DensityMatrix& rho_exp) {
    if (rho_ideal.dim() != rho_exp.dim())
        throw NumericalError("state_fidelity: dimension mismatch");
    rho_ideal.validate();
    rho_exp.validate();

    const Matrix& a = rho_ideal.entries;
    const Matrix& b = rho_exp.entries;

    Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
    if (solver.info() != Eigen::Success)
        throw NumericalError("state_fidelity: eigendecomposition failed");
    Eigen::VectorXd w = solver.eigenvalues();
    const double floor_a = 1e-14 * w.maxCoeff();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < -psd_clip)
            throw NumericalError("state_fidelity: rho_ideal not positive semidefinite");
        w(i) = w(i) > floor_a ? std::sqrt(w(i)) : 0.0;
    }
    const Matrix sqrt_a = solver.eigenvectors() * w.asDiagonal() * solver.eigenvectors().adjoint();
    const Matrix m = sqrt_a * b * sqrt_a;
    Eigen::VectorXd mw = clipped_spectrum(m, "state_fidelity");
    const double floor_m = 1e-14 * std::max(mw.maxCoeff(), 0.0);
    double f = 0.0;
    for (Eigen::Index i = 0; i < mw.size(); ++i)
        if (mw(i) > floor_m) f += std::sqrt(mw(i));
    return std::min(1.0, f);
}

double state_fidelity(const DensityMatrix& rho_ideal, const DensityMatrix& rho_exp) {
    if (rho_ideal.dim() != rho_exp.dim())
        throw NumericalError("state_fidelity: dimension mismatch");
    rho_ideal.validate();
    rho_exp.validate();

    const Matrix& a = rho_ideal.entries;
    const Matrix& b = rho_exp.entries;

    if (is_pure(a)) {
        // rho_ideal = |psi><psi|: F = sqrt(<psi|rho_exp|psi>).
        Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
        Eigen::Index top;
        solver.eigenvalues().maxCoeff(&top);
        const Vector psi = solver.eigenvectors().col(top);
        const double overlap = std::max(0.0, (psi.adjoint() * b * psi)(0, 0).real());
        return std::min(1.0, std::sqrt(overlap));
    }
    return state_fidelity_general(rho_ideal, rho_exp);
}

double cost(double fidelity) {
    if (!(fidelity >= 0.0 && fidelity <= 1.0))
        throw NumericalError("cost: fidelity outside [0, 1]");
    return 1.0 - fidelity;
}

FidelityReport transfer_report(const TrajectoryRecord& traj, int target_level) {
    if (traj.populations.empty())
        throw NumericalError("transfer_report: empty trajectory");
    const int dim = traj.dim();
    if (target_level < 0 || target_level >= dim)
        throw NumericalError("transfer_report: target level outside the state space");

    FidelityReport report;
    report.final_populations = traj.final_populations();

    const DensityMatrix target = DensityMatrix::pure(QuantumState::basis(dim, target_level));
    if (traj.final_density) {
        report.fidelity = state_fidelity(target, DensityMatrix{*traj.final_density});
    } else if (traj.final_state) {
        report.fidelity = std::abs((*traj.final_state)(target_level));
    } else {
        throw NumericalError("transfer_report: trajectory has no final state");
    }
    report.cost = 1.0 - report.fidelity;

    for (int n = 3; n < dim; ++n) report.leakage += report.final_populations[n];
    report.leakage = std::clamp(report.leakage, 0.0, 1.0);

    if (dim > 1) {
        for (const auto& pops : traj.populations)
            report.intermediate_peak = std::max(report.intermediate_peak, pops[1]);
    }
    return report;
}

} // namespace stirsap
