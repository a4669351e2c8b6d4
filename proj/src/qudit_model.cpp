#include "stirsap/qudit_model.hpp"

#include <cmath>
#include <stdexcept>

#include "stirsap/errors.hpp"
#include "stirsap/pulse_synthesis.hpp"

namespace stirsap {

void TransmonSpec::validate() const {
    if (level_count < 2) throw ConfigError("TransmonSpec: level_count must be >= 2");
    if (static_cast<int>(level_freqs.size()) != level_count)
        throw ConfigError("TransmonSpec: level_freqs size must equal level_count");
    if (level_freqs[0] != 0.0)
        throw ConfigError("TransmonSpec: level_freqs[0] must be 0");
    for (int i = 1; i < level_count; ++i) {
        if (!(level_freqs[i] > level_freqs[i - 1]))
            throw ConfigError("TransmonSpec: level_freqs must be strictly increasing");
    }
    if (t1_times) {
        if (static_cast<int>(t1_times->size()) != level_count - 1)
            throw ConfigError("TransmonSpec: t1_times needs one entry per decay j->j-1");
        for (double t : *t1_times)
            if (!(t > 0.0)) throw ConfigError("TransmonSpec: T1 times must be positive");
    }
    if (tphi_times) {
        if (static_cast<int>(tphi_times->size()) != level_count)
            throw ConfigError("TransmonSpec: tphi_times needs one entry per level");
        for (double t : *tphi_times)
            if (!(t > 0.0)) throw ConfigError("TransmonSpec: Tphi times must be positive");
    }
    if (thermal_pop1 < 0.0 || thermal_pop1 > 0.1)
        throw ConfigError("TransmonSpec: thermal_pop1 must lie in [0, 0.1]");
}

TransmonSpec TransmonSpec::default_spec() {
    TransmonSpec spec;
    spec.level_count = 4;
    const double w1 = two_pi * 5.0;
    const double anh = -two_pi * 0.22;
    spec.level_freqs = {0.0, w1, 2.0 * w1 + anh, 3.0 * w1 + 3.0 * anh};
    spec.thermal_pop1 = 0.0;
    return spec;
}

double TransmonSpec::transition_freq(int upper) const {
    if (upper < 1 || upper >= level_count)
        throw ConfigError("TransmonSpec: transition index out of range");
    return level_freqs[upper] - level_freqs[upper - 1];
}

HermitianOperator HermitianOperator::checked(Matrix m) {
    if (m.rows() != m.cols())
        throw NumericalError("HermitianOperator: matrix must be square");
    const double tol = 1e-12;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (std::abs(m(i, j) - std::conj(m(j, i))) > tol)
                throw NumericalError("HermitianOperator: input is not Hermitian");
        }
    }
    return HermitianOperator{std::move(m)};
}

HermitianOperator ideal_three_level_hamiltonian(double omega_p, double omega_s, double phi) {
    Matrix h = Matrix::Zero(3, 3);
    const Complex es = std::polar(0.5 * omega_s, -phi);
    h(0, 1) = 0.5 * omega_p;
    h(1, 0) = 0.5 * omega_p;
    h(1, 2) = es;
    h(2, 1) = std::conj(es);
    return HermitianOperator{std::move(h)};
}

HermitianOperator cd_hamiltonian(double omega_cd) {
    Matrix h = Matrix::Zero(3, 3);
    h(0, 2) = Complex(0.0, omega_cd);
    h(2, 0) = Complex(0.0, -omega_cd);
    return HermitianOperator{std::move(h)};
}

EigenStructure dark_bright_states(double omega_p, double omega_s, double phi) {
    if (omega_p == 0.0 && omega_s == 0.0)
        throw NumericalError("dark_bright_states: mixing angle undefined for zero drive");
    EigenStructure es;
    es.theta = std::atan2(omega_p, omega_s);
    es.phi = phi;
    const double c = std::cos(es.theta);
    const double s = std::sin(es.theta);
    const Complex ph = std::polar(1.0, phi);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    es.dark << Complex(c, 0.0), Complex(0.0, 0.0), -s * ph;
    es.bright_plus << Complex(s * inv_sqrt2, 0.0), Complex(inv_sqrt2, 0.0), c * ph * inv_sqrt2;
    es.bright_minus << Complex(s * inv_sqrt2, 0.0), Complex(-inv_sqrt2, 0.0), c * ph * inv_sqrt2;
    return es;
}

namespace {

// Per-tone amplitude calibration: the drive amplitude is envelope / sqrt(j_res) so the
// resonant rung (P: 0<->1, S: 1<->2) sees a Rabi rate equal to the nominal envelope.
constexpr double calib_p = 1.0;
const double calib_s = 1.0 / std::sqrt(2.0);

void check_time(double t, double total_time) {
    const double slack = 1e-9 * std::max(total_time, 1.0);
    if (t < -slack || t > total_time + slack)
        throw NumericalError("schedule Hamiltonian: time outside [0, T]");
}

} // namespace

HermitianOperator lab_frame_hamiltonian(const TransmonSpec& spec, const PulseSchedule& schedule,
                                        double t) {
    check_time(t, schedule.total_time);
    const int n = spec.level_count;
    Matrix h = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) h(i, i) = spec.level_freqs[i];
    const double drive =
        calib_p * schedule.p_tone.envelope(t) *
            std::cos(schedule.p_tone.carrier * t + schedule.p_tone.phase) +
        calib_s * schedule.s_tone.envelope(t) *
            std::cos(schedule.s_tone.carrier * t + schedule.s_tone.phase);
    for (int j = 1; j < n; ++j) {
        const double amp = std::sqrt(static_cast<double>(j)) * drive;
        h(j - 1, j) += amp;
        h(j, j - 1) += amp;
    }
    return HermitianOperator{std::move(h)};
}

HermitianOperator rotating_frame_hamiltonian(const TransmonSpec& spec,
                                             const PulseSchedule& schedule, double t) {
    check_time(t, schedule.total_time);
    if (spec.level_count != 4)
        throw ConfigError("rotating_frame_hamiltonian: expects the four-level model");
    const int n = 4;
    Matrix h = Matrix::Zero(n, n);
    const double ep = calib_p * schedule.p_tone.envelope(t);
    const double es = calib_s * schedule.s_tone.envelope(t);
    for (int j = 1; j < n; ++j) {
        const double gap = spec.transition_freq(j);
        const double root_j = std::sqrt(static_cast<double>(j));
        const Complex amp =
            0.5 * root_j *
            (ep * std::polar(1.0, (schedule.p_tone.carrier - gap) * t + schedule.p_tone.phase) +
             es * std::polar(1.0, (schedule.s_tone.carrier - gap) * t + schedule.s_tone.phase));
        h(j - 1, j) += amp;
        h(j, j - 1) += std::conj(amp);
    }
    return HermitianOperator{std::move(h)};
}

std::vector<CollapseOp> collapse_operators(const TransmonSpec& spec) {
    spec.validate();
    std::vector<CollapseOp> ops;
    const int n = spec.level_count;
    if (spec.t1_times) {
        for (int j = 1; j < n; ++j) {
            const double t1 = (*spec.t1_times)[j - 1];
            Matrix lower = Matrix::Zero(n, n);
            lower(j - 1, j) = std::sqrt(static_cast<double>(j));
            ops.push_back({std::move(lower), 1.0 / std::sqrt(t1)});
        }
    }
    if (spec.tphi_times) {
        for (int j = 0; j < n; ++j) {
            const double tphi = (*spec.tphi_times)[j];
            Matrix proj = Matrix::Zero(n, n);
            proj(j, j) = 1.0;
            ops.push_back({std::move(proj), 1.0 / std::sqrt(2.0 * tphi)});
        }
    }
    return ops;
}

} // namespace stirsap
