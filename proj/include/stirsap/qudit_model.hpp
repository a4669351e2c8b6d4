#pragma once

#include <optional>
#include <vector>

#include "stirsap/types.hpp"

namespace stirsap {

struct PulseSchedule; // pulse_synthesis.hpp

// Qudit level structure plus open-system channels. Frequencies are angular (rad/ns);
// times are ns. level_freqs[0] must be 0 and the ladder strictly increasing.
struct TransmonSpec {
    int level_count = 4;
    std::vector<double> level_freqs;                    // rad/ns, one per level
    std::optional<std::vector<double>> t1_times;        // ns, decay j -> j-1, size level_count-1
    std::optional<std::vector<double>> tphi_times;      // ns, pure dephasing per level
    double thermal_pop1 = 0.0;                          // initial population of level 1

    void validate() const;

    // omega_1 = 2pi*5.0 rad/ns, anharmonicity alpha = -2pi*0.22 rad/ns,
    // omega_n = n*omega_1 + n(n-1)/2 * alpha (cubic transmon ladder).
    static TransmonSpec default_spec();

    double transition_freq(int upper) const;            // omega_j - omega_{j-1}
};

// Dense Hermitian matrix; construction checks hermiticity entrywise to 1e-12.
struct HermitianOperator {
    Matrix entries;

    int dim() const { return static_cast<int>(entries.rows()); }
    static HermitianOperator checked(Matrix m);
};

// Instantaneous dark/bright decomposition of the three-level Raman Hamiltonian.
struct EigenStructure {
    double theta = 0.0;
    double phi = 0.0;
    Eigen::Vector3cd dark;
    Eigen::Vector3cd bright_plus;
    Eigen::Vector3cd bright_minus;
};

struct CollapseOp {
    Matrix op;
    double rate = 0.0; // multiplies op; the dissipator then scales as rate^2
};

// H = 1/2 [ Omega_p |0><1| + Omega_s e^{-i phi} |1><2| + h.c. ]
HermitianOperator ideal_three_level_hamiltonian(double omega_p, double omega_s, double phi);

// Counter-diabatic coupling on 0<->2: entry (0,2) = +i*omega_cd, i.e. -omega_cd * lambda_5.
// The sign is fixed by the transfer oracle (driving with omega_cd = dtheta/dt makes the
// evolution follow the instantaneous eigenstates exactly).
HermitianOperator cd_hamiltonian(double omega_cd);

// theta = arctan(Omega_p/Omega_s); requires a nonzero drive pair.
EigenStructure dark_bright_states(double omega_p, double omega_s, double phi);

// Full driven ladder with cosine carriers; each tone k drives every rung j with
// matrix element sqrt(j), amplitude envelope_k / sqrt(j_res,k) (the per-tone
// calibration that makes the on-resonance Rabi rate equal the nominal envelope).
HermitianOperator lab_frame_hamiltonian(const TransmonSpec& spec, const PulseSchedule& schedule, double t);

// Interaction picture w.r.t. the bare ladder after dropping carrier-sum terms:
// entry (j-1,j) = sum_k sqrt(j)/sqrt(j_res,k) * env_k(t)/2 * exp(i[(omega_k - (w_j - w_{j-1}))t + phi_k]).
HermitianOperator rotating_frame_hamiltonian(const TransmonSpec& spec, const PulseSchedule& schedule, double t);

// T1 entries give sqrt(j)|j-1><j| with rate 1/sqrt(T1_j); Tphi entries give the
// projector |j><j| with rate 1/sqrt(2 Tphi_j). Empty when no times configured.
std::vector<CollapseOp> collapse_operators(const TransmonSpec& spec);

} // namespace stirsap
