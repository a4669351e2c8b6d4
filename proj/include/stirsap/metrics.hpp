#pragma once

#include <vector>

#include "stirsap/propagation.hpp"
#include "stirsap/types.hpp"

namespace stirsap {

struct FidelityReport {
    double fidelity = 0.0;
    double cost = 1.0;
    std::vector<double> final_populations;
    double leakage = 0.0;           // population outside {0,1,2} at t = T
    double intermediate_peak = 0.0; // max over recorded times of population(1)
};

// Uhlmann fidelity Tr sqrt(sqrt(rho_ideal) rho_exp sqrt(rho_ideal)). Eigenvalues in
// [-1e-8, 0) are clipped; anything below -1e-8 is rejected. When rho_ideal is pure
// the sqrt(<psi|rho|psi>) reduction is used (agrees with the general path to 1e-10).
double state_fidelity(const DensityMatrix& rho_ideal, const DensityMatrix& rho_exp);

// Always runs the eigendecomposition route, with a relative floor on the inner
// spectrum so rank-deficient inputs do not pick up sqrt(eps) noise.
double state_fidelity_general(const DensityMatrix& rho_ideal, const DensityMatrix& rho_exp);

// 1 - fidelity; rejects inputs outside [0, 1].
double cost(double fidelity);

FidelityReport transfer_report(const TrajectoryRecord& traj, int target_level);

} // namespace stirsap
