#pragma once

#include <vector>

#include "qls/system.hpp"

namespace qls {

struct CanonicalStationary {
    QLSystem system;                  // stationary covariance Diag(N + 1) (+) Diag(N)
    CMat transform;                   // symplectic gauge applied to the input system
    std::vector<double> occupations;  // N, ascending
};

// Requires a vacuum-driven, Hurwitz, globally minimal system with S = I.
CanonicalStationary canonicalize_stationary(const QLSystem& sys, const Tolerances& tol = {});

struct AbsorberCheck {
    double purity_residual = 0.0;  // largest occupation of the joint stationary state
    double ps_residual = 0.0;      // grid distance of the joint power spectrum from the vacuum
};

// The dual is driven by the output of sys.
AbsorberCheck verify_absorber(const QLSystem& sys, const QLSystem& dual);

struct AbsorberResult {
    QLSystem dual;
    QLSystem combined;      // series_product(sys, dual)
    CMat basis_transform;   // gauge taking the vacuum frame of sys to its canonical basis
    std::vector<double> occupations;
    double purity_residual = 0.0;
    double ps_residual = 0.0;
};

AbsorberResult dual_system(const QLSystem& sys, const Tolerances& tol = {});

}  // namespace qls
