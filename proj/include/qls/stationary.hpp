#pragma once

#include <vector>

#include "qls/system.hpp"

namespace qls {

// Stationary Gaussian input field with covariance V(N, M).
struct InputCovariance {
    CMat N;  // m x m Hermitian
    CMat M;  // m x m symmetric

    Eigen::Index m() const { return N.rows(); }
    CMat V() const { return input_covariance(N, M); }
};

InputCovariance make_input(const CMat& N, const CMat& M, double tol = 1e-8);
InputCovariance vacuum_input(Eigen::Index m);
bool is_pure(const InputCovariance& in, double tol = 1e-8);

struct StationaryState {
    CMat P;                                   // E[a a^dagger] in the doubled-up basis
    std::vector<double> symplectic_spectrum;  // ascending
    double residual = 0.0;                    // relative Lyapunov residual
};

// Lyapunov equation A P + P A^dagger + C^flat S V S^dagger C^flat^dagger = 0.
StationaryState solve_lyapunov(const QLSystem& sys, const InputCovariance& in);

CMat power_spectrum(const QLSystem& sys, const InputCovariance& in, cplx s);

// Same dynamics seen with a vacuum input: S -> I, C -> (S S_in)^flat C.
// The output differs from the original by the static transform S S_in.
struct VacuumFrame {
    QLSystem system;
    CMat field_transform;  // S S_in
};
VacuumFrame vacuum_frame(const QLSystem& sys, const InputCovariance& in, double tol = 1e-8);

bool is_globally_minimal(const QLSystem& sys, const InputCovariance& in, const Tolerances& tol = {});

struct PassiveGMResult {
    bool globally_minimal = false;
    std::vector<cplx> reducible_eigs;  // real eigenvalues and members of conjugate pairs
};
PassiveGMResult siso_passive_gm(const QLSystem& sys, const InputCovariance& in, double tol = 1e-8);

// Both components live in the vacuum frame with S = I; the pure part feeds the mixed part.
struct PureMixedSplit {
    QLSystem pure;
    QLSystem mixed;
    CMat field_transform;             // output transform of the vacuum frame
    CMat gauge;                       // symplectic T taking the frame to the canonical basis
    std::vector<double> occupations;  // symplectic spectrum of the stationary state
    double coupling_residual = 0.0;   // size of the mixed-to-pure drift block
};
PureMixedSplit pure_mixed_split(const QLSystem& sys, const InputCovariance& in, const Tolerances& tol = {});

// Classical state space whose transfer function is Psi(s) J.
StateSpace ps_cascade_embedding(const QLSystem& sys, const InputCovariance& in);

}  // namespace qls
