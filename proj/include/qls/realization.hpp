#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qls/rational.hpp"
#include "qls/system.hpp"

namespace qls {

// One-mode stage C = Delta(c, 0) with reparameterized Hamiltonian.
// omega_plus is reported in the factor form Xi_+ = -2 i x omega_plus / den;
// the stage's Omega_+ entry is -omega_plus.
struct OneModeParams {
    double c = 0.0;
    double theta = 0.0;      // Omega_-
    cplx omega_plus{0.0};    // zero for passive stages
    double x = 0.0;          // c^2 / 2
    cplx y{0.0};             // sqrt(|omega_plus|^2 - theta^2), real or imaginary
    double phi = 0.0;        // arg(omega_plus)
};

struct CascadeRealization {
    std::vector<OneModeParams> stages;  // stages[0] receives the input field
};

OneModeParams make_stage(double c, double theta, cplx omega_plus);
QLSystem stage_system(const OneModeParams& p);
QLSystem cascade_system(const CascadeRealization& r);

CascadeRealization passive_siso_cascade(const std::vector<cplx>& poles);

enum class PairOrder { descending_real, ascending_real };

struct CascadeOptions {
    PairOrder order = PairOrder::descending_real;
    // Poles to use first, one per stage; the pair nearest each entry is chosen in turn.
    std::vector<cplx> preferred;
    double tol = 1e-6;
};

CascadeRealization siso_cascade_identify(const RationalMatrixFunction& xi_minus, const RationalMatrixFunction& xi_plus,
                                         const CascadeOptions& opt = {});

// Doubled-up 2x2 SISO transfer function from its minus and plus entries.
RationalMatrixFunction doubled_siso(const RationalMatrixFunction& xi_minus, const RationalMatrixFunction& xi_plus);

// Gilbert realization (A0, B0, C0, D) of a doubled-up transfer function with conjugate pole pairs.
StateSpace gilbert_realize(const RationalMatrixFunction& tf);

// Plain (not doubled-up) minimal realization from rank-one residues.
StateSpace minimal_realization(const RationalMatrixFunction& tf);

struct PhysicalRealization {
    QLSystem system;
    CMat gram;       // T^flat T
    CMat transform;  // T
};

PhysicalRealization physical_from_classical(const StateSpace& ss, double tol = 1e-6);

struct PSRealization {
    QLSystem system;
    CMat gram_input;     // (T1^flat T1)^-1
    CMat gram_output;    // T3^flat T3
    double cross_check = 0.0;  // grid distance between the two reconstructions' spectra
    double ps_residual = 0.0;  // grid distance to the input spectrum
};

// ps is Psi(s) J of a globally minimal system.
PSRealization ps_realize(const RationalMatrixFunction& ps, double tol = 1e-6);

struct NoisyOptions {
    std::uint64_t seed = 0;
    int max_restarts = 50;
    int max_iterations = 200;
    double tol = 1e-10;
};

struct NoisyRealization {
    QLSystem system;  // passive; channels [accessible; noise]
    int restarts_used = 0;
    double residual = 0.0;
};

// ss realizes the accessible minus block of a passive transfer function.
NoisyRealization noisy_realize(const StateSpace& ss, Eigen::Index n_noise, const NoisyOptions& opt = {});

// Right eigenvectors y of the passive drift with C_noise y = 0.
std::vector<CVec> nus_detect(const QLSystem& sys, const std::vector<Eigen::Index>& accessible, double tol = 1e-8);

}  // namespace qls
