#pragma once

#include <functional>
#include <vector>

#include "qls/algebra.hpp"

namespace qls {

// Quantum linear system (S, C, Omega) in the doubled-up basis [a; a#].
struct QLSystem {
    CMat S;      // 2m x 2m
    CMat C;      // 2m x 2n
    CMat Omega;  // 2n x 2n

    Eigen::Index n() const { return Omega.rows() / 2; }
    Eigen::Index m() const { return S.rows() / 2; }
};

// Validates shapes, doubled-up structure, Hermitian Omega and symplectic S.
QLSystem make_system(const CMat& S, const CMat& C, const CMat& Omega, const Tolerances& tol = {});

// One-mode-per-block convenience: S = I.
QLSystem make_system(const CMat& C, const CMat& Omega, const Tolerances& tol = {});

struct StateSpace {
    CMat A, B, C, D;
    Eigen::Index order() const { return A.rows(); }
};

CMat drift_matrix(const QLSystem& sys);

// Omega recovered from a drift matrix: i J (A + C^flat C / 2), Hermitian part.
CMat omega_from_drift(const CMat& A, const CMat& C);

double pr_residual(const CMat& A, const CMat& C);
bool check_pr(const CMat& A, const CMat& C, double tol = 1e-8);

// (A, -C^flat S, C, S)
StateSpace to_state_space(const QLSystem& sys);

CMat evaluate(const StateSpace& ss, cplx s);
CMat transfer_function(const QLSystem& sys, cplx s);

CMat controllability_matrix(const CMat& A, const CMat& B);
CMat observability_matrix(const CMat& C, const CMat& A);
bool is_controllable(const CMat& A, const CMat& B, double rank_tol = 1e-10);
bool is_observable(const CMat& C, const CMat& A, double rank_tol = 1e-10);
bool is_minimal(const QLSystem& sys, double rank_tol = 1e-10);

CVec drift_eigenvalues(const QLSystem& sys);
bool is_hurwitz(const CMat& A, double stab_tol = 1e-12);
bool is_hurwitz(const QLSystem& sys, double stab_tol = 1e-12);
double spectral_gap(const CMat& A);
double spectral_gap(const QLSystem& sys);

// Output of `first` feeds `second`; TF is Xi_second * Xi_first.
QLSystem series_product(const QLSystem& first, const QLSystem& second);
QLSystem concatenate(const QLSystem& a, const QLSystem& b);
QLSystem gauge_transform(const QLSystem& sys, const CMat& T, double tol = 1e-8);

// Identity system with m channels and no modes.
QLSystem trivial_system(Eigen::Index m);

// 41 log-spaced frequencies in [1e-2 gap, 1e2 |A|] plus 0, away from the spectrum.
std::vector<double> default_grid(const QLSystem& sys);
std::vector<double> default_grid(const CMat& A);

// Frequency omega corresponds to s = -i omega.
inline cplx freq_point(double omega) { return cplx(0.0, -omega); }

double tf_distance(const QLSystem& a, const QLSystem& b, const std::vector<double>& grid);
bool tf_equal(const QLSystem& a, const QLSystem& b, const std::vector<double>& grid, double tol = 1e-8);

// Real-parameter family theta -> system, differentiated by central differences.
struct ParamFamily {
    std::function<QLSystem(double)> evaluate;
    double fd_rel_step = 1e-6;

    double step(double theta) const;
    QLSystem at(double theta) const { return evaluate(theta); }
};

// One affine dependence of a matrix entry on theta.
struct ParamPath {
    enum class Block { C, Omega } block = Block::C;
    enum class Part { minus, plus } part = Part::minus;
    Eigen::Index row = 0, col = 0;
    cplx coefficient{1.0, 0.0};
};

// base(theta) = base + (theta - theta_ref) * sum of paths, keeping doubled-up structure
// and Omega Hermitian-symmetric.
ParamFamily affine_family(const QLSystem& base, const std::vector<ParamPath>& paths, double theta_ref = 0.0);

}  // namespace qls
