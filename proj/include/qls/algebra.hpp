#pragma once

#include <vector>

#include "qls/types.hpp"

namespace qls {

// J_n = diag(1_n, -1_n)
CMat jmat(Eigen::Index n);

// Sigma_n = [[0, 1_n], [1_n, 0]]
CMat sigma_swap(Eigen::Index n);

// Delta(A, B) = [[A, B], [conj(B), conj(A)]]
CMat doubled(const CMat& minus, const CMat& plus);

CMat minus_block(const CMat& M);
CMat plus_block(const CMat& M);

// Relative violation of the doubled-up block symmetry.
double doubled_up_defect(const CMat& M);
bool is_doubled_up(const CMat& M, double tol = 1e-10);

// Z^flat = J_m Z^dagger J_n for a 2n x 2m doubled-up Z.
CMat flat(const CMat& M);

// Antilinear partner map v -> Sigma conj(v) on doubled-up column vectors.
CVec conj_partner(const CVec& v);

// Hermitian square root and inverse square root of a positive semidefinite matrix.
CMat herm_sqrt(const CMat& H);
CMat herm_inv_sqrt(const CMat& H);

double rel_residual(const CMat& residual, const CMat& scale);

bool is_symplectic(const CMat& M, double tol = 1e-8);

// M^flat M = I without the doubled-up requirement; transfer functions on the
// imaginary axis pair frequency w with -w and are only flat-unitary.
double flat_unitarity_defect(const CMat& M);

struct WilliamsonResult {
    std::vector<double> symplectic_eigenvalues;  // ascending n_1 <= ... <= n_k
    CMat transform;                              // S with S V S^dagger = Diag(n+1) (+) Diag(n)
};

// V is a covariance E[a a^dagger] in the doubled-up basis.
WilliamsonResult williamson(const CMat& V, Eigen::Index n, double tol = 1e-8);

bool is_pure_covariance(const CMat& V, double tol = 1e-8);

// V(N, M) = [[N^T + 1, M], [M^dagger, N]]
CMat input_covariance(const CMat& N, const CMat& M);

// Symplectic S with S V_vac S^dagger = V(N, M) for pure V(N, M).
CMat vacuum_basis_transform(const CMat& N, const CMat& M, double tol = 1e-8);

CMat vacuum_covariance(Eigen::Index m);

struct FlatGramFactor {
    CMat T;       // T^flat T = G
    CMat W;       // symplectic with G = W Nhat W^flat
    CMat N_hat;   // canonical form
    CMat N_bar;   // factor of the canonical form, N_bar^flat N_bar = N_hat
};

// Factor a flat-self-adjoint doubled-up G as T^flat T.
FlatGramFactor factor_flat_gram_full(const CMat& G, double tol = 1e-8);
CMat factor_flat_gram(const CMat& G, double tol = 1e-8);

// Solve A X + X B = Q by vectorization.
CMat solve_sylvester(const CMat& A, const CMat& B, const CMat& Q);

// Numerical rank with threshold rel_tol * sigma_max.
Eigen::Index numerical_rank(const CMat& M, double rel_tol = 1e-10);

}  // namespace qls
