#pragma once

#include <functional>
#include <vector>

#include "qls/system.hpp"

namespace qls {

// f(s) = constant + sum_k residues[k] / (s - poles[k])
struct RationalMatrixFunction {
    CMat constant;
    std::vector<cplx> poles;
    std::vector<CMat> residues;

    Eigen::Index rows() const { return constant.rows(); }
    Eigen::Index cols() const { return constant.cols(); }
    CMat operator()(cplx s) const;
};

void validate(const RationalMatrixFunction& f);

// Partial fractions of a diagonalizable state space.
RationalMatrixFunction from_state_space(const StateSpace& ss);

// Residue of f at a simple pole p by averaging f(s)(s - p) over four points on a circle of radius eps.
CMat residue_by_limit(const std::function<CMat(cplx)>& f, cplx pole, double eps = 1e-5);

// Roots of a polynomial with coefficients listed from the highest degree down.
std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs);
cplx polyval(const std::vector<cplx>& coeffs, cplx s);

using PolyMatrix = std::vector<std::vector<std::vector<cplx>>>;

// Entrywise num_ij / den over a common denominator with simple roots.
RationalMatrixFunction from_polynomial_matrix(const PolyMatrix& nums, const std::vector<cplx>& den);

// Scalar num/den (highest degree first) to partial fractions; den must have simple roots.
RationalMatrixFunction from_polynomials(const std::vector<cplx>& num, const std::vector<cplx>& den);

// Index of the pole closest to p, or -1 if none lies within tol.
Eigen::Index find_pole(const std::vector<cplx>& poles, cplx p, double tol = 1e-6);

}  // namespace qls
