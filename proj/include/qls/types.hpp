#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qls {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline constexpr cplx I_unit{0.0, 1.0};

// Default tolerances. Every operation that takes a tolerance accepts an override.
struct Tolerances {
    double structure = 1e-10;  // doubled-up block symmetry, relative
    double numeric = 1e-8;     // algebraic residuals, relative
    double rank = 1e-10;       // singular-value cutoff relative to sigma_max
    double stability = 1e-12;  // strict Hurwitz margin
    double global_min = 1e-7;  // symplectic eigenvalue threshold for pure modes
};

enum class ErrorKind {
    dimension,
    input,
    physicality,
    purity,
    not_hurwitz,
    precondition,
    pole,
    singular,
    unsupported,
    identification,
    realization,
    infeasible,
    accuracy,
    inconsistency,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

    // True for failures caused by the caller's data rather than the numerics.
    bool is_validation() const;

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg) { throw Error(k, msg); }

}  // namespace qls
