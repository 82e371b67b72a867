#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qls/stationary.hpp"
#include "qls/system.hpp"

namespace qls {

struct QFIReport {
    double value = 0.0;
    std::string method;
    std::map<std::string, double> diagnostics;
};

// F = 4 |dXi_- alpha + dXi_+ conj(alpha)|^2 at s = -i omega.
// With optimize_omega the maximum over the grid (default: symmetric default grid) is returned
// and its frequency is reported as diagnostics["omega"].
QFIReport coherent_qfi(const ParamFamily& family, double theta0, double omega, const CVec& alpha,
                       bool optimize_omega = false, std::vector<double> grid = {});

// Phase derivative |dlambda/dtheta| with a displaced arm (energy e_coh) and a squeezed arm (sinh^2 r = e_sq).
QFIReport squeezed_coherent_qfi(double dlambda, double e_coh, double e_sq);
// Equal split of the energy; diagnostics["leading"] = |dlambda|^2 E^2.
QFIReport squeezed_coherent_qfi(double dlambda, double energy);
// MIMO bound E^2 |L|^2 with the spectral norm.
QFIReport squeezed_coherent_qfi(const CMat& L, double energy);

struct QuadratureOptions {
    double rel_tol = 1e-7;
    double abs_tol = 1e-8;  // scaled by 1 + |C|^2 + |Omega|^2
    int max_intervals = 4000;
};

// (1/2 pi) times the integral over the real line of -Tr(J dPsi J dPsi).
QFIReport stationary_qfi_rate_freq(const ParamFamily& family, double theta0, const InputCovariance& in,
                                   const QuadratureOptions& opt = {});

// Per-frequency integrand -Tr(J dPsi J dPsi) at s = -i omega.
double stationary_qfi_density(const ParamFamily& family, double theta0, const InputCovariance& in, double omega);

QFIReport stationary_qfi_rate_time(const ParamFamily& family, double theta0, const InputCovariance& in);

struct ScalingRow {
    double coupling = 0.0;
    double tau = 0.0;  // inverse spectral gap
    double f = 0.0;
};

struct ScalingTable {
    std::vector<ScalingRow> rows;
    double slope = 0.0;  // least-squares slope of log f against log tau
};

ScalingTable destabilized_scaling_check(const std::function<ParamFamily(double)>& family_at, const std::vector<double>& couplings,
                                        double theta0, const InputCovariance& in);

struct MultiParamBounds {
    double trace_cr_strategy1 = 0.0;
    double trace_cr_strategy2_min = 0.0;
    double alpha_opt_sq = 0.0;
    double H = 0.0;
    double K = 0.0;  // from row sums of the cofactor matrix
    // Same bound with K from column sums, the exact minimizer of strategy2_trace.
    double K_columns = 0.0;
    double trace_cr_strategy2_exact = 0.0;
    double alpha_opt_sq_exact = 0.0;
    double det = 0.0;
    double ratio = 0.0;  // strategy1 / strategy2_min
};

// Jacobian entries dlambda_i / dtheta_l, N photons, d phases.
MultiParamBounds multiparam_noon_bounds(const Eigen::MatrixXd& jac, double photons);
// Strategy-2 Cramer-Rao trace for a given alpha^2 in (0, 1/d).
double strategy2_trace(const Eigen::MatrixXd& jac, double photons, double alpha_sq);

struct EnsembleProfile {
    std::vector<double> omega;
    std::vector<double> f;
    double omega_opt = 0.0;
    double f_opt_sq = 0.0;
};

EnsembleProfile ensemble_coupling_profile(double kappa, const std::vector<double>& grid);

}  // namespace qls
