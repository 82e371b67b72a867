#include "qls/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qls {

namespace {

struct Derivative {
    QLSystem lo, hi;
    double h;
};

Derivative bracket(const ParamFamily& family, double theta0) {
    const double h = family.step(theta0);
    return Derivative{family.at(theta0 - h), family.at(theta0 + h), h};
}

CMat central(const CMat& lo, const CMat& hi, double h) { return (hi - lo) / (2.0 * h); }

// Derivative of the power spectrum at many frequencies. The state-space matrices are
// differentiated once; the resolvent is applied in the modal basis of the drift.
class SpectrumDerivative {
public:
    SpectrumDerivative(const QLSystem& base, const Derivative& d, const InputCovariance& in)
        : ss_(to_state_space(base)), V_(in.V()) {
        const auto lo = to_state_space(d.lo), hi = to_state_space(d.hi);
        dA_ = central(lo.A, hi.A, d.h);
        dB_ = central(lo.B, hi.B, d.h);
        dC_ = central(lo.C, hi.C, d.h);
        dD_ = central(lo.D, hi.D, d.h);
        const auto n = ss_.order();
        if (n == 0) return;
        Eigen::ComplexEigenSolver<CMat> es(ss_.A);
        const CMat& X = es.eigenvectors();
        const RVec sv = Eigen::JacobiSVD<CMat>(X).singularValues();
        if (sv(n - 1) < 1e-8 * sv(0)) return;  // fall back to LU solves
        modal_ = true;
        lambda_ = es.eigenvalues();
        const auto lu = X.partialPivLu();
        CX_ = ss_.C * X;
        XiB_ = lu.solve(ss_.B);
        dCX_ = dC_ * X;
        XidB_ = lu.solve(dB_);
        XidAX_ = lu.solve(dA_ * X);
    }

    CMat dpsi(cplx s) const {
        CMat xi, dxi, xt, dxt;
        eval(s, xi, dxi);
        eval(-std::conj(s), xt, dxt);
        return dxi * V_ * xt.adjoint() + xi * V_ * dxt.adjoint();
    }

private:
    // Xi = D + C R B and dXi = dD + dC R B + C R dB + C R dA R B with R = (sI - A)^-1
    void eval(cplx s, CMat& xi, CMat& dxi) const {
        const auto n = ss_.order();
        if (n == 0) {
            xi = ss_.D;
            dxi = dD_;
            return;
        }
        if (!modal_) {
            const CMat R = (s * CMat::Identity(n, n) - ss_.A).partialPivLu().inverse();
            const CMat RB = R * ss_.B;
            const CMat CR = ss_.C * R;
            xi = ss_.D + ss_.C * RB;
            dxi = dD_ + dC_ * RB + CR * dB_ + CR * dA_ * RB;
            return;
        }
        const CVec r = (s - lambda_.array()).inverse();
        const CMat RB = r.asDiagonal() * XiB_;
        const CMat CR = CX_ * r.asDiagonal();
        xi = ss_.D + CX_ * RB;
        dxi = dD_ + dCX_ * RB + CR * XidB_ + CR * XidAX_ * RB;
    }

    StateSpace ss_;
    CMat V_;
    CMat dA_, dB_, dC_, dD_;
    bool modal_ = false;
    CVec lambda_;
    CMat CX_, XiB_, dCX_, XidB_, XidAX_;
};

std::vector<double> symmetric(const std::vector<double>& g) {
    std::vector<double> out = g;
    for (double w : g)
        if (w > 0) out.push_back(-w);
    return out;
}

}  // namespace

QFIReport coherent_qfi(const ParamFamily& family, double theta0, double omega, const CVec& alpha, bool optimize_omega,
                       std::vector<double> grid) {
    const QLSystem base = family.at(theta0);
    if (alpha.size() != base.m()) fail(ErrorKind::dimension, "coherent_qfi: amplitude length differs from channel count");
    if (!is_hurwitz(base)) fail(ErrorKind::not_hurwitz, "coherent_qfi: system is not Hurwitz");
    const auto d = bracket(family, theta0);
    const auto m = base.m();
    CVec a2(2 * m);
    a2 << alpha, alpha.conjugate();
    auto value = [&](double w) {
        const cplx s = freq_point(w);
        const CMat dXi = central(transfer_function(d.lo, s), transfer_function(d.hi, s), d.h);
        return 4.0 * (dXi.topRows(m) * a2).squaredNorm();
    };
    QFIReport r;
    r.method = "coherent";
    if (!optimize_omega) {
        r.value = value(omega);
        r.diagnostics["omega"] = omega;
        return r;
    }
    if (grid.empty()) grid = symmetric(default_grid(base));
    r.value = -1.0;
    for (double w : grid) {
        const double v = value(w);
        if (v > r.value) {
            r.value = v;
            r.diagnostics["omega"] = w;
        }
    }
    r.diagnostics["grid_points"] = static_cast<double>(grid.size());
    return r;
}

QFIReport squeezed_coherent_qfi(double dlambda, double e_coh, double e_sq) {
    if (e_coh < 0 || e_sq < 0) fail(ErrorKind::input, "squeezed_coherent_qfi: energies must be non-negative");
    const double r = std::asinh(std::sqrt(e_sq));
    QFIReport out;
    out.method = "squeezed_coherent";
    out.value = dlambda * dlambda * (e_coh * std::exp(2.0 * r) + e_sq);
    out.diagnostics["squeezing"] = r;
    return out;
}

QFIReport squeezed_coherent_qfi(double dlambda, double energy) {
    if (!(energy > 0)) fail(ErrorKind::input, "squeezed_coherent_qfi: energy must be positive");
    auto out = squeezed_coherent_qfi(dlambda, 0.5 * energy, 0.5 * energy);
    out.diagnostics["leading"] = dlambda * dlambda * energy * energy;
    return out;
}

QFIReport squeezed_coherent_qfi(const CMat& L, double energy) {
    if (!(energy > 0)) fail(ErrorKind::input, "squeezed_coherent_qfi: energy must be positive");
    QFIReport out;
    out.method = "squeezed_coherent";
    const double norm = L.size() == 0 ? 0.0 : Eigen::JacobiSVD<CMat>(L).singularValues()(0);
    out.value = energy * energy * norm * norm;
    return out;
}

double stationary_qfi_density(const ParamFamily& family, double theta0, const InputCovariance& in, double omega) {
    const CMat dPsi = SpectrumDerivative(family.at(theta0), bracket(family, theta0), in).dpsi(freq_point(omega));
    const CMat J = jmat(in.m());
    return -(J * dPsi * J * dPsi).trace().real();
}

QFIReport stationary_qfi_rate_freq(const ParamFamily& family, double theta0, const InputCovariance& in,
                                   const QuadratureOptions& opt) {
    const QLSystem base = family.at(theta0);
    if (!is_hurwitz(base)) fail(ErrorKind::not_hurwitz, "stationary_qfi_rate_freq: system is not Hurwitz");
    if (!is_pure(in)) fail(ErrorKind::purity, "stationary_qfi_rate_freq: input must be pure");
    const auto d = bracket(family, theta0);

    // Breakpoints at the resonances of all three systems, where the integrand peaks.
    std::vector<double> brk;
    for (const auto* sys : {&base, &d.lo, &d.hi})
        for (const auto& ev : drift_eigenvalues(*sys)) brk.push_back(-ev.imag());
    std::sort(brk.begin(), brk.end());
    brk.erase(std::unique(brk.begin(), brk.end(), [](double a, double b) { return std::abs(a - b) < 1e-9; }), brk.end());

    const CMat J = jmat(in.m());
    const SpectrumDerivative deriv(base, d, in);
    auto f = [&](double w) {
        const CMat dPsi = deriv.dpsi(freq_point(w));
        return -(J * dPsi * J * dPsi).trace().real();
    };
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    const double inf = std::numeric_limits<double>::infinity();
    const unsigned depth = static_cast<unsigned>(std::max(4.0, std::log2(double(opt.max_intervals))));
    double total = 0.0, err = 0.0, l1 = 0.0;
    auto piece = [&](double a, double b) {
        double e = 0.0, L1 = 0.0;
        total += GK::integrate(f, a, b, depth, opt.rel_tol, &e, &L1);
        err += e;
        l1 += L1;
    };
    piece(-inf, brk.front());
    for (size_t k = 0; k + 1 < brk.size(); ++k) piece(brk[k], brk[k + 1]);
    piece(brk.back(), inf);

    QFIReport r;
    r.method = "stationary_freq";
    r.value = total / (2.0 * std::numbers::pi);
    r.diagnostics["error_estimate"] = err / (2.0 * std::numbers::pi);
    r.diagnostics["l1"] = l1 / (2.0 * std::numbers::pi);
    // finite-difference noise sets an absolute floor proportional to the system scale
    const double floor = opt.abs_tol * (1.0 + base.C.squaredNorm() + base.Omega.squaredNorm());
    if (err > std::max(floor, 1e3 * opt.rel_tol * l1))
        fail(ErrorKind::accuracy, "stationary_qfi_rate_freq: quadrature did not converge (partial value " +
                                      std::to_string(r.value) + ")");
    return r;
}

QFIReport stationary_qfi_rate_time(const ParamFamily& family, double theta0, const InputCovariance& in) {
    const QLSystem base = family.at(theta0);
    if (!is_hurwitz(base)) fail(ErrorKind::not_hurwitz, "stationary_qfi_rate_time: system is not Hurwitz");
    if (!is_pure(in)) fail(ErrorKind::purity, "stationary_qfi_rate_time: input must be pure");
    const auto d = bracket(family, theta0);
    const auto n = base.n(), m = base.m();
    QFIReport r;
    r.method = "stationary_time";
    if (n == 0) return r;

    const auto fr = vacuum_frame(base, in).system;
    const CMat C = fr.C;
    const CMat dC = central(vacuum_frame(d.lo, in).system.C, vacuum_frame(d.hi, in).system.C, d.h);
    const CMat dOm = central(d.lo.Omega, d.hi.Omega, d.h);
    const CMat Jm = jmat(m), Jn = jmat(n);
    const CMat G = dC.adjoint() * Jm * C;
    const CMat X = 0.5 * dOm + 0.5 * (G - G.adjoint()) / (2.0 * I_unit);
    const CMat A = drift_matrix(fr);
    const CMat B = solve_sylvester(A.adjoint(), A, -X);
    const CMat D = dC + 2.0 * I_unit * C * Jn * B;
    const CMat P = solve_lyapunov(fr, vacuum_input(m)).P;
    const CMat Vv = vacuum_covariance(m);
    r.value = 4.0 * (D.adjoint() * Jm * Vv * Jm * D * (P - Jn)).trace().real();
    r.diagnostics["lyapunov_residual"] = (A.adjoint() * B + B * A + X).norm() / std::max(1.0, X.norm());
    r.diagnostics["D_norm"] = D.norm();
    return r;
}

ScalingTable destabilized_scaling_check(const std::function<ParamFamily(double)>& family_at,
                                        const std::vector<double>& couplings, double theta0, const InputCovariance& in) {
    ScalingTable t;
    std::vector<double> lx, ly;
    for (double c : couplings) {
        const ParamFamily fam = family_at(c);
        const QLSystem sys = fam.at(theta0);
        if (!is_hurwitz(sys)) fail(ErrorKind::not_hurwitz, "scaling check: family is not Hurwitz at a coupling");
        ScalingRow row;
        row.coupling = c;
        row.tau = 1.0 / spectral_gap(sys);
        row.f = stationary_qfi_rate_time(fam, theta0, in).value;
        t.rows.push_back(row);
        if (row.f > 1e-12) {
            lx.push_back(std::log(row.tau));
            ly.push_back(std::log(row.f));
        }
    }
    if (lx.size() >= 2) {
        const double k = static_cast<double>(lx.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (size_t i = 0; i < lx.size(); ++i) {
            sx += lx[i];
            sy += ly[i];
            sxx += lx[i] * lx[i];
            sxy += lx[i] * ly[i];
        }
        t.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    }
    return t;
}

namespace {

Eigen::MatrixXd cofactor(const Eigen::MatrixXd& M) {
    const auto d = M.rows();
    Eigen::MatrixXd P(d, d);
    if (d == 1) {
        P(0, 0) = 1.0;
        return P;
    }
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            Eigen::MatrixXd minor(d - 1, d - 1);
            for (Eigen::Index r = 0, rr = 0; r < d; ++r) {
                if (r == i) continue;
                for (Eigen::Index c = 0, cc = 0; c < d; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = M(r, c);
                }
                ++rr;
            }
            P(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
        }
    return P;
}

}  // namespace

double strategy2_trace(const Eigen::MatrixXd& jac, double photons, double alpha_sq) {
    const double dd = static_cast<double>(jac.rows());
    if (!(alpha_sq > 0 && alpha_sq * dd < 1)) fail(ErrorKind::input, "strategy2_trace: alpha^2 must lie in (0, 1/d)");
    Eigen::MatrixXd Q = Eigen::MatrixXd::Constant(jac.rows(), jac.rows(), 1.0 / dd);
    Eigen::MatrixXd F = 4.0 * photons * photons * alpha_sq * jac.transpose() *
                        (Eigen::MatrixXd::Identity(jac.rows(), jac.rows()) - dd * alpha_sq * Q) * jac;
    return F.inverse().trace();
}

MultiParamBounds multiparam_noon_bounds(const Eigen::MatrixXd& jac, double photons) {
    if (jac.rows() != jac.cols() || jac.rows() == 0) fail(ErrorKind::dimension, "multiparam: Jacobian must be square");
    if (!(photons > 0)) fail(ErrorKind::input, "multiparam: photon number must be positive");
    const auto d = jac.rows();
    const double dd = static_cast<double>(d);
    MultiParamBounds b;
    b.det = jac.determinant();
    const double scale = std::pow(jac.norm() / std::sqrt(dd), dd);
    if (std::abs(b.det) <= 1e-12 * std::max(1e-300, scale))
        fail(ErrorKind::identification, "multiparam: Jacobian is singular, parameters are not identifiable");
    const Eigen::MatrixXd P = cofactor(jac);
    b.H = P.squaredNorm();
    for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index l = 0; l < d; ++l)
            for (Eigen::Index m = 0; m < d; ++m) b.K += 0.5 * std::pow(P(j, l) - P(j, m), 2);
    b.K_columns = dd * b.H - P.colwise().sum().squaredNorm();
    const double n2 = photons * photons, det2 = b.det * b.det;
    b.trace_cr_strategy1 = dd * dd * b.H / (n2 * det2);
    auto minimize = [&](double K, double& value, double& alpha_sq) {
        const double disc = std::sqrt(std::max(0.0, 4.0 * dd * b.H * (dd * b.H - K)));
        value = (2.0 * dd * b.H - K + disc) / (4.0 * n2 * det2);
        // (2dH - sqrt(.)) / (2dK), rationalized so that K -> 0 is regular
        alpha_sq = 2.0 * b.H / (2.0 * dd * b.H + disc);
    };
    minimize(b.K, b.trace_cr_strategy2_min, b.alpha_opt_sq);
    minimize(b.K_columns, b.trace_cr_strategy2_exact, b.alpha_opt_sq_exact);
    b.ratio = b.trace_cr_strategy1 / b.trace_cr_strategy2_min;
    return b;
}

EnsembleProfile ensemble_coupling_profile(double kappa, const std::vector<double>& grid) {
    if (!(kappa > 0)) fail(ErrorKind::input, "ensemble profile: kappa must be positive");
    EnsembleProfile p;
    auto f = [kappa](double w) { return 2.0 * kappa * w / (w * w + 0.25 * kappa * kappa); };
    for (double w : grid) {
        p.omega.push_back(w);
        p.f.push_back(f(w));
    }
    // stationary point of f; -kappa/2 gives the mirrored minimum
    p.omega_opt = 0.5 * kappa;
    p.f_opt_sq = f(p.omega_opt) * f(p.omega_opt);
    return p;
}

}  // namespace qls
