#include "qls/system.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qls {

QLSystem make_system(const CMat& S, const CMat& C, const CMat& Omega, const Tolerances& tol) {
    if (S.rows() != S.cols() || S.rows() % 2 != 0)
        fail(ErrorKind::dimension, "system: S must be square with even dimension");
    if (Omega.rows() != Omega.cols() || Omega.rows() % 2 != 0)
        fail(ErrorKind::dimension, "system: Omega must be square with even dimension");
    if (C.rows() != S.rows() || C.cols() != Omega.rows())
        fail(ErrorKind::dimension, "system: C must be 2m x 2n");
    if (!S.allFinite() || !C.allFinite() || !Omega.allFinite())
        fail(ErrorKind::input, "system: non-finite entries");
    if (!is_doubled_up(C, tol.structure)) fail(ErrorKind::input, "system: C is not doubled-up");
    if (!is_doubled_up(Omega, tol.structure)) fail(ErrorKind::input, "system: Omega is not doubled-up");
    if ((Omega - Omega.adjoint()).norm() > tol.structure * std::max(1.0, Omega.norm()))
        fail(ErrorKind::input, "system: Omega minus block must be Hermitian and plus block symmetric");
    if (!is_symplectic(S, tol.numeric)) fail(ErrorKind::physicality, "system: S is not symplectic");
    return QLSystem{S, C, Omega};
}

QLSystem make_system(const CMat& C, const CMat& Omega, const Tolerances& tol) {
    return make_system(CMat::Identity(C.rows(), C.rows()), C, Omega, tol);
}

CMat drift_matrix(const QLSystem& sys) {
    const auto n = sys.n();
    if (n == 0) return CMat(0, 0);
    return -0.5 * flat(sys.C) * sys.C - I_unit * jmat(n) * sys.Omega;
}

CMat omega_from_drift(const CMat& A, const CMat& C) {
    const auto n = A.rows() / 2;
    if (n == 0) return CMat(0, 0);
    CMat W = I_unit * jmat(n) * (A + 0.5 * flat(C) * C);
    return 0.5 * (W + W.adjoint());
}

double pr_residual(const CMat& A, const CMat& C) {
    if (A.rows() == 0) return 0.0;
    const CMat R = A + flat(A) + flat(C) * C;
    return R.norm() / std::max(1.0, A.norm());
}

bool check_pr(const CMat& A, const CMat& C, double tol) { return pr_residual(A, C) <= tol; }

StateSpace to_state_space(const QLSystem& sys) {
    return StateSpace{drift_matrix(sys), sys.n() == 0 ? CMat(0, sys.S.cols()) : CMat(-flat(sys.C) * sys.S), sys.C,
                      sys.S};
}

CMat evaluate(const StateSpace& ss, cplx s) {
    if (ss.order() == 0) return ss.D;
    const CMat K = s * CMat::Identity(ss.order(), ss.order()) - ss.A;
    Eigen::PartialPivLU<CMat> lu(K);
    const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(piv > 1e-13 * std::max(1.0, ss.A.norm() + std::abs(s))))
        fail(ErrorKind::pole, "evaluate: point lies on the spectrum of A");
    return ss.D + ss.C * lu.solve(ss.B);
}

CMat transfer_function(const QLSystem& sys, cplx s) { return evaluate(to_state_space(sys), s); }

namespace {

CMat krylov(const CMat& A, const CMat& B) {
    const auto d = A.rows();
    if (d == 0) return CMat(0, B.cols());
    const double a = std::max(1e-300, A.norm());
    const CMat An = A / a;  // same Krylov space, better conditioned powers
    CMat K(d, B.cols() * d);
    CMat blk = B;
    for (Eigen::Index k = 0; k < d; ++k) {
        K.middleCols(k * B.cols(), B.cols()) = blk;
        blk = An * blk;
    }
    return K;
}

}  // namespace

CMat controllability_matrix(const CMat& A, const CMat& B) { return krylov(A, B); }

CMat observability_matrix(const CMat& C, const CMat& A) { return krylov(A.adjoint(), C.adjoint()).adjoint(); }

bool is_controllable(const CMat& A, const CMat& B, double rank_tol) {
    return numerical_rank(controllability_matrix(A, B), rank_tol) == A.rows();
}

bool is_observable(const CMat& C, const CMat& A, double rank_tol) {
    return numerical_rank(observability_matrix(C, A), rank_tol) == A.rows();
}

bool is_minimal(const QLSystem& sys, double rank_tol) {
    if (sys.n() == 0) return true;
    return is_observable(sys.C, drift_matrix(sys), rank_tol);
}

CVec drift_eigenvalues(const QLSystem& sys) {
    const CMat A = drift_matrix(sys);
    if (A.rows() == 0) return CVec(0);
    return Eigen::ComplexEigenSolver<CMat>(A, false).eigenvalues();
}

bool is_hurwitz(const CMat& A, double stab_tol) {
    if (A.rows() == 0) return true;
    const CVec ev = Eigen::ComplexEigenSolver<CMat>(A, false).eigenvalues();
    return ev.real().maxCoeff() < -stab_tol;
}

bool is_hurwitz(const QLSystem& sys, double stab_tol) { return is_hurwitz(drift_matrix(sys), stab_tol); }

double spectral_gap(const CMat& A) {
    if (A.rows() == 0) return 0.0;
    const CVec ev = Eigen::ComplexEigenSolver<CMat>(A, false).eigenvalues();
    return ev.real().cwiseAbs().minCoeff();
}

double spectral_gap(const QLSystem& sys) { return spectral_gap(drift_matrix(sys)); }

QLSystem trivial_system(Eigen::Index m) {
    return QLSystem{CMat::Identity(2 * m, 2 * m), CMat(2 * m, 0), CMat(0, 0)};
}

QLSystem series_product(const QLSystem& first, const QLSystem& second) {
    if (first.m() != second.m()) fail(ErrorKind::dimension, "series_product: channel counts differ");
    const auto m = first.m(), n1 = first.n(), n2 = second.n(), n = n1 + n2;
    const CMat S = second.S * first.S;
    const CMat SC1 = second.S * first.C;
    CMat Cm(m, n), Cp(m, n);
    Cm << minus_block(SC1), minus_block(second.C);
    Cp << plus_block(SC1), plus_block(second.C);
    if (n == 0) return QLSystem{S, CMat(2 * m, 0), CMat(0, 0)};
    const CMat C = doubled(Cm, Cp);

    CMat Am = CMat::Zero(n, n), Ap = CMat::Zero(n, n);
    if (n1 > 0) {
        const CMat A1 = drift_matrix(first);
        Am.topLeftCorner(n1, n1) = minus_block(A1);
        Ap.topLeftCorner(n1, n1) = plus_block(A1);
    }
    if (n2 > 0) {
        const CMat A2 = drift_matrix(second);
        Am.bottomRightCorner(n2, n2) = minus_block(A2);
        Ap.bottomRightCorner(n2, n2) = plus_block(A2);
    }
    if (n1 > 0 && n2 > 0) {
        const CMat K = -flat(second.C) * SC1;
        Am.bottomLeftCorner(n2, n1) = minus_block(K);
        Ap.bottomLeftCorner(n2, n1) = plus_block(K);
    }
    const CMat A = doubled(Am, Ap);
    return QLSystem{S, C, omega_from_drift(A, C)};
}

QLSystem concatenate(const QLSystem& a, const QLSystem& b) {
    const auto ma = a.m(), mb = b.m(), na = a.n(), nb = b.n();
    auto blockdiag = [](const CMat& X, const CMat& Y) {
        CMat Z = CMat::Zero(X.rows() + Y.rows(), X.cols() + Y.cols());
        Z.topLeftCorner(X.rows(), X.cols()) = X;
        Z.bottomRightCorner(Y.rows(), Y.cols()) = Y;
        return Z;
    };
    auto mb_ = [](const CMat& M) { return M.size() == 0 ? CMat(M.rows() / 2, M.cols() / 2) : minus_block(M); };
    auto pb_ = [](const CMat& M) { return M.size() == 0 ? CMat(M.rows() / 2, M.cols() / 2) : plus_block(M); };
    const CMat S = doubled(blockdiag(mb_(a.S), mb_(b.S)), blockdiag(pb_(a.S), pb_(b.S)));
    CMat Cm = CMat::Zero(ma + mb, na + nb), Cp = CMat::Zero(ma + mb, na + nb);
    if (na > 0) {
        Cm.topLeftCorner(ma, na) = minus_block(a.C);
        Cp.topLeftCorner(ma, na) = plus_block(a.C);
    }
    if (nb > 0) {
        Cm.bottomRightCorner(mb, nb) = minus_block(b.C);
        Cp.bottomRightCorner(mb, nb) = plus_block(b.C);
    }
    const CMat C = (na + nb) == 0 ? CMat(2 * (ma + mb), 0) : doubled(Cm, Cp);
    const CMat Om = (na + nb) == 0 ? CMat(0, 0)
                                   : doubled(blockdiag(mb_(a.Omega), mb_(b.Omega)), blockdiag(pb_(a.Omega), pb_(b.Omega)));
    return QLSystem{S, C, Om};
}

QLSystem gauge_transform(const QLSystem& sys, const CMat& T, double tol) {
    const auto n = sys.n();
    if (T.rows() != 2 * n || T.cols() != 2 * n) fail(ErrorKind::dimension, "gauge_transform: T must be 2n x 2n");
    if (!is_symplectic(T, tol)) fail(ErrorKind::input, "gauge_transform: T is not symplectic");
    if (n == 0) return sys;
    const CMat Tf = flat(T);
    const CMat J = jmat(n);
    CMat Om = J * T * J * sys.Omega * Tf;
    Om = 0.5 * (Om + Om.adjoint());
    return QLSystem{sys.S, sys.C * Tf, Om};
}

std::vector<double> default_grid(const CMat& A) {
    std::vector<double> grid{0.0};
    CVec ev(0);
    double gap = 0.0, an = 1.0;
    if (A.rows() > 0) {
        ev = Eigen::ComplexEigenSolver<CMat>(A, false).eigenvalues();
        gap = ev.real().cwiseAbs().minCoeff();
        an = std::max(A.norm(), 1e-12);
    }
    double lo = 1e-2 * (gap > 0 ? gap : an);
    double hi = 1e2 * an;
    if (lo >= hi) lo = hi * 1e-4;
    const int npts = 41;
    for (int k = 0; k < npts; ++k) {
        const double w = lo * std::pow(hi / lo, double(k) / (npts - 1));
        grid.push_back(w);
    }
    std::vector<double> out;
    for (double w : grid) {
        bool near = false;
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (std::abs(freq_point(w) - ev(i)) < 1e-6) near = true;
        if (!near) out.push_back(w);
    }
    return out;
}

std::vector<double> default_grid(const QLSystem& sys) { return default_grid(drift_matrix(sys)); }

double tf_distance(const QLSystem& a, const QLSystem& b, const std::vector<double>& grid) {
    if (a.m() != b.m()) fail(ErrorKind::dimension, "tf_equal: channel counts differ");
    double worst = 0.0;
    for (double w : grid) {
        const cplx s = freq_point(w);
        worst = std::max(worst, (transfer_function(a, s) - transfer_function(b, s)).norm());
    }
    return worst;
}

bool tf_equal(const QLSystem& a, const QLSystem& b, const std::vector<double>& grid, double tol) {
    return tf_distance(a, b, grid) <= tol;
}

double ParamFamily::step(double theta) const { return fd_rel_step * std::max(1.0, std::abs(theta)); }

ParamFamily affine_family(const QLSystem& base, const std::vector<ParamPath>& paths, double theta_ref) {
    const auto n = base.n(), m = base.m();
    CMat dCm = CMat::Zero(m, n), dCp = CMat::Zero(m, n);
    CMat dOm = CMat::Zero(n, n), dOp = CMat::Zero(n, n);
    for (const auto& p : paths) {
        const bool isC = p.block == ParamPath::Block::C;
        const Eigen::Index rows = isC ? m : n;
        if (p.row < 0 || p.col < 0 || p.row >= rows || p.col >= n)
            fail(ErrorKind::input, "parameter path: entry index out of range");
        if (isC) {
            (p.part == ParamPath::Part::minus ? dCm : dCp)(p.row, p.col) += p.coefficient;
        } else if (p.part == ParamPath::Part::minus) {
            if (p.row == p.col) {
                dOm(p.row, p.col) += p.coefficient.real();
            } else {
                dOm(p.row, p.col) += p.coefficient;
                dOm(p.col, p.row) += std::conj(p.coefficient);
            }
        } else {
            dOp(p.row, p.col) += p.coefficient;
            if (p.row != p.col) dOp(p.col, p.row) += p.coefficient;
        }
    }
    const CMat dC = n == 0 ? CMat(2 * m, 0) : doubled(dCm, dCp);
    const CMat dO = n == 0 ? CMat(0, 0) : doubled(dOm, dOp);
    ParamFamily fam;
    fam.evaluate = [base, dC, dO, theta_ref](double theta) {
        const double t = theta - theta_ref;
        return QLSystem{base.S, base.C + t * dC, base.Omega + t * dO};
    };
    return fam;
}

}  // namespace qls
