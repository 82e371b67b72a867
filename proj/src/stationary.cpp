#include "qls/stationary.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace qls {

InputCovariance make_input(const CMat& N, const CMat& M, double tol) {
    if (N.rows() != N.cols() || M.rows() != N.rows() || M.cols() != N.rows())
        fail(ErrorKind::dimension, "input: N and M must be square of equal size");
    const double scale = std::max(1.0, N.norm() + M.norm());
    if ((N - N.adjoint()).norm() > 1e-10 * scale) fail(ErrorKind::input, "input: N must be Hermitian");
    if ((M - M.transpose()).norm() > 1e-10 * scale) fail(ErrorKind::input, "input: M must be symmetric");
    InputCovariance in{0.5 * (N + N.adjoint()), 0.5 * (M + M.transpose())};
    williamson(in.V(), in.m(), tol);  // throws on a non-physical state
    return in;
}

InputCovariance vacuum_input(Eigen::Index m) { return {CMat::Zero(m, m), CMat::Zero(m, m)}; }

bool is_pure(const InputCovariance& in, double tol) {
    if (in.m() == 0) return true;
    return is_pure_covariance(in.V(), tol);
}

StationaryState solve_lyapunov(const QLSystem& sys, const InputCovariance& in) {
    if (in.m() != sys.m()) fail(ErrorKind::dimension, "lyapunov: input size differs from channel count");
    StationaryState st;
    const auto n = sys.n();
    if (n == 0) {
        st.P = CMat(0, 0);
        return st;
    }
    const CMat A = drift_matrix(sys);
    if (!is_hurwitz(A)) fail(ErrorKind::not_hurwitz, "lyapunov: drift matrix is not Hurwitz");
    const CMat B = flat(sys.C) * sys.S;
    const CMat Q = B * in.V() * B.adjoint();
    CMat P = solve_sylvester(A, A.adjoint(), -Q);
    P = 0.5 * (P + P.adjoint());
    st.residual = (A * P + P * A.adjoint() + Q).norm() / std::max(1.0, Q.norm() + A.norm() * P.norm());
    if (st.residual > 1e-8) fail(ErrorKind::accuracy, "lyapunov: residual above tolerance");
    st.P = P;
    st.symplectic_spectrum = williamson(P, n, 1e-7).symplectic_eigenvalues;
    return st;
}

CMat power_spectrum(const QLSystem& sys, const InputCovariance& in, cplx s) {
    if (in.m() != sys.m()) fail(ErrorKind::dimension, "power_spectrum: input size differs from channel count");
    return transfer_function(sys, s) * in.V() * transfer_function(sys, -std::conj(s)).adjoint();
}

VacuumFrame vacuum_frame(const QLSystem& sys, const InputCovariance& in, double tol) {
    if (in.m() != sys.m()) fail(ErrorKind::dimension, "vacuum_frame: input size differs from channel count");
    const CMat Sin = vacuum_basis_transform(in.N, in.M, tol);
    const CMat St = sys.S * Sin;
    const auto m = sys.m();
    VacuumFrame out;
    out.field_transform = St;
    out.system = QLSystem{CMat::Identity(2 * m, 2 * m), sys.n() == 0 ? CMat(2 * m, 0) : CMat(flat(St) * sys.C), sys.Omega};
    return out;
}

bool is_globally_minimal(const QLSystem& sys, const InputCovariance& in, const Tolerances& tol) {
    if (!is_pure(in, tol.numeric))
        fail(ErrorKind::unsupported, "global minimality: only pure inputs are supported");
    if (sys.n() == 0) return true;
    if (!is_hurwitz(sys, tol.stability)) fail(ErrorKind::not_hurwitz, "global minimality: system is not Hurwitz");
    const auto st = solve_lyapunov(sys, in);
    const bool mixed = st.symplectic_spectrum.front() > tol.global_min;

    const auto vf = vacuum_frame(sys, in, tol.numeric);
    const CMat A = drift_matrix(vf.system);
    const CMat B = (flat(vf.system.C) * vacuum_covariance(sys.m())).leftCols(sys.m());
    const bool controllable = is_controllable(A, B, tol.rank);
    if (mixed != controllable)
        fail(ErrorKind::inconsistency,
             "global minimality: symplectic spectrum and controllability tests disagree");
    return mixed;
}

PassiveGMResult siso_passive_gm(const QLSystem& sys, const InputCovariance& in, double tol) {
    if (sys.m() != 1) fail(ErrorKind::precondition, "siso_passive_gm: system must be SISO");
    const double sc = std::max(1.0, sys.C.norm() + sys.Omega.norm());
    if (sys.n() > 0 && (plus_block(sys.C).norm() > tol * sc || plus_block(sys.Omega).norm() > tol * sc))
        fail(ErrorKind::precondition, "siso_passive_gm: system must be passive");
    if (plus_block(sys.S).norm() > tol) fail(ErrorKind::precondition, "siso_passive_gm: S must be passive");
    if (in.M.norm() <= tol) fail(ErrorKind::precondition, "siso_passive_gm: input must be squeezed (M != 0)");

    PassiveGMResult out;
    if (sys.n() == 0) {
        out.globally_minimal = true;
        return out;
    }
    const CMat Am = minus_block(drift_matrix(sys));
    const CVec ev = Eigen::ComplexEigenSolver<CMat>(Am, false).eigenvalues();
    const double etol = 1e-7 * std::max(1.0, Am.norm());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        bool reducible = std::abs(ev(i).imag()) <= etol;
        for (Eigen::Index j = 0; j < ev.size() && !reducible; ++j)
            if (j != i && std::abs(ev(j) - std::conj(ev(i))) <= etol) reducible = true;
        if (reducible) out.reducible_eigs.push_back(ev(i));
    }
    out.globally_minimal = out.reducible_eigs.empty();
    return out;
}

namespace {

// Keep modes `idx` (indices into one half) of a doubled-up coupling/drift.
CMat select_cols(const CMat& M, const std::vector<Eigen::Index>& idx) {
    const auto n = M.cols() / 2;
    CMat out(M.rows(), 2 * idx.size());
    for (size_t k = 0; k < idx.size(); ++k) {
        out.col(k) = M.col(idx[k]);
        out.col(idx.size() + k) = M.col(n + idx[k]);
    }
    return out;
}

CMat select_rows(const CMat& M, const std::vector<Eigen::Index>& idx) {
    return select_cols(M.transpose(), idx).transpose();
}

}  // namespace

PureMixedSplit pure_mixed_split(const QLSystem& sys, const InputCovariance& in, const Tolerances& tol) {
    if (!is_pure(in, tol.numeric)) fail(ErrorKind::purity, "split: input state must be pure");
    if (!is_hurwitz(sys, tol.stability)) fail(ErrorKind::not_hurwitz, "split: system is not Hurwitz");
    const auto vf = vacuum_frame(sys, in, tol.numeric);
    const auto n = sys.n(), m = sys.m();
    PureMixedSplit out;
    out.field_transform = vf.field_transform;
    if (n == 0) {
        out.pure = out.mixed = trivial_system(m);
        out.gauge = CMat(0, 0);
        return out;
    }
    const auto st = solve_lyapunov(vf.system, vacuum_input(m));
    const auto w = williamson(st.P, n, 1e-7);
    out.occupations = w.symplectic_eigenvalues;
    out.gauge = w.transform;
    const QLSystem canon = gauge_transform(vf.system, w.transform, 1e-6);

    std::vector<Eigen::Index> pure_idx, mixed_idx;
    for (Eigen::Index k = 0; k < n; ++k)
        (w.symplectic_eigenvalues[k] <= tol.global_min ? pure_idx : mixed_idx).push_back(k);

    const CMat A = drift_matrix(canon);
    const CMat Apm = select_cols(select_rows(A, pure_idx), mixed_idx);
    out.coupling_residual = Apm.size() == 0 ? 0.0 : Apm.norm() / std::max(1.0, A.norm());

    auto component = [&](const std::vector<Eigen::Index>& idx) {
        if (idx.empty()) return trivial_system(m);
        const CMat C = select_cols(canon.C, idx);
        const CMat Ab = select_cols(select_rows(A, idx), idx);
        return QLSystem{CMat::Identity(2 * m, 2 * m), C, omega_from_drift(Ab, C)};
    };
    out.pure = component(pure_idx);
    out.mixed = component(mixed_idx);
    if (out.coupling_residual > 1e-6)
        fail(ErrorKind::inconsistency, "split: mixed modes drive the pure modes; cascade structure not found");
    return out;
}

StateSpace ps_cascade_embedding(const QLSystem& sys, const InputCovariance& in) {
    if (in.m() != sys.m()) fail(ErrorKind::dimension, "embedding: input size differs from channel count");
    const auto n = sys.n(), m = sys.m();
    const CMat K = sys.S * in.V() * sys.S.adjoint() * jmat(m);
    StateSpace ss;
    ss.D = K;
    if (n == 0) {
        ss.A = CMat(0, 0);
        ss.B = CMat(0, 2 * m);
        ss.C = CMat(2 * m, 0);
        return ss;
    }
    const CMat A = drift_matrix(sys);
    const CMat Cf = flat(sys.C);
    const auto d = 2 * n;
    ss.A = CMat::Zero(2 * d, 2 * d);
    ss.A.topLeftCorner(d, d) = -flat(A);
    ss.A.bottomLeftCorner(d, d) = Cf * K * sys.C;
    ss.A.bottomRightCorner(d, d) = A;
    ss.B.resize(2 * d, 2 * m);
    ss.B << -Cf, -Cf * K;
    ss.C.resize(2 * m, 2 * d);
    ss.C << -K * sys.C, sys.C;
    return ss;
}

}  // namespace qls
