#include "qls/absorber.hpp"

#include <algorithm>
#include <cmath>

#include "qls/stationary.hpp"

namespace qls {

CanonicalStationary canonicalize_stationary(const QLSystem& sys, const Tolerances& tol) {
    const auto n = sys.n();
    if ((sys.S - CMat::Identity(2 * sys.m(), 2 * sys.m())).norm() > tol.numeric)
        fail(ErrorKind::precondition, "canonicalize: field transform must be the identity");
    const auto st = solve_lyapunov(sys, vacuum_input(sys.m()));
    if (n == 0) return CanonicalStationary{sys, CMat(0, 0), {}};
    const auto w = williamson(st.P, n, 1e-7);
    if (w.symplectic_eigenvalues.front() <= tol.global_min)
        fail(ErrorKind::precondition, "canonicalize: system is not globally minimal");
    CanonicalStationary out;
    out.transform = w.transform;
    out.system = gauge_transform(sys, w.transform, 1e-7);
    out.occupations = w.symplectic_eigenvalues;
    return out;
}

AbsorberCheck verify_absorber(const QLSystem& sys, const QLSystem& dual) {
    if (sys.m() != dual.m()) fail(ErrorKind::dimension, "verify_absorber: channel counts differ");
    const QLSystem joint = series_product(sys, dual);
    const auto in = vacuum_input(sys.m());
    AbsorberCheck out;
    const auto st = solve_lyapunov(joint, in);
    for (double v : st.symplectic_spectrum) out.purity_residual = std::max(out.purity_residual, std::abs(v));
    const CMat Vv = vacuum_covariance(sys.m());
    auto grid = default_grid(joint);
    for (double w : std::vector<double>(grid)) grid.push_back(-w);
    for (double w : grid)
        out.ps_residual = std::max(out.ps_residual, (power_spectrum(joint, in, freq_point(w)) - Vv).norm());
    return out;
}

AbsorberResult dual_system(const QLSystem& sys, const Tolerances& tol) {
    const auto n = sys.n(), m = sys.m();
    if (!is_hurwitz(sys)) fail(ErrorKind::not_hurwitz, "absorber: system is not Hurwitz");
    const auto frame = vacuum_frame(sys, vacuum_input(m));
    const auto can = canonicalize_stationary(frame.system, tol);

    AbsorberResult out;
    out.basis_transform = can.transform;
    out.occupations = can.occupations;

    // Pure two-mode-squeezed extension: stationary P = Diag(N + 1, N), cross term Q.
    CMat P = CMat::Zero(2 * n, 2 * n), Qi = CMat::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double N = can.occupations[i];
        P(i, i) = N + 1.0;
        P(n + i, n + i) = N;
        const double M = std::sqrt(N * (N + 1.0));
        Qi(i, n + i) = Qi(n + i, i) = 1.0 / M;
    }
    const CMat Q = Qi.partialPivLu().inverse();
    const CMat& C1 = can.system.C;
    const CMat A1 = drift_matrix(can.system);
    const CMat PQi = P * Qi;

    const CMat R = (PQi * flat(C1)).leftCols(m);
    const CMat C2 = doubled(R.topRows(n).adjoint(), -R.bottomRows(n).adjoint());
    const CMat A2 = Q * P.inverse() * A1 * PQi + flat(C2) * C1 * PQi;
    const double scale = std::max(1.0, A2.norm());
    if (pr_residual(A2, C2) > 1e-6)
        fail(ErrorKind::accuracy, "absorber: dual violates physical realizability");
    if (!is_doubled_up(A2, 1e-8 * scale)) fail(ErrorKind::accuracy, "absorber: dual drift is not doubled-up");

    const CMat Sd = flat(frame.field_transform);
    out.dual = QLSystem{Sd, C2, omega_from_drift(A2, C2)};
    out.combined = series_product(sys, out.dual);
    const auto chk = verify_absorber(sys, out.dual);
    out.purity_residual = chk.purity_residual;
    out.ps_residual = chk.ps_residual;
    return out;
}

}  // namespace qls
