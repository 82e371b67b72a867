#include "qls/realization.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qls/stationary.hpp"

namespace qls {

OneModeParams make_stage(double c, double theta, cplx omega_plus) {
    OneModeParams p;
    p.c = c;
    p.theta = theta;
    p.omega_plus = omega_plus;
    p.x = 0.5 * c * c;
    p.y = std::sqrt(cplx(std::norm(omega_plus) - theta * theta, 0.0));
    p.phi = std::arg(omega_plus);
    return p;
}

QLSystem stage_system(const OneModeParams& p) {
    const CMat C = doubled(CMat::Constant(1, 1, p.c), CMat::Zero(1, 1));
    const CMat Om = doubled(CMat::Constant(1, 1, p.theta), CMat::Constant(1, 1, -p.omega_plus));
    return QLSystem{CMat::Identity(2, 2), C, Om};
}

QLSystem cascade_system(const CascadeRealization& r) {
    QLSystem out = trivial_system(1);
    for (const auto& st : r.stages) out = series_product(out, stage_system(st));
    return out;
}

CascadeRealization passive_siso_cascade(const std::vector<cplx>& poles) {
    CascadeRealization r;
    for (const auto& z : poles) {
        if (!(z.real() < 0.0)) fail(ErrorKind::precondition, "passive cascade: pole not in the open left half plane");
        r.stages.push_back(make_stage(std::sqrt(-2.0 * z.real()), -z.imag(), 0.0));
    }
    return r;
}

namespace {

cplx residue_at(const RationalMatrixFunction& f, cplx p, double tol) {
    const auto k = find_pole(f.poles, p, tol);
    return k < 0 ? cplx(0.0) : f.residues[k](0, 0);
}

void require_scalar(const RationalMatrixFunction& f, const char* who) {
    validate(f);
    if (f.rows() != 1 || f.cols() != 1) fail(ErrorKind::dimension, std::string(who) + ": expected a scalar function");
}

}  // namespace

RationalMatrixFunction doubled_siso(const RationalMatrixFunction& xm, const RationalMatrixFunction& xp) {
    require_scalar(xm, "cascade identification");
    require_scalar(xp, "cascade identification");
    const double tol = 1e-6;
    std::vector<cplx> poles;
    auto add = [&](cplx p) {
        if (find_pole(poles, p, tol) < 0) poles.push_back(p);
    };
    for (const auto& p : xm.poles) add(p), add(std::conj(p));
    for (const auto& p : xp.poles) add(p), add(std::conj(p));

    RationalMatrixFunction f;
    const cplx cm = xm.constant(0, 0), cp = xp.constant(0, 0);
    f.constant = CMat(2, 2);
    f.constant << cm, cp, std::conj(cp), std::conj(cm);
    for (const auto& p : poles) {
        CMat R(2, 2);
        R << residue_at(xm, p, tol), residue_at(xp, p, tol), std::conj(residue_at(xp, std::conj(p), tol)),
            std::conj(residue_at(xm, std::conj(p), tol));
        f.poles.push_back(p);
        f.residues.push_back(R);
    }
    return f;
}

namespace {

struct StageForm {
    double x, y2;
    double theta;
    cplx w;

    CMat operator()(cplx s) const {
        auto minus = [&](cplx z) {
            return (z * z - x * x - y2 + 2.0 * I_unit * x * theta) / ((z + x) * (z + x) - y2);
        };
        auto plus = [&](cplx z) { return -2.0 * I_unit * x * w / ((z + x) * (z + x) - y2); };
        const cplx sb = std::conj(s);
        CMat X(2, 2);
        X << minus(s), plus(s), std::conj(plus(sb)), std::conj(minus(sb));
        return X;
    }

    // Xi^-1(s) = J Xi(-conj s)^dagger J
    CMat inverse(cplx s) const {
        const CMat J = jmat(1);
        return J * (*this)(-std::conj(s)).adjoint() * J;
    }
};

RVec realify(const CMat& M) {
    RVec v(2 * M.size());
    for (Eigen::Index i = 0; i < M.size(); ++i) {
        v(2 * i) = M.data()[i].real();
        v(2 * i + 1) = M.data()[i].imag();
    }
    return v;
}

}  // namespace

CascadeRealization siso_cascade_identify(const RationalMatrixFunction& xi_minus, const RationalMatrixFunction& xi_plus,
                                         const CascadeOptions& opt) {
    const RationalMatrixFunction F = doubled_siso(xi_minus, xi_plus);
    if ((F.constant - CMat::Identity(2, 2)).norm() > opt.tol)
        fail(ErrorKind::precondition, "cascade identification: transfer function must tend to the identity");
    std::vector<cplx> poles = F.poles;
    std::vector<CMat> res = F.residues;
    double pscale = 1.0;
    for (const auto& p : poles) pscale = std::max(pscale, std::abs(p));
    for (const auto& p : poles) {
        if (std::abs(p.imag()) <= 1e-9 * pscale)
            fail(ErrorKind::unsupported, "cascade identification: real poles are not supported");
        if (!(p.real() < 0.0)) fail(ErrorKind::precondition, "cascade identification: pole not in the left half plane");
    }
    if (poles.size() % 2 != 0) fail(ErrorKind::identification, "cascade identification: odd number of poles");

    CascadeRealization out;
    size_t stage = 0;
    while (!poles.empty()) {
        size_t k = 0;
        if (stage < opt.preferred.size()) {
            const auto idx = find_pole(poles, opt.preferred[stage], 1e-2 * std::max(1.0, std::abs(opt.preferred[stage])));
            if (idx < 0) fail(ErrorKind::input, "cascade identification: preferred pole not found");
            k = static_cast<size_t>(idx);
        } else {
            for (size_t i = 1; i < poles.size(); ++i) {
                const double a = std::abs(poles[i].real()), b = std::abs(poles[k].real());
                if (opt.order == PairOrder::descending_real ? a > b + 1e-12 : a < b - 1e-12) k = i;
            }
        }
        const cplx p = poles[k];
        const auto k2i = find_pole(poles, std::conj(p), 1e-6 * std::max(1.0, std::abs(p)));
        if (k2i < 0 || static_cast<size_t>(k2i) == k)
            fail(ErrorKind::identification, "cascade identification: pole without conjugate partner");
        const size_t k2 = static_cast<size_t>(k2i);

        StageForm form{-p.real(), -p.imag() * p.imag(), 0.0, 0.0};
        auto equations = [&](double th, cplx w) {
            StageForm f = form;
            f.theta = th;
            f.w = w;
            RVec a = realify(res[k] * f.inverse(poles[k]));
            RVec b = realify(res[k2] * f.inverse(poles[k2]));
            RVec v(a.size() + b.size());
            v << a, b;
            return v;
        };
        const RVec e0 = equations(0.0, 0.0);
        Eigen::MatrixXd M(e0.size(), 3);
        M.col(0) = equations(1.0, 0.0) - e0;
        M.col(1) = equations(0.0, 1.0) - e0;
        M.col(2) = equations(0.0, I_unit) - e0;
        const Eigen::VectorXd u = M.colPivHouseholderQr().solve(-e0);
        const double rscale = std::max(1e-300, res[k].norm() + res[k2].norm());
        const double resid = (M * u + e0).norm() / rscale;
        if (!(resid <= opt.tol))
            fail(ErrorKind::identification, "cascade identification: stage equations are inconsistent (non-generic input)");
        form.theta = u(0);
        form.w = cplx(u(1), u(2));
        const double consist = std::abs(std::norm(form.w) - form.theta * form.theta - form.y2);
        if (consist > opt.tol * std::max({1.0, std::abs(form.y2), form.theta * form.theta}))
            fail(ErrorKind::identification, "cascade identification: stage parameters violate the pole constraint");
        out.stages.push_back(make_stage(std::sqrt(2.0 * form.x), form.theta, form.w));

        std::vector<cplx> np;
        std::vector<CMat> nr;
        for (size_t i = 0; i < poles.size(); ++i) {
            if (i == k || i == k2) continue;
            np.push_back(poles[i]);
            nr.push_back(res[i] * form.inverse(poles[i]));
        }
        poles = std::move(np);
        res = std::move(nr);
        ++stage;
    }

    const QLSystem sys = cascade_system(out);
    double worst = 0.0;
    for (double w : default_grid(sys)) {
        for (double sgn : {1.0, -1.0}) {
            const cplx s = freq_point(sgn * w);
            worst = std::max(worst, (transfer_function(sys, s) - F(s)).norm());
        }
    }
    if (worst > opt.tol * 10.0)
        fail(ErrorKind::identification, "cascade identification: reconstructed cascade does not match the input");
    return out;
}

namespace {

struct RankOne {
    CVec c;
    Eigen::RowVectorXcd b;
    double defect;  // sigma_2 / sigma_1
};

RankOne rank_one(const CMat& R) {
    Eigen::JacobiSVD<CMat> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& s = svd.singularValues();
    RankOne out;
    out.c = svd.matrixU().col(0) * s(0);
    out.b = svd.matrixV().col(0).adjoint();
    out.defect = s.size() > 1 && s(0) > 0 ? s(1) / s(0) : 0.0;
    return out;
}

// Divisor making the first significant entry equal to one.
template <class V>
cplx leading_entry(const V& v) {
    const double nv = v.norm();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (std::abs(v(i)) > 1e-6 * nv) return v(i);
    return nv;
}

std::vector<double> symmetric_freqs(const CMat& A) {
    auto g = default_grid(A);
    std::vector<double> out = g;
    for (double w : g)
        if (w > 0) out.push_back(-w);
    return out;
}

}  // namespace

StateSpace gilbert_realize(const RationalMatrixFunction& tf) {
    validate(tf);
    if (tf.rows() % 2 != 0 || tf.cols() % 2 != 0) fail(ErrorKind::dimension, "gilbert: transfer function must be doubled-up");
    const auto r = tf.rows() / 2, c = tf.cols() / 2;
    double pscale = 1.0;
    for (const auto& p : tf.poles) pscale = std::max(pscale, std::abs(p));
    std::vector<size_t> upper;
    for (size_t k = 0; k < tf.poles.size(); ++k) {
        const cplx p = tf.poles[k];
        if (std::abs(p.imag()) <= 1e-9 * pscale) fail(ErrorKind::unsupported, "gilbert: real poles are not supported");
        if (p.imag() > 0) upper.push_back(k);
    }
    if (2 * upper.size() != tf.poles.size()) fail(ErrorKind::input, "gilbert: poles are not closed under conjugation");
    for (size_t i = 0; i < tf.poles.size(); ++i)
        for (size_t j = i + 1; j < tf.poles.size(); ++j)
            if (std::abs(tf.poles[i] - tf.poles[j]) < 1e-6) fail(ErrorKind::unsupported, "gilbert: repeated poles");

    const auto n = static_cast<Eigen::Index>(upper.size());
    const CMat Sr = sigma_swap(r), Sc = sigma_swap(c);
    StateSpace ss;
    ss.A = CMat::Zero(2 * n, 2 * n);
    ss.B = CMat(2 * n, 2 * c);
    ss.C = CMat(2 * r, 2 * n);
    ss.D = tf.constant;
    for (Eigen::Index i = 0; i < n; ++i) {
        const size_t k = upper[i];
        const cplx p = tf.poles[k];
        const auto kb = find_pole(tf.poles, std::conj(p), 1e-6 * std::max(1.0, std::abs(p)));
        if (kb < 0) fail(ErrorKind::input, "gilbert: missing conjugate pole");
        const CMat& R = tf.residues[k];
        const CMat mirror = Sr * R.conjugate() * Sc;
        if ((tf.residues[kb] - mirror).norm() > 1e-6 * std::max(1.0, R.norm()))
            fail(ErrorKind::input, "gilbert: residues do not have the doubled-up conjugate structure");
        const auto f = rank_one(R);
        if (f.defect > 1e-6) fail(ErrorKind::unsupported, "gilbert: residue of rank greater than one");
        ss.A(i, i) = p;
        ss.A(n + i, n + i) = std::conj(p);
        ss.B.row(i) = f.b;
        ss.B.row(n + i) = f.b.conjugate() * Sc;
        ss.C.col(i) = f.c;
        ss.C.col(n + i) = Sr * f.c.conjugate();
    }
    return ss;
}

StateSpace minimal_realization(const RationalMatrixFunction& tf) {
    validate(tf);
    std::vector<cplx> diag;
    std::vector<CVec> cols;
    std::vector<Eigen::RowVectorXcd> rows;
    for (size_t k = 0; k < tf.poles.size(); ++k) {
        const CMat& R = tf.residues[k];
        Eigen::JacobiSVD<CMat> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const RVec& s = svd.singularValues();
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            if (s(j) <= 1e-9 * std::max(1e-300, s(0))) break;
            diag.push_back(tf.poles[k]);
            cols.push_back(svd.matrixU().col(j) * s(j));
            rows.push_back(svd.matrixV().col(j).adjoint());
        }
    }
    const auto d = static_cast<Eigen::Index>(diag.size());
    StateSpace ss;
    ss.A = CMat::Zero(d, d);
    ss.B = CMat(d, tf.cols());
    ss.C = CMat(tf.rows(), d);
    ss.D = tf.constant;
    for (Eigen::Index i = 0; i < d; ++i) {
        ss.A(i, i) = diag[i];
        ss.B.row(i) = rows[i];
        ss.C.col(i) = cols[i];
    }
    return ss;
}

namespace {

// Restore the flat-self-adjoint doubled-up structure lost to rounding.
CMat clean_gram(const CMat& G) {
    const auto n = G.rows() / 2;
    CMat H = 0.5 * (G + flat(G));
    const CMat S = sigma_swap(n);
    return 0.5 * (H + S * H.conjugate() * S);
}

double tf_gap(const QLSystem& sys, const StateSpace& ss) {
    double worst = 0.0;
    for (double w : symmetric_freqs(drift_matrix(sys))) {
        const cplx s = freq_point(w);
        worst = std::max(worst, (transfer_function(sys, s) - evaluate(ss, s)).norm());
    }
    return worst;
}

}  // namespace

PhysicalRealization physical_from_classical(const StateSpace& ss, double tol) {
    const auto d = ss.order();
    if (d % 2 != 0 || ss.C.rows() % 2 != 0) fail(ErrorKind::dimension, "physical realization: dimensions must be even");
    if (ss.D.rows() != ss.D.cols() || ss.D.rows() != ss.C.rows())
        fail(ErrorKind::dimension, "physical realization: D must be square and match C");
    if (!is_doubled_up(ss.A, 1e-8) || !is_doubled_up(ss.C, 1e-8) || !is_doubled_up(ss.D, 1e-8))
        fail(ErrorKind::input, "physical realization: state space is not doubled-up");
    if (!is_hurwitz(ss.A)) fail(ErrorKind::not_hurwitz, "physical realization: A is not Hurwitz");
    if (!is_symplectic(ss.D, 1e-8)) fail(ErrorKind::realization, "physical realization: D is not symplectic");

    PhysicalRealization out;
    if (d == 0) {
        out.system = QLSystem{ss.D, CMat(ss.D.rows(), 0), CMat(0, 0)};
        out.gram = out.transform = CMat(0, 0);
        return out;
    }
    const CMat Af = flat(ss.A);
    out.gram = clean_gram(solve_sylvester(Af, ss.A, -flat(ss.C) * ss.C));
    try {
        out.transform = factor_flat_gram(out.gram);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::singular)
            fail(ErrorKind::realization, "physical realization: singular gramian, transfer function is not physical");
        throw;
    }
    const CMat& T = out.transform;
    const CMat Ti = T.partialPivLu().inverse();
    const CMat C = ss.C * Ti;
    const CMat A = T * ss.A * Ti;
    out.system = QLSystem{ss.D, C, omega_from_drift(A, C)};
    if (pr_residual(drift_matrix(out.system), C) > tol || (drift_matrix(out.system) - A).norm() > tol * std::max(1.0, A.norm()))
        fail(ErrorKind::realization, "physical realization: result violates physical realizability");
    const double scale = std::max(1.0, ss.D.norm());
    if (tf_gap(out.system, ss) > tol * scale)
        fail(ErrorKind::realization, "physical realization: transfer function is not physically realizable");
    return out;
}

PSRealization ps_realize(const RationalMatrixFunction& ps, double tol) {
    validate(ps);
    if (ps.rows() != ps.cols() || ps.rows() % 2 != 0)
        fail(ErrorKind::dimension, "power spectrum realization: spectrum must be square with even dimension");
    const auto m = ps.rows() / 2;
    const CMat J = jmat(m);
    // The constant is S V_vac S^dagger J; V' = constant J is the pure field covariance.
    const CMat Vf = ps.constant * J;
    const CMat N = Vf.bottomRightCorner(m, m), M = Vf.topRightCorner(m, m);
    const CMat Sfield = vacuum_basis_transform(N, M, 1e-6);

    double pscale = 1.0;
    for (const auto& p : ps.poles) pscale = std::max(pscale, std::abs(p));
    std::vector<size_t> lam;
    for (size_t k = 0; k < ps.poles.size(); ++k) {
        const cplx p = ps.poles[k];
        if (std::abs(p.imag()) <= 1e-9 * pscale)
            fail(ErrorKind::unsupported, "power spectrum realization: real poles are not supported");
        if (std::abs(p.real()) <= 1e-12 * pscale)
            fail(ErrorKind::input, "power spectrum realization: pole on the imaginary axis");
        if (p.real() < 0 && p.imag() > 0) lam.push_back(k);
    }
    const auto n = static_cast<Eigen::Index>(lam.size());
    if (4 * lam.size() != ps.poles.size())
        fail(ErrorKind::input, "power spectrum realization: pole set lacks the mirrored conjugate structure");

    auto residue = [&](cplx q) -> const CMat& {
        const auto k = find_pole(ps.poles, q, 1e-6 * std::max(1.0, std::abs(q)));
        if (k < 0) fail(ErrorKind::input, "power spectrum realization: missing mirrored pole");
        return ps.residues[k];
    };

    const CMat Sm = sigma_swap(m);
    CMat A0 = CMat::Zero(2 * n, 2 * n);
    CMat B1(2 * n, 2 * m), C2(2 * m, 2 * n);
    double defect = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const cplx l = ps.poles[lam[i]];
        A0(i, i) = l;
        A0(n + i, n + i) = std::conj(l);

        const CMat& Ii = residue(-std::conj(l));
        const CMat& Ki = residue(-l);
        const CMat& Ti = residue(l);
        const CMat& Wi = residue(std::conj(l));

        auto f1 = rank_one(Ii);
        Eigen::RowVectorXcd b = f1.b / leading_entry(f1.b);
        Eigen::RowVectorXcd bb = b.conjugate() * Sm;
        B1.row(i) = b;
        B1.row(n + i) = bb;
        {
            const CVec c1 = Ii * b.adjoint() / b.squaredNorm();
            const CVec c1b = Ki * bb.adjoint() / bb.squaredNorm();
            defect = std::max(defect, (Ii - c1 * b).norm() / std::max(1e-300, Ii.norm()));
            defect = std::max(defect, (Ki - c1b * bb).norm() / std::max(1e-300, Ki.norm()));
        }

        auto f2 = rank_one(Ti);
        CVec c = f2.c / leading_entry(f2.c);
        CVec cb = Sm * c.conjugate();
        C2.col(i) = c;
        C2.col(n + i) = cb;
        {
            const Eigen::RowVectorXcd b2 = c.adjoint() * Ti / c.squaredNorm();
            const Eigen::RowVectorXcd b2b = cb.adjoint() * Wi / cb.squaredNorm();
            defect = std::max(defect, (Ti - c * b2).norm() / std::max(1e-300, Ti.norm()));
            defect = std::max(defect, (Wi - cb * b2b).norm() / std::max(1e-300, Wi.norm()));
        }
    }
    if (defect > tol)
        fail(ErrorKind::realization, "power spectrum realization: residues cannot be brought to doubled-up form");

    PSRealization out;
    const CMat A0f = flat(A0);
    out.gram_input = clean_gram(solve_sylvester(A0f, A0, -B1 * flat(B1)));
    out.gram_output = clean_gram(solve_sylvester(A0f, A0, -flat(C2) * C2));

    const CMat T3 = factor_flat_gram(out.gram_output);
    const CMat T3i = T3.partialPivLu().inverse();
    const CMat C = C2 * T3i;
    const CMat A = T3 * A0 * T3i;
    out.system = QLSystem{Sfield, C, omega_from_drift(A, C)};
    if (pr_residual(A, C) > tol) fail(ErrorKind::realization, "power spectrum realization: output gramian is not physical");

    const CMat Yinv = out.gram_input.partialPivLu().inverse();
    const CMat T1 = factor_flat_gram(clean_gram(Yinv));
    const CMat A1 = flat(T1.partialPivLu().inverse()) * A0 * flat(T1);
    const CMat C1 = -flat(B1) * flat(T1);
    const QLSystem alt{Sfield, C1, omega_from_drift(A1, C1)};

    const auto vac = vacuum_input(m);
    const auto grid = symmetric_freqs(A);
    double scale = 1.0;
    for (double w : grid) {
        const cplx s = freq_point(w);
        const CMat a = power_spectrum(out.system, vac, s) * J;
        out.cross_check = std::max(out.cross_check, (a - power_spectrum(alt, vac, s) * J).norm());
        out.ps_residual = std::max(out.ps_residual, (a - ps(s)).norm());
        scale = std::max(scale, a.norm());
    }
    if (out.cross_check > tol * scale)
        fail(ErrorKind::realization, "power spectrum realization: input and output gramian reconstructions disagree");
    if (out.ps_residual > tol * scale)
        fail(ErrorKind::realization, "power spectrum realization: realized system does not reproduce the spectrum");
    return out;
}

NoisyRealization noisy_realize(const StateSpace& ss, Eigen::Index n_noise, const NoisyOptions& opt) {
    const auto n = ss.order(), m1 = ss.D.rows();
    if (ss.B.rows() != n || ss.C.cols() != n || ss.B.cols() != m1 || ss.C.rows() != m1 || ss.D.cols() != m1)
        fail(ErrorKind::dimension, "noisy realization: inconsistent state-space dimensions");
    if (n_noise < 0) fail(ErrorKind::input, "noisy realization: negative noise channel count");
    if ((ss.D * ss.D.adjoint() - CMat::Identity(m1, m1)).norm() > 1e-8)
        fail(ErrorKind::input, "noisy realization: feedthrough of a passive block must be unitary");
    if (!is_hurwitz(ss.A)) fail(ErrorKind::not_hurwitz, "noisy realization: A is not Hurwitz");

    const CMat& A0 = ss.A;
    const CMat& C0 = ss.C;
    const CMat B0 = ss.B * ss.D.adjoint();
    const CMat Ah = A0.adjoint();

    // X(G) solves A0^dagger X + X A0 + C0^dagger C0 + G = 0
    const auto d = n * n;
    CMat K = CMat::Zero(d, d);
    for (Eigen::Index j = 0; j < n; ++j) {
        K.block(j * n, j * n, n, n) += Ah;
        for (Eigen::Index k = 0; k < n; ++k) K.block(j * n, k * n, n, n) += A0(k, j) * CMat::Identity(n, n);
    }
    Eigen::PartialPivLU<CMat> lu(K);
    auto lyap = [&](const CMat& Q) {
        CVec q = Eigen::Map<const CVec>(Q.data(), d);
        CVec x = lu.solve(-q);
        return CMat(Eigen::Map<CMat>(x.data(), n, n));
    };
    const CMat X0 = lyap(C0.adjoint() * C0);
    const double scale = std::max(1.0, C0.norm());
    auto residual = [&](const CMat& C1) {
        CMat X = n_noise > 0 ? CMat(X0 + lyap(C1.adjoint() * C1)) : X0;
        return std::pair<CMat, CMat>{X, X * B0 + C0.adjoint()};
    };
    auto positive = [](const CMat& X) {
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (X + X.adjoint()));
        return es.eigenvalues().minCoeff() > 1e-10 * std::max(1.0, X.norm());
    };

    NoisyRealization out;
    CMat C1 = CMat::Zero(n_noise, n);
    bool found = false;
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const double init = std::sqrt(std::max(1.0, A0.norm()));
    const Eigen::Index p = 2 * n_noise * n;

    for (int restart = 0; restart < (n_noise > 0 ? opt.max_restarts : 1) && !found; ++restart) {
        out.restarts_used = restart;
        for (Eigen::Index i = 0; i < C1.size(); ++i) C1.data()[i] = init * cplx(g(rng), g(rng));
        double mu = 1e-3;
        auto [X, R] = residual(C1);
        double rn = R.norm();
        for (int it = 0; it < opt.max_iterations && p > 0; ++it) {
            if (rn <= opt.tol * scale) break;
            // Jacobian of the residual in the real coordinates of C1
            Eigen::MatrixXd Jm(2 * R.size(), p);
            for (Eigen::Index k = 0; k < p; ++k) {
                CMat dC = CMat::Zero(n_noise, n);
                dC.data()[k / 2] = (k % 2 == 0) ? cplx(1.0, 0.0) : I_unit;
                const CMat dX = lyap(dC.adjoint() * C1 + C1.adjoint() * dC);
                Jm.col(k) = realify(dX * B0);
            }
            const RVec r = realify(R);
            const Eigen::MatrixXd H = Jm.transpose() * Jm;
            const RVec gr = Jm.transpose() * r;
            bool improved = false;
            for (int tries = 0; tries < 20 && !improved; ++tries) {
                Eigen::MatrixXd Hd = H;
                Hd.diagonal().array() += mu * std::max(1e-12, H.diagonal().maxCoeff());
                const RVec step = Hd.ldlt().solve(-gr);
                CMat Cn = C1;
                for (Eigen::Index k = 0; k < p; ++k)
                    Cn.data()[k / 2] += (k % 2 == 0) ? cplx(step(k), 0.0) : cplx(0.0, step(k));
                auto [Xn, Rn] = residual(Cn);
                if (Rn.norm() < rn) {
                    C1 = Cn;
                    X = Xn;
                    R = Rn;
                    rn = Rn.norm();
                    mu = std::max(1e-12, mu / 3.0);
                    improved = true;
                } else {
                    mu *= 4.0;
                }
            }
            if (!improved) break;
        }
        out.residual = rn / scale;
        if (rn <= opt.tol * scale && positive(X)) {
            found = true;
            C1 = C1;
        }
    }
    if (!found) fail(ErrorKind::infeasible, "noisy realization: no physical noise coupling found within the restart budget");

    const CMat X = residual(C1).first;
    const CMat T = herm_sqrt(0.5 * (X + X.adjoint()));
    const CMat Ti = T.partialPivLu().inverse();
    const CMat A = T * A0 * Ti;
    CMat Cfull(m1 + n_noise, n);
    Cfull << C0, C1;
    Cfull = Cfull * Ti;
    CMat Om = I_unit * (A + 0.5 * Cfull.adjoint() * Cfull);
    Om = 0.5 * (Om + Om.adjoint()).eval();
    const auto m = m1 + n_noise;
    CMat Sm = CMat::Identity(m, m);
    Sm.topLeftCorner(m1, m1) = ss.D;
    out.system = QLSystem{doubled(Sm, CMat::Zero(m, m)), doubled(Cfull, CMat::Zero(m, n)), doubled(Om, CMat::Zero(n, n))};

    double worst = 0.0;
    for (double w : symmetric_freqs(doubled(A0, CMat::Zero(n, n)))) {
        const cplx s = freq_point(w);
        const CMat Xi = minus_block(transfer_function(out.system, s)).topLeftCorner(m1, m1);
        worst = std::max(worst, (Xi - evaluate(ss, s)).norm());
    }
    if (worst > 1e-6 * scale) fail(ErrorKind::realization, "noisy realization: accessible block does not match the input");
    return out;
}

std::vector<CVec> nus_detect(const QLSystem& sys, const std::vector<Eigen::Index>& accessible, double tol) {
    const auto n = sys.n(), m = sys.m();
    const double sc = std::max(1.0, sys.C.norm() + sys.Omega.norm());
    if (n > 0 && (plus_block(sys.C).norm() > 1e-8 * sc || plus_block(sys.Omega).norm() > 1e-8 * sc))
        fail(ErrorKind::precondition, "nus_detect: system must be passive");
    std::vector<Eigen::Index> noise;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::find(accessible.begin(), accessible.end(), i) == accessible.end()) noise.push_back(i);
    }
    for (auto a : accessible)
        if (a < 0 || a >= m) fail(ErrorKind::input, "nus_detect: accessible channel index out of range");
    std::vector<CVec> out;
    if (n == 0) return out;
    const CMat Am = minus_block(drift_matrix(sys));
    const CMat Cm = minus_block(sys.C);
    CMat Cn(noise.size(), n);
    for (size_t k = 0; k < noise.size(); ++k) Cn.row(k) = Cm.row(noise[k]);

    const CVec ev = Eigen::ComplexEigenSolver<CMat>(Am, false).eigenvalues();
    const double etol = 1e-8 * std::max(1.0, Am.norm());
    std::vector<cplx> done;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        bool seen = false;
        for (auto v : done)
            if (std::abs(v - ev(i)) <= etol * 10) seen = true;
        if (seen) continue;
        done.push_back(ev(i));
        Eigen::Index mult = 0;
        for (Eigen::Index j = 0; j < ev.size(); ++j)
            if (std::abs(ev(j) - ev(i)) <= etol * 10) ++mult;
        Eigen::JacobiSVD<CMat> svd(Am - ev(i) * CMat::Identity(n, n), Eigen::ComputeFullV);
        const RVec& s = svd.singularValues();
        Eigen::Index geo = 0;
        for (Eigen::Index j = 0; j < n; ++j)
            if (s(j) <= 1e-7 * std::max(1.0, Am.norm())) ++geo;
        geo = std::max<Eigen::Index>(1, std::min(geo, mult));
        const CMat E = svd.matrixV().rightCols(geo);
        if (Cn.rows() == 0) {
            for (Eigen::Index j = 0; j < geo; ++j) out.push_back(E.col(j));
            continue;
        }
        const CMat CE = Cn * E;
        Eigen::JacobiSVD<CMat> s2(CE, Eigen::ComputeFullV);
        const RVec& s2v = s2.singularValues();
        Eigen::Index rank = 0;
        for (Eigen::Index j = 0; j < s2v.size(); ++j)
            if (s2v(j) > tol * std::max(1.0, Cn.norm())) ++rank;
        for (Eigen::Index j = rank; j < geo; ++j) {
            CVec y = E * s2.matrixV().col(j);
            out.push_back(y / y.norm());
        }
    }
    return out;
}

}  // namespace qls
