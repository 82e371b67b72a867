#include "qls/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace qls {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::dimension: return "dimension";
        case ErrorKind::input: return "input";
        case ErrorKind::physicality: return "physicality";
        case ErrorKind::purity: return "purity";
        case ErrorKind::not_hurwitz: return "not_hurwitz";
        case ErrorKind::precondition: return "precondition";
        case ErrorKind::pole: return "pole";
        case ErrorKind::singular: return "singular";
        case ErrorKind::unsupported: return "unsupported";
        case ErrorKind::identification: return "identification";
        case ErrorKind::realization: return "realization";
        case ErrorKind::infeasible: return "infeasible";
        case ErrorKind::accuracy: return "accuracy";
        case ErrorKind::inconsistency: return "inconsistency";
    }
    return "unknown";
}

bool Error::is_validation() const {
    switch (kind_) {
        case ErrorKind::dimension:
        case ErrorKind::input:
        case ErrorKind::physicality:
        case ErrorKind::purity:
        case ErrorKind::not_hurwitz:
        case ErrorKind::precondition:
            return true;
        default:
            return false;
    }
}

CMat jmat(Eigen::Index n) {
    CMat J = CMat::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        J(i, i) = 1.0;
        J(n + i, n + i) = -1.0;
    }
    return J;
}

CMat sigma_swap(Eigen::Index n) {
    CMat S = CMat::Zero(2 * n, 2 * n);
    S.topRightCorner(n, n).setIdentity();
    S.bottomLeftCorner(n, n).setIdentity();
    return S;
}

CMat doubled(const CMat& minus, const CMat& plus) {
    if (minus.rows() != plus.rows() || minus.cols() != plus.cols())
        fail(ErrorKind::dimension, "doubled: block shapes differ");
    const auto r = minus.rows(), c = minus.cols();
    CMat M(2 * r, 2 * c);
    M.topLeftCorner(r, c) = minus;
    M.topRightCorner(r, c) = plus;
    M.bottomLeftCorner(r, c) = plus.conjugate();
    M.bottomRightCorner(r, c) = minus.conjugate();
    return M;
}

static void require_even(const CMat& M, const char* who) {
    if (M.rows() % 2 != 0 || M.cols() % 2 != 0)
        fail(ErrorKind::dimension, std::string(who) + ": odd dimension");
}

CMat minus_block(const CMat& M) {
    require_even(M, "minus_block");
    return M.topLeftCorner(M.rows() / 2, M.cols() / 2);
}

CMat plus_block(const CMat& M) {
    require_even(M, "plus_block");
    return M.topRightCorner(M.rows() / 2, M.cols() / 2);
}

double doubled_up_defect(const CMat& M) {
    require_even(M, "doubled_up_defect");
    const auto r = M.rows() / 2, c = M.cols() / 2;
    if (r == 0 || c == 0) return 0.0;
    const double d1 = (M.bottomLeftCorner(r, c) - M.topRightCorner(r, c).conjugate()).norm();
    const double d2 = (M.bottomRightCorner(r, c) - M.topLeftCorner(r, c).conjugate()).norm();
    return (d1 + d2) / std::max(1.0, M.norm());
}

bool is_doubled_up(const CMat& M, double tol) {
    if (M.rows() % 2 != 0 || M.cols() % 2 != 0) return false;
    return doubled_up_defect(M) <= tol;
}

CMat flat(const CMat& M) {
    require_even(M, "flat");
    return jmat(M.cols() / 2) * M.adjoint() * jmat(M.rows() / 2);
}

CVec conj_partner(const CVec& v) {
    const auto n = v.size() / 2;
    CVec w(v.size());
    w.head(n) = v.tail(n).conjugate();
    w.tail(n) = v.head(n).conjugate();
    return w;
}

CMat herm_sqrt(const CMat& H) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
    RVec ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

CMat herm_inv_sqrt(const CMat& H) {
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
    const RVec& ev = es.eigenvalues();
    if (ev.size() > 0 && ev.minCoeff() <= 0.0)
        fail(ErrorKind::singular, "herm_inv_sqrt: matrix not positive definite");
    RVec d = ev.cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
}

double rel_residual(const CMat& residual, const CMat& scale) {
    return residual.norm() / std::max(1.0, scale.norm());
}

bool is_symplectic(const CMat& M, double tol) {
    if (M.rows() != M.cols() || M.rows() % 2 != 0)
        fail(ErrorKind::dimension, "is_symplectic: matrix must be square with even dimension");
    if (!is_doubled_up(M, std::max(tol, 1e-10))) return false;
    const CMat R = flat(M) * M - CMat::Identity(M.rows(), M.cols());
    return R.norm() <= tol * std::max(1.0, M.norm());
}

double flat_unitarity_defect(const CMat& M) {
    if (M.rows() != M.cols() || M.rows() % 2 != 0)
        fail(ErrorKind::dimension, "flat_unitarity_defect: matrix must be square with even dimension");
    return (flat(M) * M - CMat::Identity(M.rows(), M.cols())).norm() / std::max(1.0, M.norm());
}

CMat input_covariance(const CMat& N, const CMat& M) {
    const auto m = N.rows();
    if (N.cols() != m || M.rows() != m || M.cols() != m)
        fail(ErrorKind::dimension, "input_covariance: N and M must be square and equal size");
    CMat V(2 * m, 2 * m);
    V.topLeftCorner(m, m) = N.transpose() + CMat::Identity(m, m);
    V.topRightCorner(m, m) = M;
    V.bottomLeftCorner(m, m) = M.adjoint();
    V.bottomRightCorner(m, m) = N;
    return V;
}

CMat vacuum_covariance(Eigen::Index m) {
    return input_covariance(CMat::Zero(m, m), CMat::Zero(m, m));
}

WilliamsonResult williamson(const CMat& V, Eigen::Index n, double tol) {
    if (V.rows() != 2 * n || V.cols() != 2 * n)
        fail(ErrorKind::dimension, "williamson: covariance must be 2n x 2n");
    WilliamsonResult out;
    if (n == 0) {
        out.transform = CMat(0, 0);
        return out;
    }
    const double scale = std::max(1.0, V.norm());
    if ((V - V.adjoint()).norm() > 1e-8 * scale)
        fail(ErrorKind::physicality, "williamson: covariance is not Hermitian");
    // The symmetrized covariance V - J/2 is doubled-up; its J-spectrum is +-(n_i + 1/2).
    const CMat J = jmat(n);
    const CMat Vs = 0.5 * (V + V.adjoint()) - 0.5 * J;
    Eigen::SelfAdjointEigenSolver<CMat> es_v(Vs);
    if (es_v.eigenvalues().minCoeff() < -tol * scale)
        fail(ErrorKind::physicality, "williamson: symmetrized covariance is not positive semidefinite");
    const CMat R = herm_sqrt(Vs);
    const CMat H = R * J * R;
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (H + H.adjoint()));
    const RVec& lam = es.eigenvalues();  // ascending
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 2 * n - 1; k >= n; --k) idx.push_back(k);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return lam(a) < lam(b); });

    CMat T(2 * n, 2 * n);
    out.symplectic_eigenvalues.reserve(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double l = lam(idx[k]);
        if (l < 0.5 - tol * scale)
            fail(ErrorKind::physicality, "williamson: negative symplectic eigenvalue");
        out.symplectic_eigenvalues.push_back(std::max(0.0, l - 0.5));
        CVec v = R * es.eigenvectors().col(idx[k]) / std::sqrt(l);
        T.col(k) = v;
        T.col(n + k) = conj_partner(v);
    }
    out.transform = flat(T);
    return out;
}

bool is_pure_covariance(const CMat& V, double tol) {
    const auto w = williamson(V, V.rows() / 2, tol);
    return std::all_of(w.symplectic_eigenvalues.begin(), w.symplectic_eigenvalues.end(),
                       [&](double x) { return x <= tol; });
}

CMat vacuum_basis_transform(const CMat& N, const CMat& M, double tol) {
    const CMat V = input_covariance(N, M);
    if (!is_pure_covariance(V, tol)) fail(ErrorKind::purity, "vacuum_basis_transform: input state is mixed");
    const auto m = N.rows();
    const CMat Id = CMat::Identity(m, m);
    const CMat A = herm_sqrt(N.transpose() + Id);
    const CMat B = M * herm_inv_sqrt(N.adjoint() + Id);
    return doubled(A, B);
}

Eigen::Index numerical_rank(const CMat& M, double rel_tol) {
    if (M.size() == 0) return 0;
    Eigen::JacobiSVD<CMat> svd(M);
    const RVec& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++r;
    return r;
}

CMat solve_sylvester(const CMat& A, const CMat& B, const CMat& Q) {
    const auto r = A.rows(), c = B.rows();
    if (A.cols() != r || B.cols() != c || Q.rows() != r || Q.cols() != c)
        fail(ErrorKind::dimension, "solve_sylvester: shape mismatch");
    if (r == 0 || c == 0) return CMat::Zero(r, c);
    const CMat Ir = CMat::Identity(r, r), Ic = CMat::Identity(c, c);
    CMat K = CMat::Zero(r * c, r * c);
    // vec(A X) = (I kron A) vec X, vec(X B) = (B^T kron I) vec X
    for (Eigen::Index j = 0; j < c; ++j) {
        K.block(j * r, j * r, r, r) += A;
        for (Eigen::Index k = 0; k < c; ++k) K.block(j * r, k * r, r, r) += B(k, j) * Ir;
    }
    Eigen::Map<const CVec> q(Q.data(), r * c);
    Eigen::PartialPivLU<CMat> lu(K);
    CVec x = lu.solve(q);
    if (!x.allFinite()) fail(ErrorKind::singular, "solve_sylvester: singular operator");
    const double res = (K * x - q).norm() / std::max(1.0, q.norm());
    if (res > 1e-6) fail(ErrorKind::singular, "solve_sylvester: operator is (numerically) singular");
    return Eigen::Map<CMat>(x.data(), r, c);
}

// ---------------------------------------------------------------------------
// Flat-Gram factorization

namespace {

struct Cluster {
    cplx value;
    std::vector<Eigen::Index> members;
};

std::vector<Cluster> cluster_eigenvalues(const CVec& ev, double tol) {
    std::vector<Cluster> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        bool placed = false;
        for (auto& c : out) {
            if (std::abs(c.value - ev(i)) <= tol) {
                c.members.push_back(i);
                cplx s = 0;
                for (auto k : c.members) s += ev(k);
                c.value = s / double(c.members.size());
                placed = true;
                break;
            }
        }
        if (!placed) out.push_back({ev(i), {i}});
    }
    return out;
}

// Orthonormal basis of the (numerical) eigenspace of G at lambda of dimension k.
CMat eigenspace(const CMat& G, cplx lambda, Eigen::Index k, double scale) {
    const CMat K = G - lambda * CMat::Identity(G.rows(), G.cols());
    Eigen::JacobiSVD<CMat> svd(K, Eigen::ComputeFullV);
    const RVec& s = svd.singularValues();
    const auto n = G.rows();
    if (s(n - k) > 1e-6 * scale)
        fail(ErrorKind::unsupported, "factor_flat_gram: eigenvalue is not semisimple");
    return svd.matrixV().rightCols(k);
}

cplx jdot(const CVec& u, const CVec& v, const CMat& J) { return (u.adjoint() * J * v)(0, 0); }

}  // namespace

FlatGramFactor factor_flat_gram_full(const CMat& G, double tol) {
    if (G.rows() != G.cols() || G.rows() % 2 != 0)
        fail(ErrorKind::dimension, "factor_flat_gram: matrix must be square with even dimension");
    const auto dim = G.rows();
    const auto n = dim / 2;
    const double scale = std::max(1e-300, G.norm());
    if (!is_doubled_up(G, 1e-8)) fail(ErrorKind::input, "factor_flat_gram: input is not doubled-up");
    if ((flat(G) - G).norm() > 1e-8 * std::max(1.0, scale))
        fail(ErrorKind::input, "factor_flat_gram: input is not flat-self-adjoint");

    FlatGramFactor out;
    if (n == 0) {
        out.T = out.W = out.N_hat = out.N_bar = CMat(0, 0);
        return out;
    }
    const CMat J = jmat(n);
    Eigen::ComplexEigenSolver<CMat> es(G);
    const CVec ev = es.eigenvalues();
    if (ev.cwiseAbs().minCoeff() <= 1e-12 * scale)
        fail(ErrorKind::singular, "factor_flat_gram: matrix is singular");
    auto clusters = cluster_eigenvalues(ev, 1e-6 * scale);

    struct RealBlock { double lambda; CVec w; };
    struct PairBlock { double mu, nu; CVec w1, w2; };
    std::vector<RealBlock> reals;
    std::vector<PairBlock> pairs;

    for (const auto& c : clusters) {
        const auto k = static_cast<Eigen::Index>(c.members.size());
        const double im = c.value.imag();
        if (std::abs(im) <= 1e-7 * scale) {
            if (k % 2 != 0)
                fail(ErrorKind::unsupported, "factor_flat_gram: real eigenvalue with odd multiplicity");
            const double lam = c.value.real();
            CMat B = eigenspace(G, lam, k, scale);
            for (Eigen::Index step = 0; step < k / 2; ++step) {
                // pivot on the column of largest positive J-norm, fall back to the Gram eigenvector
                const CMat K = B.adjoint() * J * B;
                Eigen::Index piv = 0;
                double best = -1.0;
                for (Eigen::Index j = 0; j < B.cols(); ++j)
                    if (K(j, j).real() > best + 1e-12) { best = K(j, j).real(); piv = j; }
                CVec w;
                if (best > 1e-8) {
                    w = B.col(piv) / std::sqrt(best);
                } else {
                    Eigen::SelfAdjointEigenSolver<CMat> gs(0.5 * (K + K.adjoint()));
                    const double top = gs.eigenvalues()(K.rows() - 1);
                    if (top <= 1e-8)
                        fail(ErrorKind::unsupported, "factor_flat_gram: indefinite real eigenspace");
                    w = B * gs.eigenvectors().col(K.rows() - 1) / std::sqrt(top);
                }
                const CVec tw = conj_partner(w);
                for (Eigen::Index j = 0; j < B.cols(); ++j) {
                    const CVec u = B.col(j);
                    B.col(j) = u - w * jdot(w, u, J) + tw * jdot(tw, u, J);
                }
                reals.push_back({lam, w});
            }
        } else if (im > 0) {
            if (k != 2)
                fail(ErrorKind::unsupported, "factor_flat_gram: repeated complex eigenvalue pair");
            const CMat E = eigenspace(G, c.value, 2, scale);
            const CVec p1 = E.col(0), p2 = E.col(1);
            const cplx mval = jdot(p1, conj_partner(p2), J);
            if (std::abs(mval) < 1e-12)
                fail(ErrorKind::unsupported, "factor_flat_gram: degenerate complex eigenspace pairing");
            const CVec a = p1;
            const CVec b = (-2.0 / std::conj(mval)) * p2;
            const CVec w1 = 0.5 * (a - conj_partner(b));
            const CVec w2 = 0.5 * (b + conj_partner(a));
            pairs.push_back({c.value.real(), c.value.imag(), w1, w2});
        }
    }
    if (static_cast<Eigen::Index>(reals.size() + 2 * pairs.size()) != n)
        fail(ErrorKind::unsupported, "factor_flat_gram: spectrum does not match a canonical form");

    std::stable_sort(reals.begin(), reals.end(), [](const RealBlock& x, const RealBlock& y) {
        const bool px = x.lambda > 0, py = y.lambda > 0;
        if (px != py) return px;
        return x.lambda < y.lambda;
    });
    std::stable_sort(pairs.begin(), pairs.end(), [](const PairBlock& x, const PairBlock& y) {
        return x.mu != y.mu ? x.mu < y.mu : x.nu < y.nu;
    });

    CMat W(dim, dim);
    CMat N1 = CMat::Zero(n, n), N2 = CMat::Zero(n, n);
    CMat B1 = CMat::Zero(n, n), B2 = CMat::Zero(n, n);
    const CMat sig = (CMat(2, 2) << 0.0, -I_unit, I_unit, 0.0).finished();
    Eigen::Index col = 0;
    for (const auto& r : reals) {
        W.col(col) = r.w;
        W.col(n + col) = conj_partner(r.w);
        N1(col, col) = r.lambda;
        if (r.lambda > 0) B1(col, col) = std::sqrt(r.lambda);
        else B2(col, col) = std::sqrt(-r.lambda);
        ++col;
    }
    for (const auto& p : pairs) {
        W.col(col) = p.w1;
        W.col(col + 1) = p.w2;
        W.col(n + col) = conj_partner(p.w1);
        W.col(n + col + 1) = conj_partner(p.w2);
        N1.block(col, col, 2, 2) = p.mu * CMat::Identity(2, 2);
        N2.block(col, col, 2, 2) = -p.nu * sig;
        double alpha, beta;
        if (p.mu > 0) {
            const double x = 0.5 * std::asinh(p.nu / p.mu);
            alpha = std::sqrt(p.mu) * std::cosh(x);
            beta = std::sqrt(p.mu) * std::sinh(x);
        } else if (p.mu < 0) {
            const double x = 0.5 * std::asinh(p.nu / -p.mu);
            alpha = std::sqrt(-p.mu) * std::sinh(x);
            beta = std::sqrt(-p.mu) * std::cosh(x);
        } else {
            alpha = beta = std::sqrt(p.nu / 2.0);
        }
        B1.block(col, col, 2, 2) = alpha * CMat::Identity(2, 2);
        B2.block(col, col, 2, 2) = -beta * sig;
        col += 2;
    }
    out.W = W;
    out.N_hat = doubled(N1, N2);
    out.N_bar = doubled(B1, B2);
    out.T = out.N_bar * flat(W);

    if ((flat(W) * W - CMat::Identity(dim, dim)).norm() > 1e-6 * std::max(1.0, W.norm() * W.norm()))
        fail(ErrorKind::accuracy, "factor_flat_gram: diagonalizing transform is not symplectic");
    const double res = (flat(out.T) * out.T - G).norm() / scale;
    if (res > std::max(tol, 1e-8) * 100.0) {
        std::ostringstream os;
        os << "factor_flat_gram: residual " << res << " exceeds tolerance";
        fail(ErrorKind::accuracy, os.str());
    }
    return out;
}

CMat factor_flat_gram(const CMat& G, double tol) { return factor_flat_gram_full(G, tol).T; }

}  // namespace qls
