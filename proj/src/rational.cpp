#include "qls/rational.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace qls {

CMat RationalMatrixFunction::operator()(cplx s) const {
    CMat out = constant;
    for (size_t k = 0; k < poles.size(); ++k) {
        const cplx d = s - poles[k];
        if (std::abs(d) == 0.0) fail(ErrorKind::pole, "rational function evaluated at a pole");
        out += residues[k] / d;
    }
    return out;
}

void validate(const RationalMatrixFunction& f) {
    if (f.poles.size() != f.residues.size()) fail(ErrorKind::input, "rational function: poles and residues differ in number");
    for (const auto& r : f.residues)
        if (r.rows() != f.rows() || r.cols() != f.cols())
            fail(ErrorKind::dimension, "rational function: residue shape differs from constant");
    if (!f.constant.allFinite()) fail(ErrorKind::input, "rational function: non-finite constant");
    for (size_t k = 0; k < f.poles.size(); ++k) {
        if (!std::isfinite(f.poles[k].real()) || !std::isfinite(f.poles[k].imag()) || !f.residues[k].allFinite())
            fail(ErrorKind::input, "rational function: non-finite pole or residue");
    }
}

RationalMatrixFunction from_state_space(const StateSpace& ss) {
    RationalMatrixFunction f;
    f.constant = ss.D;
    const auto d = ss.order();
    if (d == 0) return f;
    Eigen::ComplexEigenSolver<CMat> es(ss.A);
    const CMat& V = es.eigenvectors();
    Eigen::PartialPivLU<CMat> lu(V);
    const CMat W = lu.inverse();
    Eigen::JacobiSVD<CMat> svd(V);
    const RVec& sv = svd.singularValues();
    if (sv(d - 1) < 1e-10 * sv(0)) fail(ErrorKind::unsupported, "partial fractions: drift matrix is not diagonalizable");
    const CMat CV = ss.C * V;
    const CMat WB = W * ss.B;
    for (Eigen::Index k = 0; k < d; ++k) {
        f.poles.push_back(es.eigenvalues()(k));
        f.residues.push_back(CV.col(k) * WB.row(k));
    }
    return f;
}

CMat residue_by_limit(const std::function<CMat(cplx)>& f, cplx pole, double eps) {
    CMat acc;
    for (int k = 0; k < 4; ++k) {
        const cplx h = eps * std::polar(1.0, k * std::numbers::pi / 2.0 + std::numbers::pi / 4.0);
        CMat v = f(pole + h) * h;
        acc = k == 0 ? v : CMat(acc + v);
    }
    return acc / 4.0;
}

cplx polyval(const std::vector<cplx>& coeffs, cplx s) {
    cplx v = 0.0;
    for (const auto& c : coeffs) v = v * s + c;
    return v;
}

namespace {

std::vector<cplx> trim(const std::vector<cplx>& c) {
    size_t k = 0;
    while (k < c.size() && c[k] == cplx(0.0)) ++k;
    return {c.begin() + k, c.end()};
}

}  // namespace

std::vector<cplx> polynomial_roots(const std::vector<cplx>& coeffs) {
    const auto c = trim(coeffs);
    if (c.empty()) fail(ErrorKind::input, "polynomial: zero polynomial");
    const auto deg = static_cast<Eigen::Index>(c.size()) - 1;
    if (deg == 0) return {};
    CMat comp = CMat::Zero(deg, deg);
    for (Eigen::Index j = 0; j < deg; ++j) comp(0, j) = -c[j + 1] / c[0];
    for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
    const CVec ev = Eigen::ComplexEigenSolver<CMat>(comp, false).eigenvalues();
    std::vector<cplx> roots(ev.data(), ev.data() + ev.size());
    // Newton polish against the original coefficients
    std::vector<cplx> dc;
    for (Eigen::Index j = 0; j < deg; ++j) dc.push_back(c[j] * double(deg - j));
    for (auto& r : roots) {
        for (int it = 0; it < 3; ++it) {
            const cplx d = polyval(dc, r);
            if (std::abs(d) == 0.0) break;
            const cplx step = polyval(c, r) / d;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            r -= step;
        }
    }
    return roots;
}

RationalMatrixFunction from_polynomial_matrix(const PolyMatrix& nums, const std::vector<cplx>& den_in) {
    const auto den = trim(den_in);
    if (den.empty()) fail(ErrorKind::input, "rational function: zero denominator");
    const auto rows = static_cast<Eigen::Index>(nums.size());
    if (rows == 0 || nums[0].empty()) fail(ErrorKind::dimension, "rational function: empty numerator matrix");
    const auto cols = static_cast<Eigen::Index>(nums[0].size());
    for (const auto& r : nums)
        if (static_cast<Eigen::Index>(r.size()) != cols) fail(ErrorKind::dimension, "rational function: ragged numerator matrix");

    RationalMatrixFunction f;
    f.constant = CMat::Zero(rows, cols);
    std::vector<std::vector<std::vector<cplx>>> trimmed(rows, std::vector<std::vector<cplx>>(cols));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            const auto num = trim(nums[i][j]);
            if (num.size() > den.size()) fail(ErrorKind::input, "rational function: improper (numerator degree too high)");
            if (num.size() == den.size() && !num.empty()) f.constant(i, j) = num[0] / den[0];
            trimmed[i][j] = num;
        }
    f.poles = polynomial_roots(den);
    double scale = 1.0;
    for (const auto& p : f.poles) scale = std::max(scale, std::abs(p));
    for (size_t i = 0; i < f.poles.size(); ++i)
        for (size_t j = i + 1; j < f.poles.size(); ++j)
            if (std::abs(f.poles[i] - f.poles[j]) < 1e-6 * scale)
                fail(ErrorKind::unsupported, "rational function: repeated poles");

    std::vector<cplx> dd;
    const auto deg = den.size() - 1;
    for (size_t j = 0; j < deg; ++j) dd.push_back(den[j] * double(deg - j));
    auto eval = [&](cplx s) {
        CMat out(rows, cols);
        const cplx d = polyval(den, s);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = polyval(trimmed[i][j], s) / d;
        return out;
    };
    for (const auto& p : f.poles) {
        // exact for simple roots: num(p) / den'(p)
        CMat exact(rows, cols);
        const cplx dp = polyval(dd, p);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) exact(i, j) = polyval(trimmed[i][j], p) / dp;
        const CMat lim = residue_by_limit(eval, p, 1e-5 * std::max(1.0, std::abs(p)));
        if ((lim - exact).norm() > 1e-4 * std::max(1.0, exact.norm()))
            fail(ErrorKind::accuracy, "rational function: residue extraction is inconsistent");
        f.residues.push_back(exact);
    }
    return f;
}

RationalMatrixFunction from_polynomials(const std::vector<cplx>& num, const std::vector<cplx>& den) {
    return from_polynomial_matrix(PolyMatrix{{num}}, den);
}

Eigen::Index find_pole(const std::vector<cplx>& poles, cplx p, double tol) {
    Eigen::Index best = -1;
    double bd = tol;
    for (size_t k = 0; k < poles.size(); ++k) {
        const double d = std::abs(poles[k] - p);
        if (d <= bd) {
            bd = d;
            best = static_cast<Eigen::Index>(k);
        }
    }
    return best;
}

}  // namespace qls
