#include "qls/json_io.hpp"

#include <algorithm>
#include <string>

#include "qls/algebra.hpp"

namespace qls::io {

namespace {

[[noreturn]] void bad(const std::string& msg) { fail(ErrorKind::input, msg); }

const json& field(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) bad(std::string(where) + ": missing \"" + key + "\"");
    return j.at(key);
}

double number(const json& j, const char* what) {
    if (!j.is_number()) bad(std::string(what) + ": expected a number");
    return j.get<double>();
}

// Doubled-up matrix given either as {"minus", "plus"?} blocks or as a full matrix.
CMat doubled_from_json(const json& j, const char* what) {
    if (j.is_object()) {
        const CMat minus = matrix_from_json(field(j, "minus", what));
        CMat plus = CMat::Zero(minus.rows(), minus.cols());
        if (j.contains("plus")) plus = matrix_from_json(j.at("plus"));
        if (plus.rows() != minus.rows() || plus.cols() != minus.cols())
            fail(ErrorKind::dimension, std::string(what) + ": minus and plus blocks differ in shape");
        return doubled(minus, plus);
    }
    return matrix_from_json(j);
}

json doubled_to_json(const CMat& M) { return {{"minus", to_json(minus_block(M))}, {"plus", to_json(plus_block(M))}}; }

ParamPath path_from_json(const json& j) {
    ParamPath p;
    const auto block = field(j, "block", "path").get<std::string>();
    if (block == "C")
        p.block = ParamPath::Block::C;
    else if (block == "Omega")
        p.block = ParamPath::Block::Omega;
    else
        bad("path: block must be \"C\" or \"Omega\"");
    const auto part = j.value("part", std::string("minus"));
    if (part == "minus")
        p.part = ParamPath::Part::minus;
    else if (part == "plus")
        p.part = ParamPath::Part::plus;
    else
        bad("path: part must be \"minus\" or \"plus\"");
    const auto row = field(j, "row", "path").get<long>(), col = field(j, "col", "path").get<long>();
    if (row < 0 || col < 0) bad("path: negative index");
    p.row = row;
    p.col = col;
    p.coefficient = j.contains("coefficient") ? complex_from_json(j.at("coefficient")) : cplx(1.0);
    return p;
}

}  // namespace

cplx complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    bad("expected a complex number [re, im] or a real number, got " + j.dump());
}

json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

CMat matrix_from_json(const json& j) {
    if (!j.is_array()) bad("expected a matrix (array of rows)");
    if (j.empty()) return CMat(0, 0);
    // A row of complex numbers looks like [[re, im], ...]; a matrix is [[z, ...], ...].
    auto is_row = [](const json& r) {
        if (!r.is_array()) return false;
        for (const auto& e : r)
            if (!(e.is_number() || (e.is_array() && e.size() == 2 && e[0].is_number()))) return false;
        return true;
    };
    bool matrix = true;
    for (const auto& r : j)
        if (!is_row(r)) matrix = false;
    if (!matrix) {
        // bare vector
        CMat M(1, static_cast<Eigen::Index>(j.size()));
        for (size_t k = 0; k < j.size(); ++k) M(0, static_cast<Eigen::Index>(k)) = complex_from_json(j[k]);
        return M;
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    CMat M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) fail(ErrorKind::dimension, "matrix: ragged rows");
        for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = complex_from_json(j[r][c]);
    }
    if (!M.allFinite()) bad("matrix: non-finite entry");
    return M;
}

json to_json(const CMat& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(to_json(M(r, c)));
        rows.push_back(row);
    }
    return rows;
}

json to_json(const std::vector<cplx>& v) {
    json out = json::array();
    for (const auto& z : v) out.push_back(to_json(z));
    return out;
}

std::vector<cplx> poly_from_json(const json& j) {
    if (!j.is_array()) bad("polynomial: expected an array of coefficients");
    std::vector<cplx> c;
    for (const auto& e : j) c.push_back(complex_from_json(e));
    return c;
}

QLSystem system_from_json(const json& j, const Tolerances& tol) {
    if (!j.is_object()) bad("system: expected an object");
    const CMat C = doubled_from_json(field(j, "C", "system"), "C");
    const auto m = C.rows() / 2;
    CMat S = CMat::Identity(2 * m, 2 * m);
    if (j.contains("S")) S = doubled_from_json(j.at("S"), "S");
    CMat Omega;
    if (j.contains("Omega")) {
        Omega = doubled_from_json(j.at("Omega"), "Omega");
    } else if (j.contains("A")) {
        const CMat A = doubled_from_json(j.at("A"), "A");
        if (A.rows() != C.cols() || A.cols() != C.cols()) fail(ErrorKind::dimension, "system: A and C sizes differ");
        if (!check_pr(A, C, tol.numeric))
            fail(ErrorKind::physicality, "system: (A, C) violates physical realizability, residual " +
                                             std::to_string(pr_residual(A, C)));
        Omega = omega_from_drift(A, C);
    } else {
        bad("system: missing \"Omega\" (or drift \"A\")");
    }
    if (j.contains("n") && j.at("n").get<long>() != Omega.rows() / 2)
        fail(ErrorKind::dimension, "system: \"n\" does not match Omega");
    if (j.contains("m") && j.at("m").get<long>() != m) fail(ErrorKind::dimension, "system: \"m\" does not match C");
    return make_system(S, C, Omega, tol);
}

json to_json(const QLSystem& sys) {
    return {{"n", sys.n()},
            {"m", sys.m()},
            {"S", doubled_to_json(sys.S)},
            {"C", doubled_to_json(sys.C)},
            {"Omega", doubled_to_json(sys.Omega)}};
}

InputCovariance input_from_json(const json& j, Eigen::Index m) {
    if (j.is_string() && j.get<std::string>() == "vacuum") return vacuum_input(m);
    const CMat N = matrix_from_json(field(j, "N", "input"));
    const CMat M = j.contains("M") ? matrix_from_json(j.at("M")) : CMat(CMat::Zero(N.rows(), N.cols()));
    if (N.rows() != m) fail(ErrorKind::dimension, "input: size differs from the channel count");
    return make_input(N, M);
}

json to_json(const InputCovariance& in) { return {{"N", to_json(in.N)}, {"M", to_json(in.M)}}; }

InputCovariance input_or_vacuum(const json& j, Eigen::Index m) {
    if (j.is_object() && j.contains("input")) return input_from_json(j.at("input"), m);
    return vacuum_input(m);
}

RationalMatrixFunction rational_from_json(const json& j) {
    if (!j.is_object()) bad("rational function: expected an object");
    if (j.contains("den")) {
        const auto den = poly_from_json(j.at("den"));
        const json& num = field(j, "num", "rational function");
        if (!num.is_array() || num.empty()) bad("rational function: empty numerator");
        // scalar polynomial: entries are numbers or [re, im]
        const bool scalar = std::all_of(num.begin(), num.end(), [](const json& e) {
            return e.is_number() || (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number());
        });
        if (scalar) return from_polynomials(poly_from_json(num), den);
        PolyMatrix nums;
        for (const auto& row : num) {
            if (!row.is_array()) bad("rational function: numerator rows must be arrays");
            std::vector<std::vector<cplx>> r;
            for (const auto& p : row) r.push_back(poly_from_json(p));
            nums.push_back(r);
        }
        return from_polynomial_matrix(nums, den);
    }
    RationalMatrixFunction f;
    f.constant = matrix_from_json(field(j, "constant", "rational function"));
    for (const auto& p : field(j, "poles", "rational function")) f.poles.push_back(complex_from_json(p));
    for (const auto& r : field(j, "residues", "rational function")) f.residues.push_back(matrix_from_json(r));
    validate(f);
    return f;
}

json to_json(const RationalMatrixFunction& f) {
    json res = json::array();
    for (const auto& r : f.residues) res.push_back(to_json(r));
    return {{"constant", to_json(f.constant)}, {"poles", to_json(f.poles)}, {"residues", res}};
}

bool is_state_space(const json& j) {
    return j.is_object() && j.contains("A") && j.contains("B") && j.contains("C") && j.contains("D");
}

StateSpace state_space_from_json(const json& j) {
    StateSpace ss{matrix_from_json(field(j, "A", "state space")), matrix_from_json(field(j, "B", "state space")),
                  matrix_from_json(field(j, "C", "state space")), matrix_from_json(field(j, "D", "state space"))};
    const auto d = ss.A.rows();
    if (ss.A.cols() != d || ss.B.rows() != d || ss.C.cols() != d || ss.D.rows() != ss.C.rows() ||
        ss.D.cols() != ss.B.cols())
        fail(ErrorKind::dimension, "state space: inconsistent matrix shapes");
    return ss;
}

json to_json(const StateSpace& ss) {
    return {{"A", to_json(ss.A)}, {"B", to_json(ss.B)}, {"C", to_json(ss.C)}, {"D", to_json(ss.D)}};
}

json to_json(const OneModeParams& p) {
    return {{"c", p.c}, {"omega_minus", p.theta}, {"omega_plus", to_json(p.omega_plus)}, {"x", p.x}, {"y", to_json(p.y)},
            {"phi", p.phi}};
}

FamilySpec family_from_json(const json& j, const Tolerances& tol) {
    FamilySpec spec;
    spec.base = system_from_json(field(j, "system", "family"), tol);
    for (const auto& p : field(j, "paths", "family")) {
        auto path = path_from_json(p);
        const auto rows = path.block == ParamPath::Block::C ? spec.base.m() : spec.base.n();
        const auto cols = spec.base.n();
        if (path.row >= rows || path.col >= cols) fail(ErrorKind::dimension, "path: index outside the block");
        spec.paths.push_back(path);
    }
    spec.theta0 = j.contains("theta0") ? number(j.at("theta0"), "theta0") : 0.0;
    spec.input = input_or_vacuum(j, spec.base.m());
    if (j.contains("alpha")) {
        const auto a = poly_from_json(j.at("alpha"));
        spec.alpha = CVec(Eigen::Map<const CVec>(a.data(), static_cast<Eigen::Index>(a.size())));
        if (spec.alpha->size() != spec.base.m()) fail(ErrorKind::dimension, "alpha: size differs from the channel count");
    }
    return spec;
}

ParamFamily make_family(const FamilySpec& spec) { return affine_family(spec.base, spec.paths, spec.theta0); }

json to_json(const QFIReport& r) {
    json d = json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = v;
    return {{"value", r.value}, {"method", r.method}, {"diagnostics", d}};
}

}  // namespace qls::io
