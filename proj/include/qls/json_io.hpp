#pragma once

#include <json.hpp>
#include <optional>
#include <vector>

#include "qls/estimation.hpp"
#include "qls/rational.hpp"
#include "qls/realization.hpp"
#include "qls/stationary.hpp"
#include "qls/system.hpp"

namespace qls::io {

using json = nlohmann::json;

// Complex numbers are [re, im] or a plain real number.
cplx complex_from_json(const json& j);
json to_json(cplx z);

// Row-major array of rows; a bare array is read as a row vector.
CMat matrix_from_json(const json& j);
json to_json(const CMat& M);
json to_json(const std::vector<cplx>& v);

std::vector<cplx> poly_from_json(const json& j);

// {"n", "m", "S"?, "C", "Omega" | "A"}; blocks are {"minus", "plus"?}.
// A drift matrix "A" is accepted in place of "Omega" and must satisfy PR.
QLSystem system_from_json(const json& j, const Tolerances& tol = {});
json to_json(const QLSystem& sys);

// {"N", "M"?}; absent means vacuum.
InputCovariance input_from_json(const json& j, Eigen::Index m);
json to_json(const InputCovariance& in);

// The input recorded under "input" in j, or vacuum.
InputCovariance input_or_vacuum(const json& j, Eigen::Index m);

// {"constant", "poles", "residues"}, {"num", "den"} or {"num": [[poly]], "den"}.
RationalMatrixFunction rational_from_json(const json& j);
json to_json(const RationalMatrixFunction& f);

// {"A", "B", "C", "D"}
StateSpace state_space_from_json(const json& j);
json to_json(const StateSpace& ss);

bool is_state_space(const json& j);

json to_json(const OneModeParams& p);

// ParamFamily on disk: {"system", "paths": [{"block", "part", "row", "col", "coefficient"}], "theta0", "input"?}
struct FamilySpec {
    QLSystem base;
    std::vector<ParamPath> paths;
    double theta0 = 0.0;
    InputCovariance input;
    std::optional<CVec> alpha;  // coherent amplitude per channel, "alpha": [z, ...]
};

FamilySpec family_from_json(const json& j, const Tolerances& tol = {});
ParamFamily make_family(const FamilySpec& spec);

json to_json(const QFIReport& r);

}  // namespace qls::io
