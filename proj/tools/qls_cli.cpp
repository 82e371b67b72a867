// qls: command-line front end for the quantum linear systems library.
#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "qls/absorber.hpp"
#include "qls/algebra.hpp"
#include "qls/estimation.hpp"
#include "qls/json_io.hpp"
#include "qls/rational.hpp"
#include "qls/realization.hpp"
#include "qls/stationary.hpp"
#include "qls/system.hpp"

using namespace qls;
using io::json;
using io::to_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_invalid = 2;
constexpr int exit_numerical = 3;

struct Options {
    std::string input_file;
    std::string output_file;
    std::string covariance_file;
    std::string grid = "auto";
    Tolerances tol;
    double realization_tol = 1e-6;
    std::uint64_t seed = 0;
    bool quiet = false;

    // realize-noisy
    long noise_channels = 1;
    int max_restarts = 50;
    // cascade-id
    std::string order = "descending";
    std::vector<double> first_pole;
    // qfi
    std::string method = "time";
    double omega = 0.0;
    bool optimize_omega = false;
    double quad_rel_tol = 1e-7;
    // sweep
    std::vector<double> couplings;
    std::string format = "csv";
};

json read_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) fail(ErrorKind::input, "cannot open " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        fail(ErrorKind::input, path + ": malformed JSON: " + e.what());
    }
}

std::vector<double> parse_grid(const std::string& spec, const std::function<std::vector<double>()>& automatic) {
    if (spec == "auto") return automatic();
    std::vector<double> grid;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            fail(ErrorKind::input, "--grid: not a number: " + item);
        }
    }
    if (grid.empty()) fail(ErrorKind::input, "--grid: empty list");
    return grid;
}

// Symmetric version of the default grid, suitable for spectra that are not even in omega.
std::vector<double> symmetric_grid(const CMat& A) {
    auto g = default_grid(A);
    std::vector<double> out;
    for (auto it = g.rbegin(); it != g.rend(); ++it)
        if (*it > 0.0) out.push_back(-*it);
    out.insert(out.end(), g.begin(), g.end());
    return out;
}

std::vector<double> symmetric_grid(const QLSystem& sys) { return symmetric_grid(drift_matrix(sys)); }

InputCovariance load_input(const Options& opt, const json& doc, Eigen::Index m) {
    if (!opt.covariance_file.empty()) return io::input_from_json(read_json(opt.covariance_file), m);
    return io::input_or_vacuum(doc, m);
}

// A system file may wrap the system as {"system": {...}, "input": {...}}.
const json& system_part(const json& doc) { return doc.contains("system") ? doc.at("system") : doc; }

double max_tf_gap(const QLSystem& sys, const std::function<CMat(cplx)>& target, const std::vector<double>& grid) {
    double gap = 0.0;
    for (double w : grid) {
        const cplx s = freq_point(w);
        gap = std::max(gap, (transfer_function(sys, s) - target(s)).norm());
    }
    return gap;
}

json cmd_validate(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const CMat A = drift_matrix(sys);
    const auto ss = to_state_space(sys);
    const bool hurwitz = is_hurwitz(A, opt.tol.stability);
    json out = {{"pr", true},
                {"pr_residual", pr_residual(A, sys.C)},
                {"n", sys.n()},
                {"m", sys.m()},
                {"passive", plus_block(sys.C).norm() + plus_block(sys.Omega).norm() + plus_block(sys.S).norm() == 0.0},
                {"hurwitz", hurwitz},
                {"controllable", is_controllable(ss.A, ss.B, opt.tol.rank)},
                {"observable", is_observable(ss.C, ss.A, opt.tol.rank)},
                {"minimal", is_minimal(sys, opt.tol.rank)}};
    const CVec ev = drift_eigenvalues(sys);
    out["eigenvalues"] = to_json(std::vector<cplx>(ev.data(), ev.data() + ev.size()));
    if (hurwitz) out["spectral_gap"] = spectral_gap(A);
    return out;
}

json cmd_tf(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const auto grid = parse_grid(opt.grid, [&] { return symmetric_grid(sys); });
    json values = json::array();
    double defect = 0.0;
    for (double w : grid) {
        const CMat X = transfer_function(sys, freq_point(w));
        defect = std::max(defect, flat_unitarity_defect(X));
        values.push_back({{"omega", w}, {"Xi", to_json(X)}});
    }
    return {{"grid", grid}, {"values", values}, {"flat_unitarity_defect", defect}};
}

json cmd_ps(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const auto in = load_input(opt, doc, sys.m());
    if (!is_hurwitz(sys, opt.tol.stability)) fail(ErrorKind::not_hurwitz, "ps: the drift matrix is not Hurwitz");
    const auto st = solve_lyapunov(sys, in);
    const auto grid = parse_grid(opt.grid, [&] { return symmetric_grid(sys); });
    json values = json::array();
    for (double w : grid) values.push_back({{"omega", w}, {"Psi", to_json(power_spectrum(sys, in, freq_point(w)))}});
    return {{"stationary_covariance", to_json(st.P)},
            {"symplectic_spectrum", st.symplectic_spectrum},
            {"lyapunov_residual", st.residual},
            {"grid", grid},
            {"values", values}};
}

json cmd_gm(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const auto in = load_input(opt, doc, sys.m());
    const bool gm = is_globally_minimal(sys, in, opt.tol);
    const auto split = pure_mixed_split(sys, in, opt.tol);
    return {{"globally_minimal", gm},
            {"occupations", split.occupations},
            {"pure_modes", split.pure.n()},
            {"mixed_modes", split.mixed.n()}};
}

json cmd_split(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const auto in = load_input(opt, doc, sys.m());
    const auto split = pure_mixed_split(sys, in, opt.tol);
    return {{"pure", to_json(split.pure)},
            {"mixed", to_json(split.mixed)},
            {"field_transform", to_json(split.field_transform)},
            {"gauge", to_json(split.gauge)},
            {"occupations", split.occupations},
            {"coupling_residual", split.coupling_residual}};
}

// Transfer-function data: a doubled-up rational matrix, a classical state space, or SISO {"minus", "plus"}.
RationalMatrixFunction load_tf(const json& doc) {
    if (io::is_state_space(doc)) return from_state_space(io::state_space_from_json(doc));
    if (doc.contains("minus") && doc.contains("plus"))
        return doubled_siso(io::rational_from_json(doc.at("minus")), io::rational_from_json(doc.at("plus")));
    return io::rational_from_json(doc);
}

json cmd_realize_tf(const Options& opt) {
    const json doc = read_json(opt.input_file);
    StateSpace ss;
    RationalMatrixFunction tf;
    if (io::is_state_space(doc)) {
        ss = io::state_space_from_json(doc);
        tf = from_state_space(ss);
    } else {
        tf = load_tf(doc);
        ss = gilbert_realize(tf);
    }
    const auto r = physical_from_classical(ss, opt.realization_tol);
    const auto grid = parse_grid(opt.grid, [&] { return symmetric_grid(r.system); });
    return {{"system", to_json(r.system)},
            {"gram", to_json(r.gram)},
            {"transform", to_json(r.transform)},
            {"tf_residual", max_tf_gap(r.system, tf, grid)}};
}

json cmd_realize_ps(const Options& opt) {
    const auto ps = io::rational_from_json(read_json(opt.input_file));
    const auto r = ps_realize(ps, opt.realization_tol);
    const CVec ev = drift_eigenvalues(r.system);
    return {{"system", to_json(r.system)},
            {"eigenvalues", to_json(std::vector<cplx>(ev.data(), ev.data() + ev.size()))},
            {"gram_input", to_json(r.gram_input)},
            {"gram_output", to_json(r.gram_output)},
            {"cross_check", r.cross_check},
            {"ps_residual", r.ps_residual}};
}

json cmd_realize_noisy(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const StateSpace ss =
        io::is_state_space(doc) ? io::state_space_from_json(doc) : minimal_realization(io::rational_from_json(doc));
    if (opt.noise_channels < 0) fail(ErrorKind::input, "--noise-channels must be non-negative");
    NoisyOptions nopt;
    nopt.seed = opt.seed;
    nopt.max_restarts = opt.max_restarts;
    const auto r = noisy_realize(ss, opt.noise_channels, nopt);
    const auto k = ss.C.rows();
    const auto grid = parse_grid(opt.grid, [&] { return symmetric_grid(r.system); });
    double gap = 0.0;
    for (double w : grid) {
        const cplx s = freq_point(w);
        const CMat X = minus_block(transfer_function(r.system, s)).topLeftCorner(k, ss.B.cols());
        gap = std::max(gap, (X - evaluate(ss, s)).norm());
    }
    return {{"system", to_json(r.system)},
            {"restarts_used", r.restarts_used},
            {"residual", r.residual},
            {"accessible_tf_residual", gap}};
}

json cmd_cascade_id(const Options& opt) {
    const json doc = read_json(opt.input_file);
    RationalMatrixFunction xm, xp;
    if (doc.contains("minus") && doc.contains("plus")) {
        xm = io::rational_from_json(doc.at("minus"));
        xp = io::rational_from_json(doc.at("plus"));
    } else {
        const auto sys = io::system_from_json(system_part(doc), opt.tol);
        if (sys.m() != 1) fail(ErrorKind::dimension, "cascade-id: single-channel systems only");
        const auto f = from_state_space(to_state_space(sys));
        auto entry = [&](Eigen::Index col) {
            RationalMatrixFunction e;
            e.constant = f.constant.block(0, col, 1, 1);
            e.poles = f.poles;
            for (const auto& r : f.residues) e.residues.push_back(r.block(0, col, 1, 1));
            return e;
        };
        xm = entry(0);
        xp = entry(1);
    }
    CascadeOptions copt;
    copt.tol = opt.realization_tol;
    if (opt.order == "ascending")
        copt.order = PairOrder::ascending_real;
    else if (opt.order != "descending")
        fail(ErrorKind::input, "--order must be descending or ascending");
    if (opt.first_pole.size() % 2 != 0) fail(ErrorKind::input, "--first-pole takes re,im pairs");
    for (size_t k = 0; k + 1 < opt.first_pole.size(); k += 2)
        copt.preferred.emplace_back(opt.first_pole[k], opt.first_pole[k + 1]);
    const auto r = siso_cascade_identify(xm, xp, copt);
    const auto sys = cascade_system(r);
    const auto tf = doubled_siso(xm, xp);
    json stages = json::array();
    for (const auto& s : r.stages) stages.push_back(to_json(s));
    const auto grid = parse_grid(opt.grid, [&] { return symmetric_grid(sys); });
    return {{"stages", stages}, {"system", to_json(sys)}, {"tf_residual", max_tf_gap(sys, tf, grid)}};
}

json cmd_absorber(const Options& opt) {
    const json doc = read_json(opt.input_file);
    const auto sys = io::system_from_json(system_part(doc), opt.tol);
    const auto r = dual_system(sys, opt.tol);
    return {{"dual", to_json(r.dual)},
            {"combined", to_json(r.combined)},
            {"basis_transform", to_json(r.basis_transform)},
            {"occupations", r.occupations},
            {"purity_residual", r.purity_residual},
            {"ps_residual", r.ps_residual}};
}

json cmd_qfi(const Options& opt) {
    const auto spec = io::family_from_json(read_json(opt.input_file), opt.tol);
    const auto family = io::make_family(spec);
    QuadratureOptions q;
    q.rel_tol = opt.quad_rel_tol;
    if (opt.method == "time") return to_json(stationary_qfi_rate_time(family, spec.theta0, spec.input));
    if (opt.method == "freq") return to_json(stationary_qfi_rate_freq(family, spec.theta0, spec.input, q));
    if (opt.method == "both") {
        const auto t = stationary_qfi_rate_time(family, spec.theta0, spec.input);
        const auto f = stationary_qfi_rate_freq(family, spec.theta0, spec.input, q);
        const double rel = std::abs(t.value - f.value) / std::max({std::abs(t.value), std::abs(f.value), 1e-300});
        return {{"time", to_json(t)}, {"freq", to_json(f)}, {"relative_gap", rel}};
    }
    if (opt.method == "coherent") {
        if (!spec.alpha) fail(ErrorKind::input, "qfi --method coherent needs \"alpha\" in the family file");
        std::vector<double> grid;
        if (opt.grid != "auto") grid = parse_grid(opt.grid, {});
        return to_json(coherent_qfi(family, spec.theta0, opt.omega, *spec.alpha, opt.optimize_omega, grid));
    }
    fail(ErrorKind::input, "--method must be time, freq, both or coherent");
}

// Scales the coupling matrix (and its parameter paths) by each factor.
std::pair<std::string, json> cmd_sweep(const Options& opt) {
    const auto spec = io::family_from_json(read_json(opt.input_file), opt.tol);
    if (opt.couplings.size() < 2) fail(ErrorKind::input, "sweep: give at least two --couplings");
    auto family_at = [&](double g) {
        auto scaled = spec;
        scaled.base.C *= g;
        for (auto& p : scaled.paths)
            if (p.block == ParamPath::Block::C) p.coefficient *= g;
        return io::make_family(scaled);
    };
    const auto table = destabilized_scaling_check(family_at, opt.couplings, spec.theta0, spec.input);
    if (opt.format == "json") {
        json rows = json::array();
        for (const auto& r : table.rows) rows.push_back({{"coupling", r.coupling}, {"tau", r.tau}, {"f", r.f}});
        return {"", json{{"rows", rows}, {"slope", table.slope}}};
    }
    if (opt.format != "csv") fail(ErrorKind::input, "--format must be csv or json");
    std::ostringstream csv;
    csv.precision(17);
    csv << "coupling,tau,f,slope_fit\n";
    for (const auto& r : table.rows) csv << r.coupling << ',' << r.tau << ',' << r.f << ',' << table.slope << '\n';
    return {csv.str(), json()};
}

void write_output(const Options& opt, const std::string& text) {
    if (opt.output_file.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(opt.output_file);
    if (!f) fail(ErrorKind::input, "cannot write " + opt.output_file);
    f << text;
}

int report_error(const std::string& kind, const std::string& message, int code) {
    json err = {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
    std::cerr << err.dump() << '\n';
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum linear systems: analysis, realization, absorbers and Fisher information"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;

    app.add_option("-o,--output", opt.output_file, "Result file (default: standard output)");
    app.add_option("--grid", opt.grid, "Frequency grid: auto or a comma-separated list");
    app.add_option("--input", opt.covariance_file, "Input field covariance {\"N\", \"M\"} (default: from the file, else vacuum)");
    app.add_option("--seed", opt.seed, "Random seed");
    app.add_option("--tol", opt.realization_tol, "Realization and identification tolerance");
    app.add_option("--tol-structure", opt.tol.structure, "Doubled-up structure tolerance");
    app.add_option("--tol-numeric", opt.tol.numeric, "Algebraic residual tolerance");
    app.add_option("--tol-rank", opt.tol.rank, "Relative rank cutoff");
    app.add_option("--tol-stability", opt.tol.stability, "Hurwitz margin");
    app.add_option("--tol-global-min", opt.tol.global_min, "Symplectic eigenvalue threshold for pure modes");
    app.add_flag("-q,--quiet", opt.quiet, "No summary on standard error");

    auto sub = [&](const char* name, const char* help, const char* file_help) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("file", opt.input_file, file_help)->required();
        return s;
    };
    auto* validate = sub("validate", "Check physical realizability, stability and minimality", "System JSON");
    auto* tf = sub("tf", "Transfer function on a frequency grid", "System JSON");
    auto* ps = sub("ps", "Stationary covariance and power spectrum", "System JSON");
    auto* gm = sub("gm", "Global minimality under a pure input", "System JSON");
    auto* split = sub("split", "Split into pure and mixed components", "System JSON");
    auto* rtf = sub("realize-tf", "Physical realization of a transfer function", "Rational function or state space JSON");
    auto* rps = sub("realize-ps", "Physical realization of a power spectrum Psi(s) J", "Rational function JSON");
    auto* rnoisy = sub("realize-noisy", "Passive realization with added noise channels", "Rational function or state space JSON");
    rnoisy->add_option("--noise-channels", opt.noise_channels, "Number of noise channels")->capture_default_str();
    rnoisy->add_option("--max-restarts", opt.max_restarts, "Seeded restarts")->capture_default_str();
    auto* cid = sub("cascade-id", "Cascade of one-mode stages from a single-channel transfer function",
                    "{\"minus\", \"plus\"} rational functions or a system");
    cid->add_option("--order", opt.order, "Pole pair order: descending or ascending real part")->capture_default_str();
    cid->add_option("--first-pole", opt.first_pole, "Preferred poles re,im (one per stage)")->delimiter(',');
    auto* absorber = sub("absorber", "Coherent quantum absorber", "System JSON");
    auto* qfi = sub("qfi", "Quantum Fisher information of a parameter family", "Family JSON");
    qfi->add_option("--method", opt.method, "time, freq, both or coherent")->capture_default_str();
    qfi->add_option("--omega", opt.omega, "Probe frequency for the coherent QFI");
    qfi->add_flag("--optimize-omega", opt.optimize_omega, "Maximize the coherent QFI over the grid");
    qfi->add_option("--rel-tol", opt.quad_rel_tol, "Quadrature relative tolerance")->capture_default_str();
    auto* sweep = sub("sweep", "QFI rate against stabilization time over coupling factors", "Family JSON");
    sweep->add_option("--couplings", opt.couplings, "Coupling factors")->delimiter(',')->required();
    sweep->add_option("--format", opt.format, "csv or json")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_invalid;
    }

    try {
        std::string text;
        if (sweep->parsed()) {
            auto [csv, js] = cmd_sweep(opt);
            text = csv.empty() ? js.dump(2) + "\n" : csv;
            if (!opt.quiet && !csv.empty()) std::cerr << "sweep: " << opt.couplings.size() << " couplings\n";
        } else {
            json out;
            std::string summary;
            if (validate->parsed()) {
                out = cmd_validate(opt);
                summary = std::string("pr ok, hurwitz ") + (out["hurwitz"].get<bool>() ? "yes" : "no") + ", minimal " +
                          (out["minimal"].get<bool>() ? "yes" : "no");
            } else if (tf->parsed()) {
                out = cmd_tf(opt);
                summary = std::to_string(out["grid"].size()) + " frequencies";
            } else if (ps->parsed()) {
                out = cmd_ps(opt);
                summary = "lyapunov residual " + std::to_string(out["lyapunov_residual"].get<double>());
            } else if (gm->parsed()) {
                out = cmd_gm(opt);
                summary = std::string("globally minimal: ") + (out["globally_minimal"].get<bool>() ? "yes" : "no");
            } else if (split->parsed()) {
                out = cmd_split(opt);
                summary = std::to_string(out["pure"]["n"].get<long>()) + " pure, " +
                          std::to_string(out["mixed"]["n"].get<long>()) + " mixed modes";
            } else if (rtf->parsed()) {
                out = cmd_realize_tf(opt);
            } else if (rps->parsed()) {
                out = cmd_realize_ps(opt);
            } else if (rnoisy->parsed()) {
                out = cmd_realize_noisy(opt);
            } else if (cid->parsed()) {
                out = cmd_cascade_id(opt);
                summary = std::to_string(out["stages"].size()) + " stages";
            } else if (absorber->parsed()) {
                out = cmd_absorber(opt);
                summary = "purity residual " + std::to_string(out["purity_residual"].get<double>());
            } else if (qfi->parsed()) {
                out = cmd_qfi(opt);
            }
            text = out.dump(2) + "\n";
            if (!opt.quiet && !summary.empty()) std::cerr << summary << '\n';
        }
        write_output(opt, text);
    } catch (const Error& e) {
        return report_error(to_string(e.kind()), e.what(), e.is_validation() ? exit_invalid : exit_numerical);
    } catch (const json::exception& e) {
        return report_error("input", e.what(), exit_invalid);
    } catch (const std::exception& e) {
        return report_error("internal", e.what(), exit_numerical);
    }
    return exit_ok;
}
