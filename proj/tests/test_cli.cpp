#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <json.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string data_dir = QLS_TEST_DATA;

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

Run run(const std::string& args) {
    static int counter = 0;
    const auto dir = fs::temp_directory_path();
    const auto out = dir / ("qls_cli_out_" + std::to_string(counter));
    const auto err = dir / ("qls_cli_err_" + std::to_string(counter++));
    const std::string cmd = std::string(QLS_BINARY) + " " + args + " > " + out.string() + " 2> " + err.string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

std::string data(const std::string& name) { return data_dir + "/" + name; }

std::complex<double> cval(const json& j) { return {j[0].get<double>(), j[1].get<double>()}; }

json error_object(const std::string& err) {
    // the error object is the last line on standard error
    auto pos = err.rfind("{\"error\"");
    REQUIRE(pos != std::string::npos);
    return json::parse(err.substr(pos));
}

}  // namespace

TEST_CASE("validate reports structural properties") {
    auto r = run("-q validate " + data("one_mode_active.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["pr"] == true);
    CHECK(j["hurwitz"] == true);
    CHECK(j["minimal"] == true);
    CHECK(j["spectral_gap"].get<double>() == doctest::Approx(24.0));
}

TEST_CASE("transfer function is flat-unitary on the grid") {
    auto r = run("-q tf " + data("one_mode_active.json") + " --grid 0,0.5,3,-7");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["values"].size() == 4);
    CHECK(j["flat_unitarity_defect"].get<double>() < 1e-10);
}

TEST_CASE("stationary state and power spectrum") {
    auto r = run("-q ps " + data("passive_pair_x0.json") + " --grid auto");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["lyapunov_residual"].get<double>() < 1e-10);
    CHECK(j["values"].size() == j["grid"].size());
}

TEST_CASE("global minimality of the two-mode passive family") {
    for (auto [file, gm, pure] : {std::tuple{"passive_pair_x0.json", true, 0}, std::tuple{"passive_pair_x8.json", true, 0},
                                  std::tuple{"passive_pair_xm1.json", false, 1}, std::tuple{"passive_pair_xm4.json", false, 2}}) {
        auto r = run(std::string("-q gm ") + data(file));
        REQUIRE(r.code == 0);
        auto j = json::parse(r.out);
        CHECK(j["globally_minimal"] == gm);
        CHECK(j["pure_modes"] == pure);
    }
}

TEST_CASE("split writes both components") {
    auto r = run("-q split " + data("passive_pair_xm1.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["pure"]["n"] == 1);
    CHECK(j["mixed"]["n"] == 1);
}

TEST_CASE("cascade identification in both pole orders") {
    auto a = json::parse(run("-q cascade-id " + data("two_stage_cascade_tf.json")).out);
    REQUIRE(a["stages"].size() == 2);
    CHECK(a["stages"][0]["c"].get<double>() == doctest::Approx(14.386).epsilon(1e-4));
    CHECK(a["tf_residual"].get<double>() < 1e-8);
    auto b = json::parse(run("-q cascade-id " + data("two_stage_cascade_tf.json") + " --order ascending").out);
    REQUIRE(b["stages"].size() == 2);
    CHECK(b["stages"][0]["c"].get<double>() == doctest::Approx(0.1933).epsilon(1e-3));
}

TEST_CASE("transfer-function realization round trip through files") {
    const auto sys_file = (fs::temp_directory_path() / "qls_cli_cascade.json").string();
    auto a = run("-q cascade-id " + data("two_stage_cascade_tf.json") + " -o " + sys_file);
    REQUIRE(a.code == 0);
    auto sys = json::parse(slurp(sys_file))["system"];
    std::ofstream(sys_file) << sys.dump();
    auto v = run("-q validate " + sys_file);
    CHECK(v.code == 0);
    auto r = run("-q realize-tf " + data("two_stage_cascade_tf.json"));
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["tf_residual"].get<double>() < 1e-7);
    fs::remove(sys_file);
}

TEST_CASE("power spectrum realization") {
    auto r = run("-q realize-ps " + data("one_mode_swapped_ps.json"));
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    CHECK(j["ps_residual"].get<double>() < 1e-8);
    for (const auto& e : j["eigenvalues"]) CHECK(cval(e).real() == doctest::Approx(-1.5));
}

TEST_CASE("noisy realization") {
    auto r = run("-q realize-noisy " + data("noisy_tf.json") + " --noise-channels 1 --seed 3");
    REQUIRE(r.code == 0);
    auto j = json::parse(r.out);
    const auto& cm = j["system"]["C"]["minus"];
    CHECK(std::abs(cval(cm[0][0])) == doctest::Approx(6.0).epsilon(1e-8));
    CHECK(std::abs(cval(cm[1][0])) == doctest::Approx(std::sqrt(3.0)).epsilon(1e-8));
    CHECK(j["accessible_tf_residual"].get<double>() < 1e-8);
}

TEST_CASE("absorber writes the dual to a file") {
    const auto out = (fs::temp_directory_path() / "qls_cli_dual.json").string();
    auto r = run("-q absorber " + data("absorber_two_mode.json") + " -o " + out);
    REQUIRE(r.code == 0);
    auto j = json::parse(slurp(out));
    CHECK(j["purity_residual"].get<double>() < 1e-6);
    CHECK(j["dual"]["n"] == 2);
    fs::remove(out);
}

TEST_CASE("stationary QFI of the cavity family") {
    for (const char* method : {"time", "freq"}) {
        auto r = run(std::string("-q qfi ") + data("cavity_family.json") + " --method " + method);
        REQUIRE(r.code == 0);
        // N = 1, c = 2: 16 N (N + 1) / c^2 = 8
        CHECK(json::parse(r.out)["value"].get<double>() == doctest::Approx(8.0).epsilon(1e-3));
    }
}

TEST_CASE("coupling sweep emits CSV") {
    auto r = run("-q sweep " + data("cavity_family.json") + " --couplings 0.05,0.1,0.2,0.4");
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "coupling,tau,f,slope_fit");
    int rows = 0;
    double slope = 0.0;
    while (std::getline(in, line)) {
        ++rows;
        slope = std::stod(line.substr(line.rfind(',') + 1));
    }
    CHECK(rows == 4);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("identical inputs give byte-identical output") {
    const std::string args = "-q realize-noisy " + data("noisy_tf.json") + " --seed 11";
    CHECK(run(args).out == run(args).out);
    const std::string a2 = "-q absorber " + data("absorber_two_mode.json");
    CHECK(run(a2).out == run(a2).out);
}

TEST_CASE("input validation failures exit with 2") {
    for (const char* file : {"malformed.json", "nonphysical.json", "does_not_exist.json"}) {
        auto r = run(std::string("-q validate ") + data(file));
        CHECK(r.code == 2);
        CHECK(r.out.empty());
        CHECK(error_object(r.err)["error"]["exit_code"] == 2);
    }
    auto u = run("-q ps " + data("unstable.json"));
    CHECK(u.code == 2);
    CHECK(error_object(u.err)["error"]["kind"] == "not_hurwitz");
    CHECK(run("-q").code == 2);
    CHECK(run("-q frobnicate x").code == 2);
}

TEST_CASE("numerical failures exit with 3 and leave no result file") {
    const auto out = (fs::temp_directory_path() / "qls_cli_never.json").string();
    fs::remove(out);
    auto r = run("-q realize-ps " + data("one_mode_reference_ps.json") + " -o " + out);
    CHECK(r.code == 3);
    CHECK_FALSE(fs::exists(out));
    CHECK(error_object(r.err)["error"]["kind"] == "realization");
}
