#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qls/estimation.hpp"
#include "test_util.hpp"

using namespace qls;

namespace {

CMat scalar(cplx v) { return CMat::Constant(1, 1, v); }

QLSystem cavity(double c, double w0) {
    return make_system(doubled(scalar(c), scalar(0.0)), doubled(scalar(w0), scalar(0.0)));
}

ParamFamily detuning_family(double c) {
    return ParamFamily{[c](double th) { return cavity(c, th); }};
}

InputCovariance squeezed(double n) { return make_input(scalar(n), scalar(std::sqrt(n * (n + 1)))); }

}  // namespace

TEST_CASE("stationary QFI rate of a detuned cavity") {
    for (auto [c, n] : {std::pair{1.0, 0.5}, std::pair{2.0, 1.0}, std::pair{0.5, 0.2}}) {
        const double expect = 16.0 * n * (n + 1) / (c * c);
        auto fr = stationary_qfi_rate_freq(detuning_family(c), 0.0, squeezed(n));
        auto tm = stationary_qfi_rate_time(detuning_family(c), 0.0, squeezed(n));
        MESSAGE("c=" << c << " n=" << n << " freq=" << fr.value << " time=" << tm.value << " expect=" << expect);
        CHECK(fr.value == doctest::Approx(expect).epsilon(1e-4));
        CHECK(tm.value == doctest::Approx(expect).epsilon(1e-4));
    }
}

TEST_CASE("coherent QFI of a detuned cavity") {
    for (double c : {1.0, 2.0}) {
        const double E = 3.0;
        CVec alpha = CVec::Constant(1, std::sqrt(E));
        auto r = coherent_qfi(detuning_family(c), 0.4, 0.4, alpha);
        CHECK(r.value == doctest::Approx(64.0 * E / std::pow(c, 4)).epsilon(1e-6));
        // a global phase on the amplitude changes nothing
        auto p = coherent_qfi(detuning_family(c), 0.4, 0.4, alpha * std::polar(1.0, 0.7));
        CHECK(p.value == doctest::Approx(r.value).epsilon(1e-9));
    }
}

TEST_CASE("coherent QFI for the coupling of a cavity") {
    const double a = 1.5, c = 0.8;
    ParamFamily fam{[a](double th) { return cavity(th, a); }};
    std::vector<double> grid;
    for (int k = -2000; k <= 2000; ++k) grid.push_back(a + 1e-3 * k);
    auto r = coherent_qfi(fam, c, 0.0, CVec::Constant(1, 1.0), true, grid);
    CHECK(std::abs(std::abs(r.diagnostics["omega"] - a) - 0.5 * c * c) < 2e-3);
    // |dlambda/dc| = 2 / c at the optimum, unit amplitude
    CHECK(r.value == doctest::Approx(4.0 * 4.0 / (c * c)).epsilon(1e-5));
}

TEST_CASE("parameter-independent families carry no information") {
    ParamFamily fam{[](double) { return cavity(1.3, 0.2); }};
    CHECK(coherent_qfi(fam, 0.0, 0.1, CVec::Constant(1, 2.0)).value == doctest::Approx(0.0));
    CHECK(std::abs(stationary_qfi_rate_time(fam, 0.0, squeezed(0.5)).value) < 1e-12);
    CHECK(std::abs(stationary_qfi_rate_freq(fam, 0.0, squeezed(0.5)).value) < 1e-12);
}

TEST_CASE("passive system with vacuum input has zero stationary QFI") {
    auto r = stationary_qfi_rate_freq(detuning_family(1.0), 0.0, vacuum_input(1));
    CHECK(std::abs(r.value) < 1e-10);
    CHECK(std::abs(stationary_qfi_rate_time(detuning_family(1.0), 0.0, vacuum_input(1)).value) < 1e-10);
}

TEST_CASE("squeezed plus coherent probes") {
    auto r = squeezed_coherent_qfi(1.0, 1e4);
    CHECK(r.value / r.diagnostics["leading"] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(r.value >= r.diagnostics["leading"]);
    // all energy in one arm scales linearly
    CHECK(squeezed_coherent_qfi(1.0, 100.0, 0.0).value == doctest::Approx(100.0));
    CHECK(squeezed_coherent_qfi(1.0, 0.0, 100.0).value == doctest::Approx(100.0));
    CHECK(squeezed_coherent_qfi(2.0, 50.0, 50.0).value == doctest::Approx(4.0 * squeezed_coherent_qfi(1.0, 100.0).value));
    CHECK(squeezed_coherent_qfi(CMat::Zero(2, 2), 10.0).value == 0.0);
    CMat L = CMat::Identity(2, 2);
    L(1, 1) = 3.0;
    CHECK(squeezed_coherent_qfi(L, 10.0).value == doctest::Approx(900.0));
}

TEST_CASE("multi-parameter N00N bounds for the identity Jacobian") {
    for (int d : {1, 2, 3, 5}) {
        const double N = 10.0;
        auto b = multiparam_noon_bounds(Eigen::MatrixXd::Identity(d, d), N);
        CHECK(b.H == doctest::Approx(d));
        CHECK(b.K == doctest::Approx(d * d - d));
        CHECK(b.trace_cr_strategy1 == doctest::Approx(std::pow(d, 3) / (N * N)));
        CHECK(b.trace_cr_strategy2_min <= d * d / (N * N) + 1e-12);
        CHECK(strategy2_trace(Eigen::MatrixXd::Identity(d, d), N, b.alpha_opt_sq) ==
              doctest::Approx(b.trace_cr_strategy2_min).epsilon(1e-9));
    }
    auto one = multiparam_noon_bounds(Eigen::MatrixXd::Constant(1, 1, 2.0), 5.0);
    CHECK(one.trace_cr_strategy1 == doctest::Approx(1.0 / (25.0 * 4.0)));
    CHECK(one.trace_cr_strategy2_min == doctest::Approx(1.0 / (25.0 * 4.0)));
    CHECK(one.alpha_opt_sq == doctest::Approx(0.5));
    CHECK_THROWS_AS(multiparam_noon_bounds(Eigen::MatrixXd::Zero(2, 2), 5.0), Error);
    // symmetric Jacobians: row and column sums of the cofactor matrix coincide
    Eigen::MatrixXd sym(2, 2);
    sym << 2.0, 0.5, 0.5, 1.0;
    auto s2 = multiparam_noon_bounds(sym, 5.0);
    CHECK(s2.trace_cr_strategy2_min == doctest::Approx(s2.trace_cr_strategy2_exact).epsilon(1e-12));
}

TEST_CASE("multi-parameter bounds on random Jacobians") {
    std::mt19937 rng(51);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + trial % 3;
        Eigen::MatrixXd jac(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) jac(i, j) = g(rng) + (i == j ? 2.0 : 0.0);
        auto b = multiparam_noon_bounds(jac, 7.0);
        CHECK(b.trace_cr_strategy2_min <= b.trace_cr_strategy1 * (1 + 1e-12));
        CHECK(b.trace_cr_strategy2_min <= d * b.H / (49.0 * b.det * b.det) * (1 + 1e-12));
        // strategy 1 closed form against the inverse of its Fisher matrix
        const Eigen::MatrixXd F = (49.0 / (d * d)) * jac.transpose() * jac;
        CHECK(b.trace_cr_strategy1 == doctest::Approx(F.inverse().trace()).epsilon(1e-9));
        // the column-sum variant is the true minimum of the strategy-2 bound in alpha^2
        const double t0 = strategy2_trace(jac, 7.0, b.alpha_opt_sq_exact);
        CHECK(t0 == doctest::Approx(b.trace_cr_strategy2_exact).epsilon(1e-9));
        CHECK(b.trace_cr_strategy2_exact <= b.trace_cr_strategy1 * (1 + 1e-12));
        for (double f : {0.9, 1.1}) {
            const double a = b.alpha_opt_sq * f;
            if (a * d < 1) CHECK(strategy2_trace(jac, 7.0, a) >= t0 * (1 - 1e-12));
        }
    }
}

TEST_CASE("atomic ensemble coupling profile") {
    for (double kappa : {1.0, 2.0}) {
        std::vector<double> grid;
        for (int k = -400; k <= 400; ++k) grid.push_back(0.01 * k);
        auto p = ensemble_coupling_profile(kappa, grid);
        CHECK(p.omega_opt == doctest::Approx(kappa / 2));
        CHECK(p.f_opt_sq == doctest::Approx(4.0));
        const auto it = std::max_element(p.f.begin(), p.f.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        CHECK(std::abs(std::abs(p.omega[it - p.f.begin()]) - kappa / 2) < 0.011);
        CHECK(p.f[400] == 0.0);
    }
    CHECK_THROWS_AS(ensemble_coupling_profile(0.0, {1.0}), Error);
}

TEST_CASE("time and frequency QFI rates agree on random families") {
    std::mt19937 rng(52);
    std::uniform_int_distribution<int> pick(0, 3);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::Index n = 1 + trial % 2;
        auto sys = testutil::random_stable_system(n, 1, rng, trial % 2 == 0 ? 0.0 : 0.4);
        std::vector<ParamPath> paths(2);
        paths[0].block = ParamPath::Block::Omega;
        paths[0].row = paths[0].col = 0;
        paths[1].block = ParamPath::Block::C;
        paths[1].col = n - 1;
        paths[1].coefficient = cplx(0.3, 0.2);
        auto fam = affine_family(sys, paths);
        auto in = squeezed(0.3 + 0.2 * pick(rng));
        const double ft = stationary_qfi_rate_time(fam, 0.0, in).value;
        const double ff = stationary_qfi_rate_freq(fam, 0.0, in).value;
        CHECK(ft >= -1e-10);
        CHECK(std::abs(ft - ff) <= 1e-3 * std::max(ff, 1e-6));
    }
}

TEST_CASE("gauge directions carry no information") {
    std::mt19937 rng(53);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::Index n = 1 + trial % 2;
        auto sys = testutil::random_stable_system(n, 1, rng, 0.4);
        const CMat R = testutil::random_hermitian_doubled(n, rng);
        ParamFamily fam{[sys, R, n](double th) {
            const CMat T = (I_unit * th * jmat(n) * R).exp();
            return gauge_transform(sys, T);
        }};
        auto in = squeezed(0.5);
        const double scale = sys.C.squaredNorm() + sys.Omega.squaredNorm();
        auto tm = stationary_qfi_rate_time(fam, 0.0, in);
        CHECK(std::abs(tm.value) < 1e-6 * scale);
        CHECK(tm.diagnostics["D_norm"] < 1e-5 * std::sqrt(scale));
        CHECK(std::abs(stationary_qfi_rate_freq(fam, 0.0, in).value) < 1e-6 * scale);
    }
}

TEST_CASE("destabilized cavity scaling") {
    auto in = squeezed(0.5);
    auto t = destabilized_scaling_check([](double c2) { return detuning_family(std::sqrt(c2)); },
                                        {1.0, 0.5, 0.25, 0.125}, 0.0, in);
    REQUIRE(t.rows.size() == 4);
    CHECK(t.slope == doctest::Approx(1.0).epsilon(0.05));
    for (const auto& row : t.rows) CHECK(row.f == doctest::Approx(16.0 * 0.75 / row.coupling).epsilon(1e-4));

    auto z = destabilized_scaling_check([](double c2) { return detuning_family(std::sqrt(c2)); }, {1.0, 0.5}, 0.0,
                                        vacuum_input(1));
    for (const auto& row : z.rows) CHECK(std::abs(row.f) < 1e-10);
}

TEST_CASE("one weakly damped mode in a two-mode system") {
    // the second mode leaks only through a weak exchange with the first; its detuning is the parameter
    auto family = [](double g) {
        return ParamFamily{[g](double th) {
            CMat c(1, 2), om(2, 2);
            c << 1.5, 0.0;
            om << 0.0, g, g, th;
            return make_system(doubled(c, CMat::Zero(1, 2)), doubled(om, CMat::Zero(2, 2)));
        }};
    };
    auto t = destabilized_scaling_check(family, {0.1, 0.07, 0.05, 0.035}, 0.0, squeezed(0.5));
    CHECK(t.slope == doctest::Approx(1.0).epsilon(0.05));
}
