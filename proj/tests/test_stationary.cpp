#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qls/stationary.hpp"
#include "test_util.hpp"

using namespace qls;

namespace {

CMat scalar(cplx v) { return CMat::Constant(1, 1, v); }

QLSystem cavity(double c, double w0) {
    return make_system(doubled(scalar(c), scalar(0.0)), doubled(scalar(w0), scalar(0.0)));
}

InputCovariance squeezed(double n) { return make_input(scalar(n), scalar(std::sqrt(n * (n + 1)))); }

QLSystem two_mode_passive(double x) {
    CMat c(1, 2), om(2, 2);
    c << 0.0, 2.0 * std::sqrt(2.0);
    om << 4.0 + x, 4.0 - x, 4.0 - x, 4.0 + x;
    om *= 0.5;
    return make_system(doubled(c, CMat::Zero(1, 2)), doubled(om, CMat::Zero(2, 2)));
}

QLSystem from_drift(const CMat& C, const CMat& A) {
    return make_system(C, omega_from_drift(A, C));
}

// Two-mode active system with a fully mixed stationary state.
void absorber_example(CMat& C, CMat& A) {
    C.resize(2, 4);
    C << 5.0, 4.0, 1.0, cplx(0, -1), 1.0, cplx(0, 1), 5.0, 4.0;
    A.resize(4, 4);
    A << cplx(-12, -2), cplx(0, 0.5), 1.0, cplx(-2, -2.5),
         cplx(-20, -0.5), cplx(-7.5, -6), cplx(-6, -7.5), cplx(0, -2),
         1.0, cplx(-2, 2.5), cplx(-12, 2), cplx(0, -0.5),
         cplx(-6, 7.5), cplx(0, 2), cplx(-20, 0.5), cplx(-7.5, 6);
}

}  // namespace

TEST_CASE("passive cavity relaxes to vacuum") {
    auto st = solve_lyapunov(cavity(1.3, 0.7), vacuum_input(1));
    CHECK((st.P - vacuum_covariance(1)).norm() < 1e-12);
    CHECK(st.symplectic_spectrum[0] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("thermal input thermalizes a passive cavity") {
    auto in = make_input(scalar(0.4), scalar(0.0));
    auto st = solve_lyapunov(cavity(1.0, 0.0), in);
    CHECK(std::abs(st.P(0, 0) - 1.4) < 1e-12);
    CHECK(std::abs(st.P(1, 1) - 0.4) < 1e-12);
    CHECK(st.symplectic_spectrum[0] == doctest::Approx(0.4));
}

TEST_CASE("stationary covariance of a two-mode active system") {
    CMat C, A;
    absorber_example(C, A);
    CHECK(pr_residual(A, C) < 1e-12);
    auto sys = from_drift(C, A);
    auto st = solve_lyapunov(sys, vacuum_input(1));
    const CMat& P = st.P;
    CHECK(std::abs(P(0, 0) - 1.1067) < 5e-5);
    CHECK(std::abs(P(0, 1) - cplx(-0.0799, -0.1952)) < 5e-5 * 1.5);
    CHECK(std::abs(P(0, 2) - cplx(-0.1680, 0.0636)) < 5e-5 * 1.5);
    CHECK(std::abs(P(0, 3) - cplx(-0.3262, -0.1575)) < 5e-5 * 1.5);
    CHECK(std::abs(P(1, 1) - 1.7835) < 5e-5);
    CHECK(std::abs(P(1, 3) - cplx(0.8234, -0.3690)) < 5e-5 * 1.5);
    CHECK(std::abs(P(3, 3) - 0.7835) < 5e-5);
    REQUIRE(st.symplectic_spectrum.size() == 2);
    CHECK(st.symplectic_spectrum[0] == doctest::Approx(0.0022).epsilon(0.03));
    CHECK(st.symplectic_spectrum[1] == doctest::Approx(0.3623).epsilon(1e-3));
    CHECK(is_globally_minimal(sys, vacuum_input(1)));
}

TEST_CASE("Lyapunov residual on random systems") {
    std::mt19937 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto sys = testutil::random_stable_system(1 + trial % 4, 1 + trial % 2, rng, 0.3, true);
        auto st = solve_lyapunov(sys, vacuum_input(sys.m()));
        CHECK(st.residual < 1e-10);
        CHECK(st.symplectic_spectrum.front() >= -1e-9);
    }
}

TEST_CASE("non-Hurwitz systems have no stationary state") {
    auto sys = make_system(CMat::Zero(2, 2), doubled(scalar(1.0), scalar(0.0)));
    CHECK_THROWS_AS(solve_lyapunov(sys, vacuum_input(1)), Error);
}

TEST_CASE("passive systems have a trivial vacuum power spectrum") {
    std::mt19937 rng(22);
    auto sys = testutil::random_stable_system(3, 2, rng, 0.0);
    for (double w : testutil::symmetric_grid(sys))
        CHECK((power_spectrum(sys, vacuum_input(2), freq_point(w)) - vacuum_covariance(2)).norm() < 1e-10);
}

TEST_CASE("power spectrum of a one-mode active system") {
    // Denominator 16 s^4 + 1464 s^2 + 40401, poles -1.5 +- 6.93 i
    auto sys = make_system(doubled(scalar(2.0), scalar(I_unit)), doubled(scalar(7.0), scalar(-1.0)));
    for (cplx s : {cplx(0.3, 0.2), cplx(0.0, 1.1), cplx(2.0, 0.0)}) {
        const cplx s2 = s * s;
        const cplx d = 16.0 * s2 * s2 + 1464.0 * s2 + 40401.0;
        CMat expect(2, 2);
        expect << (16.0 * s2 * s2 + 1464.0 * s2 + 53089.0) / d, (s2 * cplx(-448, 48) - cplx(22176, 13484)) / d,
            (s2 * cplx(448, 48) + cplx(22176, -13484)) / d, -12688.0 / d;
        CMat got = power_spectrum(sys, vacuum_input(1), s) * jmat(1);
        CHECK((got - expect).norm() < 1e-10);
    }
}

TEST_CASE("power spectrum is a gauge invariant") {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 5; ++trial) {
        auto sys = testutil::random_stable_system(2, 1, rng);
        auto g = gauge_transform(sys, testutil::random_symplectic(2, rng));
        auto in = squeezed(0.5);
        for (double w : testutil::symmetric_grid(sys)) {
            const cplx s = freq_point(w);
            CHECK((power_spectrum(sys, in, s) - power_spectrum(g, in, s)).norm() < 1e-8);
        }
    }
}

TEST_CASE("power spectrum is a valid covariance for pure inputs") {
    std::mt19937 rng(24);
    for (int trial = 0; trial < 10; ++trial) {
        auto sys = testutil::random_stable_system(1 + trial % 3, 1, rng);
        for (double w : default_grid(sys)) {
            CMat Psi = power_spectrum(sys, squeezed(0.3), freq_point(w));
            Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (Psi + Psi.adjoint()));
            CHECK(es.eigenvalues().minCoeff() > -1e-9 * std::max(1.0, Psi.norm()));
        }
    }
}

TEST_CASE("two-mode passive system under squeezed input") {
    auto in = squeezed(1.0);
    SUBCASE("minimality") {
        CHECK(is_minimal(two_mode_passive(0.0)));
        CHECK_FALSE(is_minimal(two_mode_passive(4.0)));
    }
    SUBCASE("globally minimal points") {
        for (double x : {0.0, 8.0}) {
            auto sys = two_mode_passive(x);
            CHECK(is_globally_minimal(sys, in));
            CHECK(siso_passive_gm(sys, in).globally_minimal);
            auto split = pure_mixed_split(sys, in);
            CHECK(split.pure.n() == 0);
            CHECK(split.mixed.n() == 2);
        }
    }
    SUBCASE("one real eigenvalue") {
        auto sys = two_mode_passive(-1.0);
        CHECK_FALSE(is_globally_minimal(sys, in));
        auto gm = siso_passive_gm(sys, in);
        CHECK_FALSE(gm.globally_minimal);
        CHECK(gm.reducible_eigs.size() == 1);
        auto split = pure_mixed_split(sys, in);
        CHECK(split.pure.n() == 1);
        CHECK(split.mixed.n() == 1);
        const auto frame = vacuum_frame(sys, in);
        auto rebuilt = series_product(split.pure, split.mixed);
        CHECK(tf_distance(rebuilt, frame.system, testutil::symmetric_grid(sys)) < 1e-8);
        for (double w : testutil::symmetric_grid(sys)) {
            const cplx s = freq_point(w);
            CMat a = power_spectrum(split.mixed, vacuum_input(1), s);
            CMat b = power_spectrum(frame.system, vacuum_input(1), s);
            CHECK((a - b).norm() < 1e-8);
        }
        // The pure component is passive in the vacuum frame.
        CHECK(plus_block(split.pure.C).norm() < 1e-6);
    }
    SUBCASE("conjugate pair") {
        auto sys = two_mode_passive(-4.0);
        CHECK_FALSE(is_globally_minimal(sys, in));
        auto gm = siso_passive_gm(sys, in);
        CHECK(gm.reducible_eigs.size() == 2);
        auto split = pure_mixed_split(sys, in);
        CHECK(split.pure.n() == 2);
        CHECK(split.mixed.n() == 0);
    }
}

TEST_CASE("passive cavity with squeezed input") {
    auto in = squeezed(0.5);
    CHECK(siso_passive_gm(cavity(1.0, 0.8), in).globally_minimal);
    CHECK(is_globally_minimal(cavity(1.0, 0.8), in));
    CHECK_FALSE(siso_passive_gm(cavity(1.0, 0.0), in).globally_minimal);
    CHECK_FALSE(is_globally_minimal(cavity(1.0, 0.0), in));
}

TEST_CASE("cascade of mirrored cavities is reducible") {
    auto a = cavity(1.0, 1.5), b = cavity(1.0, -1.5);
    auto sys = series_product(a, b);
    auto gm = siso_passive_gm(sys, squeezed(0.5));
    CHECK_FALSE(gm.globally_minimal);
    CHECK(gm.reducible_eigs.size() == 2);
}

TEST_CASE("passive system with vacuum input is not globally minimal") {
    CHECK_FALSE(is_globally_minimal(cavity(1.0, 0.3), vacuum_input(1)));
    auto split = pure_mixed_split(cavity(1.0, 0.3), vacuum_input(1));
    CHECK(split.pure.n() == 1);
    CHECK(split.mixed.n() == 0);
}

TEST_CASE("mixed inputs are rejected by the global minimality test") {
    auto in = make_input(scalar(0.5), scalar(0.1));
    CHECK_THROWS_AS(is_globally_minimal(cavity(1.0, 0.3), in), Error);
    CHECK_THROWS_AS(make_input(scalar(0.5), scalar(2.0)), Error);
}

TEST_CASE("cascade embedding reproduces the power spectrum") {
    std::mt19937 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        auto sys = testutil::random_stable_system(1 + trial % 3, 1 + trial % 2, rng, 0.3, trial % 2 == 1);
        auto in = trial % 3 == 0 ? vacuum_input(sys.m()) : make_input(CMat::Identity(sys.m(), sys.m()) * 0.5,
                                                                       CMat::Identity(sys.m(), sys.m()) * std::sqrt(0.75));
        auto ss = ps_cascade_embedding(sys, in);
        for (double w : testutil::symmetric_grid(sys)) {
            const cplx s = freq_point(w);
            CHECK((evaluate(ss, s) - power_spectrum(sys, in, s) * jmat(sys.m())).norm() < 1e-8);
        }
    }
    auto decoupled = make_system(CMat(2, 0), CMat(0, 0));
    auto ss = ps_cascade_embedding(decoupled, vacuum_input(1));
    CHECK((ss.D - vacuum_covariance(1) * jmat(1)).norm() == 0.0);
}

TEST_CASE("embedding minimality matches global minimality") {
    std::mt19937 rng(26);
    int gm_count = 0, ngm_count = 0;
    for (int trial = 0; trial < 20; ++trial) {
        // half passive (never globally minimal under vacuum), half active
        auto sys = testutil::random_stable_system(1 + trial % 2, 1, rng, trial % 2 == 0 ? 0.0 : 0.4);
        auto in = vacuum_input(1);
        const bool gm = is_globally_minimal(sys, in);
        auto ss = ps_cascade_embedding(sys, in);
        const bool minimal = is_controllable(ss.A, ss.B) && is_observable(ss.C, ss.A);
        CHECK(gm == minimal);
        (gm ? gm_count : ngm_count)++;
    }
    CHECK(gm_count > 0);
    CHECK(ngm_count > 0);
}

TEST_CASE("split consistency with global minimality on random systems") {
    std::mt19937 rng(27);
    for (int trial = 0; trial < 20; ++trial) {
        auto sys = testutil::random_stable_system(1 + trial % 3, 1 + trial % 2, rng, trial % 3 == 0 ? 0.0 : 0.4);
        auto in = vacuum_input(sys.m());
        auto split = pure_mixed_split(sys, in);
        CHECK(is_globally_minimal(sys, in) == (split.pure.n() == 0));
    }
}
