#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "qls/algebra.hpp"
#include "test_util.hpp"

using namespace qls;

TEST_CASE("doubled blocks round trip") {
    CMat A(1, 2), B(1, 2);
    A << cplx(1, 2), cplx(0, -1);
    B << cplx(3, 0), cplx(0.5, 0.5);
    CMat D = doubled(A, B);
    CHECK(D.rows() == 2);
    CHECK(D.cols() == 4);
    CHECK(is_doubled_up(D));
    CHECK((minus_block(D) - A).norm() == doctest::Approx(0.0));
    CHECK((plus_block(D) - B).norm() == doctest::Approx(0.0));
    D(1, 0) += 0.1;
    CHECK_FALSE(is_doubled_up(D));
}

TEST_CASE("flat adjoint of a doubled-up product") {
    std::mt19937 rng(3);
    CMat X = testutil::random_doubled(2, 3, rng);
    CMat Y = testutil::random_doubled(3, 2, rng);
    CHECK((flat(X * Y) - flat(Y) * flat(X)).norm() < 1e-12);
    CHECK((flat(flat(X)) - X).norm() < 1e-12);
}

TEST_CASE("odd dimensions are rejected") {
    CMat M = CMat::Identity(3, 3);
    CHECK_THROWS_AS(flat(M), Error);
    CHECK_FALSE(is_doubled_up(M));
}

TEST_CASE("vacuum basis transform reproduces a squeezed input") {
    CMat N(1, 1), M(1, 1);
    N << 1.0;
    M << std::sqrt(2.0);
    CMat S = vacuum_basis_transform(N, M);
    CHECK(is_symplectic(S, 1e-10));
    CMat V = input_covariance(N, M);
    CHECK((S * vacuum_covariance(1) * S.adjoint() - V).norm() < 1e-10);
}

TEST_CASE("vacuum basis transform for a two-mode squeezed input") {
    const double r = 0.7;
    CMat N = CMat::Identity(2, 2) * std::sinh(r) * std::sinh(r);
    CMat M = CMat::Zero(2, 2);
    M(0, 1) = M(1, 0) = std::sinh(r) * std::cosh(r);
    CMat S = vacuum_basis_transform(N, M);
    CHECK(is_symplectic(S, 1e-10));
    CHECK((S * vacuum_covariance(2) * S.adjoint() - input_covariance(N, M)).norm() < 1e-10);
}

TEST_CASE("vacuum basis transform rejects mixed inputs") {
    CMat N(1, 1), M(1, 1);
    N << 1.0;
    M << 0.5;
    CHECK_THROWS_AS(vacuum_basis_transform(N, M), Error);
}

TEST_CASE("williamson eigenvalues of a thermal state") {
    CMat N = CMat::Zero(2, 2);
    N(0, 0) = 0.3;
    N(1, 1) = 2.0;
    auto w = williamson(input_covariance(N, CMat::Zero(2, 2)), 2);
    REQUIRE(w.symplectic_eigenvalues.size() == 2);
    CHECK(w.symplectic_eigenvalues[0] == doctest::Approx(0.3));
    CHECK(w.symplectic_eigenvalues[1] == doctest::Approx(2.0));
    CHECK(is_symplectic(w.transform, 1e-9));
}

TEST_CASE("williamson eigenvalues are symplectic invariants") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 1 + trial % 3;
        CMat V = testutil::random_covariance(n, rng);
        auto w = williamson(V, n);
        CMat S = testutil::random_symplectic(n, rng);
        auto w2 = williamson(S * V * S.adjoint(), n);
        for (Eigen::Index k = 0; k < n; ++k)
            CHECK(w.symplectic_eigenvalues[k] == doctest::Approx(w2.symplectic_eigenvalues[k]).epsilon(1e-7));
        CHECK(is_symplectic(w.transform, 1e-8));
        CMat D = w.transform * V * w.transform.adjoint();
        CMat canon = CMat::Zero(2 * n, 2 * n);
        for (Eigen::Index k = 0; k < n; ++k) {
            canon(k, k) = w.symplectic_eigenvalues[k] + 1.0;
            canon(n + k, n + k) = w.symplectic_eigenvalues[k];
        }
        CHECK((D - canon).norm() < 1e-8 * std::max(1.0, V.norm()));
    }
}

TEST_CASE("factor_flat_gram of the identity is the identity") {
    CMat T = factor_flat_gram(CMat::Identity(4, 4));
    CHECK((T - CMat::Identity(4, 4)).norm() < 1e-10);
}

TEST_CASE("factor_flat_gram of a one-mode positive gram") {
    CMat G = doubled(CMat::Constant(1, 1, 2.5), CMat::Zero(1, 1));
    CMat T = factor_flat_gram(G);
    CHECK((flat(T) * T - G).norm() < 1e-12);
}

TEST_CASE("factor_flat_gram of a negative gram swaps blocks") {
    CMat G = -0.2054 * CMat::Identity(2, 2);
    CMat T = factor_flat_gram(G);
    CHECK(is_doubled_up(T));
    CHECK((flat(T) * T - G).norm() < 1e-12);
    CHECK(std::abs(minus_block(T)(0, 0)) < 1e-12);
}

TEST_CASE("factor_flat_gram on random flat grams") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 1 + trial % 4;
        CMat N = testutil::random_doubled(n, n, rng);
        CMat G = flat(N) * N;
        auto f = factor_flat_gram_full(G);
        CHECK(is_doubled_up(f.T, 1e-8));
        CHECK((flat(f.T) * f.T - G).norm() < 1e-8 * std::max(1.0, G.norm()));
    }
}

TEST_CASE("factor_flat_gram rejects non-flat input") {
    CMat G = CMat::Zero(2, 2);
    G(0, 1) = 1.0;
    G(1, 0) = 2.0;
    CHECK_THROWS_AS(factor_flat_gram(G), Error);
}

TEST_CASE("sylvester solver") {
    std::mt19937 rng(2);
    CMat A = testutil::random_complex(3, 3, rng) - 4.0 * CMat::Identity(3, 3);
    CMat B = testutil::random_complex(2, 2, rng) - 4.0 * CMat::Identity(2, 2);
    CMat Q = testutil::random_complex(3, 2, rng);
    CMat X = solve_sylvester(A, B, Q);
    CHECK((A * X + X * B - Q).norm() < 1e-10);
}

TEST_CASE("numerical rank") {
    CMat M = CMat::Zero(3, 3);
    M(0, 0) = 1.0;
    M(1, 1) = 1e-14;
    CHECK(numerical_rank(M) == 1);
    CHECK(numerical_rank(CMat::Identity(3, 3)) == 3);
}
