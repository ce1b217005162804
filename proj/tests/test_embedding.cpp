// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "rqp/embedding.hpp"

using namespace rqp;

namespace {

std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64{seed}; }

CMatrix random_cmatrix(std::mt19937_64& rng, int rows, int cols) {
    std::normal_distribution<double> nd;
    CMatrix M(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) M(i, j) = Complex(nd(rng), nd(rng));
    return M;
}

}  // namespace

TEST_CASE("embed_row definitional layout", "[embedding]") {
    CRowVector h1(1);
    h1 << Complex(1, 2);
    RRowVector e1 = embed_row(h1);
    REQUIRE(e1.size() == 2);
    CHECK(e1[0] == 1.0);
    CHECK(e1[1] == 2.0);

    CRowVector h2(2);
    h2 << Complex(1, 0), Complex(0, 1);
    RRowVector e2 = embed_row(h2);
    REQUIRE(e2.size() == 4);
    CHECK(e2[0] == 1.0);
    CHECK(e2[1] == 0.0);
    CHECK(e2[2] == 0.0);
    CHECK(e2[3] == 1.0);
}

TEST_CASE("embed_matrix definitional layout", "[embedding]") {
    CMatrix P1(1, 1);
    P1 << Complex(1, 0);
    RMatrix E1 = embed_matrix(P1);
    CHECK(E1.isApprox(RMatrix::Identity(2, 2)));

    CMatrix Pi(1, 1);
    Pi << Complex(0, 1);
    RMatrix Ei = embed_matrix(Pi);
    RMatrix expect(2, 2);
    expect << 0, 1, -1, 0;
    CHECK(Ei.isApprox(expect));
}

TEST_CASE("multiplication homomorphism", "[embedding]") {
    auto rng = make_rng(42);
    for (int rep = 0; rep < 50; ++rep) {
        const int nt = 1 + static_cast<int>(rng() % 5);
        const int k = 1 + static_cast<int>(rng() % 5);
        CMatrix P = random_cmatrix(rng, nt, k);
        CRowVector h = random_cmatrix(rng, 1, nt).row(0);
        RRowVector lhs = embed_row(h) * embed_matrix(P);
        RRowVector rhs = embed_row((h * P).eval());
        REQUIRE(lhs.size() == rhs.size());
        CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, rhs.norm()));
    }
}

TEST_CASE("norm relation: ||vec(embed)||^2 = 2 tr(P^H P)", "[embedding]") {
    auto rng = make_rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        CMatrix P = random_cmatrix(rng, 1 + static_cast<int>(rng() % 6), 1 + static_cast<int>(rng() % 6));
        const double lhs = embed_matrix(P).squaredNorm();
        const double rhs = 2.0 * (P.adjoint() * P).trace().real();
        CHECK(lhs == Catch::Approx(rhs).epsilon(1e-13));
    }
}

TEST_CASE("unembed round trip and trivial inverses", "[embedding]") {
    RMatrix I2 = RMatrix::Identity(2, 2);
    CMatrix back = unembed_matrix(I2);
    CHECK(back(0, 0) == Complex(1, 0));

    RMatrix J(2, 2);
    J << 0, 1, -1, 0;
    CHECK(unembed_matrix(J)(0, 0) == Complex(0, 1));

    auto rng = make_rng(99);
    for (int rep = 0; rep < 30; ++rep) {
        CMatrix P = random_cmatrix(rng, 1 + static_cast<int>(rng() % 5), 1 + static_cast<int>(rng() % 5));
        CMatrix Q = unembed_matrix(embed_matrix(P));
        CHECK((P - Q).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("unembed rejects corrupted block ties", "[embedding]") {
    auto rng = make_rng(3);
    CMatrix P = random_cmatrix(rng, 2, 2);
    RMatrix M = embed_matrix(P);
    M(0, 0) += 1e-6;  // break the Re tie
    CHECK_THROWS_AS(unembed_matrix(M), std::invalid_argument);
    CHECK(block_tie_residual(M) == Catch::Approx(1e-6).epsilon(1e-6));
    M(0, 0) -= 1e-6;
    CHECK_NOTHROW(unembed_matrix(M));
}
