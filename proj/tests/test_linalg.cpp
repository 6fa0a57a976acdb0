#include <doctest.h>

#include "ringbp/linalg.hpp"
#include "test_support.hpp"

using namespace ringbp;

TEST_CASE("hermitian_solve identity and scaling") {
    CMatrix eye = CMatrix::Identity(4, 4);
    CVector b(4);
    b << Complex(1, 0), Complex(2, 0), Complex(3, 0), Complex(4, 0);
    CHECK((hermitian_solve(eye, b) - b).norm() == doctest::Approx(0.0));

    CVector e0 = CVector::Zero(4);
    e0(0) = 1.0;
    const CVector x = hermitian_solve(2.0 * eye, e0);
    CHECK(std::abs(x(0) - Complex(0.5, 0.0)) < 1e-15);
    CHECK(x.tail(3).norm() == doctest::Approx(0.0));
}

TEST_CASE("hermitian_solve residual oracle on random HPD systems") {
    StreamRng rng(1, {100});
    for (int trial = 0; trial < 20; ++trial) {
        const CMatrix a = testsupport::random_hpd(4, rng);
        const CVector b = testsupport::random_cvector(4, rng);
        const CVector x = hermitian_solve(a, b);
        CHECK((a * x - b).norm() <= 1e-10 * b.norm());
    }
}

TEST_CASE("hermitian_solve rejects non-positive-definite input") {
    CMatrix a = -CMatrix::Identity(3, 3);
    CVector b = CVector::Ones(3);
    CHECK_THROWS_AS(hermitian_solve(a, b), NotPositiveDefinite);
}

TEST_CASE("build_k_matrix trivial cases") {
    const CMatrix h = testsupport::h_ex();
    const double sigma2 = 0.37;

    // All streams excluded: the empty sum leaves the noise term.
    const CMatrix k_all = build_k_matrix(h, sigma2, {0, 1, 2, 3});
    CHECK((k_all - sigma2 * CMatrix::Identity(4, 4)).norm() == doctest::Approx(0.0));

    // Orthonormal columns, nothing excluded.
    const CMatrix q = CMatrix::Identity(4, 3);
    const CMatrix k = build_k_matrix(q, sigma2, {});
    CHECK((k - (sigma2 * CMatrix::Identity(4, 4) + q * q.adjoint())).norm() < 1e-14);
}

TEST_CASE("build_k_matrix matches direct summation on the example channel") {
    const CMatrix h = testsupport::h_ex();
    const double sigma2 = testsupport::sigma2_at_6db();
    const CMatrix k = build_k_matrix(h, sigma2, {0, 1});

    // Direct per-entry summation oracle.
    CMatrix expected = CMatrix::Zero(4, 4);
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            Complex acc = r == c ? Complex(sigma2, 0.0) : Complex(0.0, 0.0);
            for (int col : {2, 3}) {
                acc += h(r, col) * std::conj(h(c, col));
            }
            expected(r, c) = acc;
        }
    }
    CHECK((k - expected).norm() < 1e-14);
    CHECK(is_hermitian(k));

    Eigen::LLT<CMatrix> llt(k);
    CHECK(llt.info() == Eigen::Success);
}
