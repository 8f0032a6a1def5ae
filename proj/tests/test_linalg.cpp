#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "twophoton/linalg.hpp"

using namespace twophoton;

namespace {

// Plain Taylor sum; adequate for small norms.
COperator taylor_exp(const COperator& a) {
    COperator term = COperator::identity(a.dim()), sum = term;
    for (int k = 1; k < 80; ++k) {
        term = term * a;
        term *= 1.0 / k;
        sum += term;
    }
    return sum;
}

}  // namespace

TEST_CASE("vector arithmetic and conjugate-linear inner product") {
    CVector a{{1, 2}, {0, -1}}, b{{3, 0}, {1, 1}};
    CHECK(dot(a, b) == std::conj(cplx(1, 2)) * cplx(3, 0) + std::conj(cplx(0, -1)) * cplx(1, 1));
    CHECK(dot(I_UNIT * a, b) == -I_UNIT * dot(a, b));
    CHECK(a.norm2() == doctest::Approx(6.0));
    CVector c = a;
    c.axpy(2.0, b);
    CHECK(c[0] == cplx(7, 2));
    CHECK(CVector::basis(3, 1)[1] == cplx(1, 0));
    CHECK(CVector(2).is_zero());
}

TEST_CASE("operator products, adjoint and trace") {
    std::mt19937_64 rng(1);
    const COperator a = fixtures::random_operator(rng, 4), b = fixtures::random_operator(rng, 4);
    CHECK(max_abs_diff((a * b).adjoint(), b.adjoint() * a.adjoint()) < 1e-12);
    CHECK(std::abs((a * b).trace() - (b * a).trace()) < 1e-12);
    const CVector x = fixtures::random_state(rng, 4);
    CHECK(max_abs_diff((a * b) * x, a * (b * x)) < 1e-12);
    CHECK(max_abs_diff(COperator::outer(x, x) * x, x) < 1e-12);
}

TEST_CASE("matrix exponential against closed forms") {
    COperator nil(2);
    nil(0, 1) = 1.0;
    const COperator e = matexp(nil);
    CHECK(std::abs(e(0, 0) - 1.0) < 1e-15);
    CHECK(std::abs(e(0, 1) - 1.0) < 1e-15);
    CHECK(std::abs(e(1, 0)) < 1e-15);

    const double th = 0.7;
    COperator sy(2);
    sy(0, 1) = -th;
    sy(1, 0) = th;
    const COperator r = matexp(sy);
    CHECK(std::abs(r(0, 0) - std::cos(th)) < 1e-14);
    CHECK(std::abs(r(1, 0) - std::sin(th)) < 1e-14);

    const COperator d = matexp(COperator::diagonal({-30.0, cplx(0, 100), 12.0}));
    CHECK(std::abs(d(0, 0) - std::exp(-30.0)) < 1e-14 * std::exp(-30.0) * 100);
    CHECK(std::abs(d(1, 1) - std::exp(cplx(0, 100))) < 1e-12);
    CHECK(std::abs(d(2, 2) - std::exp(12.0)) / std::exp(12.0) < 1e-13);
}

TEST_CASE("matrix exponential against a Taylor sum and inverse identity") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 5; ++rep) {
        COperator a = fixtures::random_operator(rng, 5);
        a *= 0.3;
        CHECK(max_abs_diff(matexp(a), taylor_exp(a)) < 1e-12);
        COperator big = fixtures::random_operator(rng, 5);
        big *= 4.0;
        COperator minus = big;
        minus *= -1.0;
        CHECK(max_abs_diff(matexp(big) * matexp(minus), COperator::identity(5)) < 1e-8);
    }
}

TEST_CASE("linear solve") {
    std::mt19937_64 rng(3);
    const COperator a = fixtures::random_operator(rng, 6), b = fixtures::random_operator(rng, 6);
    CHECK(max_abs_diff(a * solve(a, b), b) < 1e-11);
    CHECK_THROWS_AS(solve(COperator(3), COperator::identity(3)), NumericError);
}

TEST_CASE("Hermitian eigendecomposition") {
    std::mt19937_64 rng(4);
    COperator h = fixtures::random_operator(rng, 7);
    h = 0.5 * (h + h.adjoint());
    const EigenResult er = eigh(h);
    for (std::size_t k = 1; k < er.values.size(); ++k) CHECK(er.values[k - 1] <= er.values[k]);
    std::vector<cplx> d(er.values.begin(), er.values.end());
    const COperator& v = er.vectors;
    CHECK(max_abs_diff(v * COperator::diagonal(d) * v.adjoint(), h) < 1e-12);
    CHECK(max_abs_diff(v.adjoint() * v, COperator::identity(7)) < 1e-12);

    COperator two(2);
    two(0, 0) = 1.0;
    two(1, 1) = -1.0;
    two(0, 1) = cplx(0, 2);
    two(1, 0) = cplx(0, -2);
    const EigenResult e2 = eigh(two);
    CHECK(e2.values[0] == doctest::Approx(-std::sqrt(5.0)).epsilon(1e-14));
    CHECK(e2.values[1] == doctest::Approx(std::sqrt(5.0)).epsilon(1e-14));
}

TEST_CASE("Kronecker products") {
    std::mt19937_64 rng(5);
    const COperator a = fixtures::random_operator(rng, 2), b = fixtures::random_operator(rng, 3);
    const COperator k = kron(a, b);
    REQUIRE(k.dim() == 6);
    CHECK(k(1 * 3 + 2, 0 * 3 + 1) == a(1, 0) * b(2, 1));
    const CVector x = fixtures::random_state(rng, 2), y = fixtures::random_state(rng, 3);
    CHECK(max_abs_diff(k * kron(x, y), kron(a * x, b * y)) < 1e-12);
    CHECK_THROWS_AS(kron(COperator(200), COperator(200), 1000), SizingError);
}

TEST_CASE("density-matrix diagnostics") {
    std::mt19937_64 rng(6);
    const CVector x = fixtures::random_state(rng, 3);
    const HermitianReport r = hermitian_part_checks(COperator::outer(x, x));
    CHECK(r.hermiticity_defect < 1e-15);
    CHECK(r.min_eigenvalue > -1e-14);
    CHECK(std::abs(r.trace - 1.0) < 1e-14);
}
