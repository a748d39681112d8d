#include "kpo/error.hpp"
#include "kpo/polynomial.hpp"

#include <doctest.h>

#include <random>

using namespace kpo;

namespace {

const Polynomial a = Polynomial::monomial(1.0, 0, 1);
const Polynomial ad = Polynomial::monomial(1.0, 1, 0);
const Polynomial one = Polynomial::monomial(1.0, 0, 0);

Polynomial random_hermitian_poly(std::mt19937& rng, int terms, int max_deg = 3, int max_m = 3, int grade = 0) {
    std::uniform_int_distribution<int> deg(0, max_deg);
    std::uniform_int_distribution<int> harm(-max_m, max_m);
    std::normal_distribution<double> g(0.0, 1.0);
    Polynomial out;
    for (int k = 0; k < terms; ++k) out += Polynomial::monomial(cplx(g(rng), g(rng)), deg(rng), deg(rng), harm(rng), grade);
    return out + out.adjoint();
}

}  // namespace

TEST_CASE("normal ordering of products") {
    CHECK(a * ad == Polynomial::monomial(1.0, 1, 1) + one);
    const Polynomial n = ad * a;
    CHECK(n * n == Polynomial::monomial(1.0, 2, 2) + n);

    const Polynomial am = Polynomial::monomial(1.0, 0, 1, -1);
    const Polynomial adm = Polynomial::monomial(1.0, 1, 0, 1);
    const Polynomial prod = am * adm;
    CHECK(prod == Polynomial::monomial(1.0, 1, 1, 0) + Polynomial::monomial(1.0, 0, 0, 0));

    // a^2 a^dag^2 = a^dag^2 a^2 + 4 a^dag a + 2
    const Polynomial a2 = a * a;
    const Polynomial ad2 = ad * ad;
    CHECK(a2 * ad2 == Polynomial::monomial(1.0, 2, 2) + Polynomial::monomial(4.0, 1, 1) + Polynomial::monomial(2.0, 0, 0));
}

TEST_CASE("grades add under multiplication") {
    const Polynomial x = Polynomial::monomial(2.0, 1, 0, 0, 1);
    const Polynomial y = Polynomial::monomial(3.0, 0, 1, 0, 2);
    const Polynomial xy = x * y;
    for (const auto& t : xy.terms()) CHECK(t.grade == 3);
    CHECK(multiply(x, y, 2).empty());
}

TEST_CASE("commutators") {
    CHECK(commutator(a, ad) == one);
    const Polynomial n = ad * a;
    CHECK(commutator(n, ad * ad) == Polynomial::monomial(2.0, 2, 0));

    std::mt19937 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const Polynomial p = random_hermitian_poly(rng, 6);
        const Polynomial q = random_hermitian_poly(rng, 6);
        CHECK(commutator(p, p).empty());
        const Polynomial c = commutator(p, q);
        // [P, Q] for Hermitian P, Q is anti-Hermitian.
        CHECK(hermiticity_defect(c.scaled(kI)) < 1e-13);
        const Polynomial sum = commutator(q, p) + c;
        for (const auto& t : sum.terms()) CHECK(std::abs(t.coeff) < 1e-13);
    }
}

TEST_CASE("canonical form is unique") {
    std::mt19937 rng(10);
    const Polynomial p = random_hermitian_poly(rng, 5);
    const Polynomial q = random_hermitian_poly(rng, 5);
    CHECK(p + q == q + p);
    CHECK((p - p).empty());
    CHECK(hermiticity_defect(p) == 0.0);
}

TEST_CASE("term cap") {
    std::mt19937 rng(12);
    const Polynomial p = random_hermitian_poly(rng, 40, 6, 8);
    CHECK_THROWS_AS(multiply(p, p, INT_MAX, 10), Error);
    try {
        multiply(p, p, INT_MAX, 10);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ExpansionBlowup);
    }
}

TEST_CASE("integrate_oscillatory") {
    const double wd = 2.2;
    const Polynomial single = Polynomial::monomial(cplx(0.3, 0.1), 0, 1, -1);
    const Polynomial prim = integrate_oscillatory(single, wd);
    CHECK(std::abs(prim.coefficient(0, 1, -1, 0) - cplx(0.3, 0.1) / (-kI * wd / 2.0)) < 1e-15);

    std::mt19937 rng(13);
    Polynomial osc = random_hermitian_poly(rng, 8).oscillatory_part();
    const Polynomial s = integrate_oscillatory(osc, wd);
    CHECK(hermiticity_defect(s) < 1e-14);
    CHECK(time_derivative(s, wd) == osc);

    // d/dt of the realized primitive equals the realized input.
    const double nu = wd / 2.0;
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const double h = 1e-4;
    for (int k = 0; k < 8; ++k) {
        const double t = u(rng);
        const ComplexMatrix fd = (realize(s, 6, t + h, nu) - realize(s, 6, t - h, nu)) / (2.0 * h);
        CHECK(max_abs(fd - realize(osc, 6, t, nu)) < 1e-6 * std::max(1.0, max_abs(realize(osc, 6, t, nu))));
    }

    CHECK_THROWS_AS(integrate_oscillatory(Polynomial::monomial(1.0, 1, 1, 0), wd), Error);
}

TEST_CASE("realize") {
    const Polynomial n = ad * a;
    CHECK(max_abs(realize(n, 7, 0.4, 1.0) - number_operator(7)) < 1e-14);

    const ComplexMatrix sq = realize(ad * ad + a * a, 4, 0.0, 1.0);
    CHECK(std::abs(sq(2, 0) - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(sq(3, 1) - std::sqrt(6.0)) < 1e-15);
    CHECK(std::abs(sq(0, 2) - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(sq(1, 3) - std::sqrt(6.0)) < 1e-15);
    CHECK(sq.cwiseAbs().sum() == doctest::Approx(2 * std::sqrt(2.0) + 2 * std::sqrt(6.0)));

    std::mt19937 rng(14);
    const int dim = 16;
    const int max_deg = 3;
    for (int trial = 0; trial < 4; ++trial) {
        const Polynomial p = random_hermitian_poly(rng, 6, max_deg);
        const Polynomial q = random_hermitian_poly(rng, 6, max_deg);
        const double t = 0.77 * trial;
        const ComplexMatrix rp = realize(p, dim, t, 1.1);
        const ComplexMatrix rq = realize(q, dim, t, 1.1);
        const ComplexMatrix lhs = realize(commutator(p, q), dim, t, 1.1);
        const ComplexMatrix rhs = rp * rq - rq * rp;
        const int interior = dim - 2 * max_deg;
        CHECK(max_abs(lhs.topLeftCorner(interior, interior) - rhs.topLeftCorner(interior, interior)) < 1e-10);
    }
}

TEST_CASE("exact Gaussian rationals") {
    const ExactPolynomial ea = ExactPolynomial::monomial(ExactComplex(1L), 0, 1);
    const ExactPolynomial ead = ExactPolynomial::monomial(ExactComplex(1L), 1, 0);
    const ExactPolynomial prod = ea * ea * ead * ead;
    CHECK(prod.coefficient(1, 1, 0, 0) == ExactComplex(4L));
    CHECK(prod.coefficient(0, 0, 0, 0) == ExactComplex(2L));

    const ExactComplex third(Rational(1, 3), Rational(2, 7));
    const ExactComplex back = (third * ExactComplex(Rational(5, 2), Rational(-1, 9))) /
                              ExactComplex(Rational(5, 2), Rational(-1, 9));
    CHECK(back == third);

    const ExactPolynomial osc = ExactPolynomial::monomial(ExactComplex(Rational(3, 4)), 0, 2, -2);
    const ExactPolynomial prim = integrate_oscillatory(osc, ExactComplex(2L));
    // 3/4 / (-2 i) = 3i/8
    CHECK(prim.coefficient(0, 2, -2, 0) == ExactComplex(Rational(0), Rational(3, 8)));
}
