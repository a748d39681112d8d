#include "kpo/error.hpp"
#include "kpo/model.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace kpo;

namespace {

ModelParams fig1(double control, int dim = 20) {
    ModelParams p;
    p.g3 = 7.5e-4;
    p.g4 = 1.27e-7;
    p.dim = dim;
    return control_to_drive(control, p);
}

}  // namespace

TEST_CASE("derived parameters") {
    ModelParams p;
    p.g3 = 7.5e-4;
    p.g4 = 1.27e-7;
    const auto d = derive(p);
    CHECK(d.K2 == doctest::Approx(1.685e-6).epsilon(5e-4));
    CHECK(d.K2 == doctest::Approx(-1.5 * 1.27e-7 + 10.0 * 7.5e-4 * 7.5e-4 / 3.0).epsilon(1e-15));

    ModelParams zero;
    zero.drive_frequency = 2.2;
    const auto dz = derive(zero);
    CHECK(dz.K2 == 0.0);
    CHECK(dz.eps2_2 == 0.0);
    CHECK(dz.Pi == 0.0);
    CHECK(dz.delta == doctest::Approx(0.1));
    CHECK_FALSE(dz.control.has_value());

    ModelParams neg;
    neg.g3 = 2e-5;
    neg.g4 = 8e-6;
    CHECK(derive(neg).K2 < 0.0);

    ModelParams driven = p;
    driven.drive_strength = 0.3;
    const auto dd = derive(driven);
    CHECK(dd.Pi == doctest::Approx(0.2));
    CHECK(dd.eps2_2 == doctest::Approx(p.g3 * 0.2));
    CHECK(dd.omega_a2 == doctest::Approx(1.0 + 3 * p.g4 - 20 * p.g3 * p.g3 / 3 +
                                         (6 * p.g4 + 9 * p.g3 * p.g3) * 0.04));
}

TEST_CASE("derive scales consistently with g3") {
    ModelParams p;
    p.g3 = 3e-4;
    p.g4 = 0.0;
    p.drive_strength = 0.1;
    ModelParams q = p;
    q.g3 = 3.0 * p.g3;
    CHECK(derive(q).eps2_2 == doctest::Approx(3.0 * derive(p).eps2_2));
    CHECK(derive(q).K2 == doctest::Approx(9.0 * derive(p).K2));
}

TEST_CASE("control_to_drive round trip") {
    ModelParams p;
    p.g3 = 7.5e-4;
    p.g4 = 1.27e-7;
    CHECK(control_to_drive(0.0, p).drive_strength == 0.0);
    const auto p13 = control_to_drive(13.0, p);
    CHECK(std::abs(*derive(p13).control - 13.0) < 1e-12);
    CHECK(p13.drive_frequency == doctest::Approx(2.0 * derive(p13).omega_a2).epsilon(1e-15));

    ModelParams big;
    big.g3 = 0.015;
    big.g4 = 1e-7;
    const auto p30 = control_to_drive(30.0, big);
    CHECK(std::abs(*derive(p30).control - 30.0) < 1e-12);
    CHECK(p30.drive_frequency == doctest::Approx(2.0 * derive(p30).omega_a2).epsilon(1e-15));

    ModelParams no_g3;
    no_g3.g4 = 1e-6;
    CHECK_THROWS_AS(control_to_drive(1.0, no_g3), Error);
    ModelParams flat;
    flat.g3 = 0.75;
    flat.g4 = 1.25;
    REQUIRE(kerr_coefficient(flat.g3, flat.g4) == 0.0);
    CHECK_THROWS_AS(control_to_drive(1.0, flat), Error);
}

TEST_CASE("validation and soft warnings") {
    ModelParams p;
    p.dim = 1;
    CHECK_THROWS_AS(validate(p), Error);
    p.dim = 10;
    p.drive_frequency = 0.0;
    CHECK_THROWS_AS(validate(p), Error);
    p.drive_frequency = 2.0;
    CHECK_NOTHROW(validate(p));
    p.g3 = 0.2;
    CHECK(soft_warnings(p).size() == 1);
}

TEST_CASE("frame Hamiltonian basics") {
    ModelParams free;
    free.dim = 6;
    CHECK(max_abs(frame_hamiltonian(free, 0.7)) == 0.0);

    ModelParams detuned = free;
    detuned.drive_frequency = 2.4;
    const ComplexMatrix h = frame_hamiltonian(detuned, 1.3);
    CHECK(max_abs(h + 0.2 * number_operator(6)) < 1e-15);
    CHECK(max_abs(frame_hamiltonian(detuned, 0.0) - h) == 0.0);

    const auto p = fig1(13.0);
    const double period = frame_period(p);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.0, period);
    for (int k = 0; k < 100; ++k) {
        const double t = u(rng);
        const ComplexMatrix ht = frame_hamiltonian(p, t);
        CHECK(hermiticity_defect(ht) < 1e-15);
        CHECK(hermiticity_defect(lab_hamiltonian(p, t)) < 1e-14);
        if (k < 10) CHECK(max_abs(frame_hamiltonian(p, t + period) - ht) < 1e-12);
    }
}

TEST_CASE("harmonic series reconstructs the frame Hamiltonian") {
    const auto p = fig1(13.0, 16);
    const auto series = harmonic_series(p);
    CHECK(series.terms.rbegin()->first <= 8);
    CHECK(series.terms.begin()->first >= -8);
    for (const auto& [m, hm] : series.terms) {
        const auto it = series.terms.find(-m);
        REQUIRE(it != series.terms.end());
        CHECK(max_abs(it->second - hm.adjoint()) < 1e-15);
    }
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0.0, frame_period(p));
    for (int k = 0; k < 16; ++k) {
        const double t = u(rng);
        CHECK(max_abs(series.at(t) - frame_hamiltonian(p, t)) < 1e-10);
    }
    const double t37 = 0.37 * frame_period(p);
    CHECK(max_abs(series.at(t37) - frame_hamiltonian(p, t37)) < 1e-10);
}

TEST_CASE("harmonic series matches Fourier quadrature") {
    auto p = fig1(20.0, 10);
    const auto series = harmonic_series(p);
    const double period = frame_period(p);
    const double nu = half_drive_frequency(p);
    // The integrand is a trigonometric polynomial of degree <= 8, so the
    // uniform rule with more than 16 nodes is exact.
    const int nodes = 64;
    for (int m = -8; m <= 8; ++m) {
        ComplexMatrix acc = ComplexMatrix::Zero(p.dim, p.dim);
        for (int j = 0; j < nodes; ++j) {
            const double t = period * j / nodes;
            acc += frame_hamiltonian(p, t) * std::exp(-kI * (m * nu * t));
        }
        acc /= static_cast<double>(nodes);
        const auto it = series.terms.find(m);
        const ComplexMatrix expected = it == series.terms.end() ? ComplexMatrix::Zero(p.dim, p.dim) : it->second;
        CHECK(max_abs(acc - expected) < 1e-8);
    }
}

TEST_CASE("cubic-only harmonics") {
    ModelParams p;
    p.g3 = 1e-3;
    p.dim = 8;
    p.drive_frequency = 2.1;
    const auto series = harmonic_series(p);
    for (const auto& [m, hm] : series.terms) CHECK((m == 0 || std::abs(m) == 1 || std::abs(m) == 3));
    CHECK(max_abs(series.terms.at(0) + 0.05 * number_operator(8)) < 1e-15);
    // m = 3 carries (g3/3) a^dag^3.
    CHECK(max_abs(series.terms.at(3) - (p.g3 / 3.0) * monomial_matrix(8, 3, 0)) < 1e-15);
}

TEST_CASE("lab ground energy matches second-order perturbation theory") {
    ModelParams p;
    p.g3 = 1e-3;
    p.g4 = 1e-5;
    p.dim = 30;
    // x^3|0> = sqrt(6)|3> + 3|1>, <0|x^4|0> = 3.
    const double oracle = 0.75 * p.g4 - (p.g3 * p.g3 / 9.0) * (6.0 / 3.0 + 9.0 / 1.0);
    const auto dec = eig_hermitian(lab_hamiltonian(p, 0.25 * std::numbers::pi));
    CHECK(std::abs(dec.values(0) - oracle) < 1e-9);
}
