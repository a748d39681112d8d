#include "kpo/effective.hpp"
#include "kpo/error.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace kpo;

namespace {

ModelParams fig1(double control, int dim) {
    ModelParams p;
    p.g3 = 7.5e-4;
    p.g4 = 1.27e-7;
    p.dim = dim;
    return control_to_drive(control, p);
}

}  // namespace

TEST_CASE("pure Kerr spectrum") {
    DerivedParams d;
    d.K2 = 1.0;
    const auto model = h_eff2(d, 8);
    const auto dec = eig_hermitian(model.matrix);
    std::vector<double> expected;
    for (int n = 0; n < 8; ++n) expected.push_back(-n * (n - 1.0));
    std::sort(expected.begin(), expected.end());
    for (int k = 0; k < 8; ++k) CHECK(dec.values(k) == doctest::Approx(expected[static_cast<std::size_t>(k)]));

    const auto rescaled = excitation_spectrum(model, d.K2);
    const double expected_tilde[6] = {0, 0, 2, 6, 12, 20};
    for (int k = 0; k < 6; ++k) CHECK(rescaled.energies(k) == doctest::Approx(expected_tilde[k]).epsilon(1e-12));

    CHECK_THROWS_AS(excitation_spectrum(model, 1e-16), Error);
}

TEST_CASE("h_eff2 commutes with parity and is Hermitian") {
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        DerivedParams d;
        d.K2 = u(rng);
        d.eps2_2 = 5.0 * u(rng);
        const auto m = h_eff2(d, 30);
        CHECK(parity_commutator_norm(m.matrix) < 1e-12);
        CHECK(hermiticity_defect(m.matrix) < 1e-12);
    }
    const ComplexMatrix p = parity_operator(4);
    CHECK(p(0, 0) == cplx(1));
    CHECK(p(1, 1) == cplx(-1));
    CHECK(max_abs(p * p - ComplexMatrix::Identity(4, 4)) == 0.0);
}

TEST_CASE("h_eff2 spectrum is invariant under eps2 -> -eps2") {
    DerivedParams d;
    d.K2 = 1.0;
    d.eps2_2 = 7.0;
    const auto a = eig_hermitian(h_eff2(d, 80).matrix);
    d.eps2_2 = -7.0;
    const auto b = eig_hermitian(h_eff2(d, 80).matrix);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() < 1e-10 * a.values.cwiseAbs().maxCoeff());
}

TEST_CASE("h_eff2 truncation convergence") {
    const auto p = fig1(10.0, 60);
    const auto d = derive(p);
    const auto small = excitation_spectrum(h_eff2(d, 60), d.K2);
    const auto large = excitation_spectrum(h_eff2(d, 200), d.K2);
    // With K > 0 the bound states sit at the top of H, i.e. the bottom of -H/K.
    for (int k = 0; k < 12; ++k) {
        CHECK(std::abs(small.energies(k) - large.energies(k)) <= 1e-10 * std::max(1.0, large.energies(k)));
    }
    CHECK(small.ground_energy == doctest::Approx(large.ground_energy).epsilon(1e-10));
}

TEST_CASE("excitation spectrum shift invariance") {
    const auto p = fig1(8.0, 60);
    const auto d = derive(p);
    auto model = h_eff2(d, 60);
    const auto base = excitation_spectrum(model, d.K2);
    model.matrix += 3.7e-4 * ComplexMatrix::Identity(60, 60);
    const auto shifted = excitation_spectrum(model, d.K2);
    CHECK((base.energies - shifted.energies).cwiseAbs().maxCoeff() < 1e-6);
    for (Eigen::Index k = 0; k < base.energies.size(); ++k) CHECK(base.energies(k) >= 0.0);
}

TEST_CASE("ESQPT energy sits near control squared") {
    const auto p = fig1(13.0, 200);
    const auto d = derive(p);
    const auto spec = excitation_spectrum(h_eff2(d, 200), d.K2);
    // Deep in the well the levels come in opposite-parity doublets; well above
    // control^2 = 169 they no longer do.
    for (Eigen::Index k = 0; spec.energies(k + 2) < 0.6 * 169.0; k += 2) {
        CHECK(spec.parity[static_cast<std::size_t>(k)] != spec.parity[static_cast<std::size_t>(k + 1)]);
        CHECK(spec.energies(k + 1) - spec.energies(k) < 0.05 * (spec.energies(k + 2) - spec.energies(k)));
    }
    for (Eigen::Index k = 0; k + 1 < spec.energies.size() && spec.energies(k) < 400.0; ++k) {
        if (spec.energies(k) > 1.5 * 169.0) {
            CHECK(spec.energies(k + 1) - spec.energies(k) > 5.0);
        }
    }
}

TEST_CASE("esqpt_info") {
    CHECK(esqpt_info(0.0).n_b == 0);
    CHECK(esqpt_info(10.0).n_b == 6);
    CHECK(esqpt_info(30.0).n_b == 19);
    CHECK(esqpt_info(13.0).critical_energy == doctest::Approx(169.0));
}

TEST_CASE("h_eff4 coefficients") {
    ModelParams zero;
    zero.dim = 10;
    const auto dz = derive(zero);
    const auto m0 = h_eff4(zero, dz, 10);
    CHECK(max_abs(m0.matrix - h_eff2(dz, 10).matrix) == 0.0);
    for (const auto& [name, value] : m0.coefficients) CHECK(std::abs(value) == 0.0);

    ModelParams q;
    q.g4 = 1e-4;
    q.dim = 10;
    const auto dq = derive(q);
    const auto m = h_eff4(q, dq, 10);
    const double wa = dq.omega_a2;
    CHECK(-m.coefficients.at("K4_0").real() == doctest::Approx(153.0 / 16.0 * 1e-8 / wa).epsilon(1e-14));
    CHECK(m.coefficients.at("lambda4").real() == doctest::Approx(-17.0 / 8.0 * 1e-8 / wa).epsilon(1e-14));
    CHECK(m.coefficients.at("eps4_4") == cplx(0.0));
    CHECK(-m.coefficients.at("Delta4_0").real() == doctest::Approx(9.0 * 1e-8 / wa).epsilon(1e-14));

    // With g4 = 0 only the g3^4 fractions survive.
    ModelParams c;
    c.g3 = 1e-3;
    c.dim = 10;
    const auto dc = derive(c);
    const auto mc = h_eff4(c, dc, 10);
    const double g34 = 1e-12 / std::pow(dc.omega_a2, 3);
    CHECK(-mc.coefficients.at("Delta4_0").real() == doctest::Approx(-6269.0 / 324.0 * g34).epsilon(1e-13));
    CHECK(-mc.coefficients.at("K4_0").real() == doctest::Approx(805.0 / 36.0 * g34).epsilon(1e-13));
}

TEST_CASE("h_eff4 detuning flag and continuity") {
    const auto p = fig1(10.0, 40);
    const auto d = derive(p);
    const auto with = h_eff4(p, d, 40);
    const auto without = h_eff4(p, d, 40, Order4Options{false});
    const double delta = (with.coefficients.at("Delta4_0") + with.coefficients.at("Delta4_1") * d.Pi * d.Pi +
                          with.coefficients.at("Delta4_2") * std::pow(d.Pi, 4))
                             .real();
    CHECK(max_abs(with.matrix - without.matrix + delta * number_operator(40)) <= 1e-12 * max_abs(with.matrix));
    CHECK(hermiticity_defect(with.matrix) < 1e-12);

    // Corrections shrink as g^4 when the nonlinearities are scaled down.
    ModelParams big;
    big.g3 = 1e-3;
    big.g4 = 1e-6;
    big.drive_strength = 0.1;
    ModelParams small = big;
    small.g3 *= 0.1;
    small.g4 *= 0.01;
    const auto mb = h_eff4(big, derive(big), 10);
    const auto ms = h_eff4(small, derive(small), 10);
    const double ratio = std::abs(ms.coefficients.at("K4_0")) / std::abs(mb.coefficients.at("K4_0"));
    CHECK(ratio == doctest::Approx(1e-4).epsilon(1e-2));
}

TEST_CASE("order-2 validity level") {
    EffectiveModel m;
    m.coefficients = {{"K2", 1.0}, {"K4_0", 0.25}, {"lambda4", 0.25}};
    CHECK(order2_breakdown_level(m, 10) == 3);
    m.coefficients["lambda4"] = 1e-6;
    CHECK_FALSE(order2_breakdown_level(m, 10).has_value());
    m.coefficients.erase("lambda4");
    CHECK_THROWS_AS(order2_breakdown_level(m, 10), Error);
}
