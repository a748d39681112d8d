#include "kpo/error.hpp"
#include "kpo/expansion.hpp"
#include "kpo/floquet.hpp"

#include <doctest.h>

#include <boost/numeric/odeint.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

using namespace kpo;

namespace {

ModelParams strong(int dim) {
    ModelParams p;
    p.g3 = 0.05;
    p.g4 = 0.01;
    p.drive_strength = 0.3;
    p.drive_frequency = 1.98;
    p.dim = dim;
    return p;
}

// Reference propagator from an adaptive Runge-Kutta integration of
// dU/dt = -i H(t) U with the real and imaginary parts stacked.
ComplexMatrix ode_propagator(const ModelParams& p, double t0, double t1) {
    namespace ode = boost::numeric::odeint;
    using State = std::vector<double>;
    const int n = p.dim;
    const auto nn = static_cast<std::size_t>(n * n);
    State y(2 * nn, 0.0);
    for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k * n + k)] = 1.0;
    const auto rhs = [&](const State& x, State& dx, double t) {
        ComplexMatrix u(n, n);
        for (std::size_t k = 0; k < nn; ++k) u.data()[k] = cplx(x[k], x[nn + k]);
        const ComplexMatrix du = -kI * (frame_hamiltonian(p, t) * u);
        for (std::size_t k = 0; k < nn; ++k) {
            dx[k] = du.data()[k].real();
            dx[nn + k] = du.data()[k].imag();
        }
    };
    ode::integrate_adaptive(ode::make_controlled<ode::runge_kutta_fehlberg78<State>>(1e-13, 1e-13), rhs, y, t0, t1,
                            1e-3);
    ComplexMatrix u(n, n);
    for (std::size_t k = 0; k < nn; ++k) u.data()[k] = cplx(y[k], y[nn + k]);
    return u;
}

// Largest circular distance between the two quasienergy sets.
double spectrum_distance(const RealVector& a, const RealVector& b, double width) {
    double worst = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        double best = width;
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            const double d = std::abs(a(i) - b(j));
            best = std::min(best, std::min(d, width - d));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

}  // namespace

TEST_CASE("fold_quasienergy") {
    CHECK(fold_quasienergy(0.25, 1.0) == 0.25);
    CHECK(fold_quasienergy(-0.25, 1.0) == doctest::Approx(0.75));
    CHECK(fold_quasienergy(3.5, 1.0) == doctest::Approx(0.5));
    CHECK(fold_quasienergy(-1e-18, 1.0) == 0.0);
    const double w = 0.987;
    for (double e : {-2.3, -0.1, 0.0, 0.4, 5.7}) {
        const double f = fold_quasienergy(e, w);
        CHECK(f >= 0.0);
        CHECK(f < w);
        CHECK(fold_quasienergy(f, w) == f);
        const double g = fold_quasienergy(e + 3 * w, w);
        CHECK(std::min(std::abs(g - f), w - std::abs(g - f)) < 1e-12);
    }
    CHECK_THROWS_AS(fold_quasienergy(1.0, 0.0), Error);
}

TEST_CASE("undriven detuned frame has closed-form propagator") {
    ModelParams p;
    p.dim = 12;
    p.drive_frequency = 2.4;
    const auto sol = solve(p);
    const double delta = 0.2;
    ComplexMatrix expected = ComplexMatrix::Zero(12, 12);
    for (int n = 0; n < 12; ++n) expected(n, n) = std::exp(kI * (delta * sol.period() * n));
    CHECK(max_abs(sol.U_T - expected) < 1e-12);

    RealVector eps(12);
    for (int n = 0; n < 12; ++n) eps(n) = fold_quasienergy(-delta * n, sol.zone_width());
    CHECK(spectrum_distance(eps, sol.quasienergies, sol.zone_width()) < 1e-10);
    CHECK(spectrum_distance(sol.quasienergies, eps, sol.zone_width()) < 1e-10);

    ModelParams resonant;
    resonant.dim = 6;
    CHECK(max_abs(solve(resonant).U_T - ComplexMatrix::Identity(6, 6)) < 1e-14);
}

TEST_CASE("propagator matches an adaptive ODE integration") {
    const auto p = strong(8);
    const double td = 2.0 * std::numbers::pi / p.drive_frequency;
    const ComplexMatrix oracle = ode_propagator(p, 0.0, td);
    const auto series = harmonic_series(p);
    const ComplexMatrix cf4 = propagate(series, 0.0, td, 512, Integrator::CommutatorFree4);
    const ComplexMatrix mid = propagate(series, 0.0, td, 4096, Integrator::Midpoint);
    CHECK(max_abs(cf4 - oracle) < 1e-7);
    CHECK(max_abs(mid - oracle) < 1e-5);

    // The parity factorization reproduces the directly integrated two-period map.
    const ComplexMatrix full = ode_propagator(p, 0.0, 2.0 * td);
    SolverSettings s;
    s.integrator = Integrator::CommutatorFree4;
    CHECK(max_abs(propagate_period(p, s).U_T - full) < 1e-7);
}

TEST_CASE("integrator convergence orders") {
    const auto p = strong(10);
    const auto series = harmonic_series(p);
    const double td = 2.0 * std::numbers::pi / p.drive_frequency;
    const ComplexMatrix ref = propagate(series, 0.0, td, 4096, Integrator::CommutatorFree4);
    for (auto [integrator, factor] : {std::pair{Integrator::Midpoint, 4.0}, std::pair{Integrator::CommutatorFree4, 16.0}}) {
        const double e1 = max_abs(propagate(series, 0.0, td, 64, integrator) - ref);
        const double e2 = max_abs(propagate(series, 0.0, td, 128, integrator) - ref);
        CHECK(e1 / e2 == doctest::Approx(factor).epsilon(0.2));
    }
}

TEST_CASE("propagator composition and unitarity") {
    const auto p = strong(10);
    const auto series = harmonic_series(p);
    const ComplexMatrix a = propagate(series, 0.0, 1.0, 200, Integrator::CommutatorFree4);
    const ComplexMatrix b = propagate(series, 1.0, 1.5, 300, Integrator::CommutatorFree4);
    const ComplexMatrix ab = propagate(series, 0.0, 2.5, 500, Integrator::CommutatorFree4);
    CHECK(max_abs(b * a - ab) < 1e-9);
    CHECK(unitarity_defect(ab) < 1e-12);
    CHECK_THROWS_AS(propagate(series, 0.0, 1.0, 0, Integrator::Midpoint), Error);
}

TEST_CASE("quasienergies do not depend on the start time") {
    const auto p = strong(12);
    SolverSettings s;
    s.integrator = Integrator::CommutatorFree4;
    const auto base = solve(p, s);
    s.t0 = 0.37 * base.period();
    const auto shifted = solve(p, s);
    CHECK(spectrum_distance(base.quasienergies, shifted.quasienergies, base.zone_width()) < 1e-9);

    // U_T(t0) = U(t0, 0) U_T(0) U(t0, 0)^dag.
    const ComplexMatrix w = propagate(harmonic_series(p), 0.0, s.t0, 512, Integrator::CommutatorFree4);
    CHECK(max_abs(w * base.U_T * w.adjoint() - shifted.U_T) < 1e-8);
}

TEST_CASE("Floquet modes diagonalize the period propagator") {
    const auto p = strong(12);
    const auto sol = solve(p);
    CHECK(unitarity_defect(sol.modes) < 1e-10);
    for (Eigen::Index k = 0; k < sol.quasienergies.size(); ++k) {
        const ComplexVector v = sol.modes.col(k);
        const ComplexVector lhs = sol.U_T * v;
        const ComplexVector rhs = std::exp(-kI * (sol.quasienergies(k) * sol.period())) * v;
        CHECK((lhs - rhs).norm() < 1e-9);
        CHECK(sol.quasienergies(k) >= 0.0);
        CHECK(sol.quasienergies(k) < sol.zone_width());
        if (k > 0) CHECK(sol.quasienergies(k) >= sol.quasienergies(k - 1));
    }
    const auto general = floquet_decompose(sol.U_T, p.drive_frequency);
    CHECK(spectrum_distance(sol.quasienergies, general.quasienergies, sol.zone_width()) < 1e-9);
}

TEST_CASE("a static Hamiltonian folds its eigenvalues") {
    // Undriven and linear, the frame Hamiltonian reduces to -delta a^dag a.
    ModelParams p;
    p.dim = 9;
    p.drive_frequency = 1.7;
    const auto sol = solve(p);
    const auto dec = eig_hermitian(frame_hamiltonian(p, 0.0));
    RealVector folded(dec.values.size());
    for (Eigen::Index k = 0; k < folded.size(); ++k) folded(k) = fold_quasienergy(dec.values(k), sol.zone_width());
    CHECK(spectrum_distance(folded, sol.quasienergies, sol.zone_width()) < 1e-10);
}

TEST_CASE("Floquet level spacing reproduces the corrected Stark shift") {
    ModelParams p;
    p.g3 = 1e-2;
    p.g4 = 0.0;
    p.drive_strength = 0.3;
    p.drive_frequency = 1.98;
    p.dim = 30;
    SolverSettings s;
    s.integrator = Integrator::CommutatorFree4;
    const auto sol = solve(p, s);
    ComplexVector vac = ComplexVector::Zero(30);
    vac(0) = 1.0;
    ComplexVector one = ComplexVector::Zero(30);
    one(1) = 1.0;
    const auto [i0, o0] = best_overlap(sol.modes, vac);
    const auto [i1, o1] = best_overlap(sol.modes, one);
    CHECK(o0 > 0.9);
    CHECK(o1 > 0.8);
    const double w = sol.zone_width();
    double gap = fold_quasienergy(sol.quasienergies(i1) - sol.quasienergies(i0), w);
    if (gap > 0.5 * w) gap -= w;

    const auto eff = engine_model(expand(p, 4), 30, 4);
    const auto dec = eig_hermitian(eff.matrix);
    const auto [j0, q0] = best_overlap(dec.vectors, vac);
    const auto [j1, q1] = best_overlap(dec.vectors, one);
    const double engine_gap = dec.values(j1) - dec.values(j0);
    CHECK(std::abs(gap - engine_gap) < 2e-6);
    // With the g3^2 Pi^2 Stark term at the opposite sign the spacing would move
    // by 18 g3^2 Pi^2 = 7.2e-5.
    CHECK(std::abs(gap - (engine_gap + 18.0 * p.g3 * p.g3 * 0.04)) > 3e-5);
}

TEST_CASE("ground branch tracking") {
    ModelParams base;
    base.g3 = 7.5e-4;
    base.g4 = 1.27e-7;
    base.dim = 40;
    const auto single = track_ground_branch(base, {0.0});
    REQUIRE(single.points.size() == 1);
    CHECK(std::norm(single.points[0].mode(0)) > 0.99);

    const auto twice = track_ground_branch(base, {0.0, 0.0});
    REQUIRE(twice.points.size() == 2);
    CHECK(twice.points[1].overlap == doctest::Approx(1.0).epsilon(1e-10));

    int calls = 0;
    const auto branch = track_ground_branch(base, {0.0, 0.5, 1.0, 1.5, 2.0}, {}, {},
                                            [&](const BranchPoint&, const FloquetSolution&) { ++calls; });
    CHECK(calls == static_cast<int>(branch.points.size()));
    CHECK(branch.points.back().control == 2.0);
    for (const auto& pt : branch.points) CHECK(pt.overlap >= 0.5);

    CHECK_THROWS_AS(track_ground_branch(base, {0.5, 1.0}), Error);
    CHECK_THROWS_AS(track_ground_branch(base, {0.0, 1.0, 0.5}), Error);

    // An impossible threshold exhausts the bisection budget.
    TrackingOptions strict;
    strict.overlap_threshold = 1.1;
    strict.max_bisections = 1;
    try {
        track_ground_branch(base, {0.0, 1.0}, {}, strict);
        FAIL("expected a branch break");
    } catch (const BranchBreakError& e) {
        CHECK(e.kind() == ErrorKind::BranchBreak);
        CHECK(e.last_good_control == 0.0);
        CHECK(e.branch.points.size() == 1);
    }
}

TEST_CASE("rescaled quasienergies and photon filter") {
    ModelParams base;
    base.g3 = 7.5e-4;
    base.g4 = 1.27e-7;
    base.dim = 40;
    const auto p = control_to_drive(2.0, base);
    const auto sol = solve(p);
    const double kerr = derive(p).K2;
    const auto branch = track_ground_branch(base, {0.0, 1.0, 2.0});
    const auto levels = rescaled_quasienergies(sol, branch.points.back().eps0, kerr);
    CHECK(levels.front().value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(levels.front().mode == branch.points.back().mode_index);
    for (std::size_t k = 1; k < levels.size(); ++k) CHECK(levels[k].value >= levels[k - 1].value);
    CHECK_THROWS_AS(rescaled_quasienergies(sol, 0.0, 1e-16), Error);

    const auto part = photon_filter(sol, 10.0);
    CHECK(part.retained.size() + part.grayed.size() == 40);
    for (int k : part.retained) CHECK(sol.photon_numbers(k) <= 10.0);
    for (int k : part.grayed) CHECK(sol.photon_numbers(k) > 10.0);
}

TEST_CASE("bundle output") {
    const auto sol = solve(strong(6));
    const auto dir = std::filesystem::temp_directory_path() / "kpo_test_bundle";
    std::filesystem::remove_all(dir);
    write_bundle(sol, dir, "pt", true);
    CHECK(std::filesystem::exists(dir / "pt.json"));
    CHECK(std::filesystem::exists(dir / "pt_modes.csv"));
    std::ifstream in(dir / "pt_levels.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header.find("quasienergy[omega_o]") != std::string::npos);
    const auto j = to_json(sol);
    CHECK(j["quasienergies"].size() == 6);
    std::filesystem::remove_all(dir);
}
