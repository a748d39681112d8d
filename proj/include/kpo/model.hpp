// model.hpp — parameters and Hamiltonians of the squeezing-driven Kerr oscillator
//
// Units: omega_o = hbar = 1; every parameter is a ratio to omega_o.
// The displaced rotating-frame Hamiltonian is
//
//   H(t) = -delta a^dag a + sum_{m=3,4} (g_m/m) X(t)^m,
//   X(t) = a e^{-i nu t} + a^dag e^{i nu t} + Pi e^{-2 i nu t} + Pi* e^{2 i nu t},
//
// with nu = omega_d / 2. Its period is T = 2 pi / nu = 2 T_d.

#pragma once

#include "kpo/fock.hpp"

#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace kpo {

struct ModelParams {
    double omega_o = 1.0;
    double g3 = 0.0;
    double g4 = 0.0;
    double drive_strength = 0.0;   // Omega_d
    double drive_frequency = 2.0;  // omega_d
    int dim = 100;                 // Fock truncation N
};

struct DerivedParams {
    double Pi = 0.0;        // displacement amplitude 2 Omega_d / (3 omega_o)
    double delta = 0.0;     // omega_d/2 - omega_o
    double omega_a2 = 1.0;  // Lamb/Stark shifted frequency
    double K2 = 0.0;
    double eps2_2 = 0.0;
    std::optional<double> control;  // eps2_2 / K2, empty when K2 == 0
};

/// Throws invalid-parameter for omega_d <= 0, omega_o <= 0 or N < 2.
void validate(const ModelParams& params);

/// Soft warnings for nonlinearities outside the |g| << omega_o regime.
std::vector<std::string> soft_warnings(const ModelParams& params);

DerivedParams derive(const ModelParams& params);

/// Kerr coefficient from the leading-order closed form.
double kerr_coefficient(double g3, double g4, double omega_o = 1.0);

/// Stark/Lamb shifted frequency for a given drive strength.
double shifted_frequency(const ModelParams& params);

/// Sets drive_strength so that derive().control == target and
/// drive_frequency = 2 omega_a2. Throws no-drive-coupling for g3 == 0 and
/// rescaling-undefined for K2 == 0.
ModelParams control_to_drive(double target, const ModelParams& params);

/// Frequency unit of the harmonic expansion, nu = omega_d / 2.
inline double half_drive_frequency(const ModelParams& p) { return 0.5 * p.drive_frequency; }
inline double frame_period(const ModelParams& p) { return 2.0 * (2.0 * std::numbers::pi / p.drive_frequency); }

ComplexMatrix frame_hamiltonian(const ModelParams& params, double t);
ComplexMatrix lab_hamiltonian(const ModelParams& params, double t);

/// H(t) = sum_m terms[m] e^{i m nu t}, |m| <= 8.
struct HarmonicSeries {
    std::map<int, ComplexMatrix> terms;
    double nu = 1.0;

    [[nodiscard]] ComplexMatrix at(double t) const;
    [[nodiscard]] int dim() const;
};

HarmonicSeries harmonic_series(const ModelParams& params);

}  // namespace kpo
