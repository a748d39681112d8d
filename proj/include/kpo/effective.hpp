// effective.hpp — hand-coded static effective Hamiltonians and ESQPT bookkeeping

#pragma once

#include "kpo/fock.hpp"
#include "kpo/model.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kpo {

enum class ModelSource { HandCoded, Engine };

struct EffectiveModel {
    int order = 2;
    ComplexMatrix matrix;
    // Delta4_0..2, K4_0..1, lambda4, eps4_4, K2, eps2_2 (units of omega_o).
    std::map<std::string, cplx> coefficients;
    ModelSource source = ModelSource::HandCoded;
};

/// eps2 (a^dag^2 + a^2) - K a^dag^2 a^2 with eps2 = eps2_2, K = K2.
EffectiveModel h_eff2(const DerivedParams& derived, int dim);

struct Order4Options {
    // When false the -Delta a^dag a correction is treated as absorbed into the
    // driving-condition calibration and left out of the matrix.
    bool include_detuning = true;
};

/// Second-order model plus the fourth-order corrections, with omega_a2 in
/// every denominator.
EffectiveModel h_eff4(const ModelParams& params, const DerivedParams& derived, int dim,
                      Order4Options options = {});

/// Smallest Fock level n >= 1 with |lambda4| n >= |K2 - K4_0|, i.e. where the
/// second-order description stops being reliable; empty if none below n_max.
std::optional<int> order2_breakdown_level(const EffectiveModel& order4, int n_max);

/// Rescaled excitation energies: the spectrum of -H/K shifted to start at 0.
/// For either sign of K this puts the double-well bottom at 0 and the ESQPT
/// near (eps2/K)^2.
struct RescaledSpectrum {
    RealVector energies;       // ascending
    ComplexMatrix states;      // eigenvectors, same order
    std::vector<int> parity;   // +1 / -1
    double ground_energy = 0;  // E0 in units of omega_o (unscaled)
    double kerr = 0;
};

RescaledSpectrum excitation_spectrum(const EffectiveModel& model, double kerr);

struct EsqptInfo {
    int n_b = 0;
    double critical_energy = 0.0;  // (eps2/K)^2 in rescaled units
};

EsqptInfo esqpt_info(double control);

/// ||[H, P]|| (max entry).
double parity_commutator_norm(const ComplexMatrix& h);

}  // namespace kpo
