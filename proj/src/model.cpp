#include "kpo/model.hpp"

#include "kpo/error.hpp"

#include <cmath>
#include <sstream>

namespace kpo {

namespace {

using Series = std::map<int, ComplexMatrix>;

Series multiply(const Series& lhs, const Series& rhs) {
    Series out;
    for (const auto& [ml, a] : lhs) {
        for (const auto& [mr, b] : rhs) {
            auto it = out.find(ml + mr);
            if (it == out.end()) {
                out.emplace(ml + mr, a * b);
            } else {
                it->second.noalias() += a * b;
            }
        }
    }
    return out;
}

// Fourier series of X(t) in harmonics of nu.
Series displacement_series(int dim, double Pi) {
    const auto ladder = ladder_operators(dim);
    const ComplexMatrix id = ComplexMatrix::Identity(dim, dim);
    Series x;
    x.emplace(-1, ladder.annihilation);
    x.emplace(1, ladder.creation);
    if (Pi != 0.0) {
        x.emplace(-2, Pi * id);
        x.emplace(2, Pi * id);
    }
    return x;
}

}  // namespace

void validate(const ModelParams& params) {
    if (params.dim < 2) throw Error(ErrorKind::InvalidDimension, "model: truncation N must be at least 2");
    if (!(params.drive_frequency > 0.0)) throw Error(ErrorKind::InvalidParameter, "model: omega_d must be positive");
    if (!(params.omega_o > 0.0)) throw Error(ErrorKind::InvalidParameter, "model: omega_o must be positive");
    if (!std::isfinite(params.g3) || !std::isfinite(params.g4) || !std::isfinite(params.drive_strength)) {
        throw Error(ErrorKind::NumericDomain, "model: non-finite parameter");
    }
}

std::vector<std::string> soft_warnings(const ModelParams& params) {
    std::vector<std::string> out;
    if (std::abs(params.g3) > 0.1 * params.omega_o) out.emplace_back("|g3| > 0.1 omega_o: weak-nonlinearity regime exceeded");
    if (std::abs(params.g4) > 0.1 * params.omega_o) out.emplace_back("|g4| > 0.1 omega_o: weak-nonlinearity regime exceeded");
    return out;
}

double kerr_coefficient(double g3, double g4, double omega_o) {
    return -1.5 * g4 + 10.0 * g3 * g3 / (3.0 * omega_o);
}

double shifted_frequency(const ModelParams& p) {
    const double w = p.omega_o;
    const double drive = 2.0 * p.drive_strength / (3.0 * w);
    return w + 3.0 * p.g4 - 20.0 * p.g3 * p.g3 / (3.0 * w) + (6.0 * p.g4 + 9.0 * p.g3 * p.g3 / w) * drive * drive;
}

DerivedParams derive(const ModelParams& p) {
    DerivedParams d;
    d.Pi = 2.0 * p.drive_strength / (3.0 * p.omega_o);
    d.delta = 0.5 * p.drive_frequency - p.omega_o;
    d.omega_a2 = shifted_frequency(p);
    d.K2 = kerr_coefficient(p.g3, p.g4, p.omega_o);
    d.eps2_2 = p.g3 * 2.0 * p.drive_strength / (3.0 * p.omega_o);
    if (d.K2 != 0.0) d.control = d.eps2_2 / d.K2;
    return d;
}

ModelParams control_to_drive(double target, const ModelParams& params) {
    if (params.g3 == 0.0) {
        throw Error(ErrorKind::NoDriveCoupling, "control_to_drive: g3 = 0 gives no squeezing amplitude");
    }
    const double K2 = kerr_coefficient(params.g3, params.g4, params.omega_o);
    if (K2 == 0.0) throw Error(ErrorKind::RescalingUndefined, "control_to_drive: K2 = 0");
    ModelParams out = params;
    out.drive_strength = target * K2 * 3.0 * params.omega_o / (2.0 * params.g3);
    out.drive_frequency = 2.0 * shifted_frequency(out);
    if (!(out.drive_frequency > 0.0)) {
        std::ostringstream msg;
        msg << "control_to_drive: driving condition gives omega_d = " << out.drive_frequency;
        throw Error(ErrorKind::InvalidParameter, msg.str());
    }
    return out;
}

ComplexMatrix frame_hamiltonian(const ModelParams& params, double t) {
    validate(params);
    const auto d = derive(params);
    const double nu = half_drive_frequency(params);
    const auto ladder = ladder_operators(params.dim);
    const cplx phase = std::exp(kI * nu * t);
    const double shift = 2.0 * (d.Pi * std::exp(-2.0 * kI * nu * t)).real();
    ComplexMatrix x = ladder.annihilation * std::conj(phase) + ladder.creation * phase;
    x.diagonal().array() += shift;
    const ComplexMatrix x2 = x * x;
    const ComplexMatrix x3 = x2 * x;
    ComplexMatrix h = (params.g3 / 3.0) * x3 + (params.g4 / 4.0) * (x2 * x2);
    h -= d.delta * number_operator(params.dim);
    return h;
}

ComplexMatrix lab_hamiltonian(const ModelParams& params, double t) {
    validate(params);
    const auto ladder = ladder_operators(params.dim);
    const ComplexMatrix x = ladder.annihilation + ladder.creation;
    const ComplexMatrix x2 = x * x;
    ComplexMatrix h = params.omega_o * number_operator(params.dim) + (params.g3 / 3.0) * (x2 * x) +
                      (params.g4 / 4.0) * (x2 * x2);
    h -= kI * params.drive_strength * std::cos(params.drive_frequency * t) *
         (ladder.annihilation - ladder.creation);
    return h;
}

ComplexMatrix HarmonicSeries::at(double t) const {
    ComplexMatrix h = ComplexMatrix::Zero(dim(), dim());
    for (const auto& [m, hm] : terms) h += std::exp(kI * (static_cast<double>(m) * nu * t)) * hm;
    return h;
}

int HarmonicSeries::dim() const {
    return terms.empty() ? 0 : static_cast<int>(terms.begin()->second.rows());
}

HarmonicSeries harmonic_series(const ModelParams& params) {
    validate(params);
    const auto d = derive(params);
    const Series x = displacement_series(params.dim, d.Pi);
    const Series x2 = multiply(x, x);
    const Series x3 = multiply(x2, x);
    const Series x4 = multiply(x2, x2);

    HarmonicSeries out;
    out.nu = half_drive_frequency(params);
    for (int m = -8; m <= 8; ++m) {
        ComplexMatrix hm = ComplexMatrix::Zero(params.dim, params.dim);
        if (auto it = x3.find(m); it != x3.end() && params.g3 != 0.0) hm += (params.g3 / 3.0) * it->second;
        if (auto it = x4.find(m); it != x4.end() && params.g4 != 0.0) hm += (params.g4 / 4.0) * it->second;
        if (m == 0) hm -= d.delta * number_operator(params.dim);
        if (max_abs(hm) > 0.0) out.terms.emplace(m, std::move(hm));
    }
    if (out.terms.empty()) out.terms.emplace(0, ComplexMatrix::Zero(params.dim, params.dim));
    return out;
}

}  // namespace kpo
