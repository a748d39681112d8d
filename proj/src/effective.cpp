#include "kpo/effective.hpp"

#include "kpo/error.hpp"

#include <cmath>
#include <numbers>

namespace kpo {

EffectiveModel h_eff2(const DerivedParams& derived, int dim) {
    EffectiveModel out;
    out.order = 2;
    out.source = ModelSource::HandCoded;
    out.matrix = derived.eps2_2 * (monomial_matrix(dim, 2, 0) + monomial_matrix(dim, 0, 2)) -
                 derived.K2 * monomial_matrix(dim, 2, 2);
    out.coefficients = {{"K2", derived.K2}, {"eps2_2", derived.eps2_2}};
    return out;
}

EffectiveModel h_eff4(const ModelParams& params, const DerivedParams& derived, int dim, Order4Options options) {
    const double w = derived.omega_a2;
    const double g3 = params.g3;
    const double g4 = params.g4;
    const double a = g4 * g4 / w;               // g4^2 / w
    const double b = g3 * g3 * g4 / (w * w);    // g3^2 g4 / w^2
    const double c = std::pow(g3, 4) / (w * w * w);
    const double pi2 = derived.Pi * derived.Pi;

    const double delta0 = -(9.0 * a + 47.0 * b - 6269.0 / 324.0 * c);
    const double delta1 = -(54.0 / 5.0 * a + 671.0 / 10.0 * b + 113.0 / 360.0 * c);
    const double delta2 = -(-9.0 / 2.0 * a + 15113.0 / 600.0 * b - 297947.0 / 32400.0 * c);
    const double k0 = -(153.0 / 16.0 * a + 225.0 / 4.0 * b + 805.0 / 36.0 * c);
    const double k1 = -(27.0 / 5.0 * a + 671.0 / 20.0 * b + 113.0 / 720.0 * c);
    const double lambda = -(17.0 / 8.0 * a + 25.0 / 2.0 * b + 805.0 / 162.0 * c);
    // The middle term carries a single power of omega_a as printed.
    const double eps4 = (33.0 / 8.0 * a - 101.0 / 96.0 * (g3 * g3 * g4 / w) - 2009.0 / 1296.0 * c) * pi2;

    const double delta = delta0 + delta1 * pi2 + delta2 * pi2 * pi2;
    const double kerr4 = k0 + k1 * pi2;

    EffectiveModel out = h_eff2(derived, dim);
    out.order = 4;
    if (options.include_detuning) out.matrix -= delta * monomial_matrix(dim, 1, 1);
    out.matrix -= kerr4 * monomial_matrix(dim, 2, 2);
    out.matrix -= lambda * monomial_matrix(dim, 3, 3);
    out.matrix += eps4 * monomial_matrix(dim, 4, 0) + std::conj(cplx(eps4)) * monomial_matrix(dim, 0, 4);

    out.coefficients["Delta4_0"] = delta0;
    out.coefficients["Delta4_1"] = delta1;
    out.coefficients["Delta4_2"] = delta2;
    out.coefficients["K4_0"] = k0;
    out.coefficients["K4_1"] = k1;
    out.coefficients["lambda4"] = lambda;
    out.coefficients["eps4_4"] = eps4;
    return out;
}

std::optional<int> order2_breakdown_level(const EffectiveModel& order4, int n_max) {
    const auto get = [&](const char* key) {
        const auto it = order4.coefficients.find(key);
        if (it == order4.coefficients.end()) {
            throw Error(ErrorKind::ContractViolation, std::string("order2_breakdown_level: missing coefficient ") + key);
        }
        return it->second.real();
    };
    const double lambda = std::abs(get("lambda4"));
    const double margin = std::abs(get("K2") - get("K4_0"));
    for (int n = 1; n <= n_max; ++n) {
        if (lambda * n >= margin) return n;
    }
    return std::nullopt;
}

RescaledSpectrum excitation_spectrum(const EffectiveModel& model, double kerr) {
    if (!(std::abs(kerr) > 1e-15)) {
        throw Error(ErrorKind::RescalingUndefined, "excitation_spectrum: |K| <= 1e-15");
    }
    const ComplexMatrix scaled = model.matrix * (-1.0 / kerr);
    auto dec = eig_hermitian_by_parity(scaled);
    RescaledSpectrum out;
    const double base = dec.values(0);
    out.energies = dec.values.array() - base;
    out.states = std::move(dec.vectors);
    out.parity = std::move(dec.parity);
    out.ground_energy = -kerr * base;
    out.kerr = kerr;
    return out;
}

EsqptInfo esqpt_info(double control) {
    if (!(control >= 0.0)) throw Error(ErrorKind::InvalidParameter, "esqpt_info: control must be non-negative");
    return {static_cast<int>(std::floor(2.0 * control / std::numbers::pi)), control * control};
}

double parity_commutator_norm(const ComplexMatrix& h) {
    const ComplexMatrix p = parity_operator(static_cast<int>(h.rows()));
    return max_abs(h * p - p * h);
}

}  // namespace kpo
