#include "kpo/expansion.hpp"

namespace kpo {

template ExpansionResult<cplx> expand<cplx>(const ExpansionInputs<cplx>&, int, std::size_t);
template ExpansionResult<ExactComplex> expand<ExactComplex>(const ExpansionInputs<ExactComplex>&, int, std::size_t);

ExpansionInputs<cplx> expansion_inputs(const ModelParams& params) {
    validate(params);
    const auto d = derive(params);
    // Everything is measured in units of omega_o.
    const double w = params.omega_o;
    return {params.g3 / w, params.g4 / w, d.Pi, d.delta / w, 1.0};
}

ExpansionResult<cplx> expand(const ModelParams& params, int max_order, std::size_t cap) {
    if (params.omega_o != 1.0) {
        throw Error(ErrorKind::InvalidParameter, "expand: parameters must be expressed with omega_o = 1");
    }
    return expand(expansion_inputs(params), max_order, cap);
}

ComplexMatrix u_s_matrix(const ExpansionResult<cplx>& result, int dim, int order) {
    const Polynomial s = sum_orders(result.s_by_order, order < 0 ? result.requested_order : order);
    if (hermiticity_defect(s) > 1e-10) {
        throw Error(ErrorKind::InternalConsistency, "u_s_matrix: accumulated generator is not Hermitian");
    }
    const ComplexMatrix s0 = realize(s, dim, 0.0, 1.0);
    if (hermiticity_defect(s0) > 1e-10 * std::max(1.0, max_abs(s0))) {
        throw Error(ErrorKind::InternalConsistency, "u_s_matrix: realized generator is not Hermitian");
    }
    // Symmetrize away rounding before exponentiating.
    const ComplexMatrix herm = 0.5 * (s0 + s0.adjoint());
    return matrix_exponential(kI * herm);
}

EffectiveModel engine_model(const ExpansionResult<cplx>& result, int dim, int order) {
    const Polynomial h = sum_orders(result.h_eff_by_order, order);
    EffectiveModel out;
    out.order = order;
    out.source = ModelSource::Engine;
    const ComplexMatrix m = realize(h, dim, 0.0, 1.0);
    out.matrix = 0.5 * (m + m.adjoint());
    out.coefficients["K2"] = -h.coefficient(2, 2, 0);
    out.coefficients["eps2_2"] = h.coefficient(2, 0, 0);
    out.coefficients["eps4_4"] = h.coefficient(4, 0, 0);
    out.coefficients["lambda4"] = -h.coefficient(3, 3, 0);
    out.coefficients["Delta"] = -h.coefficient(1, 1, 0);
    return out;
}

nlohmann::json to_json(const ExpansionResult<cplx>& result) {
    nlohmann::json rows = nlohmann::json::array();
    const auto emit = [&rows](const std::map<int, Polynomial>& by_order, const char* kind) {
        for (const auto& [order, poly] : by_order) {
            for (const auto& t : poly.terms()) {
                rows.push_back({{"order", order},
                                {"kind", kind},
                                {"p", t.p},
                                {"q", t.q},
                                {"m", t.m},
                                {"coeff_re", t.coeff.real()},
                                {"coeff_im", t.coeff.imag()},
                                {"grade", t.grade}});
            }
        }
    };
    emit(result.h_eff_by_order, "h_eff");
    emit(result.s_by_order, "s");
    return {{"max_order", result.max_order}, {"requested_order", result.requested_order}, {"terms", rows}};
}

}  // namespace kpo
