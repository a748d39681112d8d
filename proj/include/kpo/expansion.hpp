// expansion.hpp — order-by-order static effective Hamiltonian and frame generator
//
// Works in the displaced rotating frame with harmonics of nu = omega_d/2 and
// splits nu = omega_o + delta. The omega_o part of d/dt keeps the grade of S,
// the delta part raises it by two, so every denominator is an exact multiple
// of omega_o. At grade n the remainder
//
//   R_n = [ sum_k (-i)^k/k! ad_S^k H + sum_k (-i)^k/(k+1)! ad_S^k dS/dt ]_n
//
// is split into h_eff[n] = secular(R_n) and s[n] = -primitive(oscillatory(R_n)).

#pragma once

#include "kpo/effective.hpp"
#include "kpo/model.hpp"
#include "kpo/polynomial.hpp"

#include <json.hpp>

#include <map>
#include <string>

namespace kpo {

template <class S>
struct ExpansionInputs {
    S g3{};
    S g4{};
    S Pi{};
    S delta{};
    S omega_o{1L};
};

template <class S>
struct ExpansionResult {
    std::map<int, BosonicPolynomial<S>> h_eff_by_order;  // m = 0 only
    std::map<int, BosonicPolynomial<S>> s_by_order;      // m != 0 only, no c-numbers
    int max_order = 0;                                   // highest order with a non-empty remainder
    int requested_order = 0;
};

ExpansionInputs<cplx> expansion_inputs(const ModelParams& params);

/// X = a e^{-i nu t} + a^dag e^{i nu t} + Pi (e^{-2 i nu t} + e^{2 i nu t}) as a grade-0 polynomial.
template <class S>
BosonicPolynomial<S> displacement_polynomial(const S& Pi) {
    using P = BosonicPolynomial<S>;
    P x = P::monomial(S(1L), 0, 1, -1) + P::monomial(S(1L), 1, 0, 1);
    if (!is_exact_zero(Pi)) x += P::monomial(Pi, 0, 0, -2) + P::monomial(ScalarOps<S>::conj(Pi), 0, 0, 2);
    return x;
}

/// Graded frame Hamiltonian: (g3/3) X^3 at grade 1, (g4/4) X^4 - delta a^dag a at grade 2.
template <class S>
BosonicPolynomial<S> frame_polynomial(const ExpansionInputs<S>& in) {
    using P = BosonicPolynomial<S>;
    using Ops = ScalarOps<S>;
    const P x = displacement_polynomial(in.Pi);
    const P x2 = multiply(x, x);
    const P x3 = multiply(x2, x);
    const P x4 = multiply(x2, x2);
    P h = x3.scaled(in.g3 * Ops::from_ratio(1, 3), 1) + x4.scaled(in.g4 * Ops::from_ratio(1, 4), 2);
    h -= P::monomial(in.delta, 1, 1, 0, 2);
    return h;
}

template <class S>
BosonicPolynomial<S> sum_orders(const std::map<int, BosonicPolynomial<S>>& by_order, int up_to) {
    BosonicPolynomial<S> acc;
    for (const auto& [n, poly] : by_order)
        if (n <= up_to) acc += poly;
    return acc;
}

template <class S>
ExpansionResult<S> expand(const ExpansionInputs<S>& in, int max_order, std::size_t cap = kDefaultTermCap) {
    using P = BosonicPolynomial<S>;
    using Ops = ScalarOps<S>;
    if (max_order < 1 || max_order > 8) {
        throw Error(ErrorKind::InvalidParameter, "expand: max_order must lie in 1..8");
    }
    const P h = frame_polynomial(in);
    const S two_omega = in.omega_o * S(2L);
    const S two_delta = in.delta * S(2L);
    const bool detuned = !is_exact_zero(in.delta);

    ExpansionResult<S> out;
    out.requested_order = max_order;
    P s_acc;
    for (int n = 1; n <= max_order; ++n) {
        P s_dot = time_derivative(s_acc, two_omega);
        if (detuned) s_dot += time_derivative(s_acc, two_delta, 2);

        P remainder;
        S factor = S(1L);
        P nested = h.up_to_grade(n);
        for (int k = 0; k <= n && !nested.empty(); ++k) {
            remainder += nested.grade_part(n).scaled(factor);
            if (k == n) break;
            nested = commutator(s_acc, nested, n, cap);
            factor = Ops::times_i(-factor) * Ops::from_ratio(1, k + 1);
        }
        factor = S(1L);
        nested = s_dot.up_to_grade(n);
        for (int k = 0; k <= n && !nested.empty(); ++k) {
            // (-i)^k / (k+1)!
            remainder += nested.grade_part(n).scaled(factor * Ops::from_ratio(1, k + 1));
            if (k == n) break;
            nested = commutator(s_acc, nested, n, cap);
            factor = Ops::times_i(-factor) * Ops::from_ratio(1, k + 1);
        }

        if (!remainder.empty()) out.max_order = n;
        out.h_eff_by_order[n] = remainder.secular_part();
        P s_n = integrate_oscillatory(remainder.oscillatory_part().without_constants(), two_omega).scaled(S(-1L));
        if (s_n.size() > cap) throw Error(ErrorKind::ExpansionBlowup, "expand: generator exceeds term cap");
        s_acc += s_n;
        out.s_by_order[n] = std::move(s_n);
    }
    return out;
}

/// Floating-point expansion for a concrete parameter set.
ExpansionResult<cplx> expand(const ModelParams& params, int max_order, std::size_t cap = kDefaultTermCap);

/// Frame map at t = 0 with S summed up to `order` (all orders when order < 0).
/// The engine removes micromotion as H_eff = e^{-iS}(H - i d/dt)e^{iS}, so
/// effective eigenstates map onto Floquet modes as |phi> = U_S |E> with
/// U_S = exp(+i S(0)).
/// Throws internal-consistency when the accumulated S is not Hermitian to 1e-10.
ComplexMatrix u_s_matrix(const ExpansionResult<cplx>& result, int dim, int order = -1);

/// Realized sum of h_eff up to `order` with the K2/eps2_2 entries read off the
/// polynomial (coefficients of -a^dag^2 a^2 and a^dag^2).
EffectiveModel engine_model(const ExpansionResult<cplx>& result, int dim, int order);

/// Rows {order, kind, p, q, m, coeff_re, coeff_im, grade}.
nlohmann::json to_json(const ExpansionResult<cplx>& result);

extern template ExpansionResult<cplx> expand<cplx>(const ExpansionInputs<cplx>&, int, std::size_t);
extern template ExpansionResult<ExactComplex> expand<ExactComplex>(const ExpansionInputs<ExactComplex>&, int,
                                                                   std::size_t);

}  // namespace kpo
