// polynomial.hpp — normal-ordered bosonic polynomials with harmonic time dependence
//
// A term is  coeff * (a^dag)^p a^q * e^{i m nu t}  tagged with a perturbative
// grade (g3 counts 1, g4 and delta count 2, Pi counts 0). Products are brought
// back to normal order with
//
//   a^q (a^dag)^p = sum_k k! C(q,k) C(p,k) (a^dag)^(p-k) a^(q-k).
//
// The scalar type is either std::complex<double> or ExactComplex (Gaussian
// rationals), so low-order results can be checked exactly.

#pragma once

#include "kpo/error.hpp"
#include "kpo/fock.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <array>
#include <climits>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

namespace kpo {

using Rational = boost::multiprecision::cpp_rational;

/// Complex number with exact rational real and imaginary parts.
struct ExactComplex {
    Rational re{0};
    Rational im{0};

    ExactComplex() = default;
    ExactComplex(Rational r) : re(std::move(r)) {}  // NOLINT(google-explicit-constructor)
    ExactComplex(Rational r, Rational i) : re(std::move(r)), im(std::move(i)) {}
    ExactComplex(long v) : re(v) {}  // NOLINT(google-explicit-constructor)

    friend ExactComplex operator+(const ExactComplex& a, const ExactComplex& b) { return {a.re + b.re, a.im + b.im}; }
    friend ExactComplex operator-(const ExactComplex& a, const ExactComplex& b) { return {a.re - b.re, a.im - b.im}; }
    friend ExactComplex operator-(const ExactComplex& a) { return {-a.re, -a.im}; }
    friend ExactComplex operator*(const ExactComplex& a, const ExactComplex& b) {
        return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
    }
    friend ExactComplex operator/(const ExactComplex& a, const ExactComplex& b) {
        const Rational den = b.re * b.re + b.im * b.im;
        return {(a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den};
    }
    ExactComplex& operator+=(const ExactComplex& b) {
        re += b.re;
        im += b.im;
        return *this;
    }
    friend bool operator==(const ExactComplex& a, const ExactComplex& b) { return a.re == b.re && a.im == b.im; }
};

template <class S>
struct ScalarOps;

template <>
struct ScalarOps<cplx> {
    static cplx from_ratio(long num, long den) { return {static_cast<double>(num) / static_cast<double>(den), 0.0}; }
    static cplx times_i(const cplx& c) { return {-c.imag(), c.real()}; }
    static cplx conj(const cplx& c) { return std::conj(c); }
    static double magnitude(const cplx& c) { return std::abs(c); }
    static cplx to_complex(const cplx& c) { return c; }
    // Terms below 1e-15 of the largest coefficient of the same grade are dropped.
    static constexpr double kRelativePrune = 1e-15;
    static bool is_exact() { return false; }
};

template <>
struct ScalarOps<ExactComplex> {
    static ExactComplex from_ratio(long num, long den) { return ExactComplex(Rational(num, den)); }
    static ExactComplex times_i(const ExactComplex& c) { return {-c.im, c.re}; }
    static ExactComplex conj(const ExactComplex& c) { return {c.re, -c.im}; }
    static double magnitude(const ExactComplex& c) {
        return std::hypot(c.re.convert_to<double>(), c.im.convert_to<double>());
    }
    static cplx to_complex(const ExactComplex& c) { return {c.re.convert_to<double>(), c.im.convert_to<double>()}; }
    static constexpr double kRelativePrune = 0.0;
    static bool is_exact() { return true; }
};

inline bool is_exact_zero(const cplx& c) { return c == cplx{}; }
inline bool is_exact_zero(const ExactComplex& c) { return c.re == 0 && c.im == 0; }

template <class S>
struct Monomial {
    S coeff;
    int p = 0;      // power of a^dag
    int q = 0;      // power of a
    int m = 0;      // harmonic index of e^{i m nu t}
    int grade = 0;  // perturbative order

    friend bool operator==(const Monomial& a, const Monomial& b) {
        return a.p == b.p && a.q == b.q && a.m == b.m && a.grade == b.grade && a.coeff == b.coeff;
    }
};

inline constexpr std::size_t kDefaultTermCap = 200000;

namespace detail {

// Sort key ordering terms by (grade, p, q, m).
inline std::uint64_t pack_key(int grade, int p, int q, int m) {
    if (grade < 0 || grade >= 64 || p < 0 || p >= 256 || q < 0 || q >= 256 || m < -512 || m >= 512) {
        throw Error(ErrorKind::ExpansionBlowup, "polynomial: term index out of supported range");
    }
    return ((static_cast<std::uint64_t>(grade) * 256u + static_cast<std::uint64_t>(p)) * 256u +
            static_cast<std::uint64_t>(q)) * 1024u + static_cast<std::uint64_t>(m + 512);
}

inline void unpack_key(std::uint64_t key, int& grade, int& p, int& q, int& m) {
    m = static_cast<int>(key % 1024u) - 512;
    key /= 1024u;
    q = static_cast<int>(key % 256u);
    key /= 256u;
    p = static_cast<int>(key % 256u);
    grade = static_cast<int>(key / 256u);
}

inline long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// k! C(q,k) C(p,k): weight of the k-fold contraction in a^q (a^dag)^p.
inline long contraction_weight(int q, int p, int k) {
    long f = 1;
    for (int i = 2; i <= k; ++i) f *= i;
    return f * binomial(q, k) * binomial(p, k);
}

}  // namespace detail

template <class S>
class BosonicPolynomial {
public:
    using Term = Monomial<S>;
    using Ops = ScalarOps<S>;
    using Accumulator = std::unordered_map<std::uint64_t, S>;
    // Magnitude that flowed into each grade (sum of contributions for products,
    // largest operand for sums); cancellation residue below kRelativePrune of
    // it is dropped.
    using GradeScale = std::array<double, 64>;

    BosonicPolynomial() = default;

    static BosonicPolynomial monomial(const S& coeff, int p, int q, int m = 0, int grade = 0) {
        Accumulator acc;
        acc.emplace(detail::pack_key(grade, p, q, m), coeff);
        return from_accumulator(std::move(acc));
    }

    static BosonicPolynomial from_accumulator(Accumulator acc, std::size_t cap = kDefaultTermCap,
                                              const GradeScale* contributions = nullptr) {
        if (acc.size() > cap) {
            throw Error(ErrorKind::ExpansionBlowup, "polynomial: term count exceeds cap of " + std::to_string(cap));
        }
        std::vector<std::pair<std::uint64_t, S>> entries(std::make_move_iterator(acc.begin()),
                                                         std::make_move_iterator(acc.end()));
        std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

        GradeScale grade_scale{};
        if (contributions) grade_scale = *contributions;
        if constexpr (!std::is_same_v<S, ExactComplex>) {
            for (const auto& [key, c] : entries) {
                int g, p, q, m;
                detail::unpack_key(key, g, p, q, m);
                double& s = grade_scale[g];
                s = std::max(s, Ops::magnitude(c));
            }
        }
        BosonicPolynomial out;
        out.terms_.reserve(entries.size());
        for (auto& [key, c] : entries) {
            if (is_exact_zero(c)) continue;
            int g, p, q, m;
            detail::unpack_key(key, g, p, q, m);
            if constexpr (!std::is_same_v<S, ExactComplex>) {
                if (Ops::magnitude(c) <= Ops::kRelativePrune * grade_scale[g]) continue;
            }
            out.terms_.push_back(Term{std::move(c), p, q, m, g});
        }
        return out;
    }

    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    [[nodiscard]] bool empty() const { return terms_.empty(); }
    [[nodiscard]] std::size_t size() const { return terms_.size(); }

    [[nodiscard]] S coefficient(int p, int q, int m, int grade) const {
        for (const auto& t : terms_)
            if (t.p == p && t.q == q && t.m == m && t.grade == grade) return t.coeff;
        return S{};
    }

    /// Coefficient of (p, q, m) summed over all grades.
    [[nodiscard]] S coefficient(int p, int q, int m = 0) const {
        S acc{};
        for (const auto& t : terms_)
            if (t.p == p && t.q == q && t.m == m) acc += t.coeff;
        return acc;
    }

    [[nodiscard]] int max_grade() const {
        int g = -1;
        for (const auto& t : terms_) g = std::max(g, t.grade);
        return g;
    }

    template <class Pred>
    [[nodiscard]] BosonicPolynomial filter(Pred pred) const {
        BosonicPolynomial out;
        for (const auto& t : terms_)
            if (pred(t)) out.terms_.push_back(t);
        return out;
    }

    [[nodiscard]] BosonicPolynomial secular_part() const {
        return filter([](const Term& t) { return t.m == 0; });
    }
    [[nodiscard]] BosonicPolynomial oscillatory_part() const {
        return filter([](const Term& t) { return t.m != 0; });
    }
    [[nodiscard]] BosonicPolynomial grade_part(int grade) const {
        return filter([grade](const Term& t) { return t.grade == grade; });
    }
    [[nodiscard]] BosonicPolynomial up_to_grade(int grade) const {
        return filter([grade](const Term& t) { return t.grade <= grade; });
    }
    [[nodiscard]] BosonicPolynomial without_constants() const {
        return filter([](const Term& t) { return t.p != 0 || t.q != 0; });
    }

    /// Retags every term with the given grade.
    [[nodiscard]] BosonicPolynomial with_grade(int grade) const {
        Accumulator acc;
        for (const auto& t : terms_) add_to(acc, detail::pack_key(grade, t.p, t.q, t.m), t.coeff);
        return from_accumulator(std::move(acc));
    }

    /// Shifts grades by `delta` and multiplies every coefficient by `factor`.
    [[nodiscard]] BosonicPolynomial scaled(const S& factor, int grade_shift = 0) const {
        Accumulator acc;
        for (const auto& t : terms_) add_to(acc, detail::pack_key(t.grade + grade_shift, t.p, t.q, t.m), t.coeff * factor);
        return from_accumulator(std::move(acc));
    }

    [[nodiscard]] BosonicPolynomial adjoint() const {
        Accumulator acc;
        for (const auto& t : terms_) add_to(acc, detail::pack_key(t.grade, t.q, t.p, -t.m), Ops::conj(t.coeff));
        return from_accumulator(std::move(acc));
    }

    BosonicPolynomial& operator+=(const BosonicPolynomial& rhs) {
        *this = combine(*this, rhs, S(1L));
        return *this;
    }
    BosonicPolynomial& operator-=(const BosonicPolynomial& rhs) {
        *this = combine(*this, rhs, S(-1L));
        return *this;
    }
    friend BosonicPolynomial operator+(const BosonicPolynomial& a, const BosonicPolynomial& b) { return combine(a, b, S(1L)); }
    friend BosonicPolynomial operator-(const BosonicPolynomial& a, const BosonicPolynomial& b) { return combine(a, b, S(-1L)); }
    friend BosonicPolynomial operator*(const S& c, const BosonicPolynomial& a) { return a.scaled(c); }

    friend bool operator==(const BosonicPolynomial& a, const BosonicPolynomial& b) { return a.terms_ == b.terms_; }

    static void add_to(Accumulator& acc, std::uint64_t key, const S& value) {
        auto [it, inserted] = acc.try_emplace(key, value);
        if (!inserted) it->second += value;
    }

private:
    static BosonicPolynomial combine(const BosonicPolynomial& a, const BosonicPolynomial& b, const S& sign) {
        Accumulator acc;
        GradeScale scale{};
        acc.reserve(a.size() + b.size());
        for (int side = 0; side < 2; ++side) {
            for (const auto& t : (side == 0 ? a : b).terms_) {
                add_to(acc, detail::pack_key(t.grade, t.p, t.q, t.m), side == 0 ? t.coeff : t.coeff * sign);
                scale[static_cast<std::size_t>(t.grade)] =
                    std::max(scale[static_cast<std::size_t>(t.grade)], Ops::magnitude(t.coeff));
            }
        }
        return from_accumulator(std::move(acc), kDefaultTermCap, &scale);
    }

    std::vector<Term> terms_;
};

namespace detail {

// Accumulates sign * lhs * rhs (normal ordered) into acc, skipping products
// whose grade exceeds max_grade.
template <class S>
void accumulate_product(typename BosonicPolynomial<S>::Accumulator& acc, typename BosonicPolynomial<S>::GradeScale& scale,
                        const BosonicPolynomial<S>& lhs, const BosonicPolynomial<S>& rhs, long sign, int max_grade,
                        std::size_t cap) {
    for (const auto& l : lhs.terms()) {
        for (const auto& r : rhs.terms()) {
            const int grade = l.grade + r.grade;
            if (grade > max_grade) continue;
            const S base = l.coeff * r.coeff;
            const int kmax = std::min(l.q, r.p);
            if constexpr (!std::is_same_v<S, ExactComplex>) {
                double& sc = scale[static_cast<std::size_t>(grade)];
                for (int k = 0; k <= kmax; ++k)
                    sc += ScalarOps<S>::magnitude(base) * static_cast<double>(contraction_weight(l.q, r.p, k));
            }
            for (int k = 0; k <= kmax; ++k) {
                const long w = sign * contraction_weight(l.q, r.p, k);
                BosonicPolynomial<S>::add_to(acc, pack_key(grade, l.p + r.p - k, l.q + r.q - k, l.m + r.m),
                                             base * S(w));
            }
        }
        if (acc.size() > cap) {
            throw Error(ErrorKind::ExpansionBlowup, "polynomial product exceeds term cap of " + std::to_string(cap));
        }
    }
}

}  // namespace detail

template <class S>
BosonicPolynomial<S> multiply(const BosonicPolynomial<S>& lhs, const BosonicPolynomial<S>& rhs,
                              int max_grade = INT_MAX, std::size_t cap = kDefaultTermCap) {
    typename BosonicPolynomial<S>::Accumulator acc;
    typename BosonicPolynomial<S>::GradeScale scale{};
    detail::accumulate_product(acc, scale, lhs, rhs, 1, max_grade, cap);
    return BosonicPolynomial<S>::from_accumulator(std::move(acc), cap, &scale);
}

template <class S>
BosonicPolynomial<S> operator*(const BosonicPolynomial<S>& lhs, const BosonicPolynomial<S>& rhs) {
    return multiply(lhs, rhs);
}

/// [lhs, rhs] truncated to grade <= max_grade.
template <class S>
BosonicPolynomial<S> commutator(const BosonicPolynomial<S>& lhs, const BosonicPolynomial<S>& rhs,
                                int max_grade = INT_MAX, std::size_t cap = kDefaultTermCap) {
    typename BosonicPolynomial<S>::Accumulator acc;
    typename BosonicPolynomial<S>::GradeScale scale{};
    detail::accumulate_product(acc, scale, lhs, rhs, 1, max_grade, cap);
    detail::accumulate_product(acc, scale, rhs, lhs, -1, max_grade, cap);
    return BosonicPolynomial<S>::from_accumulator(std::move(acc), cap, &scale);
}

/// Periodic primitive with zero integration constant:
/// c e^{i m w t/2} -> c / (i m w/2) e^{i m w t/2}. Throws secular-leak on m = 0.
template <class S>
BosonicPolynomial<S> integrate_oscillatory(const BosonicPolynomial<S>& poly, const std::type_identity_t<S>& omega_d) {
    using Ops = ScalarOps<S>;
    typename BosonicPolynomial<S>::Accumulator acc;
    for (const auto& t : poly.terms()) {
        if (t.m == 0) throw Error(ErrorKind::SecularLeak, "integrate_oscillatory: secular term present");
        const S rate = Ops::times_i(S(static_cast<long>(t.m)) * omega_d * Ops::from_ratio(1, 2));
        BosonicPolynomial<S>::add_to(acc, detail::pack_key(t.grade, t.p, t.q, t.m), t.coeff / rate);
    }
    return BosonicPolynomial<S>::from_accumulator(std::move(acc));
}

/// d/dt with harmonics of w/2: c -> i m (w/2) c.
template <class S>
BosonicPolynomial<S> time_derivative(const BosonicPolynomial<S>& poly, const std::type_identity_t<S>& omega_d, int grade_shift = 0) {
    using Ops = ScalarOps<S>;
    typename BosonicPolynomial<S>::Accumulator acc;
    for (const auto& t : poly.terms()) {
        if (t.m == 0) continue;
        const S rate = Ops::times_i(S(static_cast<long>(t.m)) * omega_d * Ops::from_ratio(1, 2));
        BosonicPolynomial<S>::add_to(acc, detail::pack_key(t.grade + grade_shift, t.p, t.q, t.m), t.coeff * rate);
    }
    return BosonicPolynomial<S>::from_accumulator(std::move(acc));
}

/// Largest |c(p,q,m) - conj(c(q,p,-m))| per grade, relative to that grade's scale.
template <class S>
double hermiticity_defect(const BosonicPolynomial<S>& poly) {
    using Ops = ScalarOps<S>;
    const auto diff = poly - poly.adjoint();
    double worst = 0.0;
    std::map<int, double> scale;
    for (const auto& t : poly.terms()) scale[t.grade] = std::max(scale[t.grade], Ops::magnitude(t.coeff));
    for (const auto& t : diff.terms()) {
        const double s = scale[t.grade] > 0.0 ? scale[t.grade] : 1.0;
        worst = std::max(worst, Ops::magnitude(t.coeff) / s);
    }
    return worst;
}

/// sum coeff (a^dag)^p a^q e^{i m nu t} as an N x N matrix.
template <class S>
ComplexMatrix realize(const BosonicPolynomial<S>& poly, int dim, double t, double nu) {
    if (dim < 1) throw Error(ErrorKind::InvalidDimension, "realize: dim must be positive");
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (const auto& term : poly.terms()) {
        const cplx c = ScalarOps<S>::to_complex(term.coeff) * std::exp(kI * (static_cast<double>(term.m) * nu * t));
        for (int n = term.q; n < dim; ++n) {
            const int target = n - term.q + term.p;
            if (target >= dim) continue;
            double amp = 1.0;
            for (int k = n - term.q + 1; k <= n; ++k) amp *= std::sqrt(static_cast<double>(k));
            for (int k = n - term.q + 1; k <= target; ++k) amp *= std::sqrt(static_cast<double>(k));
            out(target, n) += c * amp;
        }
    }
    return out;
}

using Polynomial = BosonicPolynomial<cplx>;
using ExactPolynomial = BosonicPolynomial<ExactComplex>;

}  // namespace kpo
