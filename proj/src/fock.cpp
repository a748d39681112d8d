#include "kpo/fock.hpp"

#include "kpo/error.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace kpo {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kUnitaryTol = 1e-9;

void require_square(const ComplexMatrix& m, const char* who) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw Error(ErrorKind::DimensionMismatch, std::string(who) + ": matrix must be square and non-empty");
    }
}

// Sort columns by value; ties keep their original relative order.
void sort_spectrum(RealVector& values, ComplexMatrix& vectors, std::vector<int>* labels = nullptr) {
    const auto n = values.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
    RealVector v(n);
    ComplexMatrix vec(vectors.rows(), n);
    std::vector<int> lab;
    for (Eigen::Index k = 0; k < n; ++k) {
        v(k) = values(order[static_cast<std::size_t>(k)]);
        vec.col(k) = vectors.col(order[static_cast<std::size_t>(k)]);
        if (labels) lab.push_back((*labels)[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])]);
    }
    values = std::move(v);
    vectors = std::move(vec);
    if (labels) *labels = std::move(lab);
}

}  // namespace

LadderPair ladder_operators(int dim) {
    if (dim < 2) {
        throw Error(ErrorKind::InvalidDimension, "ladder_operators: truncation must be at least 2");
    }
    ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return {a, a.adjoint()};
}

ComplexMatrix number_operator(int dim) {
    if (dim < 1) throw Error(ErrorKind::InvalidDimension, "number_operator: dim must be positive");
    ComplexMatrix n = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return n;
}

ComplexMatrix monomial_matrix(int dim, int p, int q) {
    if (dim < 1 || p < 0 || q < 0) throw Error(ErrorKind::InvalidDimension, "monomial_matrix: bad arguments");
    ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
    for (int n = q; n < dim; ++n) {
        const int target = n - q + p;
        if (target >= dim) continue;
        // sqrt(n!/(n-q)!) * sqrt((n-q+p)!/(n-q)!)
        double amp = 1.0;
        for (int k = n - q + 1; k <= n; ++k) amp *= std::sqrt(static_cast<double>(k));
        for (int k = n - q + 1; k <= target; ++k) amp *= std::sqrt(static_cast<double>(k));
        out(target, n) = amp;
    }
    return out;
}

ComplexMatrix parity_operator(int dim) {
    if (dim < 2) throw Error(ErrorKind::InvalidDimension, "parity_operator: truncation must be at least 2");
    ComplexMatrix p = ComplexMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
    return p;
}

ComplexMatrix matrix_exponential(const ComplexMatrix& m) {
    require_square(m, "matrix_exponential");
    if (!m.allFinite()) throw Error(ErrorKind::NumericDomain, "matrix_exponential: non-finite entries");
    return m.exp();
}

double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const ComplexMatrix& m) {
    return max_abs(m - m.adjoint());
}

double unitarity_defect(const ComplexMatrix& m) {
    return max_abs(m.adjoint() * m - ComplexMatrix::Identity(m.rows(), m.cols()));
}

void fix_phases(ComplexMatrix& vectors) {
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
        auto col = vectors.col(k);
        const double scale = col.cwiseAbs().maxCoeff();
        if (scale == 0.0) continue;
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            const double mag = std::abs(col(i));
            if (mag > 1e-6 * scale) {
                col *= std::conj(col(i)) / mag;
                break;
            }
        }
    }
}

SpectralDecomposition eig_hermitian(const ComplexMatrix& h) {
    require_square(h, "eig_hermitian");
    if (hermiticity_defect(h) > kHermitianTol * std::max(1.0, max_abs(h))) {
        throw Error(ErrorKind::ContractViolation, "eig_hermitian: matrix is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericDomain, "eig_hermitian: eigensolver did not converge");
    }
    SpectralDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    sort_spectrum(out.values, out.vectors);
    fix_phases(out.vectors);
    return out;
}

ParitySpectrum eig_hermitian_by_parity(const ComplexMatrix& h) {
    require_square(h, "eig_hermitian_by_parity");
    const auto dim = h.rows();
    double odd_block = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            if ((i + j) % 2 == 1) odd_block = std::max(odd_block, std::abs(h(i, j)));

    ParitySpectrum out;
    if (odd_block <= kHermitianTol * std::max(1.0, max_abs(h))) {
        out.values.resize(dim);
        out.vectors = ComplexMatrix::Zero(dim, dim);
        out.parity.resize(static_cast<std::size_t>(dim));
        Eigen::Index col = 0;
        for (int sector = 0; sector < 2; ++sector) {
            const Eigen::Index size = (dim - sector + 1) / 2;
            if (size == 0) continue;
            ComplexMatrix block(size, size);
            for (Eigen::Index i = 0; i < size; ++i)
                for (Eigen::Index j = 0; j < size; ++j) block(i, j) = h(2 * i + sector, 2 * j + sector);
            const auto dec = eig_hermitian(block);
            for (Eigen::Index k = 0; k < size; ++k, ++col) {
                out.values(col) = dec.values(k);
                for (Eigen::Index i = 0; i < size; ++i) out.vectors(2 * i + sector, col) = dec.vectors(i, k);
                out.parity[static_cast<std::size_t>(col)] = sector == 0 ? 1 : -1;
            }
        }
        sort_spectrum(out.values, out.vectors, &out.parity);
        return out;
    }

    auto dec = eig_hermitian(h);
    out.values = std::move(dec.values);
    out.vectors = std::move(dec.vectors);
    out.parity.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index k = 0; k < dim; ++k) {
        double p = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) p += (i % 2 == 0 ? 1.0 : -1.0) * std::norm(out.vectors(i, k));
        out.parity[static_cast<std::size_t>(k)] = p >= 0.0 ? 1 : -1;
    }
    return out;
}

SpectralDecomposition eig_unitary(const ComplexMatrix& u) {
    require_square(u, "eig_unitary");
    if (!u.allFinite()) throw Error(ErrorKind::NumericDomain, "eig_unitary: non-finite entries");
    if (unitarity_defect(u) > kUnitaryTol) {
        throw Error(ErrorKind::ContractViolation, "eig_unitary: matrix is not unitary");
    }
    // A normal matrix has a diagonal Schur form, so the Schur vectors are an
    // orthonormal eigenbasis even inside (near-)degenerate clusters.
    Eigen::ComplexSchur<ComplexMatrix> schur(u);
    if (schur.info() != Eigen::Success) {
        throw Error(ErrorKind::NumericDomain, "eig_unitary: Schur decomposition did not converge");
    }
    const ComplexMatrix& t = schur.matrixT();
    const auto n = u.rows();
    SpectralDecomposition out{RealVector(n), schur.matrixU()};
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx lambda = t(k, k);
        if (std::abs(std::abs(lambda) - 1.0) > kUnitaryTol) {
            throw Error(ErrorKind::ContractViolation, "eig_unitary: eigenvalue off the unit circle");
        }
        double phase = std::arg(lambda);
        if (phase < 0.0) phase += two_pi;
        if (phase >= two_pi) phase -= two_pi;
        out.values(k) = phase;
    }
    sort_spectrum(out.values, out.vectors);
    fix_phases(out.vectors);
    return out;
}

double expectation(const ComplexVector& state, const ComplexMatrix& op) {
    return (state.adjoint() * op * state)(0, 0).real() / state.squaredNorm();
}

double mean_photon_number(const ComplexVector& state) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < state.size(); ++n) acc += static_cast<double>(n) * std::norm(state(n));
    return acc / state.squaredNorm();
}

double truncation_leakage(const ComplexVector& state, double top_fraction) {
    const auto dim = state.size();
    const auto top = std::max<Eigen::Index>(1, static_cast<Eigen::Index>(std::ceil(top_fraction * static_cast<double>(dim))));
    double acc = 0.0;
    for (Eigen::Index n = dim - top; n < dim; ++n) acc += std::norm(state(n));
    return acc / state.squaredNorm();
}

}  // namespace kpo
