// fock.hpp — truncated Fock-space linear algebra
//
// Ladder operators, Hermitian/unitary eigendecompositions with deterministic
// ordering, the dense matrix exponential and truncation-leakage accounting.
// Everything here is a pure function of its arguments.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <vector>

namespace kpo {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

inline constexpr cplx kI{0.0, 1.0};

struct LadderPair {
    ComplexMatrix annihilation;
    ComplexMatrix creation;
};

/// a with sqrt(n) on the superdiagonal and its adjoint. Throws for dim < 2.
LadderPair ladder_operators(int dim);

ComplexMatrix number_operator(int dim);

/// (a^dag)^p a^q realized in the truncated basis.
ComplexMatrix monomial_matrix(int dim, int p, int q);

/// diag((-1)^n), i.e. exp(i pi a^dag a).
ComplexMatrix parity_operator(int dim);

/// exp(M) by scaling-and-squaring Pade. Throws numeric-domain on non-finite input.
ComplexMatrix matrix_exponential(const ComplexMatrix& m);

/// Eigenvalues (ascending, or eigenphases in [0, 2pi)) and orthonormal columns.
struct SpectralDecomposition {
    RealVector values;
    ComplexMatrix vectors;
};

/// Spectral decomposition with a parity label (+1 / -1) per eigenvector.
struct ParitySpectrum {
    RealVector values;
    ComplexMatrix vectors;
    std::vector<int> parity;
};

double max_abs(const ComplexMatrix& m);
double hermiticity_defect(const ComplexMatrix& m);  // max |M - M^dag|
double unitarity_defect(const ComplexMatrix& m);    // max |M^dag M - 1|

SpectralDecomposition eig_hermitian(const ComplexMatrix& h);

/// Diagonalizes each parity sector separately when [H, P] vanishes so that
/// exactly degenerate opposite-parity pairs come out with definite parity.
/// Falls back to the full problem with <P> labels otherwise.
ParitySpectrum eig_hermitian_by_parity(const ComplexMatrix& h);

SpectralDecomposition eig_unitary(const ComplexMatrix& u);

/// Rotates every column so its first significant component is real-positive.
void fix_phases(ComplexMatrix& vectors);

double expectation(const ComplexVector& state, const ComplexMatrix& op);
double mean_photon_number(const ComplexVector& state);

/// Population carried by the top `top_fraction` of Fock levels.
double truncation_leakage(const ComplexVector& state, double top_fraction = 0.1);

inline constexpr double kLeakageThreshold = 1e-6;

inline bool leaks(const ComplexVector& state) {
    return truncation_leakage(state) > kLeakageThreshold;
}

}  // namespace kpo
