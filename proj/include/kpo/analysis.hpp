// analysis.hpp — agreement metrics between effective and Floquet descriptions
#pragma once

#include "kpo/effective.hpp"
#include "kpo/floquet.hpp"
#include "kpo/fock.hpp"

#include <optional>
#include <vector>

namespace kpo {

/// U_S at t = 0 together with the expansion order it was built at, so the
/// effective model and the frame map cannot silently come from different orders.
struct FrameMap {
    ComplexMatrix U_S;
    int order = 2;
};

struct IprReport {
    std::vector<std::pair<int, double>> per_state;  // (effective state index, I_k)
    double average = 0.0;
    int n_b = 0;
};

/// I = sum_j |<phi_j| U_S |E>|^4 over the columns of `floquet_modes`.
double ipr(const ComplexVector& effective_state, const ComplexMatrix& floquet_modes, const ComplexMatrix& U_S);

/// Average IPR over the n_b = floor(2 control / pi) lowest states of -H_eff/K.
/// Throws empty-well when n_b = 0 and contract-violation when the orders differ.
IprReport avg_ipr_below_well(const EffectiveModel& h_eff, const FloquetSolution& solution, const FrameMap& frame,
                             double control);

/// (1/2N) sum_k |e^{i theta_k} - 1| over the eigenphases of U_S.
double trace_distance_identity(const ComplexMatrix& U_S);

struct KissingGap {
    int pair = 0;
    double lower = 0.0;  // energy of the lower member
    double gap = 0.0;
};

/// Walks the ascending spectrum from the bottom and pairs adjacent levels of
/// opposite parity. Throws unlabeled-spectrum when parities are missing or not +-1.
std::vector<KissingGap> kissing_gaps(const RealVector& spectrum, const std::vector<int>& parities);

struct ProfilePoint {
    double energy = 0.0;
    double photon_number = 0.0;
};

/// <a^dag a> per column of `states`, ordered by energy.
std::vector<ProfilePoint> photon_number_profile(const ComplexMatrix& states, const RealVector& energies);

struct PhotonDip {
    std::size_t index = 0;
    double energy = 0.0;
    double photon_number = 0.0;
    double neighbor_average = 0.0;  // mean of the profile two levels below and above
    [[nodiscard]] double ratio() const { return photon_number / neighbor_average; }
};

/// Deepest local minimum of the profile whose energy lies within
/// target * (1 +- relative_window), measured against the levels two steps away.
std::optional<PhotonDip> photon_dip(const std::vector<ProfilePoint>& profile, double target,
                                    double relative_window = 0.1);

inline constexpr double kBoundaryCoefficient = 0.65;

/// g4 = a g3^{3/4} / control.
double boundary_curve(double g3, double control, double a = kBoundaryCoefficient);

struct GridAxis {
    double min = -5.0;
    double max = 5.0;
    int count = 101;

    [[nodiscard]] std::vector<double> values() const;
    [[nodiscard]] double step() const;
};

struct WignerGrid {
    std::vector<double> x_axis;
    std::vector<double> p_axis;
    RealMatrix values;  // values(i, j) = W(x_i + i p_j)

    [[nodiscard]] double cell_area() const;
    [[nodiscard]] double integral() const;
};

struct WignerOptions {
    int padding = 60;  // extra Fock levels so displaced states stay inside the basis
};

/// W(alpha) = (2/pi) <psi| D(alpha) P D^dag(alpha) |psi> with alpha = x + i p.
WignerGrid wigner(const ComplexVector& state, const GridAxis& x, const GridAxis& p, const WignerOptions& options = {});

/// Single-point evaluation through the matrix exponential of alpha a^dag - alpha* a.
double wigner_point(const ComplexVector& state, cplx alpha, const WignerOptions& options = {});

/// sqrt(sum (W_a - W_b)^2 * cell area). Grids must share their axes.
double wigner_l2_distance(const WignerGrid& a, const WignerGrid& b);

struct Matching {
    std::vector<int> assignment;  // assignment[i] = column of `to` matched to column i of `from`
    std::vector<double> overlaps; // |<from_i|to_assignment[i]>|^2
    bool hungarian = false;       // fallback used
};

/// Greedy maximum-overlap assignment; falls back to the optimal (Hungarian)
/// assignment when any greedy overlap is below `threshold`.
Matching match_states(const ComplexMatrix& from, const ComplexMatrix& to, double threshold = 0.7);

/// max_k || U_T U_S|E_k> - e^{-i E_k T} U_S|E_k> || over the given effective
/// states with unscaled energies E_k.
double frame_identity_residual(const ComplexMatrix& U_T, double period, const ComplexMatrix& U_S,
                               const ComplexMatrix& states, const RealVector& energies);

}  // namespace kpo
