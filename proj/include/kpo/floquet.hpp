// floquet.hpp — period propagator, quasienergies and ground-branch tracking
//
// The frame Hamiltonian obeys H(t + T_d) = P H(t) P with P the photon-number
// parity, so the two-drive-period propagator factorizes as U(T) = (P U_d)^2
// where U_d propagates over a single drive period. Only U_d is integrated and
// the Floquet problem is solved on F = P U_d. Near-degenerate cat doublets
// have F-eigenvalues of opposite sign, which keeps them cleanly separated.

#pragma once

#include "kpo/error.hpp"
#include "kpo/fock.hpp"
#include "kpo/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kpo {

enum class Integrator {
    Midpoint,          // exp(-i H(t_mid) dt), second order
    CommutatorFree4,   // two-exponential fourth-order commutator-free scheme
};

struct SolverSettings {
    int steps_per_drive_period = 512;
    Integrator integrator = Integrator::Midpoint;
    double t0 = 0.0;  // start of the propagation window
};

inline constexpr double kPropagatorUnitarityLimit = 1e-8;

/// Time-ordered exp over [t_start, t_start + duration] with `steps` uniform steps.
ComplexMatrix propagate(const HarmonicSeries& series, double t_start, double duration, int steps,
                        Integrator integrator);

struct FloquetSolution {
    ComplexMatrix U_T;           // propagator over T = 2 T_d
    ComplexMatrix half_map;      // F = P U(t0 + T_d, t0); U_T = F^2. Empty when not used.
    RealVector quasienergies;    // ascending, in [0, omega_d / 2)
    ComplexMatrix modes;         // orthonormal columns, same order
    RealVector photon_numbers;   // <a^dag a> per mode
    RealVector leakage;          // population in the top 10% of Fock levels per mode
    ModelParams params;

    [[nodiscard]] double period() const { return frame_period(params); }
    [[nodiscard]] double zone_width() const { return half_drive_frequency(params); }
    [[nodiscard]] int dim() const { return static_cast<int>(U_T.rows()); }
};

/// Folds a quasienergy into [0, width).
double fold_quasienergy(double eps, double width);

/// Integrates one drive period and returns U_T = (P U_d)^2 together with F = P U_d.
/// Throws integrator-failure if the unitarity defect exceeds 1e-8.
FloquetSolution propagate_period(const ModelParams& params, const SolverSettings& settings = {});

/// General eigen-decomposition of a two-period propagator.
FloquetSolution floquet_decompose(const ComplexMatrix& U_T, double omega_d);

/// propagate_period followed by the decomposition of the half map.
FloquetSolution solve(const ModelParams& params, const SolverSettings& settings = {});

struct BranchPoint {
    double control = 0.0;
    double eps0 = 0.0;           // ground quasienergy
    ComplexVector mode;          // tracked Floquet mode
    double overlap = 1.0;        // |<previous|mode>|^2
    int mode_index = 0;          // column in the solution at this control
    bool refined = false;        // inserted by bisection
};

struct TrackedBranch {
    std::vector<BranchPoint> points;
};

struct TrackingOptions {
    double overlap_threshold = 0.5;
    int max_bisections = 6;
};

/// Thrown when no mode overlaps the previous ground mode above the threshold
/// even after bisection. Carries the branch up to the last good control.
class BranchBreakError : public Error {
public:
    BranchBreakError(double last_good, TrackedBranch partial, const std::string& what)
        : Error(ErrorKind::BranchBreak, what), last_good_control(last_good), branch(std::move(partial)) {}

    double last_good_control;
    TrackedBranch branch;
};

/// Callback invoked with every accepted point and its full solution.
using BranchObserver = std::function<void(const BranchPoint&, const FloquetSolution&)>;

/// Follows the Floquet ground branch along ascending controls starting at 0.
/// Each control is mapped to a drive with control_to_drive(control, base).
TrackedBranch track_ground_branch(const ModelParams& base, const std::vector<double>& controls,
                                  const SolverSettings& settings = {}, const TrackingOptions& options = {},
                                  const BranchObserver& observer = {});

/// Index of the mode with the largest |<reference|mode>|^2 and that overlap.
std::pair<int, double> best_overlap(const ComplexMatrix& modes, const ComplexVector& reference);

struct RescaledLevel {
    int mode = 0;
    double value = 0.0;          // rescaled quasienergy
    double photon_number = 0.0;
};

/// eps~ = [(-sign K)(eps - eps0) mod (omega_d/2)] / |K|, ascending. The sign
/// flip matches the rescaled effective spectrum of -H/K, so both start at 0
/// and grow into the well excitations for either sign of K.
std::vector<RescaledLevel> rescaled_quasienergies(const FloquetSolution& solution, double eps0, double kerr);

struct PhotonPartition {
    std::vector<int> retained;  // <a^dag a> <= threshold
    std::vector<int> grayed;    // <a^dag a> > threshold
};

PhotonPartition photon_filter(const FloquetSolution& solution, double threshold);

/// JSON summary (parameters, quasienergies, photon numbers, leakage).
nlohmann::json to_json(const FloquetSolution& solution);

/// Writes <stem>.json, <stem>_levels.csv and optionally <stem>_modes.csv.
void write_bundle(const FloquetSolution& solution, const std::filesystem::path& directory, const std::string& stem,
                  bool include_modes = false);

void write_branch_csv(const TrackedBranch& branch, const std::filesystem::path& path);

}  // namespace kpo
