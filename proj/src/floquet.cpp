#include "kpo/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>

namespace kpo {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// The frame Hamiltonian is banded in the Fock basis (bandwidth 4), so it is
// stored by diagonals and each step exponential acts on U through a Taylor
// series of band products.
struct BandedMatrix {
    int bandwidth = 0;
    std::vector<ComplexVector> diagonals;  // offset d = index - bandwidth, entries H(i, i + d)

    [[nodiscard]] Eigen::Index dim() const { return diagonals[static_cast<std::size_t>(bandwidth)].size(); }

    [[nodiscard]] const ComplexVector& diagonal(int offset) const {
        return diagonals[static_cast<std::size_t>(offset + bandwidth)];
    }

    void multiply(const ComplexMatrix& u, ComplexMatrix& out) const {
        const Eigen::Index n = dim();
        out.noalias() = diagonal(0).asDiagonal() * u;
        for (int d = 1; d <= bandwidth; ++d) {
            out.topRows(n - d).noalias() += diagonal(d).asDiagonal() * u.bottomRows(n - d);
            out.bottomRows(n - d).noalias() += diagonal(-d).asDiagonal() * u.topRows(n - d);
        }
    }

    [[nodiscard]] double row_norm() const {
        RealVector acc = RealVector::Zero(dim());
        for (int d = -bandwidth; d <= bandwidth; ++d) {
            const auto len = diagonal(d).size();
            (d >= 0 ? acc.head(len) : acc.tail(len)) += diagonal(d).cwiseAbs();
        }
        return acc.maxCoeff();
    }
};

class BandedSeries {
public:
    explicit BandedSeries(const HarmonicSeries& series) : nu_(series.nu) {
        for (const auto& [m, hm] : series.terms) {
            for (Eigen::Index j = 0; j < hm.cols(); ++j)
                for (Eigen::Index i = 0; i < hm.rows(); ++i)
                    if (hm(i, j) != cplx(0.0)) bandwidth_ = std::max(bandwidth_, static_cast<int>(std::abs(i - j)));
        }
        for (const auto& [m, hm] : series.terms) {
            BandedMatrix b;
            b.bandwidth = bandwidth_;
            for (int d = -bandwidth_; d <= bandwidth_; ++d) b.diagonals.emplace_back(hm.diagonal(d));
            terms_.emplace_back(m, std::move(b));
        }
    }

    [[nodiscard]] BandedMatrix at(double t) const {
        BandedMatrix h;
        h.bandwidth = bandwidth_;
        for (const auto& diag : terms_.front().second.diagonals) h.diagonals.emplace_back(ComplexVector::Zero(diag.size()));
        for (const auto& [m, hm] : terms_) {
            const cplx phase = std::exp(kI * (static_cast<double>(m) * nu_ * t));
            for (std::size_t k = 0; k < hm.diagonals.size(); ++k) h.diagonals[k] += phase * hm.diagonals[k];
        }
        return h;
    }

private:
    double nu_;
    int bandwidth_ = 0;
    std::vector<std::pair<int, BandedMatrix>> terms_;
};

BandedMatrix combine(double a, const BandedMatrix& x, double b, const BandedMatrix& y) {
    BandedMatrix out = x;
    for (std::size_t k = 0; k < out.diagonals.size(); ++k) out.diagonals[k] = a * x.diagonals[k] + b * y.diagonals[k];
    return out;
}

// u <- exp(-i h dt) u, substepping so every Taylor argument has norm <= 1/2.
void apply_exponential(const BandedMatrix& h, double dt, ComplexMatrix& u, ComplexMatrix& term, ComplexMatrix& next) {
    const int substeps = std::max(1, static_cast<int>(std::ceil(2.0 * h.row_norm() * std::abs(dt))));
    const cplx step = -kI * (dt / substeps);
    for (int s = 0; s < substeps; ++s) {
        term = u;
        for (int k = 1; k <= 40; ++k) {
            h.multiply(term, next);
            term = (step / static_cast<double>(k)) * next;
            u += term;
            if (term.cwiseAbs().maxCoeff() < 1e-17) break;
        }
    }
}

void require_steps(int steps) {
    if (steps < 1) throw Error(ErrorKind::InvalidParameter, "propagate: step count must be positive");
}

// Reorders a decomposition by ascending quasienergy and fills the per-mode
// observables.
void finish(FloquetSolution& sol, RealVector eps, ComplexMatrix vectors) {
    const auto n = eps.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return eps(a) < eps(b); });
    sol.quasienergies.resize(n);
    sol.modes.resize(vectors.rows(), n);
    sol.photon_numbers.resize(n);
    sol.leakage.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto src = order[static_cast<std::size_t>(k)];
        sol.quasienergies(k) = eps(src);
        sol.modes.col(k) = vectors.col(src);
        sol.photon_numbers(k) = mean_photon_number(sol.modes.col(k));
        sol.leakage(k) = truncation_leakage(sol.modes.col(k));
    }
}

std::string format_double(double v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    return os.str();
}

}  // namespace

double fold_quasienergy(double eps, double width) {
    if (!(width > 0.0)) throw Error(ErrorKind::InvalidParameter, "fold_quasienergy: zone width must be positive");
    double r = std::fmod(eps, width);
    if (r < 0.0) r += width;
    if (r >= width) r = 0.0;
    return r;
}

ComplexMatrix propagate(const HarmonicSeries& series, double t_start, double duration, int steps,
                        Integrator integrator) {
    require_steps(steps);
    const int dim = series.dim();
    const double dt = duration / steps;
    if (dim == 0) return {};
    const BandedSeries banded(series);
    ComplexMatrix u = ComplexMatrix::Identity(dim, dim);
    ComplexMatrix term(dim, dim);
    ComplexMatrix next(dim, dim);
    switch (integrator) {
        case Integrator::Midpoint:
            for (int j = 0; j < steps; ++j) apply_exponential(banded.at(t_start + (j + 0.5) * dt), dt, u, term, next);
            break;
        case Integrator::CommutatorFree4: {
            const double c1 = 0.5 - kSqrt3 / 6.0;
            const double c2 = 0.5 + kSqrt3 / 6.0;
            const double a1 = 0.25 + kSqrt3 / 6.0;
            const double a2 = 0.25 - kSqrt3 / 6.0;
            for (int j = 0; j < steps; ++j) {
                const double t = t_start + j * dt;
                const BandedMatrix h1 = banded.at(t + c1 * dt);
                const BandedMatrix h2 = banded.at(t + c2 * dt);
                apply_exponential(combine(a1, h1, a2, h2), dt, u, term, next);
                apply_exponential(combine(a2, h1, a1, h2), dt, u, term, next);
            }
            break;
        }
    }
    return u;
}

FloquetSolution propagate_period(const ModelParams& params, const SolverSettings& settings) {
    validate(params);
    if (settings.steps_per_drive_period < 64) {
        throw Error(ErrorKind::InvalidParameter, "propagate_period: need at least 64 steps per drive period");
    }
    const auto series = harmonic_series(params);
    const double drive_period = 2.0 * std::numbers::pi / params.drive_frequency;
    const ComplexMatrix u_d =
        propagate(series, settings.t0, drive_period, settings.steps_per_drive_period, settings.integrator);
    if (!u_d.allFinite() || unitarity_defect(u_d) > kPropagatorUnitarityLimit) {
        throw Error(ErrorKind::IntegratorFailure, "propagate_period: propagator lost unitarity");
    }
    FloquetSolution sol;
    sol.params = params;
    // Left-multiplying by the diagonal parity flips the sign of odd rows.
    sol.half_map = u_d;
    for (Eigen::Index r = 1; r < u_d.rows(); r += 2) sol.half_map.row(r) *= -1.0;
    sol.U_T = sol.half_map * sol.half_map;
    return sol;
}

FloquetSolution floquet_decompose(const ComplexMatrix& U_T, double omega_d) {
    if (!(omega_d > 0.0)) throw Error(ErrorKind::InvalidParameter, "floquet_decompose: omega_d must be positive");
    const auto dec = eig_unitary(U_T);
    const double period = 2.0 * 2.0 * std::numbers::pi / omega_d;
    const double width = 0.5 * omega_d;
    RealVector eps(dec.values.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = fold_quasienergy(-dec.values(k) / period, width);
    FloquetSolution sol;
    sol.U_T = U_T;
    sol.params.drive_frequency = omega_d;
    sol.params.dim = static_cast<int>(U_T.rows());
    finish(sol, std::move(eps), dec.vectors);
    return sol;
}

FloquetSolution solve(const ModelParams& params, const SolverSettings& settings) {
    FloquetSolution sol = propagate_period(params, settings);
    const auto dec = eig_unitary(sol.half_map);
    const double period = frame_period(params);
    const double width = half_drive_frequency(params);
    RealVector eps(dec.values.size());
    // F|phi> = e^{i theta}|phi> gives U_T|phi> = e^{2 i theta}|phi> = e^{-i eps T}|phi>.
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = fold_quasienergy(-2.0 * dec.values(k) / period, width);
    finish(sol, std::move(eps), dec.vectors);
    return sol;
}

std::pair<int, double> best_overlap(const ComplexMatrix& modes, const ComplexVector& reference) {
    if (modes.rows() != reference.size()) {
        throw Error(ErrorKind::DimensionMismatch, "best_overlap: reference and modes differ in dimension");
    }
    const RealVector overlaps = (modes.adjoint() * reference).cwiseAbs2();
    Eigen::Index best = 0;
    const double value = overlaps.maxCoeff(&best);
    return {static_cast<int>(best), value / reference.squaredNorm()};
}

TrackedBranch track_ground_branch(const ModelParams& base, const std::vector<double>& controls,
                                  const SolverSettings& settings, const TrackingOptions& options,
                                  const BranchObserver& observer) {
    if (controls.empty() || controls.front() != 0.0) {
        throw Error(ErrorKind::InvalidParameter, "track_ground_branch: controls must start at 0");
    }
    if (!std::is_sorted(controls.begin(), controls.end())) {
        throw Error(ErrorKind::InvalidParameter, "track_ground_branch: controls must be ascending");
    }
    TrackedBranch branch;

    // Undriven frame: its static part is diagonal in the Fock basis with the
    // vacuum as the state continuously connected to the ground state.
    ComplexVector reference = ComplexVector::Zero(base.dim);
    reference(0) = 1.0;

    const auto accept = [&](double control, const FloquetSolution& sol, int index, double overlap, bool refined) {
        BranchPoint pt;
        pt.control = control;
        pt.mode_index = index;
        pt.eps0 = sol.quasienergies(index);
        pt.mode = sol.modes.col(index);
        pt.overlap = overlap;
        pt.refined = refined;
        branch.points.push_back(pt);
        reference = pt.mode;
        if (observer) observer(branch.points.back(), sol);
    };

    // Solves at `target` starting from the current reference; bisects the
    // interval from `from` when the overlap drops below the threshold.
    std::function<void(double, double, int, bool)> advance = [&](double from, double target, int depth, bool refined) {
        const FloquetSolution sol = solve(control_to_drive(target, base), settings);
        const auto [index, overlap] = best_overlap(sol.modes, reference);
        if (overlap >= options.overlap_threshold) {
            accept(target, sol, index, overlap, refined);
            return;
        }
        if (depth >= options.max_bisections) {
            std::ostringstream msg;
            msg << "track_ground_branch: overlap " << overlap << " below threshold " << options.overlap_threshold
                << " at control " << target << " (last good " << from << ")";
            throw BranchBreakError(from, branch, msg.str());
        }
        const double mid = 0.5 * (from + target);
        advance(from, mid, depth + 1, true);
        advance(mid, target, depth + 1, refined);
    };

    {
        const FloquetSolution sol = solve(control_to_drive(0.0, base), settings);
        const auto [index, overlap] = best_overlap(sol.modes, reference);
        accept(0.0, sol, index, overlap, false);
    }
    for (std::size_t i = 1; i < controls.size(); ++i) advance(branch.points.back().control, controls[i], 0, false);
    return branch;
}

std::vector<RescaledLevel> rescaled_quasienergies(const FloquetSolution& solution, double eps0, double kerr) {
    if (!(std::abs(kerr) > 1e-15)) {
        throw Error(ErrorKind::RescalingUndefined, "rescaled_quasienergies: |K| <= 1e-15");
    }
    const double width = solution.zone_width();
    const double sign = kerr > 0.0 ? -1.0 : 1.0;
    std::vector<RescaledLevel> out;
    out.reserve(static_cast<std::size_t>(solution.quasienergies.size()));
    for (Eigen::Index k = 0; k < solution.quasienergies.size(); ++k) {
        const double folded = fold_quasienergy(sign * (solution.quasienergies(k) - eps0), width);
        out.push_back({static_cast<int>(k), folded / std::abs(kerr), solution.photon_numbers(k)});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.value < b.value; });
    return out;
}

PhotonPartition photon_filter(const FloquetSolution& solution, double threshold) {
    if (!(threshold >= 0.0)) throw Error(ErrorKind::InvalidParameter, "photon_filter: threshold must be non-negative");
    PhotonPartition out;
    for (Eigen::Index k = 0; k < solution.photon_numbers.size(); ++k) {
        (solution.photon_numbers(k) <= threshold ? out.retained : out.grayed).push_back(static_cast<int>(k));
    }
    return out;
}

nlohmann::json to_json(const FloquetSolution& solution) {
    const auto& p = solution.params;
    nlohmann::json j;
    j["params"] = {{"omega_o", p.omega_o},       {"g3", p.g3},
                   {"g4", p.g4},                 {"drive_strength", p.drive_strength},
                   {"drive_frequency", p.drive_frequency}, {"dim", p.dim}};
    j["period"] = solution.period();
    j["zone_width"] = solution.zone_width();
    j["unitarity_defect"] = unitarity_defect(solution.U_T);
    std::vector<double> eps(solution.quasienergies.data(), solution.quasienergies.data() + solution.quasienergies.size());
    std::vector<double> n(solution.photon_numbers.data(), solution.photon_numbers.data() + solution.photon_numbers.size());
    std::vector<double> leak(solution.leakage.data(), solution.leakage.data() + solution.leakage.size());
    j["quasienergies"] = eps;
    j["photon_numbers"] = n;
    j["leakage"] = leak;
    return j;
}

void write_bundle(const FloquetSolution& solution, const std::filesystem::path& directory, const std::string& stem,
                  bool include_modes) {
    std::filesystem::create_directories(directory);
    {
        std::ofstream js(directory / (stem + ".json"));
        if (!js) throw Error(ErrorKind::Io, "write_bundle: cannot open " + (directory / (stem + ".json")).string());
        js << to_json(solution).dump(2) << "\n";
    }
    {
        std::ofstream csv(directory / (stem + "_levels.csv"));
        if (!csv) throw Error(ErrorKind::Io, "write_bundle: cannot open levels file");
        csv << "mode,quasienergy[omega_o],photon_number[1],leakage[1]\n";
        for (Eigen::Index k = 0; k < solution.quasienergies.size(); ++k) {
            csv << k << ',' << format_double(solution.quasienergies(k)) << ','
                << format_double(solution.photon_numbers(k)) << ',' << format_double(solution.leakage(k)) << '\n';
        }
    }
    if (include_modes) {
        std::ofstream csv(directory / (stem + "_modes.csv"));
        if (!csv) throw Error(ErrorKind::Io, "write_bundle: cannot open modes file");
        csv << "mode,fock[1],re[1],im[1]\n";
        for (Eigen::Index k = 0; k < solution.modes.cols(); ++k)
            for (Eigen::Index n = 0; n < solution.modes.rows(); ++n)
                csv << k << ',' << n << ',' << format_double(solution.modes(n, k).real()) << ','
                    << format_double(solution.modes(n, k).imag()) << '\n';
    }
}

void write_branch_csv(const TrackedBranch& branch, const std::filesystem::path& path) {
    std::ofstream csv(path);
    if (!csv) throw Error(ErrorKind::Io, "write_branch_csv: cannot open " + path.string());
    csv << "control[1],eps0[omega_o],overlap[1],mode_index[1],refined[1]\n";
    for (const auto& pt : branch.points) {
        csv << format_double(pt.control) << ',' << format_double(pt.eps0) << ',' << format_double(pt.overlap) << ','
            << pt.mode_index << ',' << (pt.refined ? 1 : 0) << '\n';
    }
}

}  // namespace kpo
