#include "kpo/analysis.hpp"

#include "kpo/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace kpo {

namespace {

constexpr double kTwoOverPi = 2.0 / std::numbers::pi;

void require(bool ok, ErrorKind kind, const char* what) {
    if (!ok) throw Error(kind, what);
}

double parity_weighted_norm(const ComplexVector& c) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < c.size(); ++n) acc += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(c(n));
    return acc;
}

ComplexVector padded(const ComplexVector& state, int padding) {
    require(padding >= 0, ErrorKind::InvalidParameter, "wigner: padding must be non-negative");
    ComplexVector out = ComplexVector::Zero(state.size() + padding);
    out.head(state.size()) = state / state.norm();
    return out;
}

// Minimizes sum cost(i, assignment[i]) over injective assignments of the
// rows into the columns (rows <= cols). Potentials-based O(n^2 m) method.
std::vector<int> hungarian(const RealMatrix& cost) {
    const int n = static_cast<int>(cost.rows());
    const int m = static_cast<int>(cost.cols());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
    std::vector<int> p(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
        std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= m; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= m; ++j) {
        if (p[static_cast<std::size_t>(j)] != 0) assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    }
    return assignment;
}

}  // namespace

double ipr(const ComplexVector& effective_state, const ComplexMatrix& floquet_modes, const ComplexMatrix& U_S) {
    require(floquet_modes.rows() == effective_state.size() && U_S.rows() == effective_state.size() &&
                U_S.cols() == effective_state.size(),
            ErrorKind::DimensionMismatch, "ipr: state, modes and U_S must share the dimension");
    const ComplexVector moved = U_S * effective_state;
    const RealVector weights = (floquet_modes.adjoint() * moved).cwiseAbs2();
    return weights.squaredNorm();
}

IprReport avg_ipr_below_well(const EffectiveModel& h_eff, const FloquetSolution& solution, const FrameMap& frame,
                             double control) {
    require(h_eff.order == frame.order, ErrorKind::ContractViolation,
            "avg_ipr_below_well: effective model and U_S come from different orders");
    const auto n = h_eff.matrix.rows();
    require(solution.modes.rows() == n && frame.U_S.rows() == n, ErrorKind::DimensionMismatch,
            "avg_ipr_below_well: dimension mismatch");
    const auto it = h_eff.coefficients.find("K2");
    require(it != h_eff.coefficients.end(), ErrorKind::ContractViolation, "avg_ipr_below_well: model has no K2");
    const int n_b = esqpt_info(control).n_b;
    if (n_b == 0) throw Error(ErrorKind::EmptyWell, "avg_ipr_below_well: no states below the well edge");
    require(n_b <= n, ErrorKind::InvalidDimension, "avg_ipr_below_well: basis smaller than the well");

    const auto spectrum = excitation_spectrum(h_eff, it->second.real());
    IprReport report;
    report.n_b = n_b;
    double sum = 0.0;
    for (int k = 0; k < n_b; ++k) {
        const double value = ipr(spectrum.states.col(k), solution.modes, frame.U_S);
        report.per_state.emplace_back(k, value);
        sum += value;
    }
    report.average = sum / n_b;
    return report;
}

double trace_distance_identity(const ComplexMatrix& U_S) {
    const auto dec = eig_unitary(U_S);
    double acc = 0.0;
    for (Eigen::Index k = 0; k < dec.values.size(); ++k) acc += std::abs(std::exp(kI * dec.values(k)) - 1.0);
    return acc / (2.0 * static_cast<double>(U_S.rows()));
}

std::vector<KissingGap> kissing_gaps(const RealVector& spectrum, const std::vector<int>& parities) {
    if (parities.size() != static_cast<std::size_t>(spectrum.size()) ||
        std::any_of(parities.begin(), parities.end(), [](int p) { return p != 1 && p != -1; })) {
        throw Error(ErrorKind::UnlabeledSpectrum, "kissing_gaps: every level needs a +1/-1 parity label");
    }
    std::vector<KissingGap> out;
    Eigen::Index i = 0;
    while (i + 1 < spectrum.size()) {
        const auto a = static_cast<std::size_t>(i);
        if (parities[a] != parities[a + 1]) {
            out.push_back({static_cast<int>(out.size()), spectrum(i), spectrum(i + 1) - spectrum(i)});
            i += 2;
        } else {
            i += 1;
        }
    }
    return out;
}

std::vector<ProfilePoint> photon_number_profile(const ComplexMatrix& states, const RealVector& energies) {
    require(states.cols() == energies.size(), ErrorKind::DimensionMismatch,
            "photon_number_profile: one energy per state required");
    std::vector<ProfilePoint> out;
    out.reserve(static_cast<std::size_t>(energies.size()));
    for (Eigen::Index k = 0; k < energies.size(); ++k) out.push_back({energies(k), mean_photon_number(states.col(k))});
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.energy < b.energy; });
    return out;
}

std::optional<PhotonDip> photon_dip(const std::vector<ProfilePoint>& profile, double target, double relative_window) {
    std::optional<PhotonDip> best;
    for (std::size_t i = 2; i + 2 < profile.size(); ++i) {
        if (std::abs(profile[i].energy - target) > relative_window * std::abs(target)) continue;
        const double here = profile[i].photon_number;
        if (!(here < profile[i - 1].photon_number && here < profile[i + 1].photon_number)) continue;
        PhotonDip dip{i, profile[i].energy, here, 0.5 * (profile[i - 2].photon_number + profile[i + 2].photon_number)};
        if (!best || dip.ratio() < best->ratio()) best = dip;
    }
    return best;
}

double boundary_curve(double g3, double control, double a) {
    require(g3 > 0.0 && control > 0.0, ErrorKind::InvalidParameter, "boundary_curve: g3 and control must be positive");
    return a * std::pow(g3, 0.75) / control;
}

std::vector<double> GridAxis::values() const {
    require(count >= 1 && max >= min, ErrorKind::InvalidParameter, "GridAxis: empty range");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) out[static_cast<std::size_t>(k)] = count == 1 ? min : min + k * step();
    return out;
}

double GridAxis::step() const { return count > 1 ? (max - min) / (count - 1) : 0.0; }

double WignerGrid::cell_area() const {
    const double dx = x_axis.size() > 1 ? x_axis[1] - x_axis[0] : 0.0;
    const double dp = p_axis.size() > 1 ? p_axis[1] - p_axis[0] : 0.0;
    return dx * dp;
}

double WignerGrid::integral() const { return values.sum() * cell_area(); }

WignerGrid wigner(const ComplexVector& state, const GridAxis& x, const GridAxis& p, const WignerOptions& options) {
    require(state.size() > 0 && state.norm() > 0.0, ErrorKind::InvalidParameter, "wigner: empty state");
    const ComplexVector psi = padded(state, options.padding);
    const int dim = static_cast<int>(psi.size());
    const auto [a, ad] = ladder_operators(dim);

    // D(x + ip) = e^{ixp} e^{x(a^dag - a)} e^{ip(a^dag + a)}, so up to a phase
    // D^dag psi = e^{-ip(a + a^dag)} e^{ix * i(a^dag - a)} psi.
    const auto shift = eig_hermitian(ComplexMatrix(-kI * (ad - a)));
    const auto boost = eig_hermitian(ComplexMatrix(ad + a));
    const ComplexVector psi_shift = shift.vectors.adjoint() * psi;

    WignerGrid grid;
    grid.x_axis = x.values();
    grid.p_axis = p.values();
    const auto nx = static_cast<Eigen::Index>(grid.x_axis.size());
    const auto np = static_cast<Eigen::Index>(grid.p_axis.size());
    grid.values.resize(nx, np);
    RealVector sign(dim);
    for (int n = 0; n < dim; ++n) sign(n) = n % 2 == 0 ? 1.0 : -1.0;

    ComplexMatrix phases(dim, np);
    for (Eigen::Index j = 0; j < np; ++j)
        for (int n = 0; n < dim; ++n) phases(n, j) = std::exp(-kI * (grid.p_axis[static_cast<std::size_t>(j)] * boost.values(n)));

    for (Eigen::Index i = 0; i < nx; ++i) {
        const double xi = grid.x_axis[static_cast<std::size_t>(i)];
        ComplexVector rotated = psi_shift;
        for (int n = 0; n < dim; ++n) rotated(n) *= std::exp(-kI * (xi * shift.values(n)));
        const ComplexVector displaced = boost.vectors.adjoint() * (shift.vectors * rotated);
        const ComplexMatrix columns = boost.vectors * (phases.array().colwise() * displaced.array()).matrix();
        grid.values.row(i) = kTwoOverPi * (sign.transpose() * columns.cwiseAbs2());
    }
    return grid;
}

double wigner_point(const ComplexVector& state, cplx alpha, const WignerOptions& options) {
    const ComplexVector psi = padded(state, options.padding);
    const auto [a, ad] = ladder_operators(static_cast<int>(psi.size()));
    const ComplexMatrix d = matrix_exponential(alpha * ad - std::conj(alpha) * a);
    const ComplexVector c = d.adjoint() * psi;
    return kTwoOverPi * parity_weighted_norm(c);
}

double wigner_l2_distance(const WignerGrid& a, const WignerGrid& b) {
    require(a.x_axis == b.x_axis && a.p_axis == b.p_axis, ErrorKind::DimensionMismatch,
            "wigner_l2_distance: grids differ");
    return std::sqrt((a.values - b.values).squaredNorm() * a.cell_area());
}

Matching match_states(const ComplexMatrix& from, const ComplexMatrix& to, double threshold) {
    require(from.rows() == to.rows(), ErrorKind::DimensionMismatch, "match_states: dimension mismatch");
    require(from.cols() <= to.cols(), ErrorKind::InvalidParameter, "match_states: more sources than targets");
    const RealMatrix overlap = (from.adjoint() * to).cwiseAbs2();
    Matching out;
    out.assignment.assign(static_cast<std::size_t>(from.cols()), -1);
    out.overlaps.assign(static_cast<std::size_t>(from.cols()), 0.0);
    std::vector<char> taken(static_cast<std::size_t>(to.cols()), 0);
    bool weak = false;
    for (Eigen::Index i = 0; i < from.cols(); ++i) {
        Eigen::Index best = -1;
        for (Eigen::Index j = 0; j < to.cols(); ++j) {
            if (taken[static_cast<std::size_t>(j)]) continue;
            if (best < 0 || overlap(i, j) > overlap(i, best)) best = j;
        }
        taken[static_cast<std::size_t>(best)] = 1;
        out.assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
        out.overlaps[static_cast<std::size_t>(i)] = overlap(i, best);
        weak = weak || overlap(i, best) < threshold;
    }
    if (weak) {
        out.assignment = hungarian(-overlap);
        out.hungarian = true;
        for (std::size_t i = 0; i < out.assignment.size(); ++i)
            out.overlaps[i] = overlap(static_cast<Eigen::Index>(i), out.assignment[i]);
    }
    return out;
}

double frame_identity_residual(const ComplexMatrix& U_T, double period, const ComplexMatrix& U_S,
                               const ComplexMatrix& states, const RealVector& energies) {
    require(states.cols() == energies.size() && U_T.rows() == states.rows() && U_S.rows() == states.rows(),
            ErrorKind::DimensionMismatch, "frame_identity_residual: dimension mismatch");
    double worst = 0.0;
    for (Eigen::Index k = 0; k < energies.size(); ++k) {
        const ComplexVector v = U_S * states.col(k);
        const ComplexVector r = U_T * v - std::exp(-kI * (energies(k) * period)) * v;
        worst = std::max(worst, r.norm());
    }
    return worst;
}

}  // namespace kpo
