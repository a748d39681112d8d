// sweep.hpp — run configuration, per-point drivers and manifested grid execution
#pragma once

#include "kpo/analysis.hpp"
#include "kpo/floquet.hpp"
#include "kpo/model.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace kpo {

inline constexpr int kManifestSchemaVersion = 1;
inline constexpr const char* kCodeVersion = "kpo-floquet 1.0.0";

enum class Experiment { Spectrum, Wigner, IprMap, UsdistMap, OrderScan, Track };

Experiment parse_experiment(const std::string& name);
std::string to_string(Experiment e);

/// Inclusive range with `count` samples, linear or logarithmic.
struct Range {
    double min = 0.0;
    double max = 0.0;
    int count = 1;
    bool log = false;

    [[nodiscard]] std::vector<double> values() const;
};

struct RunConfig {
    Experiment experiment = Experiment::Spectrum;
    ModelParams model;            // drive_strength and drive_frequency are set per control
    Range control{0.0, 0.0, 1};   // eps2/K
    Range g3{1e-5, 2e-2, 20, true};
    Range g4{1e-8, 1e-4, 20, true};
    int g4_sign = 1;
    SolverSettings solver;
    TrackingOptions tracking;
    double tracking_increment = 0.25;
    int order = 2;                // effective order, one of 2, 4, 6
    std::vector<int> orders{2, 4, 6};
    double photon_threshold = 1e300;
    int levels = 40;              // rescaled levels written per control
    std::vector<int> wigner_states{0};
    GridAxis wigner_x{-6.0, 6.0, 121};
    GridAxis wigner_p{-6.0, 6.0, 121};
    double boundary_a = kBoundaryCoefficient;
    std::filesystem::path out_dir = "out";
    int workers = 1;
    std::string source;           // raw configuration text

    /// Throws config errors for empty ranges, bad counts, non-positive log endpoints.
    void validate() const;
};

/// Parses the key = value / [section] format. Unknown keys are rejected and
/// the result is validated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

enum class PointStatus { Ok, TruncationFlag, BranchBreak, Error };
std::string to_string(PointStatus s);
PointStatus parse_status(const std::string& s);
[[nodiscard]] inline bool terminal_ok(PointStatus s) { return s == PointStatus::Ok || s == PointStatus::TruncationFlag; }

using CsvRow = std::vector<std::string>;

struct PointRecord {
    std::string id;
    nlohmann::json params;
    PointStatus status = PointStatus::Ok;
    std::string message;
    double wall_time = 0.0;
    std::vector<CsvRow> rows;
};

struct OutputFile {
    std::string name;
    std::uint32_t crc32 = 0;
};

struct RunManifest {
    int schema_version = kManifestSchemaVersion;
    std::string code_version = kCodeVersion;
    nlohmann::json config;
    std::vector<PointRecord> points;
    std::vector<OutputFile> outputs;
    double wall_time = 0.0;
    std::vector<std::string> notes;

    [[nodiscard]] bool all_ok() const;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

std::uint32_t file_crc32(const std::filesystem::path& path);

/// Formats a double with 12 significant digits; identical inputs give identical text.
std::string format_value(double v);

// Per-point drivers shared by the CLI and the acceptance suite.

struct IprPoint {
    double kerr = 0.0;
    IprReport report;
    bool truncation = false;  // a below-well Floquet partner leaks into the top of the basis
};

/// Drive from control_to_drive, Floquet solve, engine H_eff and U_S at `order`.
IprPoint ipr_point(const ModelParams& base, double control, int order, const SolverSettings& solver);

/// IPR for several orders sharing one Floquet solve; orders that fail to expand are omitted.
std::map<int, IprPoint> ipr_point_orders(const ModelParams& base, double control, const std::vector<int>& orders,
                                         const SolverSettings& solver, std::vector<std::string>* notes = nullptr);

double usdist_point(const ModelParams& base, double control, int order);

/// Effective model of the requested order: hand-coded for 2 and 4, engine for 6.
EffectiveModel effective_model(const ModelParams& params, int order);

/// Crossing of `values` through `level` along ascending `xs`, log-interpolated in x.
std::optional<double> downward_crossing(const std::vector<double>& xs, const std::vector<double>& values,
                                        double level = 0.5);

struct RunOptions {
    bool resume = false;
    std::function<void(const std::string&)> log;
};

/// Runs the configured experiment, writes CSVs and manifest.json into
/// config.out_dir, and returns the manifest.
RunManifest run_experiment(const RunConfig& config, const RunOptions& options = {});

/// Executes `count` independent tasks on `workers` threads. Results land in
/// slot order, so the output never depends on scheduling.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task);

}  // namespace kpo
