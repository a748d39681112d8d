#include "kpo/sweep.hpp"

#include "kpo/effective.hpp"
#include "kpo/error.hpp"
#include "kpo/expansion.hpp"

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace kpo {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorKind::Config, what); }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stoi(item, &used));
            if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            config_error("'" + key + "' expects a comma-separated integer list, got '" + text + "'");
        }
    }
    if (out.empty()) config_error("'" + key + "' is empty");
    return out;
}

// Typed reader over one ptree that remembers which keys were consumed.
class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    template <class T>
    void get(const std::string& path, T& target) {
        seen_.insert(path);
        const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'));
        if (!node) return;
        std::string text = *node;
        text.erase(0, text.find_first_not_of(" \t"));
        text.erase(text.find_last_not_of(" \t") + 1);
        if constexpr (std::is_same_v<T, std::string>) {
            target = text;
        } else if constexpr (std::is_same_v<T, bool>) {
            if (text == "true" || text == "1" || text == "yes") {
                target = true;
            } else if (text == "false" || text == "0" || text == "no") {
                target = false;
            } else {
                config_error("'" + path + "' expects a boolean, got '" + text + "'");
            }
        } else {
            std::istringstream in(text);
            T value{};
            in >> value;
            if (in.fail() || !(in >> std::ws).eof()) config_error("'" + path + "' has an invalid value '" + text + "'");
            target = value;
        }
    }

    void reject_unknown() const {
        for (const auto& [section, body] : tree_) {
            if (body.empty() && !body.data().empty()) config_error("key '" + section + "' must live inside a [section]");
            for (const auto& [key, value] : body) {
                const std::string path = section + "." + key;
                if (!seen_.count(path)) config_error("unknown configuration key '" + path + "'");
            }
        }
    }

private:
    const pt::ptree& tree_;
    std::set<std::string> seen_;
};

void write_csv(const std::filesystem::path& path, const std::string& header, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string());
    out << header << '\n';
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
        out << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& grid) {
    std::vector<CsvRow> rows;
    rows.reserve(grid.x_axis.size() * grid.p_axis.size());
    for (std::size_t i = 0; i < grid.x_axis.size(); ++i)
        for (std::size_t j = 0; j < grid.p_axis.size(); ++j)
            rows.push_back({format_value(grid.x_axis[i]), format_value(grid.p_axis[j]),
                            format_value(grid.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))});
    write_csv(path, "x[1],p[1],w[1]", rows);
}

int parity_label(const ComplexVector& mode) {
    double acc = 0.0;
    for (Eigen::Index n = 0; n < mode.size(); ++n) acc += (n % 2 == 0 ? 1.0 : -1.0) * std::norm(mode(n));
    acc /= mode.squaredNorm();
    if (acc > 0.5) return 1;
    if (acc < -0.5) return -1;
    return 0;
}

ModelParams with_couplings(const ModelParams& base, double g3, double g4) {
    ModelParams p = base;
    p.g3 = g3;
    p.g4 = g4;
    p.drive_strength = 0.0;
    return p;
}

std::string point_id(std::initializer_list<std::pair<const char*, double>> fields) {
    std::string out;
    for (const auto& [name, value] : fields) {
        if (!out.empty()) out += "|";
        out += std::string(name) + "=" + format_value(value);
    }
    return out;
}

// Runs one grid point, converting failures into a terminal status.
template <class Body>
void run_point(PointRecord& record, Body&& body) {
    const auto start = std::chrono::steady_clock::now();
    try {
        body(record);
    } catch (const BranchBreakError& e) {
        record.status = PointStatus::BranchBreak;
        record.message = e.what();
        record.rows.clear();
    } catch (const std::exception& e) {
        record.status = PointStatus::Error;
        record.message = e.what();
        record.rows.clear();
    }
    record.wall_time = seconds_since(start);
}

std::vector<double> dense_log(double lo, double hi, int count) {
    return Range{lo, hi, count, true}.values();
}

// Companion curves for (g3, g4) maps: constant-K contours and the empirical
// localization boundary.
void write_map_companions(const RunConfig& config, const std::filesystem::path& dir, bool kerr_contours,
                          std::vector<std::string>& files) {
    const auto g3s = dense_log(config.g3.min, config.g3.max, 200);
    const double lo = std::min(config.g4.min, config.g4.max);
    const double hi = std::max(config.g4.min, config.g4.max);
    if (kerr_contours) {
        std::vector<CsvRow> rows;
        for (double level : {0.0, -1e-5, 1e-5, 1e-4, 1e-3}) {
            for (double g3 : g3s) {
                // K = -3 g4 / 2 + 10 g3^2 / 3 solved for g4.
                const double g4 = (2.0 / 3.0) * (10.0 * g3 * g3 / 3.0 - level);
                if (g4 * config.g4_sign <= 0.0) continue;
                const double mag = std::abs(g4);
                if (mag < lo || mag > hi) continue;
                rows.push_back({format_value(level), format_value(g3), format_value(g4)});
            }
        }
        write_csv(dir / "kerr_contours.csv", "kerr[omega_o],g3[omega_o],g4[omega_o]", rows);
        files.push_back("kerr_contours.csv");
    }
    std::vector<CsvRow> rows;
    for (double control : config.control.values()) {
        if (!(control > 0.0)) continue;
        for (double g3 : g3s) {
            const double g4 = boundary_curve(g3, control, config.boundary_a);
            if (g4 < lo || g4 > hi) continue;
            rows.push_back({format_value(control), format_value(g3), format_value(config.g4_sign * g4)});
        }
    }
    write_csv(dir / "boundary.csv", "control[1],g3[omega_o],g4[omega_o]", rows);
    files.push_back("boundary.csv");
}

nlohmann::json model_json(const ModelParams& p) {
    return {{"omega_o", p.omega_o}, {"g3", p.g3}, {"g4", p.g4}, {"dim", p.dim}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

Experiment parse_experiment(const std::string& name) {
    if (name == "spectrum") return Experiment::Spectrum;
    if (name == "wigner") return Experiment::Wigner;
    if (name == "ipr-map") return Experiment::IprMap;
    if (name == "usdist-map") return Experiment::UsdistMap;
    if (name == "order-scan") return Experiment::OrderScan;
    if (name == "track") return Experiment::Track;
    config_error("unknown experiment '" + name + "'");
}

std::string to_string(Experiment e) {
    switch (e) {
        case Experiment::Spectrum: return "spectrum";
        case Experiment::Wigner: return "wigner";
        case Experiment::IprMap: return "ipr-map";
        case Experiment::UsdistMap: return "usdist-map";
        case Experiment::OrderScan: return "order-scan";
        case Experiment::Track: return "track";
    }
    return "unknown";
}

std::vector<double> Range::values() const {
    if (count < 1) config_error("range count must be at least 1");
    if (max < min) config_error("range max must not be below min");
    if (log && !(min > 0.0)) config_error("log-spaced ranges need strictly positive endpoints");
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        out[static_cast<std::size_t>(k)] =
            log ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
    }
    if (count > 1) out.back() = max;
    return out;
}

void RunConfig::validate() const {
    try {
        kpo::validate(model);
    } catch (const Error& e) {
        config_error(std::string("model: ") + e.what());
    }
    (void)control.values();
    if (control.min < 0.0) config_error("control values must be non-negative");
    if (experiment == Experiment::IprMap || experiment == Experiment::UsdistMap) {
        (void)g3.values();
        (void)g4.values();
        if (!g3.log || !g4.log) config_error("map grids must be log-spaced");
    }
    if (experiment == Experiment::OrderScan) {
        (void)g3.values();
        for (int o : orders)
            if (o != 2 && o != 4 && o != 6) config_error("orders must be drawn from {2, 4, 6}");
    }
    if (g4_sign != 1 && g4_sign != -1) config_error("g4_sign must be +1 or -1");
    if (order != 2 && order != 4 && order != 6) config_error("order must be 2, 4 or 6");
    if (workers < 1) config_error("workers must be at least 1");
    if (!(tracking_increment > 0.0)) config_error("tracking_increment must be positive");
    if (solver.steps_per_drive_period < 64) config_error("steps_per_drive_period must be at least 64");
    if (!(photon_threshold > 0.0)) config_error("photon_threshold must be positive");
    if (levels < 1) config_error("levels must be at least 1");
    if (wigner_states.empty() || std::any_of(wigner_states.begin(), wigner_states.end(), [](int k) { return k < 0; }))
        config_error("wigner states must be non-negative indices");
    (void)wigner_x.values();
    (void)wigner_p.values();
}

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        config_error(std::string("malformed configuration: ") + e.what());
    }
    Reader r(tree);
    RunConfig c;
    c.source = text;

    std::string experiment;
    r.get("run.experiment", experiment);
    if (!experiment.empty()) c.experiment = parse_experiment(experiment);
    std::string out = c.out_dir.string();
    r.get("run.out", out);
    c.out_dir = out;
    r.get("run.workers", c.workers);
    r.get("run.order", c.order);
    std::string orders;
    r.get("run.orders", orders);
    if (!orders.empty()) c.orders = parse_int_list(orders, "run.orders");

    r.get("model.omega_o", c.model.omega_o);
    r.get("model.g3", c.model.g3);
    r.get("model.g4", c.model.g4);
    r.get("model.dim", c.model.dim);

    r.get("control.min", c.control.min);
    c.control.max = c.control.min;
    r.get("control.max", c.control.max);
    r.get("control.count", c.control.count);
    r.get("control.log", c.control.log);

    r.get("grid.g3_min", c.g3.min);
    r.get("grid.g3_max", c.g3.max);
    r.get("grid.g3_count", c.g3.count);
    r.get("grid.g4_min", c.g4.min);
    r.get("grid.g4_max", c.g4.max);
    r.get("grid.g4_count", c.g4.count);
    r.get("grid.g4_sign", c.g4_sign);

    r.get("solver.steps_per_drive_period", c.solver.steps_per_drive_period);
    std::string integrator = "midpoint";
    r.get("solver.integrator", integrator);
    if (integrator == "midpoint") {
        c.solver.integrator = Integrator::Midpoint;
    } else if (integrator == "cf4") {
        c.solver.integrator = Integrator::CommutatorFree4;
    } else {
        config_error("solver.integrator must be 'midpoint' or 'cf4'");
    }
    r.get("solver.overlap_threshold", c.tracking.overlap_threshold);
    r.get("solver.max_bisections", c.tracking.max_bisections);
    r.get("solver.tracking_increment", c.tracking_increment);

    r.get("spectrum.photon_threshold", c.photon_threshold);
    r.get("spectrum.levels", c.levels);

    std::string states;
    r.get("wigner.states", states);
    if (!states.empty()) c.wigner_states = parse_int_list(states, "wigner.states");
    r.get("wigner.x_min", c.wigner_x.min);
    r.get("wigner.x_max", c.wigner_x.max);
    r.get("wigner.x_count", c.wigner_x.count);
    r.get("wigner.p_min", c.wigner_p.min);
    r.get("wigner.p_max", c.wigner_p.max);
    r.get("wigner.p_count", c.wigner_p.count);

    r.get("boundary.a", c.boundary_a);

    r.reject_unknown();
    c.validate();
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read configuration " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

nlohmann::json to_json(const RunConfig& c) {
    const auto range = [](const Range& r) {
        return nlohmann::json{{"min", r.min}, {"max", r.max}, {"count", r.count}, {"log", r.log}};
    };
    const auto axis = [](const GridAxis& a) { return nlohmann::json{{"min", a.min}, {"max", a.max}, {"count", a.count}}; };
    return {{"experiment", to_string(c.experiment)},
            {"model", model_json(c.model)},
            {"control", range(c.control)},
            {"g3", range(c.g3)},
            {"g4", range(c.g4)},
            {"g4_sign", c.g4_sign},
            {"solver",
             {{"steps_per_drive_period", c.solver.steps_per_drive_period},
              {"integrator", c.solver.integrator == Integrator::Midpoint ? "midpoint" : "cf4"},
              {"overlap_threshold", c.tracking.overlap_threshold},
              {"max_bisections", c.tracking.max_bisections},
              {"tracking_increment", c.tracking_increment}}},
            {"order", c.order},
            {"orders", c.orders},
            {"photon_threshold", c.photon_threshold},
            {"levels", c.levels},
            {"wigner", {{"states", c.wigner_states}, {"x", axis(c.wigner_x)}, {"p", axis(c.wigner_p)}}},
            {"boundary_a", c.boundary_a},
            {"out", c.out_dir.string()},
            {"workers", c.workers}};
}

// ---------------------------------------------------------------------------
// Manifest

std::string to_string(PointStatus s) {
    switch (s) {
        case PointStatus::Ok: return "ok";
        case PointStatus::TruncationFlag: return "truncation-flag";
        case PointStatus::BranchBreak: return "branch-break";
        case PointStatus::Error: return "error";
    }
    return "error";
}

PointStatus parse_status(const std::string& s) {
    if (s == "ok") return PointStatus::Ok;
    if (s == "truncation-flag") return PointStatus::TruncationFlag;
    if (s == "branch-break") return PointStatus::BranchBreak;
    if (s == "error") return PointStatus::Error;
    throw Error(ErrorKind::Config, "unknown point status '" + s + "'");
}

bool RunManifest::all_ok() const {
    return std::all_of(points.begin(), points.end(), [](const PointRecord& p) { return terminal_ok(p.status); });
}

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : m.points) {
        points.push_back({{"id", p.id},
                          {"params", p.params},
                          {"status", to_string(p.status)},
                          {"message", p.message},
                          {"wall_time_s", p.wall_time},
                          {"rows", p.rows}});
    }
    nlohmann::json outputs = nlohmann::json::array();
    for (const auto& f : m.outputs) {
        std::ostringstream crc;
        crc << std::hex << std::setw(8) << std::setfill('0') << f.crc32;
        outputs.push_back({{"file", f.name}, {"crc32", crc.str()}});
    }
    return {{"schema_version", m.schema_version},
            {"code_version", m.code_version},
            {"config", m.config},
            {"points", points},
            {"outputs", outputs},
            {"wall_time_s", m.wall_time},
            {"notes", m.notes}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) throw Error(ErrorKind::Config, "unsupported manifest schema");
        m.code_version = j.at("code_version").get<std::string>();
        m.config = j.at("config");
        for (const auto& p : j.at("points")) {
            PointRecord r;
            r.id = p.at("id").get<std::string>();
            r.params = p.at("params");
            r.status = parse_status(p.at("status").get<std::string>());
            r.message = p.at("message").get<std::string>();
            r.wall_time = p.at("wall_time_s").get<double>();
            r.rows = p.at("rows").get<std::vector<CsvRow>>();
            m.points.push_back(std::move(r));
        }
        for (const auto& f : j.at("outputs")) {
            m.outputs.push_back({f.at("file").get<std::string>(),
                                 static_cast<std::uint32_t>(std::stoul(f.at("crc32").get<std::string>(), nullptr, 16))});
        }
        m.wall_time = j.at("wall_time_s").get<double>();
        m.notes = j.at("notes").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Config, std::string("malformed manifest: ") + e.what());
    }
    return m;
}

std::uint32_t file_crc32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot read " + path.string());
    boost::crc_32_type crc;
    char buffer[1 << 14];
    while (in) {
        in.read(buffer, sizeof buffer);
        crc.process_bytes(buffer, static_cast<std::size_t>(in.gcount()));
    }
    return crc.checksum();
}

std::string format_value(double v) {
    if (std::isnan(v)) return "nan";
    v += 0.0;  // no negative zero
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

// ---------------------------------------------------------------------------
// Per-point drivers

EffectiveModel effective_model(const ModelParams& params, int order) {
    const auto d = derive(params);
    switch (order) {
        case 2: return h_eff2(d, params.dim);
        case 4: return h_eff4(params, d, params.dim);
        case 6: return engine_model(expand(params, 6), params.dim, 6);
        default: throw Error(ErrorKind::InvalidParameter, "effective_model: order must be 2, 4 or 6");
    }
}

std::map<int, IprPoint> ipr_point_orders(const ModelParams& base, double control, const std::vector<int>& orders,
                                         const SolverSettings& solver, std::vector<std::string>* notes) {
    const ModelParams params = control_to_drive(control, base);
    const double kerr = derive(params).K2;
    const FloquetSolution sol = solve(params, solver);

    int top = *std::max_element(orders.begin(), orders.end());
    std::optional<ExpansionResult<cplx>> result;
    while (!result) {
        try {
            result = expand(params, top);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::ExpansionBlowup || top <= 2) throw;
            if (notes) notes->push_back("order " + std::to_string(top) + " unavailable: " + e.what());
            top -= 2;
        }
    }
    std::map<int, IprPoint> out;
    for (int order : orders) {
        if (order > top) continue;
        IprPoint point;
        point.kerr = kerr;
        const auto model = engine_model(*result, params.dim, order);
        const FrameMap frame{u_s_matrix(*result, params.dim, order), order};
        point.report = avg_ipr_below_well(model, sol, frame, control);
        const auto spectrum = excitation_spectrum(model, model.coefficients.at("K2").real());
        for (int k = 0; k < point.report.n_b; ++k) {
            const ComplexVector moved = frame.U_S * spectrum.states.col(k);
            const auto [index, overlap] = best_overlap(sol.modes, moved);
            (void)overlap;
            if (sol.leakage(index) > kLeakageThreshold) point.truncation = true;
        }
        out.emplace(order, std::move(point));
    }
    return out;
}

IprPoint ipr_point(const ModelParams& base, double control, int order, const SolverSettings& solver) {
    auto all = ipr_point_orders(base, control, {order}, solver);
    if (!all.count(order)) throw Error(ErrorKind::ExpansionBlowup, "ipr_point: requested order unavailable");
    return all.at(order);
}

double usdist_point(const ModelParams& base, double control, int order) {
    const ModelParams params = control_to_drive(control, base);
    const auto result = expand(params, order);
    return trace_distance_identity(u_s_matrix(result, params.dim, order));
}

std::optional<double> downward_crossing(const std::vector<double>& xs, const std::vector<double>& values,
                                        double level) {
    if (xs.size() != values.size()) throw Error(ErrorKind::DimensionMismatch, "downward_crossing: size mismatch");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (std::isnan(values[i]) || std::isnan(values[i + 1])) continue;
        if (values[i] >= level && values[i + 1] < level) {
            const double t = (values[i] - level) / (values[i] - values[i + 1]);
            if (xs[i] > 0.0 && xs[i + 1] > 0.0) {
                return std::exp(std::log(xs[i]) + t * (std::log(xs[i + 1]) - std::log(xs[i])));
            }
            return xs[i] + t * (xs[i + 1] - xs[i]);
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Execution

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& task) {
    const auto threads = static_cast<std::size_t>(std::max(1, workers));
    if (threads == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

namespace {

struct Plan {
    std::vector<PointRecord> points;
    std::function<void(PointRecord&)> body;  // runs one point, filling rows and status
};

void execute(Plan& plan, const RunConfig& config, const RunOptions& options, const RunManifest* previous) {
    std::map<std::string, const PointRecord*> reusable;
    if (previous) {
        for (const auto& p : previous->points)
            if (terminal_ok(p.status)) reusable[p.id] = &p;
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < plan.points.size(); ++i) {
        const auto it = reusable.find(plan.points[i].id);
        if (it != reusable.end()) {
            plan.points[i] = *it->second;
        } else {
            todo.push_back(i);
        }
    }
    std::mutex log_mutex;
    std::atomic<std::size_t> done{0};
    parallel_for(todo.size(), config.workers, [&](std::size_t k) {
        PointRecord& record = plan.points[todo[k]];
        run_point(record, plan.body);
        if (options.log) {
            std::lock_guard lock(log_mutex);
            options.log("[" + std::to_string(++done) + "/" + std::to_string(todo.size()) + "] " + record.id + " " +
                        to_string(record.status) + (record.message.empty() ? "" : " (" + record.message + ")"));
        }
    });
}

std::vector<CsvRow> gather_rows(const std::vector<PointRecord>& points) {
    std::vector<CsvRow> rows;
    for (const auto& p : points) rows.insert(rows.end(), p.rows.begin(), p.rows.end());
    return rows;
}

// ------------------------------------------------------------------ spectrum

void run_spectrum(const RunConfig& config, RunManifest& manifest, std::vector<std::string>& files,
                  const RunOptions& options) {
    const auto requested = config.control.values();
    std::vector<double> controls{0.0};
    {
        std::vector<double> merged = requested;
        for (double c = config.tracking_increment; c < requested.back(); c += config.tracking_increment)
            merged.push_back(c);
        std::sort(merged.begin(), merged.end());
        for (double c : merged)
            if (c - controls.back() > 1e-12) controls.push_back(c);
    }
    const auto is_requested = [&](double c) {
        return std::any_of(requested.begin(), requested.end(), [&](double r) { return std::abs(r - c) <= 1e-12; });
    };

    std::map<double, std::vector<CsvRow>> floquet_rows;
    std::map<double, PointStatus> floquet_status;
    const auto observer = [&](const BranchPoint& pt, const FloquetSolution& sol) {
        if (!is_requested(pt.control)) return;
        const double kerr = derive(sol.params).K2;
        const auto levels = rescaled_quasienergies(sol, pt.eps0, kerr);
        std::vector<CsvRow> rows;
        bool leak = false;
        int written = 0;
        for (const auto& level : levels) {
            if (written >= config.levels) break;
            const bool grayed = level.photon_number > config.photon_threshold;
            if (!grayed && sol.leakage(level.mode) > kLeakageThreshold) leak = true;
            rows.push_back({format_value(pt.control), "floquet", std::to_string(written), format_value(level.value),
                            std::to_string(parity_label(sol.modes.col(level.mode))), format_value(level.photon_number),
                            grayed ? "1" : "0"});
            ++written;
        }
        floquet_rows[pt.control] = std::move(rows);
        floquet_status[pt.control] = leak ? PointStatus::TruncationFlag : PointStatus::Ok;
        if (options.log) options.log("tracked control " + format_value(pt.control));
    };

    TrackedBranch branch;
    std::string break_message;
    std::optional<double> last_good;
    try {
        branch = track_ground_branch(config.model, controls, config.solver, config.tracking, observer);
    } catch (const BranchBreakError& e) {
        branch = e.branch;
        break_message = e.what();
        last_good = e.last_good_control;
    }
    write_branch_csv(branch, config.out_dir / "branch.csv");
    files.push_back("branch.csv");

    for (double control : requested) {
        PointRecord record;
        record.id = point_id({{"control", control}});
        record.params = {{"control", control}};
        run_point(record, [&](PointRecord& r) {
            const ModelParams params = control_to_drive(control, config.model);
            const auto model = effective_model(params, config.order);
            const auto spec = excitation_spectrum(model, derive(params).K2);
            const auto n = std::min<Eigen::Index>(config.levels, spec.energies.size());
            for (Eigen::Index k = 0; k < n; ++k) {
                r.rows.push_back({format_value(control), "effective", std::to_string(k), format_value(spec.energies(k)),
                                  std::to_string(spec.parity[static_cast<std::size_t>(k)]),
                                  format_value(mean_photon_number(spec.states.col(k))), "0"});
            }
            const auto it = floquet_rows.find(control);
            if (it == floquet_rows.end()) {
                r.status = PointStatus::BranchBreak;
                r.message = break_message.empty() ? "control not reached" : break_message;
                return;
            }
            r.rows.insert(r.rows.end(), it->second.begin(), it->second.end());
            r.status = floquet_status.at(control);
        });
        manifest.points.push_back(std::move(record));
    }
    if (last_good) manifest.notes.push_back("branch broke after control " + format_value(*last_good));
    write_csv(config.out_dir / "spectrum.csv",
              "control[1],kind,level[1],value[K],parity[1],photon_number[1],grayed[1]", gather_rows(manifest.points));
    files.push_back("spectrum.csv");
}

// -------------------------------------------------------------------- wigner

void run_wigner(const RunConfig& config, RunManifest& manifest, std::vector<std::string>& files) {
    const double control = config.control.min;
    const ModelParams params = control_to_drive(control, config.model);
    const FloquetSolution sol = solve(params, config.solver);
    const auto result = expand(params, config.order);
    const auto model = engine_model(result, params.dim, config.order);
    const ComplexMatrix us = u_s_matrix(result, params.dim, config.order);
    const double kerr = derive(params).K2;
    const auto spec = std::abs(kerr) > 1e-15 ? std::optional(excitation_spectrum(model, kerr)) : std::nullopt;
    const ComplexMatrix transformed = us.adjoint() * sol.modes;

    for (int k : config.wigner_states) {
        PointRecord record;
        record.id = point_id({{"control", control}, {"state", k}});
        record.params = {{"control", control}, {"state", k}};
        run_point(record, [&](PointRecord& r) {
            ComplexVector effective;
            if (spec) {
                if (k >= spec->states.cols()) throw Error(ErrorKind::InvalidParameter, "wigner: state index out of range");
                effective = spec->states.col(k);
            } else {
                // Undriven without Kerr: fall back to Fock states.
                effective = ComplexVector::Zero(params.dim);
                effective(k) = 1.0;
            }
            const auto [j, overlap] = best_overlap(transformed, effective);
            if (overlap < 0.3) throw Error(ErrorKind::MatchingFailure, "wigner: no Floquet mode overlaps above 0.3");
            const auto raw = wigner(sol.modes.col(j), config.wigner_x, config.wigner_p);
            const auto moved = wigner(transformed.col(j), config.wigner_x, config.wigner_p);
            const auto eff = wigner(effective, config.wigner_x, config.wigner_p);
            const std::string stem = "wigner_state" + std::to_string(k);
            write_wigner_csv(config.out_dir / (stem + "_floquet.csv"), raw);
            write_wigner_csv(config.out_dir / (stem + "_transformed.csv"), moved);
            write_wigner_csv(config.out_dir / (stem + "_effective.csv"), eff);
            for (const char* suffix : {"_floquet.csv", "_transformed.csv", "_effective.csv"}) files.push_back(stem + suffix);
            r.rows.push_back({format_value(control), std::to_string(k), std::to_string(j), format_value(overlap),
                              format_value(wigner_l2_distance(raw, eff)), format_value(wigner_l2_distance(moved, eff))});
            if (sol.leakage(j) > kLeakageThreshold) r.status = PointStatus::TruncationFlag;
        });
        manifest.points.push_back(std::move(record));
    }
    write_csv(config.out_dir / "wigner_summary.csv",
              "control[1],state[1],floquet_mode[1],overlap[1],l2_raw[1],l2_transformed[1]",
              gather_rows(manifest.points));
    files.push_back("wigner_summary.csv");
}

// ---------------------------------------------------------------------- maps

Plan map_plan(const RunConfig& config, bool ipr) {
    Plan plan;
    for (double control : config.control.values())
        for (double g3 : config.g3.values())
            for (double g4mag : config.g4.values()) {
                const double g4 = config.g4_sign * g4mag;
                PointRecord r;
                r.id = point_id({{"control", control}, {"g3", g3}, {"g4", g4}});
                r.params = {{"control", control}, {"g3", g3}, {"g4", g4}};
                plan.points.push_back(std::move(r));
            }
    plan.body = [&config, ipr](PointRecord& r) {
        const double control = r.params.at("control").get<double>();
        const double g3 = r.params.at("g3").get<double>();
        const double g4 = r.params.at("g4").get<double>();
        const ModelParams base = with_couplings(config.model, g3, g4);
        const double kerr = kerr_coefficient(g3, g4);
        if (ipr) {
            const auto point = ipr_point(base, control, config.order, config.solver);
            r.rows.push_back({format_value(control), format_value(g3), format_value(g4), format_value(kerr),
                              format_value(point.report.average), std::to_string(point.report.n_b)});
            if (point.truncation) r.status = PointStatus::TruncationFlag;
        } else {
            const double d = usdist_point(base, control, config.order);
            r.rows.push_back({format_value(control), format_value(g3), format_value(g4), format_value(kerr),
                              format_value(d)});
        }
    };
    return plan;
}

// ---------------------------------------------------------------- order scan

Plan order_scan_plan(const RunConfig& config, std::vector<std::string>& notes, std::mutex& notes_mutex) {
    Plan plan;
    const double control = config.control.min;
    for (double g3 : config.g3.values()) {
        PointRecord r;
        r.id = point_id({{"control", control}, {"g3", g3}, {"g4", config.model.g4}});
        r.params = {{"control", control}, {"g3", g3}, {"g4", config.model.g4}};
        plan.points.push_back(std::move(r));
    }
    plan.body = [&config, &notes, &notes_mutex, control](PointRecord& r) {
        const double g3 = r.params.at("g3").get<double>();
        const ModelParams base = with_couplings(config.model, g3, config.model.g4);
        std::vector<std::string> local;
        const auto points = ipr_point_orders(base, control, config.orders, config.solver, &local);
        for (int order : config.orders) {
            const auto it = points.find(order);
            const double value = it == points.end() ? std::nan("") : it->second.report.average;
            r.rows.push_back({format_value(g3), std::to_string(order), format_value(value),
                              it == points.end() ? "0" : std::to_string(it->second.report.n_b)});
            if (it != points.end() && it->second.truncation) r.status = PointStatus::TruncationFlag;
        }
        if (!local.empty()) {
            std::lock_guard lock(notes_mutex);
            for (auto& n : local) notes.push_back("g3=" + format_value(g3) + ": " + n);
            r.message = local.front();
        }
    };
    return plan;
}

}  // namespace

RunManifest run_experiment(const RunConfig& config, const RunOptions& options) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    std::filesystem::create_directories(config.out_dir);
    const auto manifest_path = config.out_dir / "manifest.json";

    std::optional<RunManifest> previous;
    if (options.resume && std::filesystem::exists(manifest_path)) {
        std::ifstream in(manifest_path);
        previous = manifest_from_json(nlohmann::json::parse(in));
        auto a = previous->config;
        auto b = to_json(config);
        b["source"] = config.source;
        a.erase("workers");
        b.erase("workers");
        if (a != b) throw Error(ErrorKind::Config, "--resume: configuration differs from the existing manifest");
    }

    RunManifest manifest;
    manifest.config = to_json(config);
    manifest.config["source"] = config.source;
    std::vector<std::string> files;

    switch (config.experiment) {
        case Experiment::Spectrum:
            run_spectrum(config, manifest, files, options);
            break;
        case Experiment::Track: {
            std::vector<double> controls;
            const double top = config.control.max;
            for (double c = 0.0; c < top + 1e-12; c += config.tracking_increment) controls.push_back(c);
            if (controls.back() < top - 1e-12) controls.push_back(top);
            PointRecord record;
            record.id = point_id({{"control_max", top}});
            record.params = {{"control_max", top}, {"increment", config.tracking_increment}};
            TrackedBranch branch;
            run_point(record, [&](PointRecord& r) {
                try {
                    branch = track_ground_branch(config.model, controls, config.solver, config.tracking);
                } catch (const BranchBreakError& e) {
                    branch = e.branch;
                    throw;
                }
                r.rows.push_back({format_value(branch.points.back().control), std::to_string(branch.points.size())});
            });
            manifest.points.push_back(std::move(record));
            write_branch_csv(branch, config.out_dir / "branch.csv");
            files.push_back("branch.csv");
            break;
        }
        case Experiment::Wigner:
            run_wigner(config, manifest, files);
            break;
        case Experiment::IprMap:
        case Experiment::UsdistMap: {
            const bool ipr = config.experiment == Experiment::IprMap;
            Plan plan = map_plan(config, ipr);
            execute(plan, config, options, previous ? &*previous : nullptr);
            manifest.points = std::move(plan.points);
            const std::string name = ipr ? "ipr_map.csv" : "usdist_map.csv";
            const std::string header = ipr ? "control[1],g3[omega_o],g4[omega_o],kerr[omega_o],avg_ipr[1],n_b[1]"
                                           : "control[1],g3[omega_o],g4[omega_o],kerr[omega_o],distance[1]";
            write_csv(config.out_dir / name, header, gather_rows(manifest.points));
            files.push_back(name);
            write_map_companions(config, config.out_dir, ipr, files);
            break;
        }
        case Experiment::OrderScan: {
            std::mutex notes_mutex;
            Plan plan = order_scan_plan(config, manifest.notes, notes_mutex);
            execute(plan, config, options, previous ? &*previous : nullptr);
            manifest.points = std::move(plan.points);
            std::sort(manifest.notes.begin(), manifest.notes.end());
            const auto rows = gather_rows(manifest.points);
            write_csv(config.out_dir / "order_scan.csv", "g3[omega_o],order[1],avg_ipr[1],n_b[1]", rows);
            files.push_back("order_scan.csv");
            std::vector<CsvRow> crossings;
            for (int order : config.orders) {
                std::vector<double> xs, ys;
                for (const auto& row : rows) {
                    if (std::stoi(row[1]) != order) continue;
                    xs.push_back(std::stod(row[0]));
                    ys.push_back(row[2] == "nan" ? std::nan("") : std::stod(row[2]));
                }
                const auto cross = downward_crossing(xs, ys);
                crossings.push_back({std::to_string(order), cross ? format_value(*cross) : "nan"});
            }
            write_csv(config.out_dir / "order_crossings.csv", "order[1],g3_crossing[omega_o]", crossings);
            files.push_back("order_crossings.csv");
            break;
        }
    }

    for (const auto& f : files) manifest.outputs.push_back({f, file_crc32(config.out_dir / f)});
    manifest.wall_time = seconds_since(start);
    std::ofstream out(manifest_path);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + manifest_path.string());
    out << to_json(manifest).dump(2) << '\n';
    return manifest;
}

}  // namespace kpo
