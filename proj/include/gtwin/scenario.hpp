#pragma once

// Scenario orchestration: run the configured simulation, serialize outputs,
// and build the metrics summary. Metrics are always recomputed from the
// serialized CSV files rather than in-memory state, so `report` on a run
// directory reproduces the run's own metrics byte for byte.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtwin/config.hpp"
#include "gtwin/csvio.hpp"
#include "gtwin/link.hpp"
#include "gtwin/maneuver.hpp"
#include "gtwin/station.hpp"

namespace gtwin {

inline constexpr const char* kTruthHeader = "t,qw,qx,qy,qz,wx,wy,wz,phi,theta,psi,ax,ay,az";
inline constexpr const char* kEstHeader = "t,phi_est,theta_est,psi_est,ax,ay,az,rssi_dbm";
inline constexpr const char* kSweepHeader =
    "axis,angle_deg,config,mean_rssi_dbm,read_rate_hz,n_success,n_attempts";

inline void write_truth_csv(const std::string& path, const std::vector<TruthSample>& samples) {
    CsvWriter w(path);
    w.line(kTruthHeader);
    for (const auto& s : samples) {
        w.row({fmt_g(s.t), fmt_g(s.q.w()), fmt_g(s.q.x()), fmt_g(s.q.y()), fmt_g(s.q.z()),
               fmt_g(s.omega.x()), fmt_g(s.omega.y()), fmt_g(s.omega.z()),
               fmt_g(s.euler.roll_deg), fmt_g(s.euler.pitch_deg), fmt_g(s.euler.yaw_deg),
               fmt_g(s.specific_force.x()), fmt_g(s.specific_force.y()),
               fmt_g(s.specific_force.z())});
    }
}

inline std::vector<TruthSample> read_truth_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    require_header(t, kTruthHeader, path);
    std::vector<TruthSample> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        if (r.size() != 14) throw ConfigError("bad column count in " + path);
        TruthSample s;
        s.t = to_double(r[0], path);
        s.q = Eigen::Quaterniond(to_double(r[1], path), to_double(r[2], path),
                                 to_double(r[3], path), to_double(r[4], path));
        s.omega = {to_double(r[5], path), to_double(r[6], path), to_double(r[7], path)};
        s.euler = {to_double(r[8], path), to_double(r[9], path), to_double(r[10], path)};
        s.specific_force = {to_double(r[11], path), to_double(r[12], path),
                            to_double(r[13], path)};
        out.push_back(s);
    }
    return out;
}

inline void write_estimates_csv(const std::string& path,
                                const std::vector<AttitudeEstimate>& ests) {
    CsvWriter w(path);
    w.line(kEstHeader);
    for (const auto& e : ests) {
        w.row({fmt_g(e.t), fmt_g(e.euler.roll_deg), fmt_g(e.euler.pitch_deg),
               fmt_g(e.euler.yaw_deg), fmt_g(e.accel.x()), fmt_g(e.accel.y()),
               fmt_g(e.accel.z()), fmt_g(e.rssi_dbm)});
    }
}

inline std::vector<AttitudeEstimate> read_estimates_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    require_header(t, kEstHeader, path);
    std::vector<AttitudeEstimate> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        if (r.size() != 8) throw ConfigError("bad column count in " + path);
        AttitudeEstimate e;
        e.t = to_double(r[0], path);
        e.euler = {to_double(r[1], path), to_double(r[2], path), to_double(r[3], path)};
        e.accel = {to_double(r[4], path), to_double(r[5], path), to_double(r[6], path)};
        e.rssi_dbm = to_double(r[7], path);
        out.push_back(e);
    }
    return out;
}

inline void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    CsvWriter w(path);
    w.line(kSweepHeader);
    for (const auto& r : rows) {
        w.row({axis_name(r.axis), fmt_g(r.angle_deg), mount_name(r.mount),
               fmt_g(r.mean_rssi_dbm), fmt_g(r.rate_hz), std::to_string(r.n_success),
               std::to_string(r.n_attempts)});
    }
}

struct SweepFileRow {
    std::string axis;
    double angle_deg = 0;
    std::string mount;
    double mean_rssi_dbm = 0;
    double rate_hz = 0;
    long n_success = 0;
    long n_attempts = 0;
};

inline std::vector<SweepFileRow> read_sweep_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    require_header(t, kSweepHeader, path);
    std::vector<SweepFileRow> out;
    for (const auto& r : t.rows) {
        if (r.size() != 7) throw ConfigError("bad column count in " + path);
        SweepFileRow row;
        row.axis = r[0];
        row.angle_deg = to_double(r[1], path);
        row.mount = r[2];
        row.mean_rssi_dbm = to_double(r[3], path);
        row.rate_hz = to_double(r[4], path);
        row.n_success = std::lround(to_double(r[5], path));
        row.n_attempts = std::lround(to_double(r[6], path));
        out.push_back(row);
    }
    return out;
}

namespace detail {

inline nlohmann::ordered_json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw SimulationFault("cannot write " + path);
    out << text;
}

// estimates.csv first, then any additional runs in name order.
inline std::vector<std::string> find_estimate_files(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("estimates", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

inline std::vector<std::string> find_sweep_files(const std::string& dir) {
    std::vector<std::string> names;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if (name.rfind("sweep_", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    return names;
}

}  // namespace detail

struct FlightOutputs {
    std::vector<TruthSample> truth;
    std::vector<AttitudeEstimate> estimates;
    InventoryLog log;
};

inline FlightSim make_flight_sim(const ScenarioConfig& cfg, const FailureEvent& failure) {
    return FlightSim(cfg.scenario.script, cfg.dynamics.rotors, cfg.dynamics.inertia,
                     cfg.dynamics.gains, cfg.dynamics.dt, cfg.dynamics.omega_cap, failure,
                     cfg.dynamics.mount_offset);
}

// Fly the configured script while the reader inventories the tag, returning
// truth, the per-round link log, and the valid attitude estimates.
inline FlightOutputs simulate_flight(const ScenarioConfig& cfg, const FailureEvent& failure) {
    FlightOutputs out;
    FlightSim sim = make_flight_sim(cfg, failure);
    TagNode node = cfg.node_proto;
    Rng base(cfg.seed);
    node.rng = base.fork(1);
    Rng air = base.fork(2);
    out.log = run_inventory(sim, node, cfg.link, cfg.timing, cfg.scenario.duration_s, air,
                            &out.truth, cfg.dynamics.log_rate_hz);
    out.log.seed = cfg.seed;
    for (const auto& s : out.log.samples) {
        if (!s.success || !s.payload) continue;
        AttitudeEstimate est =
            estimate_attitude(*s.payload, node.imu, node.field, s.t, s.rssi_dbm);
        if (est.valid) out.estimates.push_back(est);
    }
    return out;
}

// Metrics for a flight run directory, recomputed from the serialized files.
// The run duration is taken from the truth trace itself so `report` needs
// nothing beyond the directory contents.
inline nlohmann::ordered_json flight_metrics_from_dir(const std::string& dir,
                                                      const std::string& scenario_name,
                                                      std::uint64_t seed,
                                                      const StationOptions& opt) {
    auto truth = read_truth_csv(dir + "/truth.csv");
    double duration = truth.size() >= 2 ? truth.back().t - truth.front().t : 0.0;
    std::vector<std::vector<AttitudeEstimate>> runs;
    for (const auto& name : detail::find_estimate_files(dir))
        runs.push_back(read_estimates_csv(dir + "/" + name));
    if (runs.empty()) runs.emplace_back();
    MetricsReport rep = compute_metrics(runs, truth, duration, opt);

    nlohmann::ordered_json j;
    j["scenario"] = scenario_name;
    j["seed"] = seed;
    j["duration_s"] = duration;
    j["runs"] = rep.runs;
    j["aligned_pairs"] = rep.aligned_pairs;
    j["samples"] = {{"truth", truth.size()}, {"estimates", runs.front().size()}};
    j["attitude_error_max_deg"] = {{"roll", detail::num_or_null(rep.max_err_roll_deg)},
                                   {"pitch", detail::num_or_null(rep.max_err_pitch_deg)},
                                   {"yaw", detail::num_or_null(rep.max_err_yaw_deg)}};
    j["accel_repeatability_ms2"] = detail::num_or_null(rep.accel_repeatability_ms2);
    j["mean_read_rate_hz"] = rep.mean_read_rate_hz;
    j["rssi_dbm"] = {{"min", detail::num_or_null(rep.rssi_min_dbm)},
                     {"max", detail::num_or_null(rep.rssi_max_dbm)}};
    return j;
}

inline nlohmann::ordered_json sweep_metrics_from_dir(const std::string& dir, std::uint64_t seed,
                                                     double window_s) {
    auto files = detail::find_sweep_files(dir);
    if (files.empty()) throw ConfigError("no sweep panels found in " + dir);
    long rows = 0;
    double rate_min = std::numeric_limits<double>::infinity();
    double rate_max = -std::numeric_limits<double>::infinity();
    double rssi_min = std::numeric_limits<double>::infinity();
    double rssi_max = -std::numeric_limits<double>::infinity();
    double boresight_parallel = std::numeric_limits<double>::quiet_NaN();
    for (const auto& name : files) {
        for (const auto& r : read_sweep_csv(dir + "/" + name)) {
            ++rows;
            rate_min = std::min(rate_min, r.rate_hz);
            rate_max = std::max(rate_max, r.rate_hz);
            if (std::isfinite(r.mean_rssi_dbm)) {
                rssi_min = std::min(rssi_min, r.mean_rssi_dbm);
                rssi_max = std::max(rssi_max, r.mean_rssi_dbm);
            }
            if (r.mount == "parallel" && r.angle_deg == 0) boresight_parallel = r.rate_hz;
        }
    }
    nlohmann::ordered_json j;
    j["scenario"] = "sweep";
    j["seed"] = seed;
    j["window_s"] = window_s;
    j["panels"] = files.size();
    j["rows"] = rows;
    j["read_rate_hz"] = {{"min", detail::num_or_null(rate_min)},
                         {"max", detail::num_or_null(rate_max)}};
    j["rssi_dbm"] = {{"min", detail::num_or_null(rssi_min)},
                     {"max", detail::num_or_null(rssi_max)}};
    j["boresight_parallel_rate_hz"] = detail::num_or_null(boresight_parallel);
    return j;
}

inline void write_metrics_json(const std::string& path, const nlohmann::ordered_json& j) {
    detail::write_text(path, j.dump(2) + "\n");
}

// Cheap schema check on everything a run just wrote; a failure here means
// the outputs are unusable and the run must not report success.
inline void validate_flight_outputs(const std::string& dir) {
    try {
        read_truth_csv(dir + "/truth.csv");
        for (const auto& name : detail::find_estimate_files(dir))
            read_estimates_csv(dir + "/" + name);
        std::ifstream in(dir + "/metrics.json");
        auto j = nlohmann::json::parse(in);
        for (const char* key :
             {"scenario", "seed", "duration_s", "mean_read_rate_hz", "attitude_error_max_deg"})
            if (!j.contains(key)) throw ConfigError(std::string("metrics missing ") + key);
    } catch (const std::exception& e) {
        throw SimulationFault(std::string("output validation failed: ") + e.what());
    }
}

inline void validate_sweep_outputs(const std::string& dir) {
    try {
        auto files = detail::find_sweep_files(dir);
        if (files.empty()) throw ConfigError("no sweep panels written");
        for (const auto& name : files) read_sweep_csv(dir + "/" + name);
        std::ifstream in(dir + "/metrics.json");
        auto j = nlohmann::json::parse(in);
        for (const char* key : {"scenario", "seed", "panels", "read_rate_hz", "rssi_dbm"})
            if (!j.contains(key)) throw ConfigError(std::string("metrics missing ") + key);
    } catch (const std::exception& e) {
        throw SimulationFault(std::string("output validation failed: ") + e.what());
    }
}

// maneuver / rotor-failure entry point: simulate, serialize, then rebuild
// the metrics from the files just written.
inline void run_flight_scenario(const ScenarioConfig& cfg, const std::string& scenario_name,
                                const FailureEvent& failure) {
    std::filesystem::create_directories(cfg.out_dir);
    FlightOutputs out = simulate_flight(cfg, failure);
    write_truth_csv(cfg.out_dir + "/truth.csv", out.truth);
    write_estimates_csv(cfg.out_dir + "/estimates.csv", out.estimates);
    auto metrics = flight_metrics_from_dir(cfg.out_dir, scenario_name, cfg.seed, cfg.station);
    write_metrics_json(cfg.out_dir + "/metrics.json", metrics);
    validate_flight_outputs(cfg.out_dir);
}

inline void run_sweep_scenario(const ScenarioConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    Rng base(cfg.seed);
    for (MountConfig mount : cfg.scenario.sweep.mounts) {
        LinkGeometry geom = cfg.link;
        geom.mount = mount;
        for (SweepAxis axis : cfg.scenario.sweep.axes) {
            auto rows = orientation_sweep(axis, geom, cfg.node_proto, cfg.timing,
                                          cfg.scenario.sweep.step_deg, base);
            std::string path = cfg.out_dir + "/sweep_" + axis_name(axis) + "_" +
                               mount_name(mount) + ".csv";
            write_sweep_csv(path, rows);
        }
    }
    auto metrics = sweep_metrics_from_dir(cfg.out_dir, cfg.seed, cfg.scenario.sweep.window_s);
    write_metrics_json(cfg.out_dir + "/metrics.json", metrics);
    validate_sweep_outputs(cfg.out_dir);
}

// report entry point: recompute metrics for an existing run directory and
// emit per-figure plot data alongside.
inline void run_report(const ScenarioConfig& cfg) {
    const std::string& dir = cfg.out_dir;
    if (!std::filesystem::is_directory(dir)) throw ConfigError("no such run directory: " + dir);

    // Prefer the metadata the run itself recorded, so a report over an
    // existing directory reproduces its metrics byte for byte even when the
    // run used command-line overrides.
    std::string scenario_name = cfg.scenario.type;
    std::uint64_t seed = cfg.seed;
    double window_s = cfg.scenario.sweep.window_s;
    {
        std::ifstream in(dir + "/metrics.json");
        if (in) {
            try {
                auto j = nlohmann::json::parse(in);
                scenario_name = j.value("scenario", scenario_name);
                seed = j.value("seed", seed);
                window_s = j.value("window_s", window_s);
            } catch (const nlohmann::json::exception&) {
                // Unreadable metrics are simply rebuilt from the config.
            }
        }
    }

    if (!detail::find_sweep_files(dir).empty()) {
        auto metrics = sweep_metrics_from_dir(dir, seed, window_s);
        write_metrics_json(dir + "/metrics.json", metrics);
        for (const auto& name : detail::find_sweep_files(dir)) {
            auto rows = read_sweep_csv(dir + "/" + name);
            std::string stem = name.substr(0, name.size() - 4);
            CsvWriter w(dir + "/plot_" + stem + ".csv");
            w.line("angle_deg,read_rate_hz,mean_rssi_dbm");
            for (const auto& r : rows)
                w.row({fmt_g(r.angle_deg), fmt_g(r.rate_hz), fmt_g(r.mean_rssi_dbm)});
        }
        validate_sweep_outputs(dir);
        return;
    }

    auto metrics = flight_metrics_from_dir(dir, scenario_name, seed, cfg.station);
    write_metrics_json(dir + "/metrics.json", metrics);

    auto truth = read_truth_csv(dir + "/truth.csv");
    auto est_files = detail::find_estimate_files(dir);
    std::vector<AttitudeEstimate> primary;
    if (!est_files.empty()) primary = read_estimates_csv(dir + "/" + est_files.front());

    double t0 = truth.empty() ? 0.0 : truth.front().t;
    double period = truth.size() >= 2 ? truth[1].t - truth[0].t : 0.0;
    {
        CsvWriter w(dir + "/plot_attitude.csv");
        w.line("t,phi_truth,theta_truth,psi_truth,phi_est,theta_est,psi_est");
        for (const auto& e : primary) {
            long idx = detail::align_index(e.t, t0, period, static_cast<long>(truth.size()));
            if (idx < 0) continue;
            const auto& tr = truth[static_cast<std::size_t>(idx)];
            w.row({fmt_g(e.t), fmt_g(tr.euler.roll_deg), fmt_g(tr.euler.pitch_deg),
                   fmt_g(tr.euler.yaw_deg), fmt_g(e.euler.roll_deg), fmt_g(e.euler.pitch_deg),
                   fmt_g(e.euler.yaw_deg)});
        }
    }
    {
        std::vector<double> ax, ay, az;
        for (const auto& e : primary) {
            ax.push_back(e.accel.x());
            ay.push_back(e.accel.y());
            az.push_back(e.accel.z());
        }
        std::vector<double> sx, sy, sz;
        if (!primary.empty()) {
            sx = smooth(ax, cfg.station.smooth_window);
            sy = smooth(ay, cfg.station.smooth_window);
            sz = smooth(az, cfg.station.smooth_window);
        }
        CsvWriter w(dir + "/plot_accel.csv");
        w.line("t,ax,ay,az,ax_smooth,ay_smooth,az_smooth");
        for (std::size_t i = 0; i < primary.size(); ++i)
            w.row({fmt_g(primary[i].t), fmt_g(ax[i]), fmt_g(ay[i]), fmt_g(az[i]), fmt_g(sx[i]),
                   fmt_g(sy[i]), fmt_g(sz[i])});
    }
    validate_flight_outputs(dir);
}

}  // namespace gtwin
