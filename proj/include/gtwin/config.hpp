#pragma once

// Scenario configuration: JSON schema, strict validation (unknown keys are
// rejected so typos cannot silently fall back to defaults), and derived
// physical quantities. Missing keys fall back to the built-in defaults of
// the corresponding structs; the bundled configs spell out every value.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gtwin/errors.hpp"
#include "gtwin/link.hpp"
#include "gtwin/maneuver.hpp"
#include "gtwin/node.hpp"
#include "gtwin/station.hpp"

namespace gtwin {

struct SweepSettings {
    std::vector<SweepAxis> axes{SweepAxis::Roll, SweepAxis::Pitch, SweepAxis::Yaw};
    std::vector<MountConfig> mounts{MountConfig::Parallel, MountConfig::Perpendicular};
    double step_deg = 15;
    double window_s = 10;
};

struct ScenarioSettings {
    std::string type = "maneuver";  // maneuver | sweep | rotor_failure
    double duration_s = 0;
    ManeuverScript script;
    SweepSettings sweep;
    FailureEvent failure;
};

struct DynamicsSettings {
    InertiaModel inertia;
    RotorSet rotors;
    ControllerGains gains;
    double dt = 1e-3;
    double log_rate_hz = 100;
    double omega_cap = 200;
    Eigen::Vector3d mount_offset{0, 0, -0.01};
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    ScenarioSettings scenario;
    DynamicsSettings dynamics;
    TagNode node_proto;
    LinkGeometry link;
    ReaderTiming timing;
    StationOptions station;
};

namespace detail {

using json = nlohmann::json;

inline void expect_keys(const json& j, const std::string& ctx,
                        std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + ctx);
    }
}

inline const json* find(const json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline double num(const json& j, const std::string& ctx) {
    if (!j.is_number()) throw ConfigError(ctx + " must be a number");
    return j.get<double>();
}

inline double num_or(const json& j, const char* key, double fallback, const std::string& ctx) {
    const json* v = find(j, key);
    return v ? num(*v, ctx + "." + key) : fallback;
}

inline bool bool_or(const json& j, const char* key, bool fallback, const std::string& ctx) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(ctx + "." + key + " must be a boolean");
    return v->get<bool>();
}

inline std::string str_or(const json& j, const char* key, const std::string& fallback,
                          const std::string& ctx) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(ctx + "." + key + " must be a string");
    return v->get<std::string>();
}

inline Eigen::Vector3d vec3_or(const json& j, const char* key, const Eigen::Vector3d& fallback,
                               const std::string& ctx) {
    const json* v = find(j, key);
    if (!v) return fallback;
    if (!v->is_array() || v->size() != 3)
        throw ConfigError(ctx + "." + key + " must be an array of 3 numbers");
    return {num((*v)[0], ctx), num((*v)[1], ctx), num((*v)[2], ctx)};
}

inline void check_multiple(double period, double dt, const std::string& what) {
    double ratio = period / dt;
    if (ratio < 1.0 - 1e-9 || std::abs(ratio - std::round(ratio)) > 1e-9)
        throw ConfigError(what + " must be an integer multiple of the dynamics step");
}

inline void parse_script(const json& arr, ManeuverScript& script) {
    if (!arr.is_array()) throw ConfigError("scenario.script must be an array");
    for (const auto& seg_json : arr) {
        std::string ctx = "scenario.script[]";
        expect_keys(seg_json, ctx,
                    {"t_start", "t_end", "thrust", "mode", "roll_dps", "pitch_dps", "yaw_dps",
                     "roll_deg", "pitch_deg", "yaw_deg"});
        ManeuverSegment seg;
        seg.t0 = num_or(seg_json, "t_start", 0, ctx);
        seg.t1 = num_or(seg_json, "t_end", 0, ctx);
        seg.thrust = num_or(seg_json, "thrust", 0, ctx);
        std::string mode = str_or(seg_json, "mode", "rate", ctx);
        if (mode == "rate") {
            seg.rate_mode = true;
            seg.setpoint = {num_or(seg_json, "roll_dps", 0, ctx),
                            num_or(seg_json, "pitch_dps", 0, ctx),
                            num_or(seg_json, "yaw_dps", 0, ctx)};
        } else if (mode == "attitude") {
            seg.rate_mode = false;
            seg.setpoint = {num_or(seg_json, "roll_deg", 0, ctx),
                            num_or(seg_json, "pitch_deg", 0, ctx),
                            num_or(seg_json, "yaw_deg", 0, ctx)};
        } else {
            throw ConfigError("segment mode must be 'rate' or 'attitude'");
        }
        script.segments.push_back(seg);
    }
    script.duration = script.segments.empty() ? 0.0 : script.segments.back().t1;
}

inline SweepAxis parse_axis(const std::string& s) {
    if (s == "roll") return SweepAxis::Roll;
    if (s == "pitch") return SweepAxis::Pitch;
    if (s == "yaw") return SweepAxis::Yaw;
    throw ConfigError("sweep axis must be roll, pitch, or yaw");
}

inline MountConfig parse_mount(const std::string& s) {
    if (s == "parallel") return MountConfig::Parallel;
    if (s == "perpendicular") return MountConfig::Perpendicular;
    throw ConfigError("mount must be 'parallel' or 'perpendicular'");
}

inline void parse_scenario(const json& j, ScenarioSettings& sc) {
    expect_keys(j, "scenario", {"type", "duration_s", "script", "sweep", "failure"});
    sc.type = str_or(j, "type", sc.type, "scenario");
    if (sc.type != "maneuver" && sc.type != "sweep" && sc.type != "rotor_failure")
        throw ConfigError("scenario.type must be maneuver, sweep, or rotor_failure");
    if (const json* s = find(j, "script")) parse_script(*s, sc.script);
    sc.duration_s = num_or(j, "duration_s", sc.script.duration, "scenario");
    if (sc.duration_s < 0) throw ConfigError("scenario.duration_s must be non-negative");
    if (const json* sw = find(j, "sweep")) {
        expect_keys(*sw, "scenario.sweep", {"axes", "configs", "step_deg", "window_s"});
        if (const json* axes = find(*sw, "axes")) {
            sc.sweep.axes.clear();
            for (const auto& a : *axes) sc.sweep.axes.push_back(parse_axis(a.get<std::string>()));
            if (sc.sweep.axes.empty()) throw ConfigError("sweep.axes must not be empty");
        }
        if (const json* mounts = find(*sw, "configs")) {
            sc.sweep.mounts.clear();
            for (const auto& m : *mounts)
                sc.sweep.mounts.push_back(parse_mount(m.get<std::string>()));
            if (sc.sweep.mounts.empty()) throw ConfigError("sweep.configs must not be empty");
        }
        sc.sweep.step_deg = num_or(*sw, "step_deg", sc.sweep.step_deg, "scenario.sweep");
        sc.sweep.window_s = num_or(*sw, "window_s", sc.sweep.window_s, "scenario.sweep");
        if (!(sc.sweep.step_deg > 0) ||
            std::abs(360.0 / sc.sweep.step_deg - std::round(360.0 / sc.sweep.step_deg)) > 1e-9)
            throw ConfigError("sweep.step_deg must divide 360");
        if (!(sc.sweep.window_s > 0)) throw ConfigError("sweep.window_s must be positive");
    }
    if (const json* f = find(j, "failure")) {
        expect_keys(*f, "scenario.failure", {"rotor", "t_fail_s"});
        double rotor = num_or(*f, "rotor", -1, "scenario.failure");
        if (std::abs(rotor - std::round(rotor)) > 0)
            throw ConfigError("failure.rotor must be an integer");
        sc.failure.rotor = static_cast<int>(rotor);
        if (sc.failure.rotor > 3) throw ConfigError("failure.rotor must be 0..3 (or negative for none)");
        sc.failure.t = num_or(*f, "t_fail_s", 0, "scenario.failure");
        if (sc.failure.t < 0) throw ConfigError("failure.t_fail_s must be non-negative");
    }
}

inline void parse_dynamics(const json& j, DynamicsSettings& d) {
    expect_keys(j, "dynamics",
                {"j_uav", "gimbal", "bearing_viscous", "rotor", "arm_m", "dt_s", "log_rate_hz",
                 "omega_cap_rad_s", "mount_offset_m", "controller"});
    d.inertia.j_uav = vec3_or(j, "j_uav", d.inertia.j_uav, "dynamics");
    if (const json* g = find(j, "gimbal")) {
        expect_keys(*g, "dynamics.gimbal", {"frame_mass_kg", "mass_split", "ring_radius_m"});
        double mass = num_or(*g, "frame_mass_kg", 0.0413, "dynamics.gimbal");
        Eigen::Vector3d split = vec3_or(*g, "mass_split", {0.25, 0.35, 0.40}, "dynamics.gimbal");
        Eigen::Vector3d radius = vec3_or(*g, "ring_radius_m", {0.06, 0.07, 0.08}, "dynamics.gimbal");
        if (std::abs(split.sum() - 1.0) > 1e-9)
            throw ConfigError("gimbal.mass_split must sum to 1");
        if (!(mass > 0) || !(radius.minCoeff() > 0))
            throw ConfigError("gimbal mass and ring radii must be positive");
        for (int i = 0; i < 3; ++i) d.inertia.j_gimbal[i] = mass * split[i] * radius[i] * radius[i];
    }
    d.inertia.bearing_b = vec3_or(j, "bearing_viscous", d.inertia.bearing_b, "dynamics");
    if (d.inertia.bearing_b.minCoeff() < 0) throw ConfigError("bearing friction must be non-negative");
    if (const json* r = find(j, "rotor")) {
        expect_keys(*r, "dynamics.rotor",
                    {"rpm_max", "thrust_max_gf", "tau_m_s", "cq_ct_ratio_m", "j_rotor",
                     "gyro_coupling"});
        d.rotors.rpm_max = num_or(*r, "rpm_max", d.rotors.rpm_max, "dynamics.rotor");
        double thrust_gf = num_or(*r, "thrust_max_gf", 15.7, "dynamics.rotor");
        d.rotors.tau_m = num_or(*r, "tau_m_s", d.rotors.tau_m, "dynamics.rotor");
        double ratio = num_or(*r, "cq_ct_ratio_m", 0.006, "dynamics.rotor");
        d.inertia.j_rotor = num_or(*r, "j_rotor", d.inertia.j_rotor, "dynamics.rotor");
        d.inertia.gyro_coupling = bool_or(*r, "gyro_coupling", d.inertia.gyro_coupling,
                                          "dynamics.rotor");
        if (!(d.rotors.rpm_max > 0) || !(thrust_gf > 0) || !(d.rotors.tau_m > 0) || !(ratio > 0))
            throw ConfigError("rotor parameters must be positive");
        double w_max = d.rotors.rpm_max * kRpmToRadS;
        d.rotors.c_t = thrust_gf * 1e-3 * kGravity / (w_max * w_max);
        d.rotors.c_q = ratio * d.rotors.c_t;
    }
    d.inertia.arm = num_or(j, "arm_m", d.inertia.arm, "dynamics");
    if (!(d.inertia.arm > 0)) throw ConfigError("arm_m must be positive");
    d.dt = num_or(j, "dt_s", d.dt, "dynamics");
    if (!(d.dt > 0) || d.dt > 0.01) throw ConfigError("dt_s must lie in (0, 0.01]");
    d.log_rate_hz = num_or(j, "log_rate_hz", d.log_rate_hz, "dynamics");
    if (!(d.log_rate_hz > 0)) throw ConfigError("log_rate_hz must be positive");
    check_multiple(1.0 / d.log_rate_hz, d.dt, "log period");
    d.omega_cap = num_or(j, "omega_cap_rad_s", d.omega_cap, "dynamics");
    if (!(d.omega_cap > 0)) throw ConfigError("omega_cap_rad_s must be positive");
    d.mount_offset = vec3_or(j, "mount_offset_m", d.mount_offset, "dynamics");
    if (const json* c = find(j, "controller")) {
        expect_keys(*c, "dynamics.controller", {"rate_p", "att_p", "update_dt_s"});
        d.gains.rate_p = vec3_or(*c, "rate_p", d.gains.rate_p, "dynamics.controller");
        d.gains.att_p = num_or(*c, "att_p", d.gains.att_p, "dynamics.controller");
        d.gains.update_dt = num_or(*c, "update_dt_s", d.gains.update_dt, "dynamics.controller");
    }
    check_multiple(d.gains.update_dt, d.dt, "controller period");
}

inline void parse_node(const json& j, TagNode& n) {
    expect_keys(j, "node",
                {"capacitance_f", "v_on", "v_off", "v_max", "p_sleep_w", "p_active_w",
                 "e_reply_j", "demod_sensitivity_dbm", "harvester", "imu", "mag_field"});
    auto& h = n.harvester;
    h.capacitance = num_or(j, "capacitance_f", h.capacitance, "node");
    h.v_on = num_or(j, "v_on", h.v_on, "node");
    h.v_off = num_or(j, "v_off", h.v_off, "node");
    h.v_max = num_or(j, "v_max", h.v_max, "node");
    if (!(h.capacitance > 0)) throw ConfigError("capacitance_f must be positive");
    if (!(h.v_off > 0) || !(h.v_off < h.v_on) || !(h.v_on <= h.v_max))
        throw ConfigError("thresholds must satisfy 0 < v_off < v_on <= v_max");
    auto& pm = n.power;
    pm.p_sleep = num_or(j, "p_sleep_w", pm.p_sleep, "node");
    pm.p_active = num_or(j, "p_active_w", pm.p_active, "node");
    pm.e_reply = num_or(j, "e_reply_j", pm.e_reply, "node");
    pm.demod_sensitivity_dbm = num_or(j, "demod_sensitivity_dbm", pm.demod_sensitivity_dbm, "node");
    if (pm.p_sleep < 0 || pm.p_active < 0 || pm.e_reply < 0)
        throw ConfigError("node power draws must be non-negative");
    if (const json* rj = find(j, "harvester")) {
        expect_keys(*rj, "node.harvester", {"sensitivity_dbm", "eta_max", "eta_max_at_dbm"});
        auto& rc = pm.rectifier;
        rc.sensitivity_dbm = num_or(*rj, "sensitivity_dbm", rc.sensitivity_dbm, "node.harvester");
        rc.eta_max = num_or(*rj, "eta_max", rc.eta_max, "node.harvester");
        rc.eta_max_at_dbm = num_or(*rj, "eta_max_at_dbm", rc.eta_max_at_dbm, "node.harvester");
        if (rc.eta_max < 0 || rc.eta_max > 1) throw ConfigError("eta_max must lie in [0, 1]");
        if (!(rc.sensitivity_dbm < rc.eta_max_at_dbm))
            throw ConfigError("harvester sensitivity must lie below the efficiency knee");
    }
    if (const json* ij = find(j, "imu")) {
        expect_keys(*ij, "node.imu",
                    {"accel_fs_g", "mag_fs_ut", "sigma_accel_ms2", "sigma_mag_rel",
                     "accel_bias_ms2"});
        auto& imu = n.imu;
        imu.accel_fs_g = num_or(*ij, "accel_fs_g", imu.accel_fs_g, "node.imu");
        imu.mag_fs_ut = num_or(*ij, "mag_fs_ut", imu.mag_fs_ut, "node.imu");
        imu.sigma_accel = num_or(*ij, "sigma_accel_ms2", imu.sigma_accel, "node.imu");
        imu.sigma_mag_rel = num_or(*ij, "sigma_mag_rel", imu.sigma_mag_rel, "node.imu");
        imu.accel_bias = vec3_or(*ij, "accel_bias_ms2", imu.accel_bias, "node.imu");
        if (!(imu.accel_fs_g > 0) || !(imu.mag_fs_ut > 0))
            throw ConfigError("IMU full scales must be positive");
        if (imu.sigma_accel < 0 || imu.sigma_mag_rel < 0)
            throw ConfigError("IMU noise levels must be non-negative");
    }
    if (const json* mj = find(j, "mag_field")) {
        expect_keys(*mj, "node.mag_field", {"magnitude_ut", "inclination_deg", "declination_deg"});
        auto& f = n.field;
        f.magnitude_ut = num_or(*mj, "magnitude_ut", f.magnitude_ut, "node.mag_field");
        f.inclination_deg = num_or(*mj, "inclination_deg", f.inclination_deg, "node.mag_field");
        f.declination_deg = num_or(*mj, "declination_deg", f.declination_deg, "node.mag_field");
        if (!(f.magnitude_ut > 0)) throw ConfigError("field magnitude must be positive");
    }
}

inline void parse_link(const json& j, LinkGeometry& g, ReaderTiming& t) {
    expect_keys(j, "link",
                {"reader_position_m", "boresight", "reader_gain_dbi", "tx_power_dbm",
                 "frequency_hz", "polarization_loss_db", "misc_loss_db", "mod_loss_db",
                 "dipole_floor_db", "reader_sensitivity_dbm", "mount", "shadow_sigma_db",
                 "round_period_s", "q_exponent", "corrupt_rate"});
    g.reader_pos = vec3_or(j, "reader_position_m", g.reader_pos, "link");
    if (g.reader_pos.norm() <= 0.1)
        throw ConfigError("reader must sit more than 0.1 m from the platform");
    g.boresight = vec3_or(j, "boresight", g.boresight, "link");
    if (!(g.boresight.norm() > 0)) throw ConfigError("boresight must be a nonzero vector");
    g.reader_gain_dbi = num_or(j, "reader_gain_dbi", g.reader_gain_dbi, "link");
    // Choose the cos^n exponent so a cos^n pattern actually has this peak
    // directivity: D0 = 2 (n + 1).
    g.pattern_exp = std::pow(10.0, g.reader_gain_dbi / 10.0) / 2.0 - 1.0;
    if (!(g.pattern_exp > 0)) throw ConfigError("reader gain too small for a cos^n pattern");
    g.tx_power_dbm = num_or(j, "tx_power_dbm", g.tx_power_dbm, "link");
    g.freq_hz = num_or(j, "frequency_hz", g.freq_hz, "link");
    if (!(g.freq_hz > 0)) throw ConfigError("frequency_hz must be positive");
    g.pol_loss_db = num_or(j, "polarization_loss_db", g.pol_loss_db, "link");
    g.misc_loss_db = num_or(j, "misc_loss_db", g.misc_loss_db, "link");
    g.mod_loss_db = num_or(j, "mod_loss_db", g.mod_loss_db, "link");
    double floor_db = num_or(j, "dipole_floor_db", 10.0 * std::log10(g.dipole_floor), "link");
    g.dipole_floor = std::pow(10.0, floor_db / 10.0);
    g.reader_sensitivity_dbm = num_or(j, "reader_sensitivity_dbm", g.reader_sensitivity_dbm, "link");
    g.mount = parse_mount(str_or(j, "mount", mount_name(g.mount), "link"));
    g.shadow_sigma_db = num_or(j, "shadow_sigma_db", g.shadow_sigma_db, "link");
    if (g.shadow_sigma_db < 0) throw ConfigError("shadow_sigma_db must be non-negative");
    t.round_period = num_or(j, "round_period_s", t.round_period, "link");
    if (!(t.round_period > 0)) throw ConfigError("round_period_s must be positive");
    double q = num_or(j, "q_exponent", t.q, "link");
    if (q < 0 || q > 15 || std::abs(q - std::round(q)) > 0)
        throw ConfigError("q_exponent must be an integer in [0, 15]");
    t.q = static_cast<std::uint8_t>(q);
    t.corrupt_rate = num_or(j, "corrupt_rate", t.corrupt_rate, "link");
    if (t.corrupt_rate < 0 || t.corrupt_rate > 1)
        throw ConfigError("corrupt_rate must lie in [0, 1]");
}

inline void parse_station(const json& j, StationOptions& s) {
    expect_keys(j, "station", {"smooth_window", "pole_exclusion_deg"});
    double w = num_or(j, "smooth_window", s.smooth_window, "station");
    if (w < 1 || std::abs(w - std::round(w)) > 0 || static_cast<long>(w) % 2 == 0)
        throw ConfigError("smooth_window must be an odd positive integer");
    s.smooth_window = static_cast<int>(w);
    s.pole_exclusion_deg = num_or(j, "pole_exclusion_deg", s.pole_exclusion_deg, "station");
    if (s.pole_exclusion_deg <= 0 || s.pole_exclusion_deg > 90)
        throw ConfigError("pole_exclusion_deg must lie in (0, 90]");
}

}  // namespace detail

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    detail::json j;
    try {
        j = detail::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const detail::json::parse_error& e) {
        throw ConfigError("failed to parse " + path + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");

    ScenarioConfig cfg;
    try {
        detail::expect_keys(j, "config",
                            {"seed", "out_dir", "scenario", "dynamics", "node", "link", "station"});
        double seed = detail::num_or(j, "seed", static_cast<double>(cfg.seed), "config");
        if (seed < 0 || std::abs(seed - std::round(seed)) > 0)
            throw ConfigError("seed must be a non-negative integer");
        cfg.seed = static_cast<std::uint64_t>(seed);
        cfg.out_dir = detail::str_or(j, "out_dir", cfg.out_dir, "config");
        if (const auto* s = detail::find(j, "scenario")) detail::parse_scenario(*s, cfg.scenario);
        if (const auto* d = detail::find(j, "dynamics")) detail::parse_dynamics(*d, cfg.dynamics);
        if (const auto* n = detail::find(j, "node")) detail::parse_node(*n, cfg.node_proto);
        if (const auto* l = detail::find(j, "link")) detail::parse_link(*l, cfg.link, cfg.timing);
        if (const auto* st = detail::find(j, "station")) detail::parse_station(*st, cfg.station);
    } catch (const detail::json::exception& e) {
        throw ConfigError(std::string("malformed config value: ") + e.what());
    }

    cfg.timing.sim_dt = cfg.dynamics.dt;
    cfg.timing.window = cfg.scenario.sweep.window_s;
    detail::check_multiple(cfg.timing.round_period, cfg.dynamics.dt, "round period");
    cfg.scenario.script.validate();
    return cfg;
}

// Truncate the script so nothing extends past the new duration.
inline void clip_script(ManeuverScript& script, double duration) {
    std::vector<ManeuverSegment> kept;
    for (auto seg : script.segments) {
        if (seg.t0 >= duration - 1e-12) break;
        if (seg.t1 > duration) seg.t1 = duration;
        kept.push_back(seg);
    }
    script.segments = std::move(kept);
    script.duration = script.segments.empty() ? 0.0 : script.segments.back().t1;
}

inline void apply_overrides(ScenarioConfig& cfg, std::optional<std::uint64_t> seed,
                            std::optional<double> duration,
                            const std::optional<std::string>& out_dir) {
    if (seed) cfg.seed = *seed;
    if (duration) {
        if (*duration < 0) throw ConfigError("duration override must be non-negative");
        cfg.scenario.duration_s = *duration;
        clip_script(cfg.scenario.script, *duration);
    }
    if (out_dir) cfg.out_dir = *out_dir;
}

}  // namespace gtwin
