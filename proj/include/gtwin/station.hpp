#pragma once

// Ground-station processing: attitude estimation from quantized tag samples,
// smoothing, truth alignment, and the summary metrics.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gtwin/attitude.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/link.hpp"
#include "gtwin/maneuver.hpp"
#include "gtwin/node.hpp"

namespace gtwin {

struct AttitudeEstimate {
    double t = 0;
    EulerAngles euler;
    Eigen::Vector3d accel{0, 0, 0};  // de-quantized specific force, m/s^2
    double rssi_dbm = std::numeric_limits<double>::quiet_NaN();
    bool valid = true;
};

struct InventoryLog {
    std::vector<LinkSample> samples;  // one per inventory round attempted
    std::string scenario;
    std::uint64_t seed = 0;
};

// Tilt-compensated estimate from one decoded payload. Roll and pitch come
// from the gravity direction, yaw from the magnetometer after de-rotating
// the measured tilt and removing declination. A near-freefall sample (below
// 0.2 g) cannot orient gravity and is flagged invalid.
inline AttitudeEstimate estimate_attitude(const SensorPayload& p, const ImuModel& imu,
                                          const MagFieldModel& field, double t,
                                          double rssi_dbm) {
    AttitudeEstimate est;
    est.t = t;
    est.rssi_dbm = rssi_dbm;
    double accel_fs = imu.accel_fs_g * kGravity;
    Eigen::Vector3d a(dequantize12(p.accel[0], accel_fs), dequantize12(p.accel[1], accel_fs),
                      dequantize12(p.accel[2], accel_fs));
    Eigen::Vector3d m(dequantize12(p.mag[0], imu.mag_fs_ut), dequantize12(p.mag[1], imu.mag_fs_ut),
                      dequantize12(p.mag[2], imu.mag_fs_ut));
    est.accel = a;
    if (a.norm() < 0.2 * kGravity) {
        est.valid = false;
        return est;
    }
    double roll = std::atan2(a.y(), a.z());
    double pitch = std::atan2(-a.x(), std::hypot(a.y(), a.z()));
    Eigen::Vector3d m_level = Eigen::AngleAxisd(pitch, Eigen::Vector3d::UnitY()) *
                              (Eigen::AngleAxisd(roll, Eigen::Vector3d::UnitX()) * m);
    double yaw = std::atan2(-m_level.y(), m_level.x()) - deg2rad(field.declination_deg);
    est.euler.roll_deg = wrap_deg(rad2deg(roll));
    est.euler.pitch_deg = rad2deg(pitch);
    est.euler.yaw_deg = wrap_deg(rad2deg(yaw));
    return est;
}

// Centered moving average with edge truncation; output length equals input
// length. Window must be odd so the kernel is symmetric.
inline std::vector<double> smooth(const std::vector<double>& xs, int window) {
    if (window < 1 || window % 2 == 0) throw ConfigError("smoothing window must be odd and >= 1");
    std::vector<double> out(xs.size());
    int half = window / 2;
    long n = static_cast<long>(xs.size());
    for (long i = 0; i < n; ++i) {
        long lo = std::max<long>(0, i - half);
        long hi = std::min<long>(n - 1, i + half);
        double sum = 0;
        for (long j = lo; j <= hi; ++j) sum += xs[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(hi - lo + 1);
    }
    return out;
}

struct StationOptions {
    int smooth_window = 9;
    // Near +/-90 deg pitch, roll and yaw become a single degree of freedom
    // and their individual errors are meaningless; exclude them there.
    double pole_exclusion_deg = 75;
};

struct MetricsReport {
    double max_err_roll_deg = std::numeric_limits<double>::quiet_NaN();
    double max_err_pitch_deg = std::numeric_limits<double>::quiet_NaN();
    double max_err_yaw_deg = std::numeric_limits<double>::quiet_NaN();
    double accel_repeatability_ms2 = std::numeric_limits<double>::quiet_NaN();
    double mean_read_rate_hz = 0;
    double rssi_min_dbm = std::numeric_limits<double>::quiet_NaN();
    double rssi_max_dbm = std::numeric_limits<double>::quiet_NaN();
    long aligned_pairs = 0;
    long runs = 0;
};

namespace detail {

// Nearest truth tick for an estimate time, or -1 when no tick lies within
// half a truth period.
inline long align_index(double t, double t0, double period, long n) {
    if (n <= 0 || !(period > 0)) return -1;
    long idx = std::lround((t - t0) / period);
    if (idx < 0 || idx >= n) return -1;
    if (std::abs(t - (t0 + static_cast<double>(idx) * period)) > 0.5 * period + 1e-12) return -1;
    return idx;
}

}  // namespace detail

// Summarize one or more estimate runs against a common truth trace. The
// first run drives the attitude-error and link metrics; accel repeatability
// needs at least two runs and reports the worst per-tick standard deviation
// across runs after smoothing.
inline MetricsReport compute_metrics(const std::vector<std::vector<AttitudeEstimate>>& runs,
                                     const std::vector<TruthSample>& truth, double duration,
                                     const StationOptions& opt = {}) {
    MetricsReport rep;
    rep.runs = static_cast<long>(runs.size());
    if (runs.empty()) return rep;
    const auto& primary = runs.front();
    if (duration > 0) rep.mean_read_rate_hz = static_cast<double>(primary.size()) / duration;
    if (primary.empty()) return rep;

    double t0 = truth.empty() ? 0.0 : truth.front().t;
    double period = truth.size() >= 2 ? truth[1].t - truth[0].t : 0.0;
    long n_truth = static_cast<long>(truth.size());

    double max_roll = 0, max_pitch = 0, max_yaw = 0;
    bool any_roll = false, any_pitch = false, any_yaw = false;
    double rssi_min = std::numeric_limits<double>::infinity();
    double rssi_max = -std::numeric_limits<double>::infinity();

    for (const auto& est : primary) {
        rssi_min = std::min(rssi_min, est.rssi_dbm);
        rssi_max = std::max(rssi_max, est.rssi_dbm);
        long idx = detail::align_index(est.t, t0, period, n_truth);
        if (idx < 0) continue;
        ++rep.aligned_pairs;
        const auto& tr = truth[static_cast<std::size_t>(idx)];
        double pitch_err = std::abs(angle_diff_deg(est.euler.pitch_deg, tr.euler.pitch_deg));
        max_pitch = std::max(max_pitch, pitch_err);
        any_pitch = true;
        if (std::abs(tr.euler.pitch_deg) <= opt.pole_exclusion_deg) {
            max_roll = std::max(max_roll,
                                std::abs(angle_diff_deg(est.euler.roll_deg, tr.euler.roll_deg)));
            max_yaw = std::max(max_yaw,
                               std::abs(angle_diff_deg(est.euler.yaw_deg, tr.euler.yaw_deg)));
            any_roll = any_yaw = true;
        }
    }
    if (rep.aligned_pairs < 10) throw AlignmentError("fewer than 10 estimates align with truth");
    if (any_roll) rep.max_err_roll_deg = max_roll;
    if (any_pitch) rep.max_err_pitch_deg = max_pitch;
    if (any_yaw) rep.max_err_yaw_deg = max_yaw;
    rep.rssi_min_dbm = rssi_min;
    rep.rssi_max_dbm = rssi_max;

    if (runs.size() >= 2 && n_truth > 0) {
        // Per run and axis, smooth the series then place values on truth
        // ticks; compare only ticks covered by every run.
        std::vector<std::vector<Eigen::Vector3d>> grids(runs.size());
        std::vector<std::vector<bool>> has(runs.size());
        for (std::size_t r = 0; r < runs.size(); ++r) {
            std::vector<double> ax, ay, az;
            for (const auto& e : runs[r]) {
                ax.push_back(e.accel.x());
                ay.push_back(e.accel.y());
                az.push_back(e.accel.z());
            }
            auto sx = smooth(ax, opt.smooth_window);
            auto sy = smooth(ay, opt.smooth_window);
            auto sz = smooth(az, opt.smooth_window);
            grids[r].assign(static_cast<std::size_t>(n_truth), Eigen::Vector3d::Zero());
            has[r].assign(static_cast<std::size_t>(n_truth), false);
            for (std::size_t k = 0; k < runs[r].size(); ++k) {
                long idx = detail::align_index(runs[r][k].t, t0, period, n_truth);
                if (idx < 0 || has[r][static_cast<std::size_t>(idx)]) continue;
                grids[r][static_cast<std::size_t>(idx)] = Eigen::Vector3d(sx[k], sy[k], sz[k]);
                has[r][static_cast<std::size_t>(idx)] = true;
            }
        }
        double worst = 0;
        bool any_tick = false;
        for (long i = 0; i < n_truth; ++i) {
            bool all = true;
            for (std::size_t r = 0; r < runs.size(); ++r)
                if (!has[r][static_cast<std::size_t>(i)]) { all = false; break; }
            if (!all) continue;
            any_tick = true;
            for (int axis = 0; axis < 3; ++axis) {
                double mean = 0;
                for (std::size_t r = 0; r < runs.size(); ++r)
                    mean += grids[r][static_cast<std::size_t>(i)][axis];
                mean /= static_cast<double>(runs.size());
                double ss = 0;
                for (std::size_t r = 0; r < runs.size(); ++r) {
                    double d = grids[r][static_cast<std::size_t>(i)][axis] - mean;
                    ss += d * d;
                }
                worst = std::max(worst, std::sqrt(ss / static_cast<double>(runs.size() - 1)));
            }
        }
        if (any_tick) rep.accel_repeatability_ms2 = worst;
    }
    return rep;
}

// Fly the scripted maneuver while the reader runs inventory rounds against
// the tag. Per simulation step: attempt a round if one is due, harvest at the
// current pose's forward power, then integrate the dynamics. Truth samples
// are logged on the usual 100 Hz grid when a sink is provided.
inline InventoryLog run_inventory(FlightSim& sim, TagNode& node, const LinkGeometry& geom,
                                  const ReaderTiming& timing, double duration, Rng& air_rng,
                                  std::vector<TruthSample>* truth_out = nullptr,
                                  double log_rate_hz = 100.0) {
    InventoryLog log;
    if (duration <= 0.0) return log;
    double dt = sim.dt();
    if (std::abs(dt - timing.sim_dt) > 1e-12)
        throw ConfigError("link step must match the dynamics step");
    long round_every = std::llround(timing.round_period / dt);
    if (round_every < 1 || std::abs(timing.round_period - static_cast<double>(round_every) * dt) > 1e-9)
        throw ConfigError("round period must be an integer multiple of the step");
    long log_every = std::llround(1.0 / (log_rate_hz * dt));
    if (log_every < 1 || std::abs(1.0 / log_rate_hz - static_cast<double>(log_every) * dt) > 1e-9)
        throw ConfigError("log period must be an integer multiple of the step");
    long steps = std::llround(duration / dt);

    if (truth_out) truth_out->push_back(sim.truth());
    for (long k = 0; k < steps; ++k) {
        if (k % round_every == 0) {
            ImuTruth truth_now{sim.state().q, sim.specific_force()};
            log.samples.push_back(attempt_read(geom, truth_now, node, timing,
                                               static_cast<double>(k) * dt, air_rng));
        }
        node.harvest(forward_power_dbm(geom, sim.state().q), dt);
        sim.advance();
        if (truth_out && (k + 1) % log_every == 0) truth_out->push_back(sim.truth());
    }
    return log;
}

}  // namespace gtwin
