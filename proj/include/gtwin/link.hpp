#pragma once

// Reader-to-tag RF link: free-space path loss, the reader's cos^n patch
// pattern, the tag dipole pattern under the current attitude, forward power
// and backscatter RSSI budgets, and the full inventory round (Query /
// QueryRep / Ack with energy gating and optional corruption).

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gtwin/attitude.hpp"
#include "gtwin/epc.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/node.hpp"
#include "gtwin/rng.hpp"

namespace gtwin {

inline constexpr double kSpeedOfLight = 299792458.0;

// How the tag's dipole is mounted on the airframe: Parallel lays it along
// body y (broadside to the reader at the identity pose), Perpendicular along
// body x (pointed at the reader, i.e. in its pattern null, at identity).
enum class MountConfig { Parallel, Perpendicular };

inline const char* mount_name(MountConfig m) {
    return m == MountConfig::Parallel ? "parallel" : "perpendicular";
}

struct LinkGeometry {
    Eigen::Vector3d reader_pos{1.5, 0, 0};   // m, tag antenna at the origin
    Eigen::Vector3d boresight{-1, 0, 0};     // reader pattern axis
    double reader_gain_dbi = 8;
    double pattern_exp = 2.1549;             // cos^n exponent matching 8 dBi
    MountConfig mount = MountConfig::Parallel;
    double freq_hz = 915e6;
    double tx_power_dbm = 30;
    double pol_loss_db = 3;                  // linear tag vs circular reader
    double misc_loss_db = 0;                 // signed calibration offset
    double mod_loss_db = 5;                  // signed backscatter conversion offset
    double dipole_floor = 0.01;              // linear gain floor in the null
    double reader_sensitivity_dbm = -80;
    double shadow_sigma_db = 0;              // lognormal shadowing, dB

    Eigen::Vector3d dipole_axis_body() const {
        return mount == MountConfig::Parallel ? Eigen::Vector3d::UnitY()
                                              : Eigen::Vector3d::UnitX();
    }
};

inline double fspl_db(double distance_m, double freq_hz) {
    return 20.0 * std::log10(4.0 * kPi * distance_m * freq_hz / kSpeedOfLight);
}

// Reader gain toward the tag. cos_theta is the cosine of the angle off
// boresight; the pattern is peak gain plus 10 n log10(cos).
inline double reader_gain_db(const LinkGeometry& g, double cos_theta) {
    double c = std::max(cos_theta, 1e-6);
    return g.reader_gain_dbi + 10.0 * g.pattern_exp * std::log10(c);
}

// Tag dipole gain toward the reader for the given attitude: sin^2 of the
// angle between the dipole axis (rotated into world) and the line of sight,
// with a small floor so the null is deep but finite.
inline double tag_gain_db(const LinkGeometry& g, const Eigen::Quaterniond& q) {
    Eigen::Vector3d axis_w = q * g.dipole_axis_body();
    Eigen::Vector3d los = g.reader_pos.normalized();
    double c = axis_w.normalized().dot(los);
    double sin2 = 1.0 - c * c;
    if (sin2 < 0.0) sin2 = 0.0;
    return 10.0 * std::log10(1.64 * sin2 + g.dipole_floor);
}

namespace detail {

inline double reader_cos_toward_tag(const LinkGeometry& g) {
    Eigen::Vector3d toward_tag = -g.reader_pos;  // tag sits at the origin
    return g.boresight.normalized().dot(toward_tag.normalized());
}

}  // namespace detail

// Power available at the tag's rectifier for the given attitude.
inline double forward_power_dbm(const LinkGeometry& g, const Eigen::Quaterniond& q) {
    double d = g.reader_pos.norm();
    return g.tx_power_dbm + reader_gain_db(g, detail::reader_cos_toward_tag(g)) +
           tag_gain_db(g, q) - fspl_db(d, g.freq_hz) - g.pol_loss_db - g.misc_loss_db;
}

// Backscattered power back at the reader: the forward budget, re-radiated
// through the tag pattern with the modulation conversion loss, attenuated by
// the return path. Net distance dependence is 1/d^4.
inline double backscatter_rssi_dbm(const LinkGeometry& g, const Eigen::Quaterniond& q) {
    double d = g.reader_pos.norm();
    return forward_power_dbm(g, q) + tag_gain_db(g, q) - g.mod_loss_db -
           fspl_db(d, g.freq_hz) + reader_gain_db(g, detail::reader_cos_toward_tag(g)) -
           g.pol_loss_db;
}

struct ReaderTiming {
    double round_period = 0.016;  // s per inventory round
    double sim_dt = 0.001;        // harvest integration step
    double window = 10.0;         // rate measurement window, s
    std::uint8_t q = 0;           // slotted-ALOHA exponent
    double corrupt_rate = 0;      // per-reply bit corruption probability
};

struct LinkSample {
    double t = 0;
    bool success = false;
    double rssi_dbm = std::numeric_limits<double>::quiet_NaN();
    EulerAngles attitude;
    std::optional<SensorPayload> payload;
};

// Truth for a pose held statically: the only specific force is the gravity
// reaction.
inline ImuTruth static_truth(const Eigen::Quaterniond& q) {
    return ImuTruth{q, q.conjugate() * Eigen::Vector3d(0, 0, kGravity)};
}

namespace detail {

// Transmit one tag reply over the reverse link: optionally corrupt a bit,
// then let the reader try to decode. Returns nothing when the frame is
// dropped or fails its checksum.
inline std::optional<TagReply> receive_reply(const TagReply& reply, const ReaderTiming& timing,
                                             Rng& air_rng) {
    BitSeq bits = encode_reply(reply);
    if (timing.corrupt_rate > 0.0 && air_rng.uniform() < timing.corrupt_rate) {
        std::size_t i = static_cast<std::size_t>(air_rng.below(bits.size()));
        bits[i] ^= 1u;
    }
    try {
        return decode_reply(bits);
    } catch (const CodecError&) {
        return std::nullopt;
    }
}

}  // namespace detail

// One full inventory round against a single tag: Query, enough QueryReps to
// walk the tag's slot counter down, then Ack the RN16 the reader heard.
// Succeeds only when the forward power clears the tag's demodulation
// threshold, the backscatter clears the reader's sensitivity, the tag has the
// energy to reply twice, and both replies survive the channel.
inline LinkSample attempt_read(const LinkGeometry& geom, const ImuTruth& truth, TagNode& node,
                               const ReaderTiming& timing, double t, Rng& air_rng) {
    LinkSample sample;
    sample.t = t;
    sample.attitude = euler_from_quat(truth.q);

    double shadow = geom.shadow_sigma_db > 0.0 ? geom.shadow_sigma_db * air_rng.gaussian() : 0.0;
    double p_fwd = forward_power_dbm(geom, truth.q) + shadow;
    if (p_fwd < node.power.demod_sensitivity_dbm) return sample;

    // The backscatter path crosses the shadowed channel twice.
    double rssi = backscatter_rssi_dbm(geom, truth.q) + 2.0 * shadow;
    if (rssi < geom.reader_sensitivity_dbm) return sample;

    QueryCommand query;
    query.q = timing.q;
    auto first = node.respond(decode_command(encode_command(query)), truth);
    if (!first) {
        BitSeq rep_bits = encode_command(QueryRepCommand{query.session});
        std::uint32_t max_reps = (1u << timing.q) - 1u;
        for (std::uint32_t i = 0; i < max_reps && !first; ++i)
            first = node.respond(decode_command(rep_bits), truth);
    }
    if (!first) return sample;

    auto heard = detail::receive_reply(*first, timing, air_rng);
    if (!heard) return sample;
    const auto* rn = std::get_if<Rn16Reply>(&*heard);
    if (!rn) return sample;

    auto second = node.respond(decode_command(encode_command(AckCommand{rn->rn16})), truth);
    if (!second) return sample;
    auto block = detail::receive_reply(*second, timing, air_rng);
    if (!block) return sample;
    const auto* epc = std::get_if<EpcBlockReply>(&*block);
    if (!epc || epc->pc != kSensorPc) return sample;

    try {
        sample.payload = decode_sensor_epc(epc->epc);
    } catch (const CodecError&) {
        return sample;
    }
    sample.success = true;
    sample.rssi_dbm = rssi;
    return sample;
}

// Convenience overload for statically held poses with a quiet channel.
inline LinkSample attempt_read(const LinkGeometry& geom, const Eigen::Quaterniond& q,
                               TagNode& node, const ReaderTiming& timing, double t) {
    Rng quiet(0);
    return attempt_read(geom, static_truth(q), node, timing, t, quiet);
}

struct RateResult {
    double rate_hz = 0;
    double mean_rssi_dbm = std::numeric_limits<double>::quiet_NaN();
    long n_success = 0;
    long n_attempts = 0;
};

// Hold the pose for the measurement window, running inventory rounds on the
// reader's cadence and harvesting continuously between them. The node is
// taken by value so the caller's prototype is untouched.
inline RateResult measure_read_rate(const LinkGeometry& geom, const Eigen::Quaterniond& pose,
                                    TagNode node, const ReaderTiming& timing, Rng& air_rng) {
    long steps = std::llround(timing.window / timing.sim_dt);
    long round_every = std::llround(timing.round_period / timing.sim_dt);
    if (round_every < 1 ||
        std::abs(timing.round_period - static_cast<double>(round_every) * timing.sim_dt) > 1e-9)
        throw ConfigError("round period must be an integer multiple of the link step");

    ImuTruth truth = static_truth(pose);
    double p_harvest = forward_power_dbm(geom, pose);
    RateResult r;
    double rssi_sum = 0;
    for (long k = 0; k < steps; ++k) {
        if (k % round_every == 0) {
            LinkSample s = attempt_read(geom, truth, node, timing,
                                        static_cast<double>(k) * timing.sim_dt, air_rng);
            ++r.n_attempts;
            if (s.success) {
                ++r.n_success;
                rssi_sum += s.rssi_dbm;
            }
        }
        node.harvest(p_harvest, timing.sim_dt);
    }
    r.rate_hz = static_cast<double>(r.n_success) / timing.window;
    if (r.n_success > 0) r.mean_rssi_dbm = rssi_sum / static_cast<double>(r.n_success);
    return r;
}

enum class SweepAxis { Roll, Pitch, Yaw };

inline const char* axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::Roll: return "roll";
        case SweepAxis::Pitch: return "pitch";
        default: return "yaw";
    }
}

inline Eigen::Quaterniond axis_pose(SweepAxis a, double angle_deg) {
    EulerAngles e;
    switch (a) {
        case SweepAxis::Roll: e.roll_deg = angle_deg; break;
        case SweepAxis::Pitch: e.pitch_deg = angle_deg; break;
        case SweepAxis::Yaw: e.yaw_deg = angle_deg; break;
    }
    // Build directly from an axis-angle so swept angles beyond the Euler
    // ranges still mean "keep turning about that axis".
    Eigen::Vector3d axis = a == SweepAxis::Roll   ? Eigen::Vector3d::UnitX()
                           : a == SweepAxis::Pitch ? Eigen::Vector3d::UnitY()
                                                   : Eigen::Vector3d::UnitZ();
    return Eigen::Quaterniond(Eigen::AngleAxisd(deg2rad(angle_deg), axis));
}

struct SweepRow {
    SweepAxis axis = SweepAxis::Roll;
    double angle_deg = 0;
    MountConfig mount = MountConfig::Parallel;
    double mean_rssi_dbm = std::numeric_limits<double>::quiet_NaN();
    double rate_hz = 0;
    long n_success = 0;
    long n_attempts = 0;
};

// Rotate the platform about one gimbal axis in fixed steps, measuring the
// read rate and mean RSSI at each held angle. Each angle starts from a fresh
// copy of the prototype node, pre-charged to the turn-on level so the
// measurement reflects steady operation rather than first-charge delay.
inline std::vector<SweepRow> orientation_sweep(SweepAxis axis, const LinkGeometry& geom,
                                               const TagNode& node_proto,
                                               const ReaderTiming& timing, double step_deg,
                                               Rng& base_rng) {
    if (!(step_deg > 0.0) || std::abs(360.0 / step_deg - std::round(360.0 / step_deg)) > 1e-9)
        throw ConfigError("sweep step must divide 360 degrees");
    int n = static_cast<int>(std::llround(360.0 / step_deg));
    std::vector<SweepRow> rows;
    rows.reserve(static_cast<std::size_t>(n));
    std::uint64_t axis_id = static_cast<std::uint64_t>(axis);
    std::uint64_t mount_id = geom.mount == MountConfig::Parallel ? 0 : 1;
    for (int i = 0; i < n; ++i) {
        double angle = step_deg * i;
        TagNode node = node_proto;
        node.harvester.energy = node.harvester.e_on();
        node.harvester.fsm = NodeFsm::Active;
        node.ledger = EnergyLedger{};
        std::uint64_t stream = mount_id * 100000 + axis_id * 1000 + static_cast<std::uint64_t>(i);
        node.rng = base_rng.fork(2 * stream);
        Rng air = base_rng.fork(2 * stream + 1);
        RateResult r = measure_read_rate(geom, axis_pose(axis, angle), node, timing, air);
        rows.push_back({axis, angle, geom.mount, r.mean_rssi_dbm, r.rate_hz, r.n_success,
                        r.n_attempts});
    }
    return rows;
}

}  // namespace gtwin
