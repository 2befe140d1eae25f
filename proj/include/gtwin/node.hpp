#pragma once

// The sensor tag: IMU sampling with 12-bit quantization, the local magnetic
// field model, and the tag-side inventory protocol glued to the harvester.

#include <cmath>
#include <cstdint>
#include <optional>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gtwin/attitude.hpp"
#include "gtwin/epc.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/harvest.hpp"
#include "gtwin/rng.hpp"
#include "gtwin/rotors.hpp"

namespace gtwin {

struct ImuModel {
    double accel_fs_g = 2.0;       // full scale, +/- g
    double mag_fs_ut = 49.152;     // full scale, +/- uT (LSB of 0.024 uT)
    Eigen::Vector3d accel_bias{0, 0, 0};  // m/s^2
    double sigma_accel = 0.03;     // m/s^2 per axis, white
    double sigma_mag_rel = 0.003;  // fraction of field magnitude per axis
};

// Local geomagnetic field by magnitude, inclination (down positive), and
// declination (east positive). World x points to magnetic north.
struct MagFieldModel {
    double magnitude_ut = 49.0;
    double inclination_deg = 60.0;
    double declination_deg = 0.0;

    Eigen::Vector3d world() const {
        double inc = deg2rad(inclination_deg);
        Eigen::Vector3d mag_north(magnitude_ut * std::cos(inc), 0.0,
                                  -magnitude_ut * std::sin(inc));
        return Eigen::AngleAxisd(-deg2rad(declination_deg), Eigen::Vector3d::UnitZ()) * mag_north;
    }
};

// Status bits: bit 0 set when any accel axis clipped, bit 1 when any mag
// axis clipped.
struct ImuSample {
    std::array<std::int16_t, 3> accel{};
    std::array<std::int16_t, 3> mag{};
    std::uint8_t counter = 0;
    std::uint8_t status = 0;
};

// Symmetric 12-bit two's-complement quantizer: LSB = full_scale / 2048,
// round-to-nearest, clamped to [-2048, 2047].
inline std::int16_t quantize12(double value, double full_scale, bool* clipped = nullptr) {
    double lsb = full_scale / 2048.0;
    double code = std::round(value / lsb);
    if (code > 2047.0) { code = 2047.0; if (clipped) *clipped = true; }
    if (code < -2048.0) { code = -2048.0; if (clipped) *clipped = true; }
    return static_cast<std::int16_t>(code);
}

inline double dequantize12(std::int16_t code, double full_scale) {
    return static_cast<double>(code) * (full_scale / 2048.0);
}

struct ImuTruth {
    Eigen::Quaterniond q{1, 0, 0, 0};              // body -> world
    Eigen::Vector3d specific_force{0, 0, kGravity};  // body frame, m/s^2
};

// Read the IMU. Only a powered (Active) node can sample; noise and
// quantization are applied per axis, accel first then mag.
inline ImuSample sample_imu(const ImuModel& imu, const MagFieldModel& field, NodeFsm fsm,
                            const ImuTruth& truth, std::uint8_t& counter, Rng& rng) {
    if (fsm != NodeFsm::Active) throw NotPowered("IMU sampled while unpowered");
    ImuSample s;
    bool accel_clip = false, mag_clip = false;
    double accel_fs = imu.accel_fs_g * kGravity;
    for (int i = 0; i < 3; ++i) {
        double v = truth.specific_force[i] + imu.accel_bias[i] + imu.sigma_accel * rng.gaussian();
        s.accel[static_cast<std::size_t>(i)] = quantize12(v, accel_fs, &accel_clip);
    }
    Eigen::Vector3d m_body = truth.q.conjugate() * field.world();
    double sigma_mag = imu.sigma_mag_rel * field.magnitude_ut;
    for (int i = 0; i < 3; ++i) {
        double v = m_body[i] + sigma_mag * rng.gaussian();
        s.mag[static_cast<std::size_t>(i)] = quantize12(v, imu.mag_fs_ut, &mag_clip);
    }
    s.counter = counter++;
    s.status = static_cast<std::uint8_t>((accel_clip ? 1 : 0) | (mag_clip ? 2 : 0));
    return s;
}

// One tag: harvester + power model + IMU + inventory protocol state. The
// protocol side is deliberately simple: single tag, slotted ALOHA with the
// Query's Q exponent, RN16 handshake, EPC block on a matching Ack.
struct TagNode {
    HarvesterState harvester;
    NodePowerModel power;
    ImuModel imu;
    MagFieldModel field;
    Rng rng{1};
    EnergyLedger ledger;
    std::uint8_t counter = 0;

    std::uint32_t slot = 0;
    std::uint16_t rn16 = 0;
    bool rn16_valid = false;

    void harvest(double p_in_dbm, double dt) {
        harvest_step(harvester, power, p_in_dbm, dt, ledger);
    }

    // React to a decoded reader command given the true pose at this instant.
    // Returns the reply transmitted, if any. Every reply costs e_reply and is
    // suppressed (leaving all state untouched) when unaffordable or the node
    // is not Active.
    std::optional<TagReply> respond(const ReaderCommand& cmd, const ImuTruth& truth) {
        if (harvester.fsm != NodeFsm::Active) return std::nullopt;
        if (const auto* q = std::get_if<QueryCommand>(&cmd)) {
            rn16_valid = false;
            slot = static_cast<std::uint32_t>(rng.below(1ull << q->q));
            if (slot == 0) return emit_rn16();
            return std::nullopt;
        }
        if (std::get_if<QueryRepCommand>(&cmd)) {
            if (slot > 0 && --slot == 0) return emit_rn16();
            return std::nullopt;
        }
        const auto& ack = std::get<AckCommand>(cmd);
        if (!rn16_valid || ack.rn16 != rn16) return std::nullopt;
        if (harvester.energy < power.e_reply) return std::nullopt;
        ImuSample s = sample_imu(imu, field, harvester.fsm, truth, counter, rng);
        if (!try_spend(harvester, power.e_reply, ledger)) return std::nullopt;
        SensorPayload p;
        p.accel = s.accel;
        p.mag = s.mag;
        p.counter = s.counter;
        p.status = s.status;
        return TagReply{make_epc_block(p)};
    }

  private:
    std::optional<TagReply> emit_rn16() {
        if (harvester.energy < power.e_reply) return std::nullopt;
        std::uint16_t candidate = static_cast<std::uint16_t>(rng.u64() & 0xFFFFu);
        if (!try_spend(harvester, power.e_reply, ledger)) return std::nullopt;
        rn16 = candidate;
        rn16_valid = true;
        return TagReply{Rn16Reply{rn16}};
    }
};

}  // namespace gtwin
