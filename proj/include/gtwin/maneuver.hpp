#pragma once

// Scripted flight: maneuver segments, a small P-controller with thrust-domain
// mixing, rotor failure injection, and the simulation loop that produces
// truth samples.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gtwin/attitude.hpp"
#include "gtwin/dynamics.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/rotors.hpp"

namespace gtwin {

struct ManeuverSegment {
    double t0 = 0;
    double t1 = 0;
    double thrust = 0;            // collective command, [0, 1]
    bool rate_mode = true;        // true: setpoint is deg/s, false: attitude deg
    Eigen::Vector3d setpoint{0, 0, 0};  // roll, pitch, yaw
};

struct ManeuverScript {
    std::vector<ManeuverSegment> segments;
    double duration = 0;

    // Segments must be ordered, non-overlapping, with sane thrust, and the
    // script duration must equal the last segment's end time.
    void validate() const {
        double prev_end = 0;
        for (const auto& seg : segments) {
            if (seg.t1 <= seg.t0) throw ConfigError("maneuver segment must end after it starts");
            if (seg.t0 < prev_end - 1e-12) throw ConfigError("maneuver segments overlap or are unordered");
            if (seg.thrust < 0.0 || seg.thrust > 1.0)
                throw ConfigError("segment thrust outside [0, 1]");
            prev_end = seg.t1;
        }
        if (!segments.empty() && std::abs(duration - segments.back().t1) > 1e-9)
            throw ConfigError("script duration must match the last segment end");
        if (segments.empty() && duration != 0)
            throw ConfigError("empty script must have zero duration");
    }
};

struct ControllerGains {
    Eigen::Vector3d rate_p{20, 20, 6};  // rad/s^2 of demand per rad/s of error
    double att_p = 5;                   // rate demand per attitude error, 1/s
    double update_dt = 0.002;           // controller period, s
};

// Thrust-domain mixer: solve the 4x4 map from per-rotor thrusts to
// (collective, roll moment, pitch moment, yaw moment) once, then invert
// demands into thrust commands with clamping.
class Mixer {
  public:
    Mixer(const RotorSet& rotors, const InertiaModel& im) {
        auto pos = rotor_positions(im.arm);
        Eigen::Matrix4d a;
        for (int i = 0; i < 4; ++i) {
            a(0, i) = 1.0;
            a(1, i) = pos[i].y();
            a(2, i) = -pos[i].x();
            a(3, i) = rotors.spin[i] * rotors.c_q / rotors.c_t;
        }
        a_inv_ = a.inverse();
        t_max_ = rotors.c_t * (rotors.rpm_max * kRpmToRadS) * (rotors.rpm_max * kRpmToRadS);
    }

    // thrust_cmd is the collective in [0, 1]; tau is the desired body moment.
    std::array<double, 4> commands(double thrust_cmd, const Eigen::Vector3d& tau) const {
        Eigen::Vector4d demand(4.0 * thrust_cmd * t_max_, tau.x(), tau.y(), tau.z());
        Eigen::Vector4d thrusts = a_inv_ * demand;
        std::array<double, 4> cmd;
        for (int i = 0; i < 4; ++i) {
            double c = thrusts[i] / t_max_;
            if (c < 0.0) c = 0.0;
            if (c > 1.0) c = 1.0;
            cmd[i] = c;
        }
        return cmd;
    }

  private:
    Eigen::Matrix4d a_inv_;
    double t_max_;
};

struct FailureEvent {
    int rotor = -1;  // negative disables injection
    double t = 0;
};

struct TruthSample {
    double t = 0;
    Eigen::Quaterniond q{1, 0, 0, 0};
    Eigen::Vector3d omega{0, 0, 0};
    EulerAngles euler;
    Eigen::Vector3d specific_force{0, 0, kGravity};
};

// Fixed-step closed-loop simulation of the scripted flight. The controller
// runs every update_dt (an exact multiple of dt); rotors evolve under their
// first-order lag, sampled mid-step at the RK4 stage offsets.
class FlightSim {
  public:
    FlightSim(ManeuverScript script, RotorSet rotors, InertiaModel inertia,
              ControllerGains gains, double dt, double omega_cap = 200.0,
              FailureEvent failure = {}, Eigen::Vector3d mount_offset = {0, 0, -0.01})
        : script_(std::move(script)),
          rotors_(rotors),
          im_(inertia),
          gains_(gains),
          mixer_(rotors, inertia),
          dt_(dt),
          omega_cap_(omega_cap),
          failure_(failure),
          mount_offset_(std::move(mount_offset)) {
        script_.validate();
        if (!(dt > 0.0) || dt > 0.01) throw ConfigError("dynamics step must lie in (0, 0.01] s");
        double ratio = gains_.update_dt / dt_;
        ctrl_every_ = static_cast<long>(std::llround(ratio));
        if (ctrl_every_ < 1 || std::abs(ratio - static_cast<double>(ctrl_every_)) > 1e-9)
            throw ConfigError("controller period must be an integer multiple of the step");
    }

    double dt() const { return dt_; }
    const AttitudeState& state() const { return state_; }
    const RotorSet& rotors() const { return rotors_; }

    void advance() {
        if (failure_.rotor >= 0 && !failure_applied_ && state_.t >= failure_.t - 0.5 * dt_) {
            rotors_.failed[static_cast<std::size_t>(failure_.rotor)] = true;
            failure_applied_ = true;
        }
        if (step_index_ % ctrl_every_ == 0) update_controller();

        RotorSet rotors_now = rotors_;
        auto torque_fn = [&](const AttitudeState& probe, double h) {
            RotorSet staged = rotor_step(rotors_now, h);
            return body_torque(staged, im_, probe.omega);
        };
        state_ = step_with(state_, torque_fn, im_, dt_, omega_cap_);
        rotors_ = rotor_step(rotors_, dt_);
        ++step_index_;
        state_.t = static_cast<double>(step_index_) * dt_;  // keep the grid exact
    }

    TruthSample truth() const {
        TruthSample s;
        s.t = state_.t;
        s.q = state_.q;
        s.omega = state_.omega;
        s.euler = euler_from_quat(state_.q);
        s.specific_force = specific_force();
        return s;
    }

    // Specific force at the sensor mount: rotational accelerations about the
    // pivot plus gravity reaction, expressed in the body frame.
    Eigen::Vector3d specific_force() const {
        Eigen::Vector3d alpha = angular_accel(state_, current_torque(), im_);
        const Eigen::Vector3d& w = state_.omega;
        Eigen::Vector3d lever = alpha.cross(mount_offset_) + w.cross(w.cross(mount_offset_));
        return lever + state_.q.conjugate() * Eigen::Vector3d(0, 0, kGravity);
    }

    Eigen::Vector3d current_torque() const { return body_torque(rotors_, im_, state_.omega); }

  private:
    void update_controller() {
        const ManeuverSegment* seg = nullptr;
        for (const auto& s : script_.segments)
            if (state_.t >= s.t0 - 1e-12 && state_.t < s.t1 - 1e-12) { seg = &s; break; }

        Eigen::Vector3d w_sp = Eigen::Vector3d::Zero();
        double thrust = 0.0;
        if (seg) {
            thrust = seg->thrust;
            if (seg->rate_mode) {
                w_sp = seg->setpoint.unaryExpr([](double d) { return deg2rad(d); });
            } else {
                EulerAngles cur = euler_from_quat(state_.q);
                w_sp.x() = gains_.att_p * deg2rad(angle_diff_deg(seg->setpoint.x(), cur.roll_deg));
                w_sp.y() = gains_.att_p * deg2rad(angle_diff_deg(seg->setpoint.y(), cur.pitch_deg));
                w_sp.z() = gains_.att_p * deg2rad(angle_diff_deg(seg->setpoint.z(), cur.yaw_deg));
            }
        }
        Eigen::Vector3d accel_demand = gains_.rate_p.cwiseProduct(w_sp - state_.omega);
        Eigen::Vector3d tau = im_.j_total().cwiseProduct(accel_demand);
        rotors_.cmd = mixer_.commands(thrust, tau);
    }

    ManeuverScript script_;
    RotorSet rotors_;
    InertiaModel im_;
    ControllerGains gains_;
    Mixer mixer_;
    double dt_;
    double omega_cap_;
    FailureEvent failure_;
    Eigen::Vector3d mount_offset_;
    AttitudeState state_;
    long step_index_ = 0;
    long ctrl_every_ = 1;
    bool failure_applied_ = false;
};

// Run the script for `duration` seconds, logging truth samples at log_rate_hz
// (including both t = 0 and t = duration). A non-positive duration produces
// no samples.
inline std::vector<TruthSample> run_maneuver(FlightSim& sim, double duration,
                                             double log_rate_hz = 100.0) {
    std::vector<TruthSample> out;
    if (duration <= 0.0) return out;
    double log_dt = 1.0 / log_rate_hz;
    long log_every = static_cast<long>(std::llround(log_dt / sim.dt()));
    if (log_every < 1 || std::abs(log_dt - static_cast<double>(log_every) * sim.dt()) > 1e-9)
        throw ConfigError("log period must be an integer multiple of the step");
    long n_steps = static_cast<long>(std::llround(duration / sim.dt()));
    out.push_back(sim.truth());
    for (long k = 1; k <= n_steps; ++k) {
        sim.advance();
        if (k % log_every == 0) out.push_back(sim.truth());
    }
    return out;
}

}  // namespace gtwin
