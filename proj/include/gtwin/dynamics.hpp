#pragma once

// Rigid-body rotational dynamics of the gimbal-mounted airframe.
//
// State is attitude (quaternion, body -> world) plus body angular rate. The
// frame is pinned at its center by the gimbal so there is no translation;
// what remains is Euler's equation with bearing friction plus optional rotor
// gyroscopic coupling:
//
//   J dw/dt = tau - w x (J w) - b .* w
//   dq/dt   = 1/2 q (0, w)
//
// Integration is fixed-step RK4 treating the quaternion as a plain R^4 vector
// with renormalization after each step.

#include <cmath>
#include <functional>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "gtwin/attitude.hpp"
#include "gtwin/errors.hpp"
#include "gtwin/rotors.hpp"

namespace gtwin {

struct AttitudeState {
    Eigen::Quaterniond q{1, 0, 0, 0};  // body -> world
    Eigen::Vector3d omega{0, 0, 0};    // body rates, rad/s
    double t = 0;
};

struct InertiaModel {
    // Bare airframe inertia about body axes, kg*m^2.
    Eigen::Vector3d j_uav{1.4e-5, 1.4e-5, 2.2e-5};
    // Gimbal ring inertia seen by each body axis (roll, pitch, yaw rings).
    Eigen::Vector3d j_gimbal{3.717e-5, 7.08295e-5, 1.05728e-4};
    // Viscous bearing friction per axis, N*m per rad/s.
    Eigen::Vector3d bearing_b{1e-6, 1e-6, 1e-6};
    double arm = 0.046;          // rotor arm length, m
    double j_rotor = 1e-8;       // single rotor spin inertia, kg*m^2
    bool gyro_coupling = true;

    Eigen::Vector3d j_total() const { return j_uav + j_gimbal; }
};

// Net body torque from the rotor bank: thrust moments about the pivot,
// reaction torques about z, and (optionally) the gyroscopic torque from the
// rotors' combined spin angular momentum.
inline Eigen::Vector3d body_torque(const RotorSet& rotors, const InertiaModel& im,
                                   const Eigen::Vector3d& omega) {
    auto pos = rotor_positions(im.arm);
    Eigen::Vector3d tau = Eigen::Vector3d::Zero();
    double h_z = 0.0;
    for (int i = 0; i < 4; ++i) {
        double w = rotor_omega(rotors, i);
        tau += pos[i].cross(Eigen::Vector3d(0, 0, rotors.c_t * w * w));
        tau.z() += rotors.spin[i] * rotors.c_q * w * w;
        h_z += rotors.spin[i] * w;
    }
    if (im.gyro_coupling) {
        Eigen::Vector3d h(0, 0, im.j_rotor * h_z);
        tau += h.cross(omega);  // = J_r * sum(spin*w) * (z x omega)
    }
    return tau;
}

inline Eigen::Vector3d angular_accel(const AttitudeState& s, const Eigen::Vector3d& tau,
                                     const InertiaModel& im) {
    Eigen::Vector3d j = im.j_total();
    Eigen::Vector3d jw = j.cwiseProduct(s.omega);
    Eigen::Vector3d rhs = tau - s.omega.cross(jw) - im.bearing_b.cwiseProduct(s.omega);
    return rhs.cwiseQuotient(j);
}

struct StepDiag {
    double q_drift = 0;  // |1 - |q|| before renormalization
};

namespace detail {

inline Eigen::Vector4d quat_deriv(const Eigen::Vector4d& qv, const Eigen::Vector3d& w) {
    Eigen::Quaterniond q(qv[0], qv[1], qv[2], qv[3]);
    Eigen::Quaterniond wq(0, w.x(), w.y(), w.z());
    Eigen::Quaterniond dq = q * wq;
    return 0.5 * Eigen::Vector4d(dq.w(), dq.x(), dq.y(), dq.z());
}

}  // namespace detail

// One RK4 step. torque_fn(state, h) must return the body torque for the probe
// state at time offset h into the step, letting callers model actuators whose
// output evolves within the step.
template <typename TorqueFn>
AttitudeState step_with(const AttitudeState& s, TorqueFn&& torque_fn, const InertiaModel& im,
                        double dt, double omega_cap = 200.0, StepDiag* diag = nullptr) {
    if (!(dt > 0.0) || dt > 0.01) throw SimulationFault("step size must lie in (0, 0.01] s");

    Eigen::Vector4d q0(s.q.w(), s.q.x(), s.q.y(), s.q.z());
    Eigen::Vector3d w0 = s.omega;

    auto deriv = [&](const Eigen::Vector4d& qv, const Eigen::Vector3d& w, double h) {
        AttitudeState probe;
        probe.q = Eigen::Quaterniond(qv[0], qv[1], qv[2], qv[3]);
        probe.omega = w;
        probe.t = s.t + h;
        Eigen::Vector3d tau = torque_fn(probe, h);
        return std::make_pair(detail::quat_deriv(qv, w), angular_accel(probe, tau, im));
    };

    auto [k1q, k1w] = deriv(q0, w0, 0.0);
    auto [k2q, k2w] = deriv(q0 + 0.5 * dt * k1q, w0 + 0.5 * dt * k1w, 0.5 * dt);
    auto [k3q, k3w] = deriv(q0 + 0.5 * dt * k2q, w0 + 0.5 * dt * k2w, 0.5 * dt);
    auto [k4q, k4w] = deriv(q0 + dt * k3q, w0 + dt * k3w, dt);

    Eigen::Vector4d q1 = q0 + (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    Eigen::Vector3d w1 = w0 + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

    if (!q1.allFinite() || !w1.allFinite())
        throw SimulationFault("state became non-finite during integration");
    if (w1.norm() > omega_cap)
        throw SimulationFault("body rate exceeded the configured cap");

    if (diag) diag->q_drift = std::abs(1.0 - q1.norm());

    AttitudeState out;
    out.q = Eigen::Quaterniond(q1[0], q1[1], q1[2], q1[3]).normalized();
    out.omega = w1;
    out.t = s.t + dt;
    return out;
}

inline AttitudeState step(const AttitudeState& s, const Eigen::Vector3d& tau,
                          const InertiaModel& im, double dt, double omega_cap = 200.0,
                          StepDiag* diag = nullptr) {
    return step_with(
        s, [&](const AttitudeState&, double) { return tau; }, im, dt, omega_cap, diag);
}

}  // namespace gtwin
