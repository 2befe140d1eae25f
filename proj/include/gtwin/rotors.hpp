#pragma once

// Brushed-motor rotor bank: first-order spin-up lag, quadratic thrust and
// reaction torque, X-configuration placement.
//
// spin[i] is the sign of the reaction torque rotor i applies to the airframe
// about body z (so yaw torque is sum of spin_i * c_q * omega_i^2). A rotor
// spinning clockwise seen from above drags the frame counterclockwise, which
// makes its reaction sign positive in this convention.

#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "gtwin/attitude.hpp"

namespace gtwin {

inline constexpr double kGravity = 9.80665;            // m/s^2
inline constexpr double kRpmToRadS = 2.0 * kPi / 60.0;

// Thrust coefficient for a motor producing 15.7 gf at 26000 rpm.
inline const double kDefaultCt =
    15.7e-3 * kGravity / ((26000.0 * kRpmToRadS) * (26000.0 * kRpmToRadS));

struct RotorSet {
    std::array<double, 4> cmd{};                 // normalized commands, [0, 1]
    std::array<double, 4> rpm{};
    std::array<int, 4> spin{+1, -1, +1, -1};     // reaction-torque sign on body z
    std::array<bool, 4> failed{};
    double rpm_max = 26000.0;
    double tau_m = 0.05;                         // motor time constant, s
    double c_t = kDefaultCt;                     // N per (rad/s)^2
    double c_q = 0.006 * kDefaultCt;             // N*m per (rad/s)^2
};

inline double rotor_omega(const RotorSet& r, int i) { return r.rpm[i] * kRpmToRadS; }

inline double rotor_thrust(const RotorSet& r, int i) {
    double w = rotor_omega(r, i);
    return r.c_t * w * w;
}

// Advance every rotor's speed by dt under a first-order lag toward its
// commanded speed (zero if failed). Exact exponential update, so dt can be
// anything positive without loss of accuracy.
inline RotorSet rotor_step(RotorSet r, double dt) {
    double a = 1.0 - std::exp(-dt / r.tau_m);
    for (int i = 0; i < 4; ++i) {
        double c = r.cmd[i];
        if (c < 0.0) c = 0.0;
        if (c > 1.0) c = 1.0;
        double target = r.failed[i] ? 0.0 : c * r.rpm_max;
        double rpm = r.rpm[i] + a * (target - r.rpm[i]);
        if (rpm < 0.0) rpm = 0.0;
        if (rpm > r.rpm_max) rpm = r.rpm_max;
        r.rpm[i] = rpm;
    }
    return r;
}

// X layout, numbered counterclockwise from front-right when viewed from
// above: 0 front-right, 1 back-right, 2 back-left, 3 front-left.
inline std::array<Eigen::Vector3d, 4> rotor_positions(double arm) {
    double d = arm / std::sqrt(2.0);
    return {Eigen::Vector3d(+d, -d, 0), Eigen::Vector3d(-d, -d, 0),
            Eigen::Vector3d(-d, +d, 0), Eigen::Vector3d(+d, +d, 0)};
}

}  // namespace gtwin
