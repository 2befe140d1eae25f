#pragma once

// Attitude conventions used throughout:
//   * Quaternions map body vectors into the world frame (v_w = q * v_b * q^-1).
//   * World frame: z up, x pointing to magnetic north.
//   * Euler angles are intrinsic Z-Y-X (yaw, then pitch, then roll), degrees,
//     with roll/yaw wrapped to [-180, 180) and pitch confined to [-90, 90].

#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace gtwin {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct EulerAngles {
    double roll_deg = 0;
    double pitch_deg = 0;
    double yaw_deg = 0;
};

// Wrap an angle in degrees into [-180, 180).
inline double wrap_deg(double a) {
    double w = std::fmod(a + 180.0, 360.0);
    if (w < 0) w += 360.0;
    return w - 180.0;
}

// Signed smallest difference a - b in degrees, in [-180, 180).
inline double angle_diff_deg(double a, double b) { return wrap_deg(a - b); }

inline Eigen::Quaterniond quat_from_euler(const EulerAngles& e) {
    return Eigen::Quaterniond(
        Eigen::AngleAxisd(deg2rad(e.yaw_deg), Eigen::Vector3d::UnitZ()) *
        Eigen::AngleAxisd(deg2rad(e.pitch_deg), Eigen::Vector3d::UnitY()) *
        Eigen::AngleAxisd(deg2rad(e.roll_deg), Eigen::Vector3d::UnitX()));
}

inline EulerAngles euler_from_quat(const Eigen::Quaterniond& q) {
    Eigen::Matrix3d r = q.normalized().toRotationMatrix();
    double sp = -r(2, 0);
    if (sp > 1.0) sp = 1.0;
    if (sp < -1.0) sp = -1.0;
    EulerAngles e;
    e.pitch_deg = rad2deg(std::asin(sp));
    if (std::abs(sp) > 1.0 - 1e-12) {
        // Gimbal lock: roll and yaw share an axis; put everything in yaw.
        e.roll_deg = 0.0;
        e.yaw_deg = wrap_deg(rad2deg(std::atan2(-r(0, 1), r(1, 1))));
    } else {
        e.roll_deg = wrap_deg(rad2deg(std::atan2(r(2, 1), r(2, 2))));
        e.yaw_deg = wrap_deg(rad2deg(std::atan2(r(1, 0), r(0, 0))));
    }
    return e;
}

// Rotation angle between two unit quaternions, radians in [0, pi].
inline double quat_angle_rad(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
    Eigen::Quaterniond d = a.conjugate() * b;
    return 2.0 * std::atan2(d.vec().norm(), std::abs(d.w()));
}

}  // namespace gtwin
