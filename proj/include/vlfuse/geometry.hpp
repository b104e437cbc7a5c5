#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <string>
#include <utility>

#include "vlfuse/error.hpp"

namespace vlfuse {

// Canonical frame labels of the sensor-suite frame graph.
namespace frames {
inline constexpr const char* world = "W";
inline constexpr const char* camera = "C";
inline constexpr const char* lidar = "L";
inline constexpr const char* imu = "I";
inline constexpr const char* sensor_markers = "M_S";
inline constexpr const char* helmet_1 = "M_1";
inline constexpr const char* helmet_2 = "M_2";
}  // namespace frames

/// Rigid transform T_parent^child: maps a point expressed in child_frame
/// into parent_frame coordinates.
struct RigidTransform {
    Eigen::Quaterniond rotation = Eigen::Quaterniond::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();
    std::string parent_frame;
    std::string child_frame;

    RigidTransform() = default;

    RigidTransform(const Eigen::Quaterniond& q, const Eigen::Vector3d& t,
                   std::string parent, std::string child)
        : rotation(q.normalized()),
          translation(t),
          parent_frame(std::move(parent)),
          child_frame(std::move(child)) {}

    static RigidTransform identity(std::string frame = {}) {
        return RigidTransform(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(), frame, frame);
    }

    Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

    Eigen::Matrix4d matrix() const {
        Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
        m.topLeftCorner<3, 3>() = rotation_matrix();
        m.topRightCorner<3, 1>() = translation;
        return m;
    }
};

inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    if (a.child_frame != b.parent_frame) {
        throw FrameMismatchError("compose: frame mismatch, '" + a.child_frame +
                                 "' composed with '" + b.parent_frame + "'");
    }
    Eigen::Quaterniond q = a.rotation * b.rotation;
    q.normalize();
    return RigidTransform(q, a.rotation * b.translation + a.translation,
                          a.parent_frame, b.child_frame);
}

inline RigidTransform invert(const RigidTransform& t) {
    Eigen::Quaterniond q = t.rotation.conjugate();
    return RigidTransform(q, -(q * t.translation), t.child_frame, t.parent_frame);
}

inline Eigen::Vector3d transform_point(const RigidTransform& t, const Eigen::Vector3d& p) {
    return t.rotation * p + t.translation;
}

/// Angle of the relative rotation between two transforms, radians.
inline double rotation_angle_between(const RigidTransform& a, const RigidTransform& b) {
    return a.rotation.angularDistance(b.rotation);
}

struct Distortion {
    double k1 = 0.0, k2 = 0.0, k3 = 0.0;  // radial
    double p1 = 0.0, p2 = 0.0;            // tangential

    bool is_zero() const { return k1 == 0 && k2 == 0 && k3 == 0 && p1 == 0 && p2 == 0; }
};

struct CameraIntrinsics {
    double fx = 0.0, fy = 0.0;
    double cx = 0.0, cy = 0.0;
    Distortion distortion;
    int width = 0, height = 0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0))
            throw ConfigError("intrinsics: focal lengths must be positive");
        if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
            throw ConfigError("intrinsics: principal point outside image");
    }
};

struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

/// Brown-Conrady distortion applied to normalized image coordinates.
inline void distort_normalized(const Distortion& d, double xn, double yn,
                               double& xd, double& yd) {
    const double r2 = xn * xn + yn * yn;
    const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
    xd = xn * radial + 2.0 * d.p1 * xn * yn + d.p2 * (r2 + 2.0 * xn * xn);
    yd = yn * radial + d.p1 * (r2 + 2.0 * yn * yn) + 2.0 * d.p2 * xn * yn;
}

inline Pixel project(const CameraIntrinsics& k, const Eigen::Vector3d& p_cam,
                     bool apply_distortion = true) {
    if (!(p_cam.z() > 0.0))
        throw BehindCameraError("project: point has non-positive depth");
    double xn = p_cam.x() / p_cam.z();
    double yn = p_cam.y() / p_cam.z();
    if (apply_distortion && !k.distortion.is_zero()) {
        double xd, yd;
        distort_normalized(k.distortion, xn, yn, xd, yd);
        xn = xd;
        yn = yd;
    }
    return Pixel{k.fx * xn + k.cx, k.fy * yn + k.cy};
}

/// Ray through pixel (u,v) at the given depth, ignoring distortion.
inline Eigen::Vector3d back_project(const CameraIntrinsics& k, const Pixel& px, double depth) {
    return {(px.u - k.cx) / k.fx * depth, (px.v - k.cy) / k.fy * depth, depth};
}

/// Removes lens distortion from a pixel by fixed-point inversion of the
/// forward model. Iterates until the correction drops below 1e-8 in
/// normalized coordinates, capped at 20 iterations.
inline Pixel undistort_pixel(const CameraIntrinsics& k, const Pixel& p) {
    if (k.distortion.is_zero()) return p;
    const Distortion& d = k.distortion;
    const double xd = (p.u - k.cx) / k.fx;
    const double yd = (p.v - k.cy) / k.fy;
    double x = xd, y = yd;
    for (int iter = 0; iter < 20; ++iter) {
        const double r2 = x * x + y * y;
        const double radial = 1.0 + r2 * (d.k1 + r2 * (d.k2 + r2 * d.k3));
        const double dx = 2.0 * d.p1 * x * y + d.p2 * (r2 + 2.0 * x * x);
        const double dy = d.p1 * (r2 + 2.0 * y * y) + 2.0 * d.p2 * x * y;
        const double xn = (xd - dx) / radial;
        const double yn = (yd - dy) / radial;
        const double step = std::hypot(xn - x, yn - y);
        x = xn;
        y = yn;
        if (step < 1e-8) return Pixel{k.fx * x + k.cx, k.fy * y + k.cy};
    }
    throw NonConvergenceError("undistort_pixel: no convergence after 20 iterations");
}

/// Static transforms and intrinsics of the sensor suite.
struct CalibrationSet {
    RigidTransform t_c_l;   // LiDAR -> camera
    RigidTransform t_c_ms;  // sensor markers -> camera
    RigidTransform t_c_i;   // IMU -> camera
    CameraIntrinsics intrinsics;

    void validate() const {
        auto expect = [](const RigidTransform& t, const char* parent, const char* child,
                         const char* name) {
            if (t.parent_frame != parent || t.child_frame != child)
                throw ConfigError(std::string("calibration: ") + name + " has frames '" +
                                  t.parent_frame + "'<-'" + t.child_frame + "', expected '" +
                                  parent + "'<-'" + child + "'");
        };
        expect(t_c_l, frames::camera, frames::lidar, "t_c_l");
        expect(t_c_ms, frames::camera, frames::sensor_markers, "t_c_ms");
        expect(t_c_i, frames::camera, frames::imu, "t_c_i");
        intrinsics.validate();
    }
};

}  // namespace vlfuse
