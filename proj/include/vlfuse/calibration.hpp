#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <vector>

#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"

namespace vlfuse {

/// One synchronized pose pair: the mocap pose of the sensor-marker body
/// and the camera pose relative to a fixed checkerboard.
struct HandEyeSample {
    RigidTransform t_w_ms;  // markers -> world (from the mocap system)
    RigidTransform t_cb_c;  // camera -> checkerboard (from corner detection)
};

struct EyeInHandResult {
    RigidTransform transform;        // T_C^{M_S}
    double rotation_residual = 0.0;  // mean AX-vs-XB rotation angle, rad
    double translation_residual = 0.0;  // mean AX-vs-XB translation gap, m
    int pair_count = 0;
};

namespace calib_detail {

// Left and right quaternion product matrices: L(a) q = a * q, R(b) q = q * b.
inline Eigen::Matrix4d quat_left(const Eigen::Quaterniond& q) {
    Eigen::Matrix4d m;
    m << q.w(), -q.x(), -q.y(), -q.z(),
         q.x(),  q.w(), -q.z(),  q.y(),
         q.y(),  q.z(),  q.w(), -q.x(),
         q.z(), -q.y(),  q.x(),  q.w();
    return m;
}

inline Eigen::Matrix4d quat_right(const Eigen::Quaterniond& q) {
    Eigen::Matrix4d m;
    m << q.w(), -q.x(), -q.y(), -q.z(),
         q.x(),  q.w(),  q.z(), -q.y(),
         q.y(), -q.z(),  q.w(),  q.x(),
         q.z(),  q.y(), -q.x(),  q.w();
    return m;
}

// Degenerate when every rotation axis lies within tol_rad of one common
// direction (second moment of the axis scatter below sin^2(tol)).
inline bool axes_degenerate(const std::vector<Eigen::Vector3d>& axes, double tol_rad) {
    if (axes.size() < 2) return true;
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& a : axes) scatter += a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const double s = std::sin(tol_rad);
    return eig.eigenvalues()(1) <= static_cast<double>(axes.size()) * s * s;
}

// Solves A_i X = X B_i for X given relative-motion pairs: rotation from the
// null space of the stacked quaternion constraint, then translation by
// linear least squares.
inline RigidTransform solve_ax_xb(const std::vector<RigidTransform>& as,
                                  const std::vector<RigidTransform>& bs,
                                  std::string parent, std::string child) {
    const int n = static_cast<int>(as.size());
    Eigen::Matrix4d normal = Eigen::Matrix4d::Zero();
    for (int i = 0; i < n; ++i) {
        Eigen::Quaterniond qa = as[i].rotation;
        Eigen::Quaterniond qb = bs[i].rotation;
        // Conjugate rotations share their scalar part; align the pair's sign.
        if (qa.w() * qb.w() < 0.0) qb.coeffs() = -qb.coeffs();
        const Eigen::Matrix4d m = quat_left(qa) - quat_right(qb);
        normal += m.transpose() * m;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal);
    Eigen::Vector4d qx = eig.eigenvectors().col(0);  // smallest eigenvalue
    if (qx(0) < 0.0) qx = -qx;                       // canonical sign
    const Eigen::Quaterniond q(qx(0), qx(1), qx(2), qx(3));
    const Eigen::Matrix3d rx = q.normalized().toRotationMatrix();

    Eigen::MatrixXd lhs(3 * n, 3);
    Eigen::VectorXd rhs(3 * n);
    for (int i = 0; i < n; ++i) {
        lhs.middleRows<3>(3 * i) = as[i].rotation_matrix() - Eigen::Matrix3d::Identity();
        rhs.segment<3>(3 * i) = rx * bs[i].translation - as[i].translation;
    }
    const Eigen::Vector3d tx = lhs.colPivHouseholderQr().solve(rhs);
    return RigidTransform(q.normalized(), tx, std::move(parent), std::move(child));
}

}  // namespace calib_detail

/// Recovers T_C^{M_S} from checkerboard/mocap pose pairs via the eye-in-hand
/// formulation over consecutive relative motions.
inline EyeInHandResult solve_eye_in_hand(const std::vector<HandEyeSample>& samples) {
    if (samples.size() < 3)
        throw InsufficientSamplesError("eye-in-hand: need at least 3 samples, got " +
                                       std::to_string(samples.size()));
    std::vector<RigidTransform> as, bs;
    std::vector<Eigen::Vector3d> axes;
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
        // A = relative marker motion, B = relative camera motion; the
        // unknown Y = T_{M_S}^C satisfies A Y = Y B.
        RigidTransform a = compose(invert(samples[i + 1].t_w_ms), samples[i].t_w_ms);
        RigidTransform b = compose(invert(samples[i + 1].t_cb_c), samples[i].t_cb_c);
        const Eigen::AngleAxisd aa(a.rotation);
        if (aa.angle() > 1e-10) axes.push_back(aa.axis());
        as.push_back(std::move(a));
        bs.push_back(std::move(b));
    }
    if (calib_detail::axes_degenerate(axes, M_PI / 180.0))
        throw DegenerateMotionError(
            "eye-in-hand: relative rotations share a single axis within 1 degree");

    const RigidTransform y = calib_detail::solve_ax_xb(
        as, bs, samples.front().t_w_ms.child_frame, samples.front().t_cb_c.child_frame);

    EyeInHandResult res;
    res.transform = invert(y);
    res.pair_count = static_cast<int>(as.size());
    for (std::size_t i = 0; i < as.size(); ++i) {
        const RigidTransform ay = compose(as[i], y);
        const RigidTransform yb = compose(y, bs[i]);
        res.rotation_residual += rotation_angle_between(ay, yb);
        res.translation_residual += (ay.translation - yb.translation).norm();
    }
    res.rotation_residual /= static_cast<double>(as.size());
    res.translation_residual /= static_cast<double>(as.size());
    return res;
}

/// A checkerboard placement: its plane in the camera frame and the LiDAR
/// points observed on it.
struct PlaneObservation {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit, camera frame
    double d = 0.0;  // plane offset: n . x = d for x on the plane
    std::vector<Eigen::Vector3d> lidar_points;          // LiDAR frame

    void validate() const {
        if (std::abs(normal.norm() - 1.0) > 1e-9)
            throw ConfigError("plane observation: normal must have unit norm");
        if (lidar_points.size() < 3)
            throw ConfigError("plane observation: need at least 3 points");
        if (d >= 0.0)
            throw ConfigError("plane observation: normal must face the camera (d < 0)");
    }
};

struct PointToPlaneResult {
    RigidTransform transform;  // T_C^L
    double final_cost = 0.0;   // sum of squared point-to-plane distances
    int iterations = 0;
};

/// Estimates T_C^L by Gauss-Newton minimization of squared point-to-plane
/// distances over all placements jointly, with step halving on cost
/// increase. Converges from initial guesses within roughly 30 degrees and
/// 0.5 m for well-conditioned plane sets.
inline PointToPlaneResult solve_point_to_plane(const std::vector<PlaneObservation>& observations,
                                               const RigidTransform& initial) {
    if (observations.size() < 3)
        throw InsufficientSamplesError("point-to-plane: need at least 3 plane observations");
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (const auto& obs : observations) {
        obs.validate();
        scatter += obs.normal * obs.normal.transpose();
    }
    {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
        if (eig.eigenvalues()(0) <= 1e-9 * static_cast<double>(observations.size()))
            throw RankDeficiencyError("point-to-plane: plane normals do not span 3D");
    }

    auto cost_of = [&](const RigidTransform& t) {
        double c = 0.0;
        for (const auto& obs : observations)
            for (const auto& p : obs.lidar_points) {
                const double r = obs.normal.dot(transform_point(t, p)) - obs.d;
                c += r * r;
            }
        return c;
    };

    RigidTransform current = initial;
    double cost = cost_of(current);
    for (int iter = 1; iter <= 100; ++iter) {
        Eigen::Matrix<double, 6, 6> jtj = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> jtr = Eigen::Matrix<double, 6, 1>::Zero();
        for (const auto& obs : observations) {
            for (const auto& p : obs.lidar_points) {
                const Eigen::Vector3d q = transform_point(current, p);
                const double r = obs.normal.dot(q) - obs.d;
                Eigen::Matrix<double, 6, 1> j;
                j.head<3>() = q.cross(obs.normal);  // d r / d (left rotation)
                j.tail<3>() = obs.normal;           // d r / d translation
                jtj += j * j.transpose();
                jtr += j * r;
            }
        }
        Eigen::Matrix<double, 6, 1> step = jtj.ldlt().solve(-jtr);
        if (step.norm() < 1e-10) {
            return {current, cost, iter};
        }
        // Step halving: accept the first shrinkage that lowers the cost.
        bool accepted = false;
        for (int half = 0; half < 30; ++half) {
            const Eigen::Vector3d dtheta = step.head<3>();
            const double angle = dtheta.norm();
            const Eigen::Quaterniond dq =
                angle > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(angle, dtheta / angle))
                            : Eigen::Quaterniond::Identity();
            const RigidTransform delta(dq, step.tail<3>(), current.parent_frame,
                                       current.parent_frame);
            const RigidTransform candidate = compose(delta, current);
            const double c = cost_of(candidate);
            if (c < cost) {
                current = candidate;
                cost = c;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            return {current, cost, iter};  // no descent direction left
        }
    }
    throw NonConvergenceError("point-to-plane: no convergence after 100 iterations");
}

}  // namespace vlfuse
