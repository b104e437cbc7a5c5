#pragma once

#include <map>
#include <vector>

#include "vlfuse/error.hpp"
#include "vlfuse/kalman.hpp"

namespace vlfuse {

struct Filter3DParams {
    double accel_std = 2.0;        // white-acceleration process noise, m/s^2 per axis
    double obs_noise_std = 0.2;    // position observation noise, m per axis
    double init_velocity_var = 100.0;  // m^2/s^2

    void validate() const {
        if (!(accel_std > 0.0) || !(obs_noise_std > 0.0) || !(init_velocity_var > 0.0))
            throw ConfigError("filter3d: noise parameters must be positive");
    }
};

/// Constant-velocity Kalman filter over [x, y, z, vx, vy, vz] in the
/// camera frame, driven by continuous timestamps.
struct TrackState3D {
    KalmanFilter<6, 3> kf;
    int track_id = 0;
    int class_id = 0;
    double last_update_t = 0.0;

    Eigen::Vector3d position() const { return kf.x.head<3>(); }
    Eigen::Vector3d velocity() const { return kf.x.tail<3>(); }
};

namespace detail3d {

inline Eigen::Matrix<double, 6, 6> transition(double dt) {
    Eigen::Matrix<double, 6, 6> F = Eigen::Matrix<double, 6, 6>::Identity();
    F(0, 3) = F(1, 4) = F(2, 5) = dt;
    return F;
}

// Discrete white-acceleration noise, per independent axis.
inline Eigen::Matrix<double, 6, 6> process_noise(double dt, double accel_std) {
    const double q = accel_std * accel_std;
    const double dt2 = dt * dt;
    Eigen::Matrix<double, 6, 6> Q = Eigen::Matrix<double, 6, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
        Q(a, a) = q * dt2 * dt2 / 4.0;
        Q(a, a + 3) = Q(a + 3, a) = q * dt2 * dt / 2.0;
        Q(a + 3, a + 3) = q * dt2;
    }
    return Q;
}

inline Eigen::Matrix<double, 3, 6> observation_model() {
    Eigen::Matrix<double, 3, 6> H = Eigen::Matrix<double, 3, 6>::Zero();
    H.leftCols<3>().setIdentity();
    return H;
}

}  // namespace detail3d

inline void predict3d(TrackState3D& state, double t, const Filter3DParams& params) {
    const double dt = t - state.last_update_t;
    if (dt < 0.0) throw Error("predict3d: time runs backwards");
    if (dt > 0.0)
        state.kf.predict(detail3d::transition(dt), detail3d::process_noise(dt, params.accel_std));
    state.last_update_t = t;
}

inline void update3d(TrackState3D& state, const Eigen::Vector3d& obs, double t,
                     const Filter3DParams& params) {
    predict3d(state, t, params);
    const double r = params.obs_noise_std * params.obs_noise_std;
    state.kf.update(obs, detail3d::observation_model(),
                    Eigen::Matrix3d::Identity() * r);
}

inline TrackState3D make_track3d(int track_id, int class_id, const Eigen::Vector3d& obs, double t,
                                 const Filter3DParams& params) {
    TrackState3D s;
    s.track_id = track_id;
    s.class_id = class_id;
    s.last_update_t = t;
    s.kf.x.head<3>() = obs;
    s.kf.x.tail<3>().setZero();
    s.kf.P.setZero();
    s.kf.P.diagonal().head<3>().setConstant(params.obs_noise_std * params.obs_noise_std);
    s.kf.P.diagonal().tail<3>().setConstant(params.init_velocity_var);
    return s;
}

struct FusedObservation {
    int track_id = 0;
    int class_id = 0;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();  // camera frame
    double t = 0.0;
};

/// One independent filter per live 2D track id.
class TrackMap3D {
public:
    explicit TrackMap3D(Filter3DParams params = {}) : params_(params) { params_.validate(); }

    const std::map<int, TrackState3D>& tracks() const { return tracks_; }
    const Filter3DParams& params() const { return params_; }

    /// Feeds this frame's fused observations; new ids spawn filters at the
    /// observed point with zero velocity. Returns the touched states in
    /// input order.
    std::vector<const TrackState3D*> manage(const std::vector<FusedObservation>& fused) {
        std::vector<const TrackState3D*> updated;
        for (const FusedObservation& obs : fused) {
            auto it = tracks_.find(obs.track_id);
            if (it == tracks_.end()) {
                it = tracks_
                         .emplace(obs.track_id, make_track3d(obs.track_id, obs.class_id, obs.point,
                                                             obs.t, params_))
                         .first;
            } else {
                update3d(it->second, obs.point, obs.t, params_);
            }
            updated.push_back(&it->second);
        }
        return updated;
    }

    /// Drops filters whose 2D track died.
    void remove(const std::vector<int>& dead_track_ids) {
        for (int id : dead_track_ids) tracks_.erase(id);
    }

private:
    Filter3DParams params_;
    std::map<int, TrackState3D> tracks_;
};

}  // namespace vlfuse
