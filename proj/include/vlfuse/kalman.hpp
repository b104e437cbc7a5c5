#pragma once

#include <Eigen/Dense>

namespace vlfuse {

/// Linear Kalman filter over an N-dimensional state with M-dimensional
/// observations. Covariance updates use the Joseph form and are
/// re-symmetrized, keeping P positive semi-definite through long runs.
template <int N, int M>
struct KalmanFilter {
    using StateVec = Eigen::Matrix<double, N, 1>;
    using StateMat = Eigen::Matrix<double, N, N>;
    using ObsVec = Eigen::Matrix<double, M, 1>;
    using ObsMat = Eigen::Matrix<double, M, M>;
    using ObsModel = Eigen::Matrix<double, M, N>;

    StateVec x = StateVec::Zero();
    StateMat P = StateMat::Identity();

    void predict(const StateMat& F, const StateMat& Q) {
        x = F * x;
        P = F * P * F.transpose() + Q;
        P = 0.5 * (P + P.transpose()).eval();
    }

    // Returns the innovation z - Hx (pre-update residual).
    ObsVec update(const ObsVec& z, const ObsModel& H, const ObsMat& R) {
        const ObsVec innovation = z - H * x;
        const ObsMat S = H * P * H.transpose() + R;
        const Eigen::Matrix<double, N, M> K = P * H.transpose() * S.inverse();
        x += K * innovation;
        const StateMat IKH = StateMat::Identity() - K * H;
        P = IKH * P * IKH.transpose() + K * R * K.transpose();
        P = 0.5 * (P + P.transpose()).eval();
        return innovation;
    }
};

}  // namespace vlfuse
