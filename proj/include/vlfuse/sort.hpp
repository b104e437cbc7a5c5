#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "vlfuse/assignment.hpp"
#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"
#include "vlfuse/kalman.hpp"

namespace vlfuse {

/// Tracker lifecycle parameters. Defaults follow the RGB detector tuning;
/// event_defaults() gives the event-detector variant.
struct SortParams {
    int max_age = 10;                   // frames a track survives without association
    int max_unmatched_predictions = 5;  // cap on consecutive coasted emissions
    int min_hits = 3;                   // associations before a track is emitted
    int min_assoc_for_prediction = 10;  // associations required to coast
    double iou_threshold = 0.3;

    // Kalman noise for the [u, v, s, r, du, dv, ds] state.
    double obs_noise_uv = 1.0;
    double obs_noise_s = 10.0;
    double obs_noise_r = 0.01;
    double process_noise_uvs = 1.0;
    double process_noise_r = 1e-4;
    double process_noise_duv = 1e-2;
    double process_noise_ds = 1e-4;
    double init_position_var = 10.0;
    double init_velocity_var = 1e4;  // 1000x the position variance

    static SortParams rgb_defaults() { return SortParams{}; }

    static SortParams event_defaults() {
        SortParams p;
        p.max_age = 10;
        p.max_unmatched_predictions = 3;
        p.min_hits = 1;
        p.min_assoc_for_prediction = 1;
        p.iou_threshold = 0.3;
        return p;
    }

    void validate() const {
        if (max_age < 0 || max_unmatched_predictions < 0 || min_hits < 0 ||
            min_assoc_for_prediction < 0)
            throw ConfigError("sort: counts must be non-negative");
        if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0))
            throw ConfigError("sort: iou_threshold outside [0,1]");
    }
};

/// Bounding box as the filter observes it: centre, area, aspect ratio.
inline Eigen::Vector4d bbox_to_obs(const BBox& b) {
    if (!b.valid()) throw Error("bbox_to_obs: degenerate box");
    return {b.center_u(), b.center_v(), b.area(), b.width() / b.height()};
}

inline BBox obs_to_bbox(const Eigen::Vector4d& z) {
    const double s = z[2], r = z[3];
    if (!(s > 0.0) || !(r > 0.0)) throw Error("obs_to_bbox: non-positive area or aspect ratio");
    const double w = std::sqrt(s * r);
    const double h = s / w;
    return BBox{z[0] - 0.5 * w, z[1] - 0.5 * h, z[0] + 0.5 * w, z[1] + 0.5 * h};
}

struct TrackState2D {
    KalmanFilter<7, 4> kf;  // [u, v, s, r, du, dv, ds]

    BBox bbox() const { return obs_to_bbox(kf.x.head<4>()); }
};

struct Track2D {
    int id = 0;
    TrackState2D state;
    int class_id = 0;
    double confidence = 0.0;  // of the last associated detection
    int hits = 0;
    int hit_streak = 0;
    int age = 0;
    int time_since_update = 0;
    int consecutive_predictions = 0;  // coasted emissions since last association
};

namespace sort_model {

inline Eigen::Matrix<double, 7, 7> transition() {
    Eigen::Matrix<double, 7, 7> F = Eigen::Matrix<double, 7, 7>::Identity();
    F(0, 4) = F(1, 5) = F(2, 6) = 1.0;
    return F;
}

inline Eigen::Matrix<double, 7, 7> process_noise(const SortParams& p) {
    Eigen::Matrix<double, 7, 7> Q = Eigen::Matrix<double, 7, 7>::Zero();
    Q.diagonal() << p.process_noise_uvs, p.process_noise_uvs, p.process_noise_uvs,
        p.process_noise_r, p.process_noise_duv, p.process_noise_duv, p.process_noise_ds;
    return Q;
}

inline Eigen::Matrix<double, 4, 7> observation_model() {
    Eigen::Matrix<double, 4, 7> H = Eigen::Matrix<double, 4, 7>::Zero();
    H.leftCols<4>().setIdentity();
    return H;
}

inline Eigen::Matrix4d observation_noise(const SortParams& p) {
    Eigen::Matrix4d R = Eigen::Matrix4d::Zero();
    R.diagonal() << p.obs_noise_uv, p.obs_noise_uv, p.obs_noise_s, p.obs_noise_r;
    return R;
}

}  // namespace sort_model

/// One constant-velocity step: ages the track and advances the filter.
inline void predict_track(Track2D& tr, const SortParams& params) {
    auto& kf = tr.state.kf;
    // Clamp the area rate before it can drive the area non-positive.
    if (kf.x[2] + kf.x[6] <= 0.0) kf.x[6] = 0.0;
    kf.predict(sort_model::transition(), sort_model::process_noise(params));
    ++tr.age;
    ++tr.time_since_update;
}

/// Kalman update with the associated detection's box.
inline void update_track(Track2D& tr, const Detection2D& det, const SortParams& params) {
    tr.state.kf.update(bbox_to_obs(det.bbox), sort_model::observation_model(),
                       sort_model::observation_noise(params));
    ++tr.hits;
    ++tr.hit_streak;
    tr.time_since_update = 0;
    tr.consecutive_predictions = 0;
    tr.confidence = det.confidence;
}

inline Track2D make_track(int id, const Detection2D& det, const SortParams& params) {
    Track2D tr;
    tr.id = id;
    tr.class_id = det.class_id;
    tr.confidence = det.confidence;
    tr.hits = 1;
    tr.hit_streak = 1;
    auto& kf = tr.state.kf;
    kf.x.setZero();
    kf.x.head<4>() = bbox_to_obs(det.bbox);
    kf.P.setZero();
    kf.P.diagonal().head<4>().setConstant(params.init_position_var);
    kf.P.diagonal().tail<3>().setConstant(params.init_velocity_var);
    return tr;
}

struct AssociationResult {
    std::vector<std::pair<int, int>> matches;  // (track index, detection index)
    std::vector<int> unmatched_tracks;
    std::vector<int> unmatched_detections;
};

/// Hungarian association on the IoU matrix. Pairs below the threshold are
/// released into the unmatched sets; class mismatches score 0.
inline AssociationResult associate(const std::vector<BBox>& track_boxes,
                                   const std::vector<int>& track_classes,
                                   const std::vector<Detection2D>& detections,
                                   double iou_threshold) {
    AssociationResult res;
    const int nt = static_cast<int>(track_boxes.size());
    const int nd = static_cast<int>(detections.size());
    std::vector<char> track_matched(nt, 0), det_matched(nd, 0);
    if (nt > 0 && nd > 0) {
        std::vector<std::vector<double>> scores(nt, std::vector<double>(nd, 0.0));
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < nd; ++j)
                if (track_classes[i] == detections[j].class_id)
                    scores[i][j] = iou(track_boxes[i], detections[j].bbox);
        const AssignmentResult assignment = assign_max_score(scores);
        for (int i = 0; i < nt; ++i) {
            const int j = assignment.row_to_col[i];
            if (j >= 0 && scores[i][j] >= iou_threshold) {
                res.matches.emplace_back(i, j);
                track_matched[i] = 1;
                det_matched[j] = 1;
            }
        }
    }
    for (int i = 0; i < nt; ++i)
        if (!track_matched[i]) res.unmatched_tracks.push_back(i);
    for (int j = 0; j < nd; ++j)
        if (!det_matched[j]) res.unmatched_detections.push_back(j);
    return res;
}

struct TrackOutput {
    int track_id = 0;
    BBox bbox;
    int class_id = 0;
    double confidence = 0.0;
    bool coasted = false;  // emitted from prediction, no detection this frame
};

/// SORT: constant-velocity Kalman tracking of bounding boxes with
/// Hungarian/IoU association and hit/age lifecycle management.
class SortTracker {
public:
    explicit SortTracker(SortParams params = {}) : params_(params) { params_.validate(); }

    const SortParams& params() const { return params_; }
    const std::vector<Track2D>& tracks() const { return tracks_; }

    /// Track ids removed by the most recent step().
    const std::vector<int>& removed_last_step() const { return removed_; }

    std::vector<TrackOutput> step(const std::vector<Detection2D>& detections) {
        removed_.clear();
        if (!detections.empty()) {
            if (detections.front().t < last_frame_t_)
                throw OrderingError("sort: frames presented out of time order");
            last_frame_t_ = detections.front().t;
        }

        // Predict all live tracks one frame ahead.
        std::vector<BBox> predicted(tracks_.size());
        std::vector<int> classes(tracks_.size());
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            predict_track(tracks_[i], params_);
            predicted[i] = tracks_[i].state.bbox();
            classes[i] = tracks_[i].class_id;
        }

        const AssociationResult assoc =
            associate(predicted, classes, detections, params_.iou_threshold);

        std::vector<char> matched(tracks_.size(), 0);
        for (const auto& [ti, di] : assoc.matches) {
            update_track(tracks_[ti], detections[di], params_);
            matched[ti] = 1;
        }
        for (int di : assoc.unmatched_detections) {
            tracks_.push_back(make_track(next_id_++, detections[di], params_));
            matched.push_back(1);
        }

        std::vector<TrackOutput> outputs;
        std::vector<Track2D> survivors;
        survivors.reserve(tracks_.size());
        for (std::size_t i = 0; i < tracks_.size(); ++i) {
            Track2D& tr = tracks_[i];
            if (matched[i]) {
                if (tr.hits >= params_.min_hits)
                    outputs.push_back({tr.id, tr.state.bbox(), tr.class_id, tr.confidence, false});
            } else {
                tr.hit_streak = 0;
                if (tr.hits >= params_.min_assoc_for_prediction) {
                    ++tr.consecutive_predictions;
                    if (tr.consecutive_predictions <= params_.max_unmatched_predictions)
                        outputs.push_back(
                            {tr.id, tr.state.bbox(), tr.class_id, tr.confidence, true});
                }
            }
            if (tr.time_since_update > params_.max_age ||
                tr.consecutive_predictions > params_.max_unmatched_predictions) {
                removed_.push_back(tr.id);
            } else {
                survivors.push_back(std::move(tr));
            }
        }
        tracks_ = std::move(survivors);
        return outputs;
    }

private:
    SortParams params_;
    std::vector<Track2D> tracks_;
    std::vector<int> removed_;
    int next_id_ = 1;
    double last_frame_t_ = -std::numeric_limits<double>::infinity();
};

}  // namespace vlfuse
