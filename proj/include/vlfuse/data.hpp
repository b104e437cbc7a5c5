#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"

namespace vlfuse {

struct BBox {
    double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_u() const { return 0.5 * (x1 + x2); }
    double center_v() const { return 0.5 * (y1 + y2); }
    bool valid() const { return x2 > x1 && y2 > y1; }
};

inline double iou(const BBox& a, const BBox& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = ix2 - ix1;
    const double ih = iy2 - iy1;
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    return inter / (a.area() + b.area() - inter);
}

enum class DetectionSource { rgb, event };

inline const char* to_string(DetectionSource s) {
    return s == DetectionSource::rgb ? "rgb" : "event";
}

// MS-COCO class indices used by the RGB detector: 0 = person, 2 = car.
// Ids 1 and 2 double as the helmet colour labels of the two tracked people.
struct Detection2D {
    double t = 0.0;  // seconds
    BBox bbox;
    int class_id = 0;
    double confidence = 0.0;
    DetectionSource source = DetectionSource::rgb;
};

struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    double t = 0.0;
    std::int8_t p = 1;  // +1 or -1
};

/// Per-polarity event counts over T temporal slices, dims (2, T, h, w).
struct EventTensor {
    int slices = 0;
    int height = 0;
    int width = 0;
    double window_start = 0.0;
    double window_len = 0.0;
    std::vector<std::uint32_t> values;  // indexed [polarity][slice][y][x]

    std::uint32_t& at(int polarity, int slice, int y, int x) {
        return values[((static_cast<std::size_t>(polarity) * slices + slice) * height + y) * width + x];
    }
    std::uint32_t at(int polarity, int slice, int y, int x) const {
        return values[((static_cast<std::size_t>(polarity) * slices + slice) * height + y) * width + x];
    }
    std::uint64_t total() const {
        std::uint64_t s = 0;
        for (auto v : values) s += v;
        return s;
    }
};

struct LidarPoint {
    float x = 0.f, y = 0.f, z = 0.f;  // metres, LiDAR frame
    double t = 0.0;                   // seconds
};

struct LidarScan {
    double scan_t = 0.0;  // representative timestamp
    std::vector<LidarPoint> points;
};

enum class Subject { sensor_rig, helmet_1, helmet_2 };

inline const char* to_string(Subject s) {
    switch (s) {
        case Subject::sensor_rig: return "sensor_rig";
        case Subject::helmet_1: return "helmet_1";
        case Subject::helmet_2: return "helmet_2";
    }
    return "?";
}

inline const char* marker_frame(Subject s) {
    switch (s) {
        case Subject::sensor_rig: return frames::sensor_markers;
        case Subject::helmet_1: return frames::helmet_1;
        case Subject::helmet_2: return frames::helmet_2;
    }
    return "?";
}

struct GroundTruthPose {
    double t = 0.0;
    Subject subject = Subject::sensor_rig;
    RigidTransform pose;  // T_W^{M_subject}
};

/// One subject's time-ordered pose samples.
struct PoseTrack {
    Subject subject = Subject::sensor_rig;
    std::vector<double> times;
    std::vector<RigidTransform> poses;

    bool empty() const { return times.empty(); }
};

/// Pose at time t by linear interpolation of translation and spherical
/// linear interpolation of rotation between the bracketing samples.
/// Queries up to 10 ms outside the span clamp to the end poses.
inline RigidTransform interpolate_pose(const PoseTrack& track, double t) {
    if (track.empty()) throw OutOfRangeError("interpolate_pose: empty pose track");
    constexpr double kSlack = 0.010;
    if (t < track.times.front() - kSlack || t > track.times.back() + kSlack)
        throw OutOfRangeError("interpolate_pose: query outside recorded span");
    if (t <= track.times.front()) return track.poses.front();
    if (t >= track.times.back()) return track.poses.back();
    const auto it = std::upper_bound(track.times.begin(), track.times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - track.times.begin());
    const std::size_t lo = hi - 1;
    if (track.times[lo] == t) return track.poses[lo];
    const double alpha = (t - track.times[lo]) / (track.times[hi] - track.times[lo]);
    const RigidTransform& a = track.poses[lo];
    const RigidTransform& b = track.poses[hi];
    return RigidTransform(a.rotation.slerp(alpha, b.rotation),
                          (1.0 - alpha) * a.translation + alpha * b.translation,
                          a.parent_frame, a.child_frame);
}

/// Splits a mixed ground-truth stream into per-subject tracks.
struct PoseSet {
    PoseTrack rig;
    PoseTrack helmet1;
    PoseTrack helmet2;

    PoseTrack& track(Subject s) {
        switch (s) {
            case Subject::sensor_rig: return rig;
            case Subject::helmet_1: return helmet1;
            default: return helmet2;
        }
    }
    const PoseTrack& track(Subject s) const {
        return const_cast<PoseSet*>(this)->track(s);
    }
};

inline PoseSet split_by_subject(const std::vector<GroundTruthPose>& stream) {
    PoseSet set;
    set.rig.subject = Subject::sensor_rig;
    set.helmet1.subject = Subject::helmet_1;
    set.helmet2.subject = Subject::helmet_2;
    for (const auto& g : stream) {
        PoseTrack& tr = set.track(g.subject);
        tr.times.push_back(g.t);
        tr.poses.push_back(g.pose);
    }
    return set;
}

}  // namespace vlfuse
