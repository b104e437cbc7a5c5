#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"

namespace vlfuse {

struct FusionParams {
    double k_min = 0.25;  // square-to-bbox area ratio at full-image boxes
    double k_max = 1.0;   // ratio limit for vanishing boxes
    int min_points = 3;
    double scan_time_tolerance = 0.063;  // half the 7.9 Hz scan period

    void validate() const {
        if (!(k_min > 0.0 && k_min <= k_max && k_max <= 1.0))
            throw ConfigError("fusion: need 0 < k_min <= k_max <= 1");
        if (min_points < 1) throw ConfigError("fusion: min_points must be >= 1");
        if (!(scan_time_tolerance >= 0.0))
            throw ConfigError("fusion: scan_time_tolerance must be >= 0");
    }
};

/// A LiDAR point moved into the camera frame together with its projection.
struct ProjectedPoint {
    Eigen::Vector3d p_cam;
    Pixel pixel;
};

/// LiDAR points that project strictly inside the bounding box with
/// positive depth, in camera-frame coordinates.
inline std::vector<ProjectedPoint> points_in_bbox(const LidarScan& scan,
                                                  const CalibrationSet& calib,
                                                  const BBox& bbox) {
    std::vector<ProjectedPoint> out;
    for (const LidarPoint& lp : scan.points) {
        const Eigen::Vector3d p_cam =
            transform_point(calib.t_c_l, Eigen::Vector3d(lp.x, lp.y, lp.z));
        if (!(p_cam.z() > 0.0)) continue;
        const Pixel px = project(calib.intrinsics, p_cam, true);
        if (px.u > bbox.x1 && px.u < bbox.x2 && px.v > bbox.y1 && px.v < bbox.y2)
            out.push_back({p_cam, px});
    }
    return out;
}

/// Square-to-bbox area ratio: scales linearly from k_max for vanishing
/// boxes down to k_min for boxes covering the whole image.
inline double central_square_ratio(const FusionParams& params, double bbox_area,
                                   double image_area) {
    const double rho = bbox_area / image_area;
    const double k = params.k_min + (params.k_max - params.k_min) * (1.0 - rho);
    return std::clamp(k, params.k_min, params.k_max);
}

/// The central square around the bbox centre, clipped to the bbox.
inline BBox central_square(const FusionParams& params, const BBox& bbox, int image_width,
                           int image_height) {
    const double k =
        central_square_ratio(params, bbox.area(), static_cast<double>(image_width) * image_height);
    const double side = std::sqrt(k * bbox.area());
    const double cu = bbox.center_u();
    const double cv = bbox.center_v();
    BBox square{cu - 0.5 * side, cv - 0.5 * side, cu + 0.5 * side, cv + 0.5 * side};
    square.x1 = std::max(square.x1, bbox.x1);
    square.y1 = std::max(square.y1, bbox.y1);
    square.x2 = std::min(square.x2, bbox.x2);
    square.y2 = std::min(square.y2, bbox.y2);
    return square;
}

inline std::vector<ProjectedPoint> central_square_filter(const std::vector<ProjectedPoint>& points,
                                                         const BBox& bbox, int image_width,
                                                         int image_height,
                                                         const FusionParams& params) {
    const BBox square = central_square(params, bbox, image_width, image_height);
    std::vector<ProjectedPoint> out;
    for (const auto& pp : points)
        if (pp.pixel.u > square.x1 && pp.pixel.u < square.x2 && pp.pixel.v > square.y1 &&
            pp.pixel.v < square.y2)
            out.push_back(pp);
    return out;
}

/// Component-wise median; lower median on even counts. Empty input is the
/// caller's "skip this frame" signal, reported as nullopt.
inline std::optional<Eigen::Vector3d> median_point(const std::vector<ProjectedPoint>& points,
                                                   int min_points) {
    if (static_cast<int>(points.size()) < min_points || points.empty()) return std::nullopt;
    std::vector<double> axis(points.size());
    Eigen::Vector3d med;
    const std::size_t mid = (points.size() - 1) / 2;
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < points.size(); ++i) axis[i] = points[i].p_cam[a];
        std::nth_element(axis.begin(), axis.begin() + mid, axis.end());
        med[a] = axis[mid];
    }
    return med;
}

/// Scan with scan_t nearest to t, if within tolerance. Earlier scan wins
/// equidistant ties. Scans must be time-ordered.
inline const LidarScan* select_scan(const std::vector<LidarScan>& scans, double t,
                                    double tolerance) {
    const LidarScan* best = nullptr;
    double best_dt = std::numeric_limits<double>::infinity();
    for (const LidarScan& s : scans) {
        const double dt = std::abs(s.scan_t - t);
        if (dt < best_dt) {
            best_dt = dt;
            best = &s;
        }
        if (s.scan_t > t && dt >= best_dt) break;  // ordered: only gets worse
    }
    return (best != nullptr && best_dt <= tolerance) ? best : nullptr;
}

}  // namespace vlfuse
