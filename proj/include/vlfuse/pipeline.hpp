#pragma once

#include <vector>

#include "vlfuse/data.hpp"
#include "vlfuse/fusion.hpp"
#include "vlfuse/geometry.hpp"
#include "vlfuse/io.hpp"
#include "vlfuse/sort.hpp"
#include "vlfuse/track3d.hpp"

namespace vlfuse {

struct PipelineParams {
    SortParams sort;
    FusionParams fusion;
    Filter3DParams filter3d;
    bool raw_3d = false;  // emit median points directly instead of filtered states
};

struct PipelineOutput {
    std::vector<TrackRecord2D> tracks2d;
    std::vector<TrackRecord3D> tracks3d;
    long frames = 0;
    long frames_with_scan = 0;
    long skipped_too_few_points = 0;
};

/// 2D tracking -> LiDAR point selection -> per-object 3D estimation over a
/// time-ordered detection stream. Detections sharing a timestamp form one
/// frame.
inline PipelineOutput run_pipeline(const std::vector<Detection2D>& detections,
                                   const std::vector<LidarScan>& scans,
                                   const CalibrationSet& calib, const PipelineParams& params) {
    params.sort.validate();
    params.fusion.validate();
    params.filter3d.validate();
    calib.validate();

    PipelineOutput out;
    SortTracker tracker(params.sort);
    TrackMap3D track_map(params.filter3d);
    const int width = calib.intrinsics.width;
    const int height = calib.intrinsics.height;

    std::size_t i = 0;
    while (i < detections.size()) {
        std::size_t j = i;
        while (j < detections.size() && detections[j].t == detections[i].t) ++j;
        const double frame_t = detections[i].t;
        const std::vector<Detection2D> frame(detections.begin() + i, detections.begin() + j);
        i = j;
        ++out.frames;

        const auto emitted = tracker.step(frame);
        for (const auto& o : emitted) {
            TrackRecord2D rec;
            rec.det.t = frame_t;
            rec.det.bbox = o.bbox;
            rec.det.class_id = o.class_id;
            rec.det.confidence = o.confidence;
            rec.det.source = frame.front().source;
            rec.track_id = o.track_id;
            out.tracks2d.push_back(rec);
        }

        const LidarScan* scan =
            select_scan(scans, frame_t, params.fusion.scan_time_tolerance);
        if (scan != nullptr) {
            ++out.frames_with_scan;
            std::vector<FusedObservation> fused;
            for (const auto& o : emitted) {
                const auto in_box = points_in_bbox(*scan, calib, o.bbox);
                const auto filtered =
                    central_square_filter(in_box, o.bbox, width, height, params.fusion);
                const auto median = median_point(filtered, params.fusion.min_points);
                if (!median) {
                    ++out.skipped_too_few_points;
                    continue;
                }
                if (params.raw_3d) {
                    TrackRecord3D rec;
                    rec.t = frame_t;
                    rec.track_id = o.track_id;
                    rec.class_id = o.class_id;
                    rec.position = *median;
                    out.tracks3d.push_back(rec);
                } else {
                    fused.push_back({o.track_id, o.class_id, *median, frame_t});
                }
            }
            for (const TrackState3D* state : track_map.manage(fused)) {
                TrackRecord3D rec;
                rec.t = frame_t;
                rec.track_id = state->track_id;
                rec.class_id = state->class_id;
                rec.position = state->position();
                rec.velocity = state->velocity();
                out.tracks3d.push_back(rec);
            }
        }
        track_map.remove(tracker.removed_last_step());
    }
    return out;
}

}  // namespace vlfuse
