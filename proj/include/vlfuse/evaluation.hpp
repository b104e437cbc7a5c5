#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "vlfuse/assignment.hpp"
#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"
#include "vlfuse/io.hpp"
#include "vlfuse/sort.hpp"

namespace vlfuse {

struct PrCell {
    double iou_threshold = 0.0;
    double confidence_threshold = 0.0;
    long tp = 0, fp = 0, fn = 0;

    double precision() const { return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp); }
    double recall() const { return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn); }
};

struct FrameCounts {
    long tp = 0, fp = 0, fn = 0;
};

/// Detections of one stream sharing a timestamp, paired with the other
/// stream's detections at the same instant.
struct FramePair {
    double t = 0.0;
    std::vector<Detection2D> reference;
    std::vector<Detection2D> candidate;
};

/// Pairs two time-ordered streams frame-by-frame over the union of their
/// timestamps; a stream missing a frame contributes an empty list.
inline std::vector<FramePair> pair_frames(const std::vector<Detection2D>& reference,
                                          const std::vector<Detection2D>& candidate) {
    std::map<double, FramePair> by_t;
    for (const auto& d : reference) {
        auto& f = by_t[d.t];
        f.t = d.t;
        f.reference.push_back(d);
    }
    for (const auto& d : candidate) {
        auto& f = by_t[d.t];
        f.t = d.t;
        f.candidate.push_back(d);
    }
    std::vector<FramePair> out;
    out.reserve(by_t.size());
    for (auto& [t, f] : by_t) out.push_back(std::move(f));
    return out;
}

namespace eval_detail {

// Matched-pair scores under the optimal class-gated matching. The matching
// itself is threshold-independent; thresholds only reclassify pairs, which
// makes recall exactly monotone in the IoU threshold.
inline std::vector<double> matched_scores(const std::vector<Detection2D>& reference,
                                          const std::vector<Detection2D>& candidate) {
    std::vector<double> scores_out;
    if (reference.empty() || candidate.empty()) return scores_out;
    std::vector<std::vector<double>> scores(candidate.size(),
                                            std::vector<double>(reference.size(), 0.0));
    for (std::size_t i = 0; i < candidate.size(); ++i)
        for (std::size_t j = 0; j < reference.size(); ++j)
            if (candidate[i].class_id == reference[j].class_id)
                scores[i][j] = iou(candidate[i].bbox, reference[j].bbox);
    const AssignmentResult res = assign_max_score(scores);
    for (std::size_t i = 0; i < candidate.size(); ++i)
        if (res.row_to_col[i] >= 0) scores_out.push_back(scores[i][res.row_to_col[i]]);
    return scores_out;
}

}  // namespace eval_detail

/// TP/FP/FN counts of one frame at one IoU threshold: Hungarian matching
/// maximizing total IoU (class-gated), pairs at or above the threshold
/// count as true positives.
inline FrameCounts match_frame(const std::vector<Detection2D>& reference,
                               const std::vector<Detection2D>& candidate, double iou_threshold) {
    const auto scores = eval_detail::matched_scores(reference, candidate);
    FrameCounts c;
    for (double s : scores)
        if (s >= iou_threshold) ++c.tp;
    c.fp = static_cast<long>(candidate.size()) - c.tp;
    c.fn = static_cast<long>(reference.size()) - c.tp;
    return c;
}

inline std::vector<double> default_iou_grid() {
    std::vector<double> g;
    for (int i = 10; i <= 18; ++i) g.push_back(i * 0.05);
    return g;  // 0.50 .. 0.90
}

inline std::vector<double> default_confidence_grid() {
    std::vector<double> g;
    for (int i = 6; i <= 18; ++i) g.push_back(i * 0.05);
    return g;  // 0.30 .. 0.90
}

struct PrTable {
    std::vector<double> iou_grid;
    std::vector<double> confidence_grid;
    std::vector<PrCell> cells;  // confidence-major, IoU-minor

    const PrCell& cell(std::size_t conf_idx, std::size_t iou_idx) const {
        return cells[conf_idx * iou_grid.size() + iou_idx];
    }

    std::size_t index_of(const std::vector<double>& grid, double value) const {
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (std::abs(grid[i] - value) < 1e-9) return i;
        throw ConfigError("pr table: threshold " + format_double(value) + " not in grid");
    }
};

/// Accumulates match counts over all frames for every (confidence, IoU)
/// cell. Candidates below the confidence threshold are dropped before
/// matching; the reference stream is used as given (pre-filter it once if
/// the protocol calls for that).
inline PrTable pr_sweep(const std::vector<FramePair>& frames,
                        const std::vector<double>& iou_grid,
                        const std::vector<double>& confidence_grid) {
    PrTable table;
    table.iou_grid = iou_grid;
    table.confidence_grid = confidence_grid;
    table.cells.assign(iou_grid.size() * confidence_grid.size(), PrCell{});
    for (std::size_t ci = 0; ci < confidence_grid.size(); ++ci) {
        const double conf = confidence_grid[ci];
        for (std::size_t ii = 0; ii < iou_grid.size(); ++ii) {
            PrCell& cell = table.cells[ci * iou_grid.size() + ii];
            cell.confidence_threshold = conf;
            cell.iou_threshold = iou_grid[ii];
        }
        for (const FramePair& frame : frames) {
            std::vector<Detection2D> kept;
            for (const auto& d : frame.candidate)
                if (d.confidence >= conf) kept.push_back(d);
            const auto scores = eval_detail::matched_scores(frame.reference, kept);
            for (std::size_t ii = 0; ii < iou_grid.size(); ++ii) {
                PrCell& cell = table.cells[ci * iou_grid.size() + ii];
                long tp = 0;
                for (double s : scores)
                    if (s >= iou_grid[ii]) ++tp;
                cell.tp += tp;
                cell.fp += static_cast<long>(kept.size()) - tp;
                cell.fn += static_cast<long>(frame.reference.size()) - tp;
            }
        }
    }
    return table;
}

struct PrSweepPair {
    PrTable pure;
    PrTable tracked;
};

/// Runs the sweep twice: on raw candidate detections and on the SORT
/// output of the candidate stream. The tracker is re-run per confidence
/// threshold, since the threshold decides which detections it ever sees.
inline PrSweepPair pair_sweep_with_tracking(const std::vector<FramePair>& frames,
                                            const SortParams& tracker_params,
                                            const std::vector<double>& iou_grid,
                                            const std::vector<double>& confidence_grid) {
    PrSweepPair out;
    out.pure = pr_sweep(frames, iou_grid, confidence_grid);

    out.tracked.iou_grid = iou_grid;
    out.tracked.confidence_grid = confidence_grid;
    out.tracked.cells.assign(iou_grid.size() * confidence_grid.size(), PrCell{});
    for (std::size_t ci = 0; ci < confidence_grid.size(); ++ci) {
        const double conf = confidence_grid[ci];
        for (std::size_t ii = 0; ii < iou_grid.size(); ++ii) {
            PrCell& cell = out.tracked.cells[ci * iou_grid.size() + ii];
            cell.confidence_threshold = conf;
            cell.iou_threshold = iou_grid[ii];
        }
        SortTracker tracker(tracker_params);
        for (const FramePair& frame : frames) {
            std::vector<Detection2D> kept;
            for (const auto& d : frame.candidate)
                if (d.confidence >= conf) kept.push_back(d);
            std::vector<Detection2D> tracked;
            for (const auto& o : tracker.step(kept)) {
                Detection2D d;
                d.t = frame.t;
                d.bbox = o.bbox;
                d.class_id = o.class_id;
                d.confidence = o.confidence;
                tracked.push_back(d);
            }
            const auto scores = eval_detail::matched_scores(frame.reference, tracked);
            for (std::size_t ii = 0; ii < iou_grid.size(); ++ii) {
                PrCell& cell = out.tracked.cells[ci * iou_grid.size() + ii];
                long tp = 0;
                for (double s : scores)
                    if (s >= iou_grid[ii]) ++tp;
                cell.tp += tp;
                cell.fp += static_cast<long>(tracked.size()) - tp;
                cell.fn += static_cast<long>(frame.reference.size()) - tp;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// 3D position accuracy.

struct ErrorReport {
    double mae_x = 0.0, mae_y = 0.0, mae_z = 0.0, mae_xz = 0.0;
    double rmse_x = 0.0, rmse_y = 0.0, rmse_z = 0.0, rmse_xz = 0.0;
    long samples = 0;
    long unassociated = 0;  // estimates without a ground-truth partner
};

/// Per-axis MAE/RMSE between estimated positions and the motion-capture
/// ground truth mapped into the camera frame via
/// T_C^{M_S} o inv(T_W^{M_S}(t)) o T_W^{M_i}(t).
///
/// Estimates bind to a person by helmet class id (1 or 2) when the ground
/// truth carries that subject; otherwise by nearest neighbour within 2 m.
inline ErrorReport position_errors(const std::vector<TrackRecord3D>& estimates,
                                   const std::vector<GroundTruthPose>& gt,
                                   const CalibrationSet& calib) {
    const PoseSet poses = split_by_subject(gt);
    if (poses.rig.empty())
        throw OutOfRangeError("position_errors: ground truth has no sensor_rig poses");
    std::vector<Subject> people;
    if (!poses.helmet1.empty()) people.push_back(Subject::helmet_1);
    if (!poses.helmet2.empty()) people.push_back(Subject::helmet_2);
    if (people.empty())
        throw OutOfRangeError("position_errors: ground truth has no helmet poses");

    constexpr double kGate = 2.0;  // metres
    double sum_ax = 0, sum_ay = 0, sum_az = 0, sum_axz = 0;
    double sum_sx = 0, sum_sy = 0, sum_sz = 0, sum_sxz = 0;
    ErrorReport rep;

    auto person_in_camera = [&](Subject s, double t) {
        const RigidTransform t_w_ms = interpolate_pose(poses.rig, t);
        const RigidTransform t_w_mi = interpolate_pose(poses.track(s), t);
        const RigidTransform chain = compose(calib.t_c_ms, compose(invert(t_w_ms), t_w_mi));
        return transform_point(chain, Eigen::Vector3d::Zero());
    };

    for (const TrackRecord3D& est : estimates) {
        Eigen::Vector3d gt_cam;
        bool bound = false;
        const bool helmet_class = est.class_id == 1 || est.class_id == 2;
        try {
            if (helmet_class) {
                const Subject s =
                    est.class_id == 1 ? Subject::helmet_1 : Subject::helmet_2;
                if (!poses.track(s).empty()) {
                    gt_cam = person_in_camera(s, est.t);
                    bound = true;
                }
            }
            if (!bound) {
                double best = std::numeric_limits<double>::infinity();
                for (Subject s : people) {
                    const Eigen::Vector3d p = person_in_camera(s, est.t);
                    const double dist = (p - est.position).norm();
                    if (dist < best) {
                        best = dist;
                        gt_cam = p;
                    }
                }
                bound = best <= kGate;
            }
        } catch (const OutOfRangeError&) {
            bound = false;  // estimate outside the ground-truth span
        }
        if (!bound) {
            ++rep.unassociated;
            continue;
        }
        const Eigen::Vector3d d = est.position - gt_cam;
        const double exz = std::hypot(d.x(), d.z());
        sum_ax += std::abs(d.x());
        sum_ay += std::abs(d.y());
        sum_az += std::abs(d.z());
        sum_axz += exz;
        sum_sx += d.x() * d.x();
        sum_sy += d.y() * d.y();
        sum_sz += d.z() * d.z();
        sum_sxz += exz * exz;
        ++rep.samples;
    }
    if (rep.samples == 0)
        throw OutOfRangeError("position_errors: estimate and ground-truth streams do not overlap");
    const double n = static_cast<double>(rep.samples);
    rep.mae_x = sum_ax / n;
    rep.mae_y = sum_ay / n;
    rep.mae_z = sum_az / n;
    rep.mae_xz = sum_axz / n;
    rep.rmse_x = std::sqrt(sum_sx / n);
    rep.rmse_y = std::sqrt(sum_sy / n);
    rep.rmse_z = std::sqrt(sum_sz / n);
    rep.rmse_xz = std::sqrt(sum_sxz / n);
    return rep;
}

// ---------------------------------------------------------------------------
// Report rendering: aligned text tables and CSV.

namespace eval_detail {

inline std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

inline void append_padded(std::string& out, const std::string& s, std::size_t width) {
    out += s;
    if (s.size() < width) out.append(width - s.size(), ' ');
}

inline void append_metric_row(std::string& out, const std::string& group,
                              const std::string& metric, const std::vector<double>& values) {
    append_padded(out, group, 17);
    append_padded(out, metric, 11);
    for (double v : values) append_padded(out, fixed3(v), 7);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
}

}  // namespace eval_detail

/// Table of precision/recall against IoU thresholds at one confidence
/// threshold, one row pair per group (pure detection, tracked).
inline std::string render_pr_iou_table(const PrSweepPair& sweep, double confidence_threshold,
                                       const std::string& title) {
    const std::size_t ci = sweep.pure.index_of(sweep.pure.confidence_grid, confidence_threshold);
    std::string out = title + ": IoU thresholds @ confidence threshold = " +
                      eval_detail::fixed3(confidence_threshold).substr(0, 4) + "\n";
    eval_detail::append_padded(out, "", 28);
    for (double g : sweep.pure.iou_grid)
        eval_detail::append_padded(out, eval_detail::fixed3(g).substr(0, 4), 7);
    while (out.back() == ' ') out.pop_back();
    out += '\n';
    const auto row = [&](const PrTable& table, const char* group, bool precision) {
        std::vector<double> values;
        for (std::size_t ii = 0; ii < table.iou_grid.size(); ++ii) {
            const PrCell& c = table.cell(ci, ii);
            values.push_back(precision ? c.precision() : c.recall());
        }
        eval_detail::append_metric_row(out, precision ? group : "",
                                       precision ? "Precision" : "Recall", values);
    };
    row(sweep.pure, "Pure Detection", true);
    row(sweep.pure, "Pure Detection", false);
    row(sweep.tracked, "Tracked w/ SORT", true);
    row(sweep.tracked, "Tracked w/ SORT", false);
    return out;
}

/// Table of precision/recall against confidence thresholds at one IoU
/// threshold.
inline std::string render_pr_confidence_table(const PrSweepPair& sweep, double iou_threshold,
                                              const std::string& title) {
    const std::size_t ii = sweep.pure.index_of(sweep.pure.iou_grid, iou_threshold);
    std::string out = title + ": confidence thresholds @ IoU threshold = " +
                      eval_detail::fixed3(iou_threshold).substr(0, 4) + "\n";
    eval_detail::append_padded(out, "", 28);
    for (double g : sweep.pure.confidence_grid)
        eval_detail::append_padded(out, eval_detail::fixed3(g).substr(0, 4), 7);
    while (out.back() == ' ') out.pop_back();
    out += '\n';
    const auto row = [&](const PrTable& table, const char* group, bool precision) {
        std::vector<double> values;
        for (std::size_t c = 0; c < table.confidence_grid.size(); ++c) {
            const PrCell& cell = table.cell(c, ii);
            values.push_back(precision ? cell.precision() : cell.recall());
        }
        eval_detail::append_metric_row(out, precision ? group : "",
                                       precision ? "Precision" : "Recall", values);
    };
    row(sweep.pure, "Pure Detection", true);
    row(sweep.pure, "Pure Detection", false);
    row(sweep.tracked, "Tracked w/ SORT", true);
    row(sweep.tracked, "Tracked w/ SORT", false);
    return out;
}

inline std::string pr_tables_csv(const PrSweepPair& sweep) {
    std::string out = "group,iou_threshold,confidence_threshold,tp,fp,fn,precision,recall\n";
    const auto rows = [&](const PrTable& t, const char* group) {
        for (const PrCell& c : t.cells) {
            out += group;
            out += ',';
            out += format_double(c.iou_threshold);
            out += ',';
            out += format_double(c.confidence_threshold);
            out += ',';
            out += std::to_string(c.tp);
            out += ',';
            out += std::to_string(c.fp);
            out += ',';
            out += std::to_string(c.fn);
            out += ',';
            out += format_double(c.precision());
            out += ',';
            out += format_double(c.recall());
            out += '\n';
        }
    };
    rows(sweep.pure, "pure");
    rows(sweep.tracked, "tracked");
    return out;
}

/// Row/column layout of the 3D accuracy table: column groups are sources
/// (each with MAE and RMSE columns), row groups hold X/Y/Z/XZ rows.
struct ErrorTableLayout {
    std::string title;
    std::vector<std::string> column_groups;
    std::vector<std::pair<std::string, std::vector<ErrorReport>>> row_groups;
};

inline std::string render_error_table(const ErrorTableLayout& layout) {
    std::string out = layout.title + "\n";
    eval_detail::append_padded(out, "", 24);
    for (const auto& g : layout.column_groups) eval_detail::append_padded(out, g, 18);
    while (out.back() == ' ') out.pop_back();
    out += '\n';
    eval_detail::append_padded(out, "", 24);
    for (std::size_t i = 0; i < layout.column_groups.size(); ++i) {
        eval_detail::append_padded(out, "MAE", 9);
        eval_detail::append_padded(out, "RMSE", 9);
    }
    while (out.back() == ' ') out.pop_back();
    out += '\n';
    for (const auto& [group, reports] : layout.row_groups) {
        if (reports.size() != layout.column_groups.size())
            throw ConfigError("error table: one report needed per column group");
        const char* axes[4] = {"X", "Y", "Z", "XZ"};
        for (int a = 0; a < 4; ++a) {
            eval_detail::append_padded(out, a == 0 ? group : "", 20);
            eval_detail::append_padded(out, axes[a], 4);
            for (const ErrorReport& r : reports) {
                const double mae = a == 0 ? r.mae_x : a == 1 ? r.mae_y : a == 2 ? r.mae_z : r.mae_xz;
                const double rmse =
                    a == 0 ? r.rmse_x : a == 1 ? r.rmse_y : a == 2 ? r.rmse_z : r.rmse_xz;
                eval_detail::append_padded(out, eval_detail::fixed3(mae), 9);
                eval_detail::append_padded(out, eval_detail::fixed3(rmse), 9);
            }
            while (out.back() == ' ') out.pop_back();
            out += '\n';
        }
    }
    return out;
}

inline std::string error_report_csv(const ErrorReport& r) {
    std::string out = "axis,mae,rmse,samples\n";
    const auto row = [&](const char* axis, double mae, double rmse) {
        out += axis;
        out += ',';
        out += format_double(mae);
        out += ',';
        out += format_double(rmse);
        out += ',';
        out += std::to_string(r.samples);
        out += '\n';
    };
    row("X", r.mae_x, r.rmse_x);
    row("Y", r.mae_y, r.rmse_y);
    row("Z", r.mae_z, r.rmse_z);
    row("XZ", r.mae_xz, r.rmse_xz);
    return out;
}

}  // namespace vlfuse
