#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"

namespace vlfuse {

// ---------------------------------------------------------------------------
// Counter-based PRNG. One stream per (seed, source tag, frame); draws are a
// pure function of the stream key and counter, so toggling one noise source
// never disturbs another's sequence. Uniform and normal variates are built
// from the bits directly, keeping outputs identical across platforms up to
// libm rounding.

namespace rng_detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

}  // namespace rng_detail

class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::string_view source_tag, std::uint64_t frame)
        : base_(rng_detail::splitmix64(rng_detail::splitmix64(seed ^ rng_detail::fnv1a(source_tag)) ^
                                       frame)) {}

    std::uint64_t next_u64() { return rng_detail::splitmix64(base_ + (++counter_)); }

    double uniform() {  // [0, 1)
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal(double stddev) {  // Box-Muller; consumes two uniforms
        const double u1 = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
        const double u2 = uniform();
        return stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Scene description. World frame: x right, y down (gravity-aligned),
// z forward; a rig at identity looks straight down +z.

enum class AgentShape { cylinder, box };

struct AgentConfig {
    int class_id = 0;
    AgentShape shape = AgentShape::cylinder;
    double radius = 0.3;   // cylinder
    double height = 1.7;   // cylinder: axis length along world y
    Eigen::Vector3d box_size = {1.8, 1.5, 4.0};  // box: extents along x, y, z
    // Piecewise-constant-velocity body-centre waypoints (time, position).
    std::vector<std::pair<double, Eigen::Vector3d>> waypoints;
};

struct RigWaypoint {
    double t = 0.0;
    RigidTransform pose;  // T_W^{M_S}
};

struct DetectorNoise {
    double jitter_std_px = 0.0;
    double miss_probability = 0.0;
    double false_positive_rate = 0.0;  // expected spawns per frame
    int false_positive_duration = 1;   // frames a phantom persists
    double confidence_lo = 0.5;
    double confidence_hi = 1.0;
};

struct LidarSimConfig {
    double rate_hz = 7.9;
    int points_per_scan = 2000;
    double agent_ray_fraction = 0.5;  // rays aimed at agent bounding cones
    double azimuth_fov_deg = 70.0;
    double elevation_fov_deg = 50.0;
    double angular_noise_deg = 0.0;
    double range_noise_std = 0.0;
    bool has_background = true;
    Eigen::Vector3d background_normal = {0.0, 0.0, -1.0};  // world frame, unit
    double background_d = -8.0;                            // n . x = d
};

struct SceneConfig {
    double duration = 10.0;
    std::uint64_t seed = 1;
    double camera_rate_hz = 23.0;
    double gt_rate_hz = 100.0;
    CalibrationSet calibration;
    std::vector<RigWaypoint> rig;  // empty = static identity
    std::vector<AgentConfig> agents;
    DetectorNoise detector;
    LidarSimConfig lidar;

    void validate() const {
        if (!(duration > 0.0)) throw ConfigError("scene: duration must be positive");
        if (!(camera_rate_hz > 0.0) || !(lidar.rate_hz > 0.0) || !(gt_rate_hz > 0.0))
            throw ConfigError("scene: rates must be positive");
        if (detector.miss_probability < 0.0 || detector.miss_probability > 1.0)
            throw ConfigError("scene: miss probability outside [0,1]");
        if (detector.false_positive_rate < 0.0)
            throw ConfigError("scene: false-positive rate must be >= 0");
        if (detector.false_positive_duration < 1)
            throw ConfigError("scene: false-positive duration must be >= 1 frame");
        if (lidar.points_per_scan < 0) throw ConfigError("scene: points per scan must be >= 0");
        if (lidar.agent_ray_fraction < 0.0 || lidar.agent_ray_fraction > 1.0)
            throw ConfigError("scene: agent ray fraction outside [0,1]");
        if (agents.empty()) throw ConfigError("scene: at least one agent required");
        for (const auto& a : agents) {
            if (a.waypoints.empty()) throw ConfigError("scene: agent needs waypoints");
            for (std::size_t i = 1; i < a.waypoints.size(); ++i)
                if (a.waypoints[i].first <= a.waypoints[i - 1].first)
                    throw ConfigError("scene: agent waypoint times must increase");
            if (a.shape == AgentShape::cylinder && (!(a.radius > 0.0) || !(a.height > 0.0)))
                throw ConfigError("scene: cylinder needs positive radius and height");
        }
        calibration.validate();
    }
};

/// Sensible desk-scale calibration: 640x480 pinhole camera, LiDAR slightly
/// offset below the camera, markers above it.
inline CalibrationSet default_scene_calibration() {
    CalibrationSet c;
    c.intrinsics.fx = c.intrinsics.fy = 400.0;
    c.intrinsics.cx = 320.0;
    c.intrinsics.cy = 240.0;
    c.intrinsics.width = 640;
    c.intrinsics.height = 480;
    c.t_c_l = RigidTransform(Eigen::Quaterniond(Eigen::AngleAxisd(0.02, Eigen::Vector3d::UnitY())),
                             {0.03, 0.09, -0.02}, frames::camera, frames::lidar);
    c.t_c_ms =
        RigidTransform(Eigen::Quaterniond(Eigen::AngleAxisd(0.01, Eigen::Vector3d::UnitZ())),
                       {0.0, -0.06, -0.03}, frames::camera, frames::sensor_markers);
    c.t_c_i = RigidTransform(Eigen::Quaterniond::Identity(), {-0.02, 0.01, 0.0}, frames::camera,
                             frames::imu);
    return c;
}

// ---------------------------------------------------------------------------
// Kinematics.

inline Eigen::Vector3d agent_position(const AgentConfig& agent, double t) {
    const auto& wp = agent.waypoints;
    if (t <= wp.front().first) return wp.front().second;
    if (t >= wp.back().first) return wp.back().second;
    std::size_t hi = 1;
    while (wp[hi].first < t) ++hi;
    const double alpha = (t - wp[hi - 1].first) / (wp[hi].first - wp[hi - 1].first);
    return (1.0 - alpha) * wp[hi - 1].second + alpha * wp[hi].second;
}

inline RigidTransform rig_pose(const SceneConfig& config, double t) {
    if (config.rig.empty())
        return RigidTransform(Eigen::Quaterniond::Identity(), Eigen::Vector3d::Zero(),
                              frames::world, frames::sensor_markers);
    const auto& wp = config.rig;
    if (t <= wp.front().t) return wp.front().pose;
    if (t >= wp.back().t) return wp.back().pose;
    std::size_t hi = 1;
    while (wp[hi].t < t) ++hi;
    const double alpha = (t - wp[hi - 1].t) / (wp[hi].t - wp[hi - 1].t);
    const RigidTransform& a = wp[hi - 1].pose;
    const RigidTransform& b = wp[hi].pose;
    return RigidTransform(a.rotation.slerp(alpha, b.rotation),
                          (1.0 - alpha) * a.translation + alpha * b.translation, a.parent_frame,
                          a.child_frame);
}

/// Camera pose in the world at time t: T_W^C = T_W^{M_S} o inv(T_C^{M_S}).
inline RigidTransform camera_pose(const SceneConfig& config, double t) {
    return compose(rig_pose(config, t), invert(config.calibration.t_c_ms));
}

/// Head-level marker pose of an agent (top of its body), identity rotation.
inline RigidTransform agent_marker_pose(const AgentConfig& agent, double t, Subject subject) {
    Eigen::Vector3d top = agent_position(agent, t);
    const double half_h =
        agent.shape == AgentShape::cylinder ? agent.height / 2.0 : agent.box_size.y() / 2.0;
    top.y() -= half_h;  // world y points down; the top has the smaller y
    return RigidTransform(Eigen::Quaterniond::Identity(), top, frames::world,
                          marker_frame(subject));
}

// ---------------------------------------------------------------------------
// Analytic silhouette bounding boxes.

namespace sim_detail {

inline constexpr double kMinDepth = 0.05;

// Extremes of one image-axis coordinate over a projected 3D circle.
// axis 0: u over (x, z); axis 1: v over (y, z). Assumes the whole circle
// lies in front of the camera.
inline void circle_axis_extremes(const CameraIntrinsics& k, const Eigen::Vector3d& center,
                                 const Eigen::Vector3d& e1, const Eigen::Vector3d& e2, double r,
                                 int axis, double& lo, double& hi) {
    const double f = axis == 0 ? k.fx : k.fy;
    const double pp = axis == 0 ? k.cx : k.cy;
    const double mx = axis == 0 ? center.x() : center.y();
    const double mz = center.z();
    const double e1x = axis == 0 ? e1.x() : e1.y();
    const double e2x = axis == 0 ? e2.x() : e2.y();
    const double e1z = e1.z();
    const double e2z = e2.z();

    auto value = [&](double theta) {
        const double ct = std::cos(theta), st = std::sin(theta);
        const double num = mx + r * (e1x * ct + e2x * st);
        const double den = mz + r * (e1z * ct + e2z * st);
        return f * num / den + pp;
    };

    // d/dtheta (num/den) = 0  <=>  A sin(theta) + B cos(theta) + C = 0
    const double A = e1z * mx - e1x * mz;
    const double B = e2x * mz - e2z * mx;
    const double C = r * (e1z * e2x - e1x * e2z);
    const double amp = std::hypot(A, B);

    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    if (amp < 1e-14) {
        // Degenerate orientation; sample densely instead.
        for (int i = 0; i < 1024; ++i) {
            const double v = value(2.0 * M_PI * i / 1024.0);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        return;
    }
    const double phase = std::atan2(B, A);
    const double s = std::clamp(-C / amp, -1.0, 1.0);
    const double base = std::asin(s);
    for (double theta : {base - phase, M_PI - base - phase}) {
        const double v = value(theta);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
}

inline std::optional<BBox> circle_bbox(const CameraIntrinsics& k, const Eigen::Vector3d& center,
                                       const Eigen::Vector3d& axis_dir, double r) {
    const Eigen::Vector3d e1 = axis_dir.unitOrthogonal();
    const Eigen::Vector3d e2 = axis_dir.cross(e1);
    const double min_depth = center.z() - r * std::hypot(e1.z(), e2.z());
    if (min_depth <= kMinDepth) return std::nullopt;
    BBox b;
    circle_axis_extremes(k, center, e1, e2, r, 0, b.x1, b.x2);
    circle_axis_extremes(k, center, e1, e2, r, 1, b.y1, b.y2);
    return b;
}

inline std::optional<BBox> clip_to_image(const BBox& b, const CameraIntrinsics& k) {
    BBox out{std::max(b.x1, 0.0), std::max(b.y1, 0.0),
             std::min(b.x2, static_cast<double>(k.width)),
             std::min(b.y2, static_cast<double>(k.height))};
    if (!out.valid()) return std::nullopt;
    return out;
}

}  // namespace sim_detail

/// Exact image bounding box of an agent's silhouette at time t, clipped to
/// the image; nullopt when the agent is not visible. Scenes drive the
/// pinhole model directly, so the calibration must carry zero distortion.
inline std::optional<BBox> expected_bbox(const SceneConfig& config, std::size_t agent_index,
                                         double t) {
    if (!config.calibration.intrinsics.distortion.is_zero())
        throw ConfigError("expected_bbox: analytic silhouettes need zero distortion");
    const AgentConfig& agent = config.agents.at(agent_index);
    const CameraIntrinsics& k = config.calibration.intrinsics;
    const RigidTransform t_c_w = invert(camera_pose(config, t));
    const Eigen::Vector3d center_w = agent_position(agent, t);

    BBox box;
    if (agent.shape == AgentShape::cylinder) {
        // The cylinder's image is the convex hull of its two projected cap
        // discs, so the bbox is the envelope of the two cap-circle boxes.
        const Eigen::Vector3d axis_w(0, 1, 0);
        const Eigen::Vector3d axis_c = t_c_w.rotation * axis_w;
        bool first = true;
        for (double sign : {-1.0, 1.0}) {
            const Eigen::Vector3d cap_w = center_w + sign * (agent.height / 2.0) * axis_w;
            const auto cap_box =
                sim_detail::circle_bbox(k, transform_point(t_c_w, cap_w), axis_c, agent.radius);
            if (!cap_box) return std::nullopt;
            if (first) {
                box = *cap_box;
                first = false;
            } else {
                box.x1 = std::min(box.x1, cap_box->x1);
                box.y1 = std::min(box.y1, cap_box->y1);
                box.x2 = std::max(box.x2, cap_box->x2);
                box.y2 = std::max(box.y2, cap_box->y2);
            }
        }
    } else {
        bool first = true;
        for (int dx : {-1, 1})
            for (int dy : {-1, 1})
                for (int dz : {-1, 1}) {
                    const Eigen::Vector3d corner_w =
                        center_w + 0.5 * Eigen::Vector3d(dx * agent.box_size.x(),
                                                         dy * agent.box_size.y(),
                                                         dz * agent.box_size.z());
                    const Eigen::Vector3d corner_c = transform_point(t_c_w, corner_w);
                    if (corner_c.z() <= sim_detail::kMinDepth) return std::nullopt;
                    const Pixel px = project(k, corner_c, false);
                    if (first) {
                        box = BBox{px.u, px.v, px.u, px.v};
                        first = false;
                    } else {
                        box.x1 = std::min(box.x1, px.u);
                        box.y1 = std::min(box.y1, px.v);
                        box.x2 = std::max(box.x2, px.u);
                        box.y2 = std::max(box.y2, px.v);
                    }
                }
    }
    return sim_detail::clip_to_image(box, k);
}

// ---------------------------------------------------------------------------
// Ray casting.

namespace sim_detail {

// Nearest intersection parameter of a ray with an agent body, if any.
inline std::optional<double> ray_hit(const AgentConfig& agent, const Eigen::Vector3d& center,
                                     const Eigen::Vector3d& origin, const Eigen::Vector3d& dir) {
    double best = std::numeric_limits<double>::infinity();
    if (agent.shape == AgentShape::cylinder) {
        const double hh = agent.height / 2.0;
        const double ox = origin.x() - center.x();
        const double oz = origin.z() - center.z();
        const double a = dir.x() * dir.x() + dir.z() * dir.z();
        const double b = 2.0 * (ox * dir.x() + oz * dir.z());
        const double c = ox * ox + oz * oz - agent.radius * agent.radius;
        const double disc = b * b - 4.0 * a * c;
        if (a > 1e-15 && disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (s <= kMinDepth || s >= best) continue;
                const double y = origin.y() + s * dir.y();
                if (std::abs(y - center.y()) <= hh) best = s;
            }
        }
        if (std::abs(dir.y()) > 1e-15) {
            for (double sign : {-1.0, 1.0}) {
                const double s = (center.y() + sign * hh - origin.y()) / dir.y();
                if (s <= kMinDepth || s >= best) continue;
                const double x = origin.x() + s * dir.x() - center.x();
                const double z = origin.z() + s * dir.z() - center.z();
                if (x * x + z * z <= agent.radius * agent.radius) best = s;
            }
        }
    } else {
        // slab test
        double smin = kMinDepth, smax = std::numeric_limits<double>::infinity();
        for (int a = 0; a < 3; ++a) {
            const double half = 0.5 * agent.box_size[a];
            if (std::abs(dir[a]) < 1e-15) {
                if (std::abs(origin[a] - center[a]) > half) return std::nullopt;
                continue;
            }
            double s0 = (center[a] - half - origin[a]) / dir[a];
            double s1 = (center[a] + half - origin[a]) / dir[a];
            if (s0 > s1) std::swap(s0, s1);
            smin = std::max(smin, s0);
            smax = std::min(smax, s1);
            if (smin > smax) return std::nullopt;
        }
        best = smin;
    }
    if (!std::isfinite(best)) return std::nullopt;
    return best;
}

inline Eigen::Vector3d direction_from_angles(double azimuth, double elevation) {
    // z forward, x right, y down; elevation grows downward
    const double ce = std::cos(elevation);
    return {std::sin(azimuth) * ce, std::sin(elevation), std::cos(azimuth) * ce};
}

}  // namespace sim_detail

// ---------------------------------------------------------------------------
// Simulation.

struct SimulationProducts {
    std::vector<Detection2D> detections;
    std::vector<LidarScan> scans;
    std::vector<GroundTruthPose> poses;
    CalibrationSet calibration;
};

inline SimulationProducts simulate(const SceneConfig& config) {
    config.validate();
    SimulationProducts out;
    out.calibration = config.calibration;
    const CameraIntrinsics& k = config.calibration.intrinsics;

    // --- detections -------------------------------------------------------
    struct Phantom {
        BBox box;
        int class_id = 0;
        double confidence = 0.0;
        int frames_left = 0;
    };
    std::vector<Phantom> phantoms;
    const long n_frames = static_cast<long>(std::floor(config.duration * config.camera_rate_hz)) + 1;
    for (long f = 0; f < n_frames; ++f) {
        const double t = static_cast<double>(f) / config.camera_rate_hz;
        StreamRng miss_rng(config.seed, "detector_miss", static_cast<std::uint64_t>(f));
        StreamRng jitter_rng(config.seed, "detector_jitter", static_cast<std::uint64_t>(f));
        StreamRng conf_rng(config.seed, "detector_conf", static_cast<std::uint64_t>(f));
        StreamRng fp_rng(config.seed, "detector_fp", static_cast<std::uint64_t>(f));

        for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
            // Draw per agent regardless of visibility so that one agent's
            // occlusions never shift another's noise sequence.
            const double miss_draw = miss_rng.uniform();
            const double j1 = jitter_rng.normal(config.detector.jitter_std_px);
            const double j2 = jitter_rng.normal(config.detector.jitter_std_px);
            const double j3 = jitter_rng.normal(config.detector.jitter_std_px);
            const double j4 = jitter_rng.normal(config.detector.jitter_std_px);
            const double conf =
                conf_rng.uniform(config.detector.confidence_lo, config.detector.confidence_hi);

            const auto box = expected_bbox(config, ai, t);
            if (!box) continue;
            if (miss_draw < config.detector.miss_probability) continue;
            const auto jittered = sim_detail::clip_to_image(
                BBox{box->x1 + j1, box->y1 + j2, box->x2 + j3, box->y2 + j4}, k);
            if (!jittered) continue;
            Detection2D d;
            d.t = t;
            d.bbox = *jittered;
            d.class_id = config.agents[ai].class_id;
            d.confidence = conf;
            out.detections.push_back(d);
        }

        // Phantom false positives persist for a configured number of frames.
        const int spawns = fp_rng.poisson(config.detector.false_positive_rate);
        for (int s = 0; s < spawns; ++s) {
            Phantom ph;
            const double w = fp_rng.uniform(20.0, 0.25 * k.width);
            const double h = fp_rng.uniform(20.0, 0.25 * k.height);
            const double cx = fp_rng.uniform(w / 2, k.width - w / 2);
            const double cy = fp_rng.uniform(h / 2, k.height - h / 2);
            ph.box = BBox{cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
            ph.class_id = fp_rng.uniform() < 0.5 ? 0 : 2;
            ph.confidence =
                fp_rng.uniform(config.detector.confidence_lo, config.detector.confidence_hi);
            ph.frames_left = config.detector.false_positive_duration;
            phantoms.push_back(ph);
        }
        for (auto& ph : phantoms) {
            Detection2D d;
            d.t = t;
            d.bbox = ph.box;
            d.class_id = ph.class_id;
            d.confidence = ph.confidence;
            out.detections.push_back(d);
            --ph.frames_left;
        }
        phantoms.erase(std::remove_if(phantoms.begin(), phantoms.end(),
                                      [](const Phantom& p) { return p.frames_left <= 0; }),
                       phantoms.end());
    }

    // --- LiDAR scans --------------------------------------------------------
    const double scan_period = 1.0 / config.lidar.rate_hz;
    const long n_scans = static_cast<long>(std::floor(config.duration * config.lidar.rate_hz)) + 1;
    const double az_half = 0.5 * config.lidar.azimuth_fov_deg * M_PI / 180.0;
    const double el_half = 0.5 * config.lidar.elevation_fov_deg * M_PI / 180.0;
    const double ang_noise = config.lidar.angular_noise_deg * M_PI / 180.0;
    for (long si = 0; si < n_scans; ++si) {
        const double t0 = static_cast<double>(si) * scan_period;
        StreamRng dir_rng(config.seed, "lidar_dir", static_cast<std::uint64_t>(si));
        StreamRng ang_rng(config.seed, "lidar_ang", static_cast<std::uint64_t>(si));
        StreamRng range_rng(config.seed, "lidar_range", static_cast<std::uint64_t>(si));

        const RigidTransform t_w_l =
            compose(camera_pose(config, t0), config.calibration.t_c_l);  // LiDAR -> world
        const Eigen::Vector3d origin = t_w_l.translation;
        std::vector<Eigen::Vector3d> agent_centers;
        for (const auto& a : config.agents) agent_centers.push_back(agent_position(a, t0));

        // Ray budget: a background share plus an equal share per agent cone.
        const int n_agent_total = static_cast<int>(
            std::lround(config.lidar.points_per_scan * config.lidar.agent_ray_fraction));
        const int n_background = config.lidar.points_per_scan - n_agent_total;
        const int per_agent =
            config.agents.empty() ? 0 : n_agent_total / static_cast<int>(config.agents.size());

        struct RaySpec {
            double az, el;
        };
        std::vector<RaySpec> rays;
        rays.reserve(static_cast<std::size_t>(config.lidar.points_per_scan));
        for (int i = 0; i < n_background; ++i)
            rays.push_back({dir_rng.uniform(-az_half, az_half), dir_rng.uniform(-el_half, el_half)});
        for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
            const AgentConfig& a = config.agents[ai];
            const Eigen::Vector3d center_l =
                transform_point(invert(t_w_l), agent_centers[ai]);
            const double dist = center_l.norm();
            const double bound = a.shape == AgentShape::cylinder
                                     ? std::hypot(a.radius, a.height / 2.0)
                                     : 0.5 * a.box_size.norm();
            if (center_l.z() <= sim_detail::kMinDepth || dist <= bound) {
                // Not in front of the LiDAR; spend the rays on background.
                for (int i = 0; i < per_agent; ++i)
                    rays.push_back(
                        {dir_rng.uniform(-az_half, az_half), dir_rng.uniform(-el_half, el_half)});
                continue;
            }
            const double az_c = std::atan2(center_l.x(), center_l.z());
            const double el_c = std::atan2(center_l.y(), std::hypot(center_l.x(), center_l.z()));
            const double half = 1.2 * std::asin(std::min(1.0, bound / dist));
            for (int i = 0; i < per_agent; ++i) {
                const double az = std::clamp(az_c + dir_rng.uniform(-half, half), -az_half, az_half);
                const double el = std::clamp(el_c + dir_rng.uniform(-half, half), -el_half, el_half);
                rays.push_back({az, el});
            }
        }

        LidarScan scan;
        scan.scan_t = t0;
        const std::size_t n_rays = rays.size();
        for (std::size_t ri = 0; ri < n_rays; ++ri) {
            const double az = rays[ri].az + ang_rng.normal(ang_noise);
            const double el = rays[ri].el + ang_rng.normal(ang_noise);
            const double range_noise = range_rng.normal(config.lidar.range_noise_std);

            const Eigen::Vector3d dir_l = sim_detail::direction_from_angles(az, el);
            const Eigen::Vector3d dir_w = t_w_l.rotation * dir_l;
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t ai = 0; ai < config.agents.size(); ++ai) {
                const auto hit = sim_detail::ray_hit(config.agents[ai], agent_centers[ai], origin,
                                                     dir_w);
                if (hit && *hit < best) best = *hit;
            }
            if (config.lidar.has_background) {
                const Eigen::Vector3d n = config.lidar.background_normal;
                const double denom = n.dot(dir_w);
                if (std::abs(denom) > 1e-12) {
                    const double s = (config.lidar.background_d - n.dot(origin)) / denom;
                    if (s > sim_detail::kMinDepth && s < best) best = s;
                }
            }
            if (!std::isfinite(best)) continue;  // no return
            const double range = best + range_noise;
            if (range <= 0.0) continue;
            const Eigen::Vector3d p_l = range * dir_l;
            LidarPoint p;
            p.x = static_cast<float>(p_l.x());
            p.y = static_cast<float>(p_l.y());
            p.z = static_cast<float>(p_l.z());
            p.t = t0 + 0.8 * scan_period * static_cast<double>(ri) / std::max<std::size_t>(1, n_rays);
            scan.points.push_back(p);
        }
        out.scans.push_back(std::move(scan));
    }

    // --- ground-truth poses -------------------------------------------------
    const long n_gt = static_cast<long>(std::floor(config.duration * config.gt_rate_hz)) + 1;
    const Subject helmet_subjects[2] = {Subject::helmet_1, Subject::helmet_2};
    for (long gi = 0; gi < n_gt; ++gi) {
        const double t = static_cast<double>(gi) / config.gt_rate_hz;
        GroundTruthPose rig;
        rig.t = t;
        rig.subject = Subject::sensor_rig;
        rig.pose = rig_pose(config, t);
        out.poses.push_back(rig);
        for (std::size_t ai = 0; ai < config.agents.size() && ai < 2; ++ai) {
            GroundTruthPose g;
            g.t = t;
            g.subject = helmet_subjects[ai];
            g.pose = agent_marker_pose(config.agents[ai], t, g.subject);
            out.poses.push_back(g);
        }
    }
    return out;
}

}  // namespace vlfuse
