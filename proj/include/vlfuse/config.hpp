#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "vlfuse/error.hpp"
#include "vlfuse/io.hpp"
#include "vlfuse/pipeline.hpp"
#include "vlfuse/simulator.hpp"

namespace vlfuse {

namespace config_detail {

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    return j;
}

inline Eigen::Vector3d vec3(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3)
        throw ConfigError(std::string(what) + " needs 3 values");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace config_detail

// ---------------------------------------------------------------------------
// Pipeline configuration.

struct PipelineConfig {
    std::string detections_path;
    std::string scans_path;
    std::string poses_path;  // optional; consumed by the evaluation commands
    std::string calibration_path;
    std::string output_dir = ".";
    DetectionSource source = DetectionSource::rgb;
    bool raw_3d = false;
    std::optional<SortParams> sort;  // default chosen by source when absent
    FusionParams fusion;
    Filter3DParams filter3d;

    SortParams sort_params() const {
        if (sort) return *sort;
        return source == DetectionSource::rgb ? SortParams::rgb_defaults()
                                              : SortParams::event_defaults();
    }

    void validate_paths() const {
        for (const auto& [name, path] :
             {std::pair<const char*, const std::string*>{"detections", &detections_path},
              {"scans", &scans_path},
              {"calibration", &calibration_path}}) {
            if (path->empty()) throw ConfigError(std::string("pipeline config: missing ") + name);
            if (!std::filesystem::exists(*path))
                throw ConfigError(std::string("pipeline config: ") + name + " file '" + *path +
                                  "' does not exist");
        }
        if (!poses_path.empty() && !std::filesystem::exists(poses_path))
            throw ConfigError("pipeline config: poses file '" + poses_path + "' does not exist");
    }
};

inline SortParams sort_params_from_json(const nlohmann::json& j, SortParams base) {
    base.max_age = j.value("max_age", base.max_age);
    base.max_unmatched_predictions =
        j.value("max_unmatched_predictions", base.max_unmatched_predictions);
    base.min_hits = j.value("min_hits", base.min_hits);
    base.min_assoc_for_prediction =
        j.value("min_assoc_for_prediction", base.min_assoc_for_prediction);
    base.iou_threshold = j.value("iou_threshold", base.iou_threshold);
    base.obs_noise_uv = j.value("obs_noise_uv", base.obs_noise_uv);
    base.obs_noise_s = j.value("obs_noise_s", base.obs_noise_s);
    base.obs_noise_r = j.value("obs_noise_r", base.obs_noise_r);
    base.process_noise_uvs = j.value("process_noise_uvs", base.process_noise_uvs);
    base.process_noise_r = j.value("process_noise_r", base.process_noise_r);
    base.process_noise_duv = j.value("process_noise_duv", base.process_noise_duv);
    base.process_noise_ds = j.value("process_noise_ds", base.process_noise_ds);
    base.validate();
    return base;
}

inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
    PipelineConfig c;
    c.detections_path = j.value("detections", "");
    c.scans_path = j.value("scans", "");
    c.poses_path = j.value("poses", "");
    c.calibration_path = j.value("calibration", "");
    c.output_dir = j.value("output_dir", ".");
    const std::string source = j.value("source", "rgb");
    if (source == "rgb")
        c.source = DetectionSource::rgb;
    else if (source == "event")
        c.source = DetectionSource::event;
    else
        throw ConfigError("pipeline config: source must be 'rgb' or 'event'");
    c.raw_3d = j.value("raw_3d", false);
    if (j.contains("sort")) {
        const SortParams base = c.source == DetectionSource::rgb ? SortParams::rgb_defaults()
                                                                 : SortParams::event_defaults();
        c.sort = sort_params_from_json(j.at("sort"), base);
    }
    if (j.contains("fusion")) {
        const auto& jf = j.at("fusion");
        c.fusion.k_min = jf.value("k_min", c.fusion.k_min);
        c.fusion.k_max = jf.value("k_max", c.fusion.k_max);
        c.fusion.min_points = jf.value("min_points", c.fusion.min_points);
        c.fusion.scan_time_tolerance =
            jf.value("scan_time_tolerance", c.fusion.scan_time_tolerance);
        c.fusion.validate();
    }
    if (j.contains("filter3d")) {
        const auto& jf = j.at("filter3d");
        c.filter3d.accel_std = jf.value("accel_std", c.filter3d.accel_std);
        c.filter3d.obs_noise_std = jf.value("obs_noise_std", c.filter3d.obs_noise_std);
        c.filter3d.init_velocity_var =
            jf.value("init_velocity_var", c.filter3d.init_velocity_var);
        c.filter3d.validate();
    }
    return c;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    return pipeline_config_from_json(config_detail::load_json(path));
}

// ---------------------------------------------------------------------------
// Scene configuration.

inline SceneConfig scene_config_from_json(const nlohmann::json& j) {
    SceneConfig c;
    c.calibration = default_scene_calibration();
    c.duration = j.value("duration", c.duration);
    c.seed = j.value("seed", c.seed);
    c.camera_rate_hz = j.value("camera_rate_hz", c.camera_rate_hz);
    c.gt_rate_hz = j.value("gt_rate_hz", c.gt_rate_hz);
    if (j.contains("calibration")) c.calibration = calibration_from_json(j.at("calibration"));
    if (j.contains("rig")) {
        for (const auto& jw : j.at("rig")) {
            RigWaypoint w;
            w.t = jw.at("t").get<double>();
            const auto tr = config_detail::vec3(jw.at("translation"), "rig waypoint translation");
            const auto& q = jw.at("quaternion");
            if (q.size() != 4) throw ConfigError("rig waypoint quaternion needs 4 values");
            w.pose = RigidTransform(
                Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                                   q[3].get<double>()),
                tr, frames::world, frames::sensor_markers);
            c.rig.push_back(std::move(w));
        }
    }
    if (!j.contains("agents")) throw ConfigError("scene config: missing 'agents'");
    for (const auto& ja : j.at("agents")) {
        AgentConfig a;
        a.class_id = ja.value("class_id", 0);
        const std::string shape = ja.value("shape", "cylinder");
        if (shape == "cylinder")
            a.shape = AgentShape::cylinder;
        else if (shape == "box")
            a.shape = AgentShape::box;
        else
            throw ConfigError("scene config: agent shape must be 'cylinder' or 'box'");
        a.radius = ja.value("radius", a.radius);
        a.height = ja.value("height", a.height);
        if (ja.contains("box_size")) a.box_size = config_detail::vec3(ja.at("box_size"), "box_size");
        if (!ja.contains("waypoints")) throw ConfigError("scene config: agent missing waypoints");
        for (const auto& jw : ja.at("waypoints"))
            a.waypoints.emplace_back(jw.at("t").get<double>(),
                                     config_detail::vec3(jw.at("position"), "waypoint position"));
        c.agents.push_back(std::move(a));
    }
    if (j.contains("detector")) {
        const auto& jd = j.at("detector");
        c.detector.jitter_std_px = jd.value("jitter_std_px", 0.0);
        c.detector.miss_probability = jd.value("miss_probability", 0.0);
        c.detector.false_positive_rate = jd.value("false_positive_rate", 0.0);
        c.detector.false_positive_duration =
            jd.value("false_positive_duration", c.detector.false_positive_duration);
        if (jd.contains("confidence_range")) {
            const auto& jr = jd.at("confidence_range");
            if (jr.size() != 2) throw ConfigError("scene config: confidence_range needs 2 values");
            c.detector.confidence_lo = jr[0].get<double>();
            c.detector.confidence_hi = jr[1].get<double>();
        }
    }
    if (j.contains("lidar")) {
        const auto& jl = j.at("lidar");
        c.lidar.rate_hz = jl.value("rate_hz", c.lidar.rate_hz);
        c.lidar.points_per_scan = jl.value("points_per_scan", c.lidar.points_per_scan);
        c.lidar.agent_ray_fraction = jl.value("agent_ray_fraction", c.lidar.agent_ray_fraction);
        c.lidar.azimuth_fov_deg = jl.value("azimuth_fov_deg", c.lidar.azimuth_fov_deg);
        c.lidar.elevation_fov_deg = jl.value("elevation_fov_deg", c.lidar.elevation_fov_deg);
        c.lidar.angular_noise_deg = jl.value("angular_noise_deg", c.lidar.angular_noise_deg);
        c.lidar.range_noise_std = jl.value("range_noise_std", c.lidar.range_noise_std);
        if (jl.contains("background")) {
            if (jl.at("background").is_null()) {
                c.lidar.has_background = false;
            } else {
                c.lidar.background_normal =
                    config_detail::vec3(jl.at("background").at("normal"), "background normal")
                        .normalized();
                c.lidar.background_d = jl.at("background").at("d").get<double>();
            }
        }
    }
    c.validate();
    return c;
}

inline SceneConfig load_scene_config(const std::string& path) {
    return scene_config_from_json(config_detail::load_json(path));
}

}  // namespace vlfuse
