// vlfuse: vision-LiDAR object tracking pipeline, evaluation harness,
// calibration solvers, and synthetic scene generator.
//
// Subcommands: run, eval-pr, eval-3d, simulate, calibrate.
// Exit codes: 0 success, 2 configuration/usage error, 3 data error.
// All logs go to stderr; stdout carries only report tables and residuals.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "vlfuse/calibration.hpp"
#include "vlfuse/config.hpp"
#include "vlfuse/evaluation.hpp"
#include "vlfuse/io.hpp"
#include "vlfuse/pipeline.hpp"
#include "vlfuse/simulator.hpp"

namespace fs = std::filesystem;
using namespace vlfuse;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::string timestamp_header(const std::string& cmd, bool no_timestamp) {
    if (no_timestamp) return {};
    const std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return "vlfuse " + cmd + " generated " + buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
}

RigidTransform transform_from_config_json(const nlohmann::json& j, const std::string& parent,
                                          const std::string& child, const char* what) {
    if (!j.contains("translation") || !j.contains("quaternion"))
        throw ConfigError(std::string(what) + ": needs 'translation' and 'quaternion'");
    const auto& t = j.at("translation");
    const auto& q = j.at("quaternion");
    if (t.size() != 3 || q.size() != 4)
        throw ConfigError(std::string(what) + ": translation needs 3 values, quaternion 4");
    return RigidTransform(Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                                             q[2].get<double>(), q[3].get<double>()),
                          Eigen::Vector3d(t[0].get<double>(), t[1].get<double>(),
                                          t[2].get<double>()),
                          parent, child);
}

// ---------------------------------------------------------------------------

struct RunOptions {
    std::string config_path;
    std::string source_override;
    std::string out_override;
    bool raw_3d_override = false;
    bool no_timestamp = false;
};

int cmd_run(const RunOptions& opt) {
    PipelineConfig config = load_pipeline_config(opt.config_path);
    if (!opt.source_override.empty())
        config.source = opt.source_override == "event" ? DetectionSource::event
                                                       : DetectionSource::rgb;
    if (!opt.out_override.empty()) config.output_dir = opt.out_override;
    if (opt.raw_3d_override) config.raw_3d = true;
    config.validate_paths();
    fs::create_directories(config.output_dir);

    const CalibrationSet calib = load_calibration(config.calibration_path);
    const auto all_detections = load_detections(config.detections_path);
    std::vector<Detection2D> detections;
    for (const auto& d : all_detections)
        if (d.source == config.source) detections.push_back(d);
    const auto scans = load_scans(config.scans_path);

    PipelineParams params;
    params.sort = config.sort_params();
    params.fusion = config.fusion;
    params.filter3d = config.filter3d;
    params.raw_3d = config.raw_3d;

    const PipelineOutput out = run_pipeline(detections, scans, calib, params);
    const std::string header = timestamp_header("run", opt.no_timestamp);
    save_tracks2d((fs::path(config.output_dir) / "tracks_2d.txt").string(), out.tracks2d, header);
    save_tracks3d((fs::path(config.output_dir) / "tracks_3d.txt").string(), out.tracks3d, header);
    std::cerr << "run: " << out.frames << " frames, " << out.frames_with_scan
              << " with a matched scan, " << out.tracks2d.size() << " 2D records, "
              << out.tracks3d.size() << " 3D records\n";
    return kExitOk;
}

struct EvalPrOptions {
    std::string reference_path;
    std::string candidate_path;
    std::string tracker = "event";
    std::string sort_config_path;
    std::string out_dir = ".";
    double reference_confidence = 0.5;
    bool no_timestamp = false;
};

int cmd_eval_pr(const EvalPrOptions& opt) {
    for (const auto& [name, path] :
         {std::pair<const char*, const std::string*>{"reference", &opt.reference_path},
          {"candidate", &opt.candidate_path}})
        if (!fs::exists(*path))
            throw ConfigError(std::string("eval-pr: ") + name + " file '" + *path +
                              "' does not exist");
    fs::create_directories(opt.out_dir);

    auto reference = load_detections(opt.reference_path);
    std::erase_if(reference,
                  [&](const Detection2D& d) { return d.confidence < opt.reference_confidence; });
    const auto candidate = load_detections(opt.candidate_path);

    SortParams params = opt.tracker == "rgb" ? SortParams::rgb_defaults()
                                             : SortParams::event_defaults();
    if (!opt.sort_config_path.empty())
        params = sort_params_from_json(config_detail::load_json(opt.sort_config_path), params);

    const auto frames = pair_frames(reference, candidate);
    const PrSweepPair sweep = pair_sweep_with_tracking(frames, params, default_iou_grid(),
                                                       default_confidence_grid());

    const std::string iou_table = render_pr_iou_table(sweep, 0.3, "Candidate vs reference");
    const std::string conf_table =
        render_pr_confidence_table(sweep, 0.5, "Candidate vs reference");
    std::cout << iou_table << "\n" << conf_table;

    const std::string header = timestamp_header("eval-pr", opt.no_timestamp);
    std::string tables;
    if (!header.empty()) tables += "# " + header + "\n";
    tables += iou_table + "\n" + conf_table;
    write_text_file((fs::path(opt.out_dir) / "pr_tables.txt").string(), tables);
    std::string csv;
    if (!header.empty()) csv += "# " + header + "\n";
    csv += pr_tables_csv(sweep);
    write_text_file((fs::path(opt.out_dir) / "pr_cells.csv").string(), csv);
    return kExitOk;
}

struct Eval3dOptions {
    std::string tracks_path;
    std::string poses_path;
    std::string calibration_path;
    std::string column_label = "RGB detection";
    std::string row_label = "Filtering and CVKF";
    std::string out_dir = ".";
    bool no_timestamp = false;
};

int cmd_eval_3d(const Eval3dOptions& opt) {
    for (const auto& [name, path] :
         {std::pair<const char*, const std::string*>{"tracks", &opt.tracks_path},
          {"poses", &opt.poses_path},
          {"calibration", &opt.calibration_path}})
        if (!fs::exists(*path))
            throw ConfigError(std::string("eval-3d: ") + name + " file '" + *path +
                              "' does not exist");
    fs::create_directories(opt.out_dir);

    const auto estimates = load_tracks3d(opt.tracks_path);
    const auto poses = load_poses(opt.poses_path);
    const CalibrationSet calib = load_calibration(opt.calibration_path);
    const ErrorReport report = position_errors(estimates, poses, calib);

    ErrorTableLayout layout;
    layout.title = "3D position accuracy [m]";
    layout.column_groups = {opt.column_label};
    layout.row_groups = {{opt.row_label, {report}}};
    const std::string table = render_error_table(layout);
    std::cout << table;
    if (report.unassociated > 0)
        std::cerr << "eval-3d: " << report.unassociated
                  << " estimates had no ground-truth association\n";

    const std::string header = timestamp_header("eval-3d", opt.no_timestamp);
    std::string table_out;
    if (!header.empty()) table_out += "# " + header + "\n";
    table_out += table;
    write_text_file((fs::path(opt.out_dir) / "error_table.txt").string(), table_out);
    std::string csv;
    if (!header.empty()) csv += "# " + header + "\n";
    csv += error_report_csv(report);
    write_text_file((fs::path(opt.out_dir) / "errors.csv").string(), csv);
    return kExitOk;
}

struct SimulateOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_timestamp = false;
};

int cmd_simulate(const SimulateOptions& opt) {
    SceneConfig scene = load_scene_config(opt.config_path);
    if (opt.seed_set) scene.seed = opt.seed;
    fs::create_directories(opt.out_dir);
    const SimulationProducts products = simulate(scene);
    const std::string header = timestamp_header("simulate", opt.no_timestamp);
    save_detections((fs::path(opt.out_dir) / "detections.txt").string(), products.detections,
                    header);
    save_scans((fs::path(opt.out_dir) / "scans.bin").string(), products.scans);
    save_poses((fs::path(opt.out_dir) / "poses.txt").string(), products.poses, header);
    save_calibration((fs::path(opt.out_dir) / "calibration.json").string(),
                     products.calibration);
    std::cerr << "simulate: " << products.detections.size() << " detections, "
              << products.scans.size() << " scans, " << products.poses.size() << " poses\n";
    return kExitOk;
}

struct CalibrateOptions {
    std::string mode;
    std::string samples_path;
    std::string planes_path;
    std::string base_path;
    std::string out_file;
};

int cmd_calibrate(const CalibrateOptions& opt) {
    if (!fs::exists(opt.base_path))
        throw ConfigError("calibrate: base calibration '" + opt.base_path + "' does not exist");
    CalibrationSet calib = load_calibration(opt.base_path);

    if (opt.mode == "eye-in-hand") {
        if (!fs::exists(opt.samples_path))
            throw ConfigError("calibrate: samples file '" + opt.samples_path +
                              "' does not exist");
        const nlohmann::json j = config_detail::load_json(opt.samples_path);
        if (!j.contains("samples")) throw ConfigError("calibrate: missing 'samples'");
        std::vector<HandEyeSample> samples;
        for (const auto& js : j.at("samples")) {
            HandEyeSample s;
            s.t_w_ms = transform_from_config_json(js.at("t_w_ms"), frames::world,
                                                  frames::sensor_markers, "t_w_ms");
            s.t_cb_c = transform_from_config_json(js.at("t_cb_c"), "Cb", frames::camera,
                                                  "t_cb_c");
            samples.push_back(std::move(s));
        }
        const EyeInHandResult res = solve_eye_in_hand(samples);
        calib.t_c_ms = res.transform;
        std::printf("eye-in-hand: pairs=%d rotation_residual_rad=%.9g translation_residual_m=%.9g\n",
                    res.pair_count, res.rotation_residual, res.translation_residual);
    } else if (opt.mode == "point-to-plane") {
        if (!fs::exists(opt.planes_path))
            throw ConfigError("calibrate: planes file '" + opt.planes_path + "' does not exist");
        const nlohmann::json j = config_detail::load_json(opt.planes_path);
        if (!j.contains("planes")) throw ConfigError("calibrate: missing 'planes'");
        std::vector<PlaneObservation> observations;
        std::size_t total_points = 0;
        for (const auto& jp : j.at("planes")) {
            PlaneObservation obs;
            obs.normal = config_detail::vec3(jp.at("normal"), "plane normal");
            obs.d = jp.at("d").get<double>();
            for (const auto& pt : jp.at("points"))
                obs.lidar_points.push_back(config_detail::vec3(pt, "plane point"));
            obs.validate();
            total_points += obs.lidar_points.size();
            observations.push_back(std::move(obs));
        }
        RigidTransform initial = calib.t_c_l;
        if (j.contains("initial"))
            initial = transform_from_config_json(j.at("initial"), frames::camera, frames::lidar,
                                                 "initial");
        const PointToPlaneResult res = solve_point_to_plane(observations, initial);
        calib.t_c_l = res.transform;
        const double rms =
            std::sqrt(res.final_cost / static_cast<double>(std::max<std::size_t>(1, total_points)));
        std::printf("point-to-plane: iterations=%d final_cost=%.9g residual_rms_m=%.9g\n",
                    res.iterations, res.final_cost, rms);
    } else {
        throw ConfigError("calibrate: mode must be 'eye-in-hand' or 'point-to-plane'");
    }
    if (!opt.out_file.empty()) save_calibration(opt.out_file, calib);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vision-LiDAR object detection, tracking and evaluation"};
    app.require_subcommand(1);

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "track detections in 2D and estimate 3D positions");
    run->add_option("--config", run_opt.config_path, "pipeline config JSON")->required();
    run->add_option("--source", run_opt.source_override, "detection source: rgb or event")
        ->check(CLI::IsMember({"rgb", "event"}));
    run->add_option("--out", run_opt.out_override, "output directory (overrides config)");
    run->add_flag("--raw-3d", run_opt.raw_3d_override,
                  "emit raw median points instead of filtered 3D states");
    run->add_flag("--no-timestamp", run_opt.no_timestamp, "omit timestamp headers");

    EvalPrOptions pr_opt;
    auto* evalpr = app.add_subcommand("eval-pr",
                                      "precision/recall sweep of a candidate detector "
                                      "against a reference detector");
    evalpr->add_option("--reference", pr_opt.reference_path, "reference detections")->required();
    evalpr->add_option("--candidate", pr_opt.candidate_path, "candidate detections")->required();
    evalpr->add_option("--tracker", pr_opt.tracker, "tracker defaults: rgb or event")
        ->check(CLI::IsMember({"rgb", "event"}));
    evalpr->add_option("--sort-config", pr_opt.sort_config_path,
                       "JSON with tracker parameter overrides");
    evalpr->add_option("--ref-conf", pr_opt.reference_confidence,
                       "confidence pre-filter on the reference stream");
    evalpr->add_option("--out", pr_opt.out_dir, "output directory");
    evalpr->add_flag("--no-timestamp", pr_opt.no_timestamp, "omit timestamp headers");

    Eval3dOptions e3_opt;
    auto* eval3d =
        app.add_subcommand("eval-3d", "3D position MAE/RMSE against mocap ground truth");
    eval3d->add_option("--tracks", e3_opt.tracks_path, "3D track records")->required();
    eval3d->add_option("--poses", e3_opt.poses_path, "ground-truth poses")->required();
    eval3d->add_option("--calibration", e3_opt.calibration_path, "calibration JSON")->required();
    eval3d->add_option("--column-label", e3_opt.column_label, "column group label");
    eval3d->add_option("--row-label", e3_opt.row_label, "row group label");
    eval3d->add_option("--out", e3_opt.out_dir, "output directory");
    eval3d->add_flag("--no-timestamp", e3_opt.no_timestamp, "omit timestamp headers");

    SimulateOptions sim_opt;
    auto* sim = app.add_subcommand("simulate", "generate a synthetic scene dataset");
    sim->add_option("--config", sim_opt.config_path, "scene config JSON")->required();
    sim->add_option("--out", sim_opt.out_dir, "output directory");
    auto* seed_opt = sim->add_option("--seed", sim_opt.seed, "override the scene seed");
    sim->add_flag("--no-timestamp", sim_opt.no_timestamp, "omit timestamp headers");

    CalibrateOptions cal_opt;
    auto* cal = app.add_subcommand("calibrate", "solve an extrinsic calibration");
    cal->add_option("--mode", cal_opt.mode, "eye-in-hand or point-to-plane")->required();
    cal->add_option("--samples", cal_opt.samples_path, "hand-eye samples JSON");
    cal->add_option("--planes", cal_opt.planes_path, "plane observations JSON");
    cal->add_option("--base", cal_opt.base_path, "base calibration JSON")->required();
    cal->add_option("--out-file", cal_opt.out_file, "where to write the updated calibration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return kExitConfig;
    }

    try {
        if (run->parsed()) return cmd_run(run_opt);
        if (evalpr->parsed()) return cmd_eval_pr(pr_opt);
        if (eval3d->parsed()) return cmd_eval_3d(e3_opt);
        if (sim->parsed()) {
            sim_opt.seed_set = seed_opt->count() > 0;
            return cmd_simulate(sim_opt);
        }
        if (cal->parsed()) return cmd_calibrate(cal_opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitConfig;
}
