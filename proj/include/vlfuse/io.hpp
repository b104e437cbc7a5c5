#pragma once

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlfuse/data.hpp"
#include "vlfuse/error.hpp"
#include "vlfuse/geometry.hpp"

namespace vlfuse {

// ---------------------------------------------------------------------------
// Canonical number formatting: shortest representation that round-trips.

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline double parse_double(std::string_view tok, int line, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" +
                         std::string(tok) + "'");
    return v;
}

inline long parse_int(std::string_view tok, int line, const char* what) {
    long v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ParseError("line " + std::to_string(line) + ": bad " + what + " '" +
                         std::string(tok) + "'");
    return v;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool skippable(std::string_view line) {
    for (char c : line)
        if (c != ' ' && c != '\t' && c != '\r') return c == '#';
    return true;
}

// Visits every payload line of a text file with its 1-based line number.
template <typename Fn>
void for_each_record_line(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (skippable(line)) continue;
        fn(std::string_view(line), lineno);
    }
}

inline void put_u16(std::string& buf, std::uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f32(std::string& buf, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(buf, bits);
}

inline void put_f64(std::string& buf, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
    const unsigned char* p;
    const unsigned char* end;

    std::size_t remaining() const { return static_cast<std::size_t>(end - p); }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }
    std::int8_t i8() { return static_cast<std::int8_t>(*p++); }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        p += 8;
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
};

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Detections: one record per line, `t class_id confidence x1 y1 x2 y2 source`.

inline std::vector<Detection2D> load_detections(const std::string& path) {
    std::vector<Detection2D> out;
    detail::for_each_record_line(path, [&](std::string_view line, int lineno) {
        const auto f = detail::split_fields(line);
        if (f.size() != 8)
            throw ParseError("line " + std::to_string(lineno) + ": expected 8 fields, got " +
                             std::to_string(f.size()));
        Detection2D d;
        d.t = detail::parse_double(f[0], lineno, "timestamp");
        d.class_id = static_cast<int>(detail::parse_int(f[1], lineno, "class_id"));
        d.confidence = detail::parse_double(f[2], lineno, "confidence");
        d.bbox.x1 = detail::parse_double(f[3], lineno, "x1");
        d.bbox.y1 = detail::parse_double(f[4], lineno, "y1");
        d.bbox.x2 = detail::parse_double(f[5], lineno, "x2");
        d.bbox.y2 = detail::parse_double(f[6], lineno, "y2");
        if (f[7] == "rgb")
            d.source = DetectionSource::rgb;
        else if (f[7] == "event")
            d.source = DetectionSource::event;
        else
            throw ParseError("line " + std::to_string(lineno) + ": bad source '" +
                             std::string(f[7]) + "'");
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
            throw ParseError("line " + std::to_string(lineno) + ": confidence " +
                             format_double(d.confidence) + " outside [0,1]");
        if (!d.bbox.valid())
            throw ParseError("line " + std::to_string(lineno) + ": bbox has non-positive area");
        if (!out.empty() && d.t < out.back().t)
            throw OrderingError("line " + std::to_string(lineno) +
                                ": detections not in time order");
        out.push_back(d);
    });
    return out;
}

inline std::string format_detection(const Detection2D& d) {
    std::string s;
    s += format_double(d.t);
    s += ' ';
    s += std::to_string(d.class_id);
    s += ' ';
    s += format_double(d.confidence);
    for (double v : {d.bbox.x1, d.bbox.y1, d.bbox.x2, d.bbox.y2}) {
        s += ' ';
        s += format_double(v);
    }
    s += ' ';
    s += to_string(d.source);
    return s;
}

inline void save_detections(const std::string& path, const std::vector<Detection2D>& dets,
                            const std::string& header_comment = {}) {
    std::string buf;
    if (!header_comment.empty()) buf += "# " + header_comment + "\n";
    for (const auto& d : dets) {
        buf += format_detection(d);
        buf += '\n';
    }
    detail::write_file_bytes(path, buf);
}

// ---------------------------------------------------------------------------
// Events: binary, little-endian.
// Header (16 bytes): magic "EVTB", u32 version = 1, u32 width, u32 height.
// Records (13 bytes): u16 x, u16 y, f64 t, i8 p.

inline constexpr char kEventMagic[4] = {'E', 'V', 'T', 'B'};
inline constexpr std::uint32_t kEventFormatVersion = 1;

struct EventFile {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<Event> events;
};

inline EventFile load_events(const std::string& path) {
    const std::string bytes = detail::read_file_bytes(path);
    if (bytes.size() < 16) throw ParseError("'" + path + "': truncated event header");
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()),
                         reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};
    if (std::memcmp(r.p, kEventMagic, 4) != 0)
        throw ParseError("'" + path + "': bad event magic");
    r.p += 4;
    const std::uint32_t version = r.u32();
    if (version != kEventFormatVersion)
        throw ParseError("'" + path + "': unsupported event format version " +
                         std::to_string(version));
    EventFile out;
    out.width = r.u32();
    out.height = r.u32();
    if ((bytes.size() - 16) % 13 != 0)
        throw ParseError("'" + path + "': truncated event record");
    const std::size_t n = (bytes.size() - 16) / 13;
    out.events.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Event e;
        e.x = r.u16();
        e.y = r.u16();
        e.t = r.f64();
        e.p = r.i8();
        if (e.x >= out.width || e.y >= out.height)
            throw ParseError("'" + path + "': record " + std::to_string(i) +
                             " pixel outside " + std::to_string(out.width) + "x" +
                             std::to_string(out.height));
        if (e.p != 1 && e.p != -1)
            throw ParseError("'" + path + "': record " + std::to_string(i) + " bad polarity");
        out.events.push_back(e);
    }
    return out;
}

inline void save_events(const std::string& path, const EventFile& file) {
    std::string buf;
    buf.append(kEventMagic, 4);
    detail::put_u32(buf, kEventFormatVersion);
    detail::put_u32(buf, file.width);
    detail::put_u32(buf, file.height);
    for (const Event& e : file.events) {
        detail::put_u16(buf, e.x);
        detail::put_u16(buf, e.y);
        detail::put_f64(buf, e.t);
        buf.push_back(static_cast<char>(e.p));
    }
    detail::write_file_bytes(path, buf);
}

// ---------------------------------------------------------------------------
// LiDAR scans: binary, little-endian. Per scan: f64 scan_t, u32 count,
// then count x (f32 x, f32 y, f32 z, f64 t).

inline std::vector<LidarScan> load_scans(const std::string& path) {
    const std::string bytes = detail::read_file_bytes(path);
    detail::ByteReader r{reinterpret_cast<const unsigned char*>(bytes.data()),
                         reinterpret_cast<const unsigned char*>(bytes.data()) + bytes.size()};
    std::vector<LidarScan> out;
    while (r.remaining() > 0) {
        if (r.remaining() < 12)
            throw ParseError("'" + path + "': truncated scan header at scan " +
                             std::to_string(out.size()));
        LidarScan scan;
        scan.scan_t = r.f64();
        const std::uint32_t count = r.u32();
        if (r.remaining() < static_cast<std::size_t>(count) * 20)
            throw ParseError("'" + path + "': truncated scan body at scan " +
                             std::to_string(out.size()));
        scan.points.reserve(count);
        for (std::uint32_t i = 0; i < count; ++i) {
            LidarPoint p;
            p.x = r.f32();
            p.y = r.f32();
            p.z = r.f32();
            p.t = r.f64();
            if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
                throw ParseError("'" + path + "': non-finite point in scan " +
                                 std::to_string(out.size()));
            if (!scan.points.empty() && p.t < scan.points.back().t)
                throw OrderingError("'" + path + "': point timestamps decrease in scan " +
                                    std::to_string(out.size()));
            scan.points.push_back(p);
        }
        if (!out.empty() && scan.scan_t < out.back().scan_t)
            throw OrderingError("'" + path + "': scans not in time order at scan " +
                                std::to_string(out.size()));
        out.push_back(std::move(scan));
    }
    return out;
}

inline void save_scans(const std::string& path, const std::vector<LidarScan>& scans) {
    std::string buf;
    for (const auto& scan : scans) {
        detail::put_f64(buf, scan.scan_t);
        detail::put_u32(buf, static_cast<std::uint32_t>(scan.points.size()));
        for (const auto& p : scan.points) {
            detail::put_f32(buf, p.x);
            detail::put_f32(buf, p.y);
            detail::put_f32(buf, p.z);
            detail::put_f64(buf, p.t);
        }
    }
    detail::write_file_bytes(path, buf);
}

// ---------------------------------------------------------------------------
// Ground-truth poses: one record per line, `t subject tx ty tz qw qx qy qz`.

inline std::vector<GroundTruthPose> load_poses(const std::string& path) {
    std::vector<GroundTruthPose> out;
    double last_t[3] = {-1e300, -1e300, -1e300};
    detail::for_each_record_line(path, [&](std::string_view line, int lineno) {
        const auto f = detail::split_fields(line);
        if (f.size() != 9)
            throw ParseError("line " + std::to_string(lineno) + ": expected 9 fields, got " +
                             std::to_string(f.size()));
        GroundTruthPose g;
        g.t = detail::parse_double(f[0], lineno, "timestamp");
        if (f[1] == "sensor_rig")
            g.subject = Subject::sensor_rig;
        else if (f[1] == "helmet_1")
            g.subject = Subject::helmet_1;
        else if (f[1] == "helmet_2")
            g.subject = Subject::helmet_2;
        else
            throw ParseError("line " + std::to_string(lineno) + ": bad subject '" +
                             std::string(f[1]) + "'");
        const double tx = detail::parse_double(f[2], lineno, "tx");
        const double ty = detail::parse_double(f[3], lineno, "ty");
        const double tz = detail::parse_double(f[4], lineno, "tz");
        const double qw = detail::parse_double(f[5], lineno, "qw");
        const double qx = detail::parse_double(f[6], lineno, "qx");
        const double qy = detail::parse_double(f[7], lineno, "qy");
        const double qz = detail::parse_double(f[8], lineno, "qz");
        g.pose = RigidTransform(Eigen::Quaterniond(qw, qx, qy, qz),
                                Eigen::Vector3d(tx, ty, tz), frames::world,
                                marker_frame(g.subject));
        double& last = last_t[static_cast<int>(g.subject)];
        if (g.t <= last)
            throw OrderingError("line " + std::to_string(lineno) +
                                ": timestamps not strictly increasing for subject " +
                                std::string(to_string(g.subject)));
        last = g.t;
        out.push_back(std::move(g));
    });
    return out;
}

inline void save_poses(const std::string& path, const std::vector<GroundTruthPose>& poses,
                       const std::string& header_comment = {}) {
    std::string buf;
    if (!header_comment.empty()) buf += "# " + header_comment + "\n";
    for (const auto& g : poses) {
        buf += format_double(g.t);
        buf += ' ';
        buf += to_string(g.subject);
        for (double v : {g.pose.translation.x(), g.pose.translation.y(), g.pose.translation.z(),
                         g.pose.rotation.w(), g.pose.rotation.x(), g.pose.rotation.y(),
                         g.pose.rotation.z()}) {
            buf += ' ';
            buf += format_double(v);
        }
        buf += '\n';
    }
    detail::write_file_bytes(path, buf);
}

// ---------------------------------------------------------------------------
// Calibration file: JSON with intrinsics and the three static transforms.

namespace detail {

inline RigidTransform transform_from_json(const nlohmann::json& j, const std::string& name) {
    for (const char* key : {"parent", "child", "translation", "quaternion"})
        if (!j.contains(key))
            throw ParseError("calibration: '" + name + "' missing field '" + key + "'");
    const auto& t = j.at("translation");
    const auto& q = j.at("quaternion");
    if (t.size() != 3) throw ParseError("calibration: '" + name + "' translation needs 3 values");
    if (q.size() != 4)
        throw ParseError("calibration: '" + name + "' quaternion needs 4 values (w x y z)");
    return RigidTransform(
        Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                           q[3].get<double>()),
        Eigen::Vector3d(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()),
        j.at("parent").get<std::string>(), j.at("child").get<std::string>());
}

inline nlohmann::json transform_to_json(const RigidTransform& t) {
    return nlohmann::json{
        {"parent", t.parent_frame},
        {"child", t.child_frame},
        {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}},
        {"quaternion", {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()}}};
}

}  // namespace detail

inline CalibrationSet calibration_from_json(const nlohmann::json& j) {
    for (const char* key : {"intrinsics", "t_c_l", "t_c_ms", "t_c_i"})
        if (!j.contains(key)) throw ParseError(std::string("calibration: missing field '") + key + "'");
    const auto& ji = j.at("intrinsics");
    for (const char* key : {"fx", "fy", "cx", "cy", "width", "height"})
        if (!ji.contains(key))
            throw ParseError(std::string("calibration: intrinsics missing field '") + key + "'");
    CalibrationSet c;
    c.intrinsics.fx = ji.at("fx").get<double>();
    c.intrinsics.fy = ji.at("fy").get<double>();
    c.intrinsics.cx = ji.at("cx").get<double>();
    c.intrinsics.cy = ji.at("cy").get<double>();
    c.intrinsics.width = ji.at("width").get<int>();
    c.intrinsics.height = ji.at("height").get<int>();
    if (ji.contains("distortion")) {
        const auto& jd = ji.at("distortion");
        c.intrinsics.distortion.k1 = jd.value("k1", 0.0);
        c.intrinsics.distortion.k2 = jd.value("k2", 0.0);
        c.intrinsics.distortion.k3 = jd.value("k3", 0.0);
        c.intrinsics.distortion.p1 = jd.value("p1", 0.0);
        c.intrinsics.distortion.p2 = jd.value("p2", 0.0);
    }
    c.t_c_l = detail::transform_from_json(j.at("t_c_l"), "t_c_l");
    c.t_c_ms = detail::transform_from_json(j.at("t_c_ms"), "t_c_ms");
    c.t_c_i = detail::transform_from_json(j.at("t_c_i"), "t_c_i");
    c.validate();
    return c;
}

inline nlohmann::json calibration_to_json(const CalibrationSet& c) {
    return nlohmann::json{
        {"intrinsics",
         {{"fx", c.intrinsics.fx},
          {"fy", c.intrinsics.fy},
          {"cx", c.intrinsics.cx},
          {"cy", c.intrinsics.cy},
          {"width", c.intrinsics.width},
          {"height", c.intrinsics.height},
          {"distortion",
           {{"k1", c.intrinsics.distortion.k1},
            {"k2", c.intrinsics.distortion.k2},
            {"k3", c.intrinsics.distortion.k3},
            {"p1", c.intrinsics.distortion.p1},
            {"p2", c.intrinsics.distortion.p2}}}}},
        {"t_c_l", detail::transform_to_json(c.t_c_l)},
        {"t_c_ms", detail::transform_to_json(c.t_c_ms)},
        {"t_c_i", detail::transform_to_json(c.t_c_i)}};
}

inline CalibrationSet load_calibration(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': " + e.what());
    }
    return calibration_from_json(j);
}

inline void save_calibration(const std::string& path, const CalibrationSet& c) {
    detail::write_file_bytes(path, calibration_to_json(c).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Track records.

struct TrackRecord2D {
    Detection2D det;
    int track_id = 0;
};

inline std::string format_track2d(const TrackRecord2D& r) {
    return format_detection(r.det) + ' ' + std::to_string(r.track_id);
}

inline std::vector<TrackRecord2D> load_tracks2d(const std::string& path) {
    std::vector<TrackRecord2D> out;
    detail::for_each_record_line(path, [&](std::string_view line, int lineno) {
        const auto f = detail::split_fields(line);
        if (f.size() != 9)
            throw ParseError("line " + std::to_string(lineno) + ": expected 9 fields, got " +
                             std::to_string(f.size()));
        TrackRecord2D r;
        r.det.t = detail::parse_double(f[0], lineno, "timestamp");
        r.det.class_id = static_cast<int>(detail::parse_int(f[1], lineno, "class_id"));
        r.det.confidence = detail::parse_double(f[2], lineno, "confidence");
        r.det.bbox.x1 = detail::parse_double(f[3], lineno, "x1");
        r.det.bbox.y1 = detail::parse_double(f[4], lineno, "y1");
        r.det.bbox.x2 = detail::parse_double(f[5], lineno, "x2");
        r.det.bbox.y2 = detail::parse_double(f[6], lineno, "y2");
        r.det.source = f[7] == "event" ? DetectionSource::event : DetectionSource::rgb;
        r.track_id = static_cast<int>(detail::parse_int(f[8], lineno, "track_id"));
        out.push_back(r);
    });
    return out;
}

inline void save_tracks2d(const std::string& path, const std::vector<TrackRecord2D>& tracks,
                          const std::string& header_comment = {}) {
    std::string buf;
    if (!header_comment.empty()) buf += "# " + header_comment + "\n";
    for (const auto& r : tracks) {
        buf += format_track2d(r);
        buf += '\n';
    }
    detail::write_file_bytes(path, buf);
}

struct TrackRecord3D {
    double t = 0.0;
    int track_id = 0;
    int class_id = 0;
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // camera frame, metres
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // metres / second
};

inline std::string format_track3d(const TrackRecord3D& r) {
    std::string s = format_double(r.t);
    s += ' ';
    s += std::to_string(r.track_id);
    s += ' ';
    s += std::to_string(r.class_id);
    for (double v : {r.position.x(), r.position.y(), r.position.z(), r.velocity.x(),
                     r.velocity.y(), r.velocity.z()}) {
        s += ' ';
        s += format_double(v);
    }
    return s;
}

inline void save_tracks3d(const std::string& path, const std::vector<TrackRecord3D>& tracks,
                          const std::string& header_comment = {}) {
    std::string buf;
    if (!header_comment.empty()) buf += "# " + header_comment + "\n";
    for (const auto& r : tracks) {
        buf += format_track3d(r);
        buf += '\n';
    }
    detail::write_file_bytes(path, buf);
}

inline std::vector<TrackRecord3D> load_tracks3d(const std::string& path) {
    std::vector<TrackRecord3D> out;
    detail::for_each_record_line(path, [&](std::string_view line, int lineno) {
        const auto f = detail::split_fields(line);
        if (f.size() != 9)
            throw ParseError("line " + std::to_string(lineno) + ": expected 9 fields, got " +
                             std::to_string(f.size()));
        TrackRecord3D r;
        r.t = detail::parse_double(f[0], lineno, "timestamp");
        r.track_id = static_cast<int>(detail::parse_int(f[1], lineno, "track_id"));
        r.class_id = static_cast<int>(detail::parse_int(f[2], lineno, "class_id"));
        r.position = {detail::parse_double(f[3], lineno, "x"),
                      detail::parse_double(f[4], lineno, "y"),
                      detail::parse_double(f[5], lineno, "z")};
        r.velocity = {detail::parse_double(f[6], lineno, "vx"),
                      detail::parse_double(f[7], lineno, "vy"),
                      detail::parse_double(f[8], lineno, "vz")};
        out.push_back(r);
    });
    return out;
}

}  // namespace vlfuse
