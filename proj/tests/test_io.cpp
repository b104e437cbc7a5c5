#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "vlfuse/events.hpp"
#include "vlfuse/io.hpp"

using namespace vlfuse;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        dir_ = fs::temp_directory_path() /
               ("vlfuse_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter_++));
        fs::create_directories(dir_);
    }
    ~TempDir() { fs::remove_all(dir_); }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

private:
    fs::path dir_;
    static int counter_;
};

int TempDir::counter_ = 0;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Detections, EmptyFile) {
    TempDir tmp;
    write_text(tmp.path("d.txt"), "");
    EXPECT_TRUE(load_detections(tmp.path("d.txt")).empty());
}

TEST(Detections, ThreeValidLines) {
    TempDir tmp;
    write_text(tmp.path("d.txt"),
               "# comment\n"
               "0.1 0 0.9 10 20 30 40 rgb\n"
               "0.1 2 0.8 50 60 70 80 rgb\n"
               "0.2 0 0.7 11 21 31 41 event\n");
    const auto dets = load_detections(tmp.path("d.txt"));
    ASSERT_EQ(dets.size(), 3u);
    EXPECT_EQ(dets[0].class_id, 0);
    EXPECT_EQ(dets[1].class_id, 2);
    EXPECT_EQ(dets[2].source, DetectionSource::event);
    EXPECT_DOUBLE_EQ(dets[2].bbox.y2, 41.0);
}

TEST(Detections, BadConfidenceNamesLine) {
    TempDir tmp;
    write_text(tmp.path("d.txt"),
               "0.1 0 0.9 10 20 30 40 rgb\n"
               "0.2 0 1.2 10 20 30 40 rgb\n");
    try {
        load_detections(tmp.path("d.txt"));
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    }
}

TEST(Detections, OutOfOrderRejected) {
    TempDir tmp;
    write_text(tmp.path("d.txt"),
               "0.2 0 0.9 10 20 30 40 rgb\n"
               "0.1 0 0.9 10 20 30 40 rgb\n");
    EXPECT_THROW(load_detections(tmp.path("d.txt")), OrderingError);
}

TEST(Detections, WriteLoadRoundTripIsByteIdentical) {
    TempDir tmp;
    std::vector<Detection2D> dets;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        Detection2D d;
        d.t = 0.05 * i + u(rng) * 0.01;
        d.class_id = i % 2 == 0 ? 0 : 2;
        d.confidence = u(rng);
        d.bbox = {u(rng) * 100, u(rng) * 100, 100 + u(rng) * 100, 100 + u(rng) * 100};
        d.source = DetectionSource::rgb;
        dets.push_back(d);
    }
    save_detections(tmp.path("a.txt"), dets);
    save_detections(tmp.path("b.txt"), load_detections(tmp.path("a.txt")));
    EXPECT_EQ(read_bytes(tmp.path("a.txt")), read_bytes(tmp.path("b.txt")));
}

TEST(Events, RoundTripAndValidation) {
    TempDir tmp;
    EventFile f;
    f.width = 346;
    f.height = 260;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        Event e;
        e.x = static_cast<std::uint16_t>(rng() % 346);
        e.y = static_cast<std::uint16_t>(rng() % 260);
        e.t = 1e-5 * i;
        e.p = (rng() % 2 == 0) ? 1 : -1;
        f.events.push_back(e);
    }
    save_events(tmp.path("e.bin"), f);
    save_events(tmp.path("e2.bin"), load_events(tmp.path("e.bin")));
    EXPECT_EQ(read_bytes(tmp.path("e.bin")), read_bytes(tmp.path("e2.bin")));

    const auto loaded = load_events(tmp.path("e.bin"));
    EXPECT_EQ(loaded.width, 346u);
    EXPECT_EQ(loaded.events.size(), 500u);
}

TEST(Events, RejectsBadMagicAndOutOfBoundsPixels) {
    TempDir tmp;
    write_text(tmp.path("bad.bin"), "NOPExxxxxxxxxxxx");
    EXPECT_THROW(load_events(tmp.path("bad.bin")), ParseError);

    EventFile f;
    f.width = 10;
    f.height = 10;
    f.events.push_back(Event{20, 0, 0.0, 1});  // x out of range
    save_events(tmp.path("oob.bin"), f);
    EXPECT_THROW(load_events(tmp.path("oob.bin")), ParseError);
}

TEST(Scans, EmptyAndOrdered) {
    TempDir tmp;
    write_text(tmp.path("empty.bin"), "");
    EXPECT_TRUE(load_scans(tmp.path("empty.bin")).empty());

    std::vector<LidarScan> scans(2);
    scans[0].scan_t = 0.0;
    scans[1].scan_t = 0.1266;
    for (int s = 0; s < 2; ++s)
        for (int i = 0; i < 100; ++i)
            scans[s].points.push_back({0.1f * i, 1.f, 2.f, scans[s].scan_t + 1e-4 * i});
    save_scans(tmp.path("s.bin"), scans);
    const auto loaded = load_scans(tmp.path("s.bin"));
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded[0].points.size(), 100u);
    EXPECT_EQ(loaded[1].points.size(), 100u);
    EXPECT_DOUBLE_EQ(loaded[1].scan_t, 0.1266);

    save_scans(tmp.path("s2.bin"), loaded);
    EXPECT_EQ(read_bytes(tmp.path("s.bin")), read_bytes(tmp.path("s2.bin")));
}

TEST(Scans, TruncatedFileRejected) {
    TempDir tmp;
    std::vector<LidarScan> scans(1);
    scans[0].scan_t = 0.0;
    for (int i = 0; i < 10; ++i) scans[0].points.push_back({0, 0, 1, 1e-4 * i});
    save_scans(tmp.path("s.bin"), scans);
    const std::string bytes = read_bytes(tmp.path("s.bin"));
    write_text(tmp.path("cut.bin"), bytes.substr(0, bytes.size() - 7));
    EXPECT_THROW(load_scans(tmp.path("cut.bin")), ParseError);
    write_text(tmp.path("cut_hdr.bin"), bytes.substr(0, 6));
    EXPECT_THROW(load_scans(tmp.path("cut_hdr.bin")), ParseError);
}

TEST(Scans, NonMonotonePointTimesRejected) {
    TempDir tmp;
    std::vector<LidarScan> scans(1);
    scans[0].scan_t = 0.0;
    scans[0].points.push_back({0, 0, 1, 0.002});
    scans[0].points.push_back({0, 0, 1, 0.001});
    save_scans(tmp.path("bad.bin"), scans);
    EXPECT_THROW(load_scans(tmp.path("bad.bin")), OrderingError);
}

TEST(Poses, LoadValidatesPerSubjectMonotonicity) {
    TempDir tmp;
    write_text(tmp.path("p.txt"),
               "0.0 sensor_rig 0 0 0 1 0 0 0\n"
               "0.0 helmet_1 1 0 0 1 0 0 0\n"
               "0.01 sensor_rig 0 0 0 1 0 0 0\n");
    const auto poses = load_poses(tmp.path("p.txt"));
    EXPECT_EQ(poses.size(), 3u);
    EXPECT_EQ(poses[1].pose.child_frame, "M_1");

    write_text(tmp.path("bad.txt"),
               "0.01 helmet_1 0 0 0 1 0 0 0\n"
               "0.01 helmet_1 0 0 0 1 0 0 0\n");
    EXPECT_THROW(load_poses(tmp.path("bad.txt")), OrderingError);
}

TEST(Poses, RoundTripByteIdentical) {
    TempDir tmp;
    std::vector<GroundTruthPose> poses;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        GroundTruthPose g;
        g.t = 0.01 * i;
        g.subject = static_cast<Subject>(i % 3);
        Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
        q.normalize();
        g.pose = RigidTransform(q, {n(rng), n(rng), n(rng)}, frames::world,
                                marker_frame(g.subject));
        poses.push_back(g);
    }
    save_poses(tmp.path("a.txt"), poses);
    save_poses(tmp.path("b.txt"), load_poses(tmp.path("a.txt")));
    EXPECT_EQ(read_bytes(tmp.path("a.txt")), read_bytes(tmp.path("b.txt")));
}

TEST(PoseInterpolation, ExactSampleMidpointAndSlerp) {
    PoseTrack track;
    track.subject = Subject::helmet_1;
    track.times = {0.0, 1.0};
    track.poses.push_back(RigidTransform(Eigen::Quaterniond::Identity(), {0, 0, 0}, "W", "M_1"));
    track.poses.push_back(RigidTransform(Eigen::Quaterniond::Identity(), {2, 0, 0}, "W", "M_1"));

    EXPECT_LT((interpolate_pose(track, 0.0).translation - Eigen::Vector3d(0, 0, 0)).norm(), 1e-15);
    EXPECT_LT((interpolate_pose(track, 1.0).translation - Eigen::Vector3d(2, 0, 0)).norm(), 1e-15);
    EXPECT_LT((interpolate_pose(track, 0.5).translation - Eigen::Vector3d(1, 0, 0)).norm(), 1e-12);

    // Oracle: quaternion slerp midpoint between identity and 90deg-about-z
    // is 45deg-about-z.
    PoseTrack rot;
    rot.subject = Subject::helmet_1;
    rot.times = {0.0, 1.0};
    rot.poses.push_back(RigidTransform(Eigen::Quaterniond::Identity(), {0, 0, 0}, "W", "M_1"));
    rot.poses.push_back(RigidTransform(
        Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ())), {0, 0, 0},
        "W", "M_1"));
    const RigidTransform mid = interpolate_pose(rot, 0.5);
    const Eigen::Quaterniond expected(Eigen::AngleAxisd(M_PI / 4, Eigen::Vector3d::UnitZ()));
    EXPECT_LT(mid.rotation.angularDistance(expected), 1e-9);

    // 10 ms of slack clamps; beyond it throws.
    EXPECT_NO_THROW(interpolate_pose(track, -0.009));
    EXPECT_NO_THROW(interpolate_pose(track, 1.009));
    EXPECT_THROW(interpolate_pose(track, -0.011), OutOfRangeError);
    EXPECT_THROW(interpolate_pose(track, 1.011), OutOfRangeError);
}

TEST(EventBinning, SingleEventPlacement) {
    std::vector<Event> events{Event{3, 4, 10.0, 1}};
    const auto out = bin_events(events, 10.0, 0.05, 10, 260, 346);
    EXPECT_EQ(out.tensor.at(0, 0, 4, 3), 1u);
    EXPECT_EQ(out.tensor.total(), 1u);
    EXPECT_EQ(out.dropped_out_of_bounds, 0u);
}

TEST(EventBinning, DefaultSlicingPutsLateEventInSlice9) {
    // 10 slices over a 50 ms window: t = start + 49 ms lands in slice 9.
    std::vector<Event> events{Event{0, 0, 0.049, 1}, Event{1, 1, 0.050, -1}};
    const auto out = bin_events(events, 0.0, 0.05, 10, 4, 4);
    EXPECT_EQ(out.tensor.at(0, 9, 0, 0), 1u);
    EXPECT_EQ(out.tensor.total(), 1u);  // the event at exactly window end is excluded
}

TEST(EventBinning, CountConservationOnRandomEvents) {
    std::mt19937_64 rng(23);
    std::vector<Event> events;
    for (int i = 0; i < 1000; ++i) {
        Event e;
        e.x = static_cast<std::uint16_t>(rng() % 346);
        e.y = static_cast<std::uint16_t>(rng() % 260);
        e.t = 5.0 + 0.05 * (rng() % 1000) / 1000.0;
        e.p = (rng() % 2 == 0) ? 1 : -1;
        events.push_back(e);
    }
    const auto out = bin_events(events, 5.0, 0.05, 10, 260, 346);
    EXPECT_EQ(out.tensor.total(), 1000u);

    // permutation invariance
    std::vector<Event> shuffled = events;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto out2 = bin_events(shuffled, 5.0, 0.05, 10, 260, 346);
    EXPECT_EQ(out.tensor.values, out2.tensor.values);
}

TEST(EventBinning, DropsOutOfBoundsWithCounter) {
    std::vector<Event> events{Event{300, 4, 0.01, 1}, Event{3, 250, 0.01, -1},
                              Event{3, 4, 0.01, 1}};
    const auto out = bin_events(events, 0.0, 0.05, 10, 100, 100);
    EXPECT_EQ(out.tensor.total(), 1u);
    EXPECT_EQ(out.dropped_out_of_bounds, 2u);
}

TEST(TensorFit, IdentityWhenTargetsMatch) {
    std::vector<Event> events{Event{3, 4, 0.01, 1}};
    const auto t = bin_events(events, 0.0, 0.05, 10, 260, 346).tensor;
    const auto fitted = fit_tensor(t, 260, 346);
    EXPECT_EQ(fitted.values, t.values);
}

TEST(TensorFit, PadPlacesCountsAtDocumentedOffsets) {
    std::vector<Event> events{Event{0, 0, 0.001, 1}, Event{345, 259, 0.001, -1}};
    const auto t = bin_events(events, 0.0, 0.05, 10, 260, 346).tensor;
    const auto padded = fit_tensor(t, 720, 1280);
    // offsets: y (720-260)/2 = 230, x (1280-346)/2 = 467
    EXPECT_EQ(padded.at(0, 0, 230, 467), 1u);
    EXPECT_EQ(padded.at(1, 0, 230 + 259, 467 + 345), 1u);
    EXPECT_EQ(padded.total(), t.total());
}

TEST(TensorFit, CropMatchesIndexMapOracle) {
    std::mt19937_64 rng(31);
    std::vector<Event> events;
    for (int i = 0; i < 2000; ++i)
        events.push_back(Event{static_cast<std::uint16_t>(rng() % 1280),
                               static_cast<std::uint16_t>(rng() % 720), 0.001,
                               (rng() % 2 == 0) ? std::int8_t{1} : std::int8_t{-1}});
    const auto big = bin_events(events, 0.0, 0.05, 10, 720, 1280).tensor;
    const auto small = fit_tensor(big, 260, 346);
    const int oy = (720 - 260) / 2, ox = (1280 - 346) / 2;
    for (int p = 0; p < 2; ++p)
        for (int s = 0; s < 10; ++s)
            for (int y = 0; y < 260; y += 13)
                for (int x = 0; x < 346; x += 7)
                    ASSERT_EQ(small.at(p, s, y, x), big.at(p, s, y + oy, x + ox));
}

TEST(TensorFit, PadThenCropRestoresExactly) {
    std::mt19937_64 rng(37);
    std::vector<Event> events;
    for (int i = 0; i < 3000; ++i)
        events.push_back(Event{static_cast<std::uint16_t>(rng() % 346),
                               static_cast<std::uint16_t>(rng() % 260), 0.001,
                               (rng() % 2 == 0) ? std::int8_t{1} : std::int8_t{-1}});
    const auto t = bin_events(events, 0.0, 0.05, 10, 260, 346).tensor;
    const auto back = fit_tensor(fit_tensor(t, 720, 1280), 260, 346);
    EXPECT_EQ(back.values, t.values);

    // odd difference: extra pad cell at the high end, still restores
    const auto odd = fit_tensor(fit_tensor(t, 263, 349), 260, 346);
    EXPECT_EQ(odd.values, t.values);
}

TEST(Calibration, JsonRoundTripAndMissingFields) {
    TempDir tmp;
    CalibrationSet c;
    c.intrinsics.fx = 320.5;
    c.intrinsics.fy = 321.5;
    c.intrinsics.cx = 173.0;
    c.intrinsics.cy = 130.0;
    c.intrinsics.width = 346;
    c.intrinsics.height = 260;
    c.intrinsics.distortion.k1 = -0.3;
    c.t_c_l = RigidTransform(Eigen::Quaterniond(Eigen::AngleAxisd(0.05, Eigen::Vector3d::UnitX())),
                             {0.0, 0.1, -0.05}, "C", "L");
    c.t_c_ms = RigidTransform(Eigen::Quaterniond::Identity(), {0.0, -0.06, 0.0}, "C", "M_S");
    c.t_c_i = RigidTransform(Eigen::Quaterniond::Identity(), {0.01, 0.0, 0.0}, "C", "I");

    save_calibration(tmp.path("c.json"), c);
    const CalibrationSet loaded = load_calibration(tmp.path("c.json"));
    EXPECT_DOUBLE_EQ(loaded.intrinsics.fx, 320.5);
    EXPECT_DOUBLE_EQ(loaded.intrinsics.distortion.k1, -0.3);
    EXPECT_LT((loaded.t_c_l.translation - c.t_c_l.translation).norm(), 1e-15);
    EXPECT_LT(loaded.t_c_l.rotation.angularDistance(c.t_c_l.rotation), 1e-15);

    write_text(tmp.path("missing.json"), R"({"intrinsics": {"fx": 1.0}})");
    EXPECT_THROW(load_calibration(tmp.path("missing.json")), ParseError);
    write_text(tmp.path("garbage.json"), "not json");
    EXPECT_THROW(load_calibration(tmp.path("garbage.json")), ParseError);
}

TEST(TrackRecords, FormatsParseBack) {
    TempDir tmp;
    TrackRecord2D r2;
    r2.det.t = 1.25;
    r2.det.class_id = 2;
    r2.det.confidence = 0.75;
    r2.det.bbox = {1, 2, 3, 4};
    r2.track_id = 17;
    write_text(tmp.path("t2.txt"), format_track2d(r2) + "\n");
    const auto l2 = load_tracks2d(tmp.path("t2.txt"));
    ASSERT_EQ(l2.size(), 1u);
    EXPECT_EQ(l2[0].track_id, 17);
    EXPECT_DOUBLE_EQ(l2[0].det.bbox.x2, 3.0);

    TrackRecord3D r3;
    r3.t = 2.5;
    r3.track_id = 4;
    r3.class_id = 0;
    r3.position = {1.5, -0.25, 3.0};
    r3.velocity = {0.1, 0.0, -0.2};
    write_text(tmp.path("t3.txt"), format_track3d(r3) + "\n");
    const auto l3 = load_tracks3d(tmp.path("t3.txt"));
    ASSERT_EQ(l3.size(), 1u);
    EXPECT_DOUBLE_EQ(l3[0].position.z(), 3.0);
    EXPECT_DOUBLE_EQ(l3[0].velocity.z(), -0.2);
}
