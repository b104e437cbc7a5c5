#include <gtest/gtest.h>

#include <random>

#include "vlfuse/fusion.hpp"

using namespace vlfuse;

namespace {

CalibrationSet identity_calib() {
    CalibrationSet c;
    c.intrinsics.fx = c.intrinsics.fy = 400;
    c.intrinsics.cx = 320;
    c.intrinsics.cy = 240;
    c.intrinsics.width = 640;
    c.intrinsics.height = 480;
    c.t_c_l = RigidTransform::identity(frames::camera);
    c.t_c_l.child_frame = frames::lidar;
    c.t_c_ms = RigidTransform::identity(frames::camera);
    c.t_c_ms.child_frame = frames::sensor_markers;
    c.t_c_i = RigidTransform::identity(frames::camera);
    c.t_c_i.child_frame = frames::imu;
    return c;
}

CalibrationSet offset_calib() {
    CalibrationSet c = identity_calib();
    c.t_c_l = RigidTransform(
        Eigen::Quaterniond(Eigen::AngleAxisd(0.03, Eigen::Vector3d::UnitY())),
        {0.02, -0.08, 0.01}, frames::camera, frames::lidar);
    return c;
}

LidarPoint lidar_point(const Eigen::Vector3d& p, double t = 0.0) {
    return {static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), t};
}

}  // namespace

TEST(PointsInBbox, KeepsCentreRayDropsBehindCamera) {
    const CalibrationSet calib = identity_calib();
    const BBox bbox{300, 220, 340, 260};  // centred on the principal point
    LidarScan scan;
    scan.points.push_back(lidar_point({0, 0, 3}));    // centre ray at 3 m
    scan.points.push_back(lidar_point({0, 0, -3}));   // behind camera
    scan.points.push_back(lidar_point({5, 0, 3}));    // projects far outside
    const auto kept = points_in_bbox(scan, calib, bbox);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_NEAR(kept[0].pixel.u, 320, 1e-12);
    EXPECT_NEAR(kept[0].p_cam.z(), 3.0, 1e-6);
}

// Oracle: forward construction with a non-trivial extrinsic; points built
// to land inside or outside by projecting through the same chain the
// filter must invert.
TEST(PointsInBbox, CountsMatchForwardProjectionOracle) {
    const CalibrationSet calib = offset_calib();
    const RigidTransform t_l_c = invert(calib.t_c_l);
    const BBox bbox{250, 180, 390, 300};
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> in_u(252, 388), in_v(182, 298);
    std::uniform_real_distribution<double> out_u(400, 630), out_v(10, 470);
    std::uniform_real_distribution<double> depth(1.0, 8.0);

    LidarScan scan;
    int expected_inside = 0;
    for (int i = 0; i < 200; ++i) {
        const bool inside = i % 5 == 0;  // 40 of 200
        Pixel px = inside ? Pixel{in_u(rng), in_v(rng)} : Pixel{out_u(rng), out_v(rng)};
        const Eigen::Vector3d p_cam = back_project(calib.intrinsics, px, depth(rng));
        scan.points.push_back(lidar_point(transform_point(t_l_c, p_cam)));
        if (inside) ++expected_inside;
    }
    EXPECT_EQ(expected_inside, 40);
    const auto kept = points_in_bbox(scan, calib, bbox);
    EXPECT_EQ(static_cast<int>(kept.size()), expected_inside);
}

// Oracle: membership decided by the forward distorted projection itself.
TEST(PointsInBbox, AppliesDistortionWhenPresent) {
    CalibrationSet calib = identity_calib();
    calib.intrinsics.distortion.k1 = -0.25;
    calib.intrinsics.distortion.k2 = 0.05;
    const BBox bbox{180, 150, 460, 330};
    LidarScan scan;
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> xy(-1.2, 1.2), depth(2.0, 6.0);
    std::vector<char> expected;
    for (int i = 0; i < 300; ++i) {
        const Eigen::Vector3d p_cam(xy(rng), xy(rng), depth(rng));
        const Pixel px = project(calib.intrinsics, p_cam, true);
        expected.push_back(px.u > bbox.x1 && px.u < bbox.x2 && px.v > bbox.y1 &&
                           px.v < bbox.y2);
        scan.points.push_back(lidar_point(p_cam));
    }
    const auto kept = points_in_bbox(scan, calib, bbox);
    const std::size_t want =
        static_cast<std::size_t>(std::count(expected.begin(), expected.end(), 1));
    EXPECT_EQ(kept.size(), want);
    EXPECT_GT(want, 10u);
}

TEST(CentralSquare, RatioLawBoundaries) {
    FusionParams params;
    // Full-image box: k = k_min.
    EXPECT_DOUBLE_EQ(central_square_ratio(params, 640.0 * 480.0, 640.0 * 480.0), params.k_min);
    // Vanishing box: k -> k_max = 1.
    EXPECT_NEAR(central_square_ratio(params, 1e-9, 640.0 * 480.0), params.k_max, 1e-9);
    // Midpoint of the linear law.
    EXPECT_DOUBLE_EQ(central_square_ratio(params, 0.5 * 640 * 480, 640.0 * 480.0), 0.625);
}

TEST(CentralSquare, RatioNonIncreasingAndBounded) {
    FusionParams params;
    double prev = 2.0;
    for (double rho = 0.0; rho <= 1.2; rho += 0.05) {
        const double k = central_square_ratio(params, rho * 1000.0, 1000.0);
        EXPECT_LE(k, prev + 1e-15);
        EXPECT_GE(k, params.k_min);
        EXPECT_LE(k, params.k_max);
        prev = k;
    }
}

// Oracle: explicit point-in-square membership recomputed from the law.
TEST(CentralSquare, FilterMatchesGeometricOracle) {
    FusionParams params;
    const int w = 640, h = 480;
    const BBox bbox{100, 80, 500, 464};  // area ratio 0.5
    const double k = 0.625;
    const double side = std::sqrt(k * bbox.area());
    const double cu = bbox.center_u(), cv = bbox.center_v();
    const BBox square{std::max(cu - side / 2, bbox.x1), std::max(cv - side / 2, bbox.y1),
                      std::min(cu + side / 2, bbox.x2), std::min(cv + side / 2, bbox.y2)};

    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> uu(bbox.x1 + 1, bbox.x2 - 1),
        vv(bbox.y1 + 1, bbox.y2 - 1);
    std::vector<ProjectedPoint> pts;
    for (int i = 0; i < 500; ++i)
        pts.push_back(ProjectedPoint{{0, 0, 1}, Pixel{uu(rng), vv(rng)}});

    const auto filtered = central_square_filter(pts, bbox, w, h, params);
    std::size_t expected = 0;
    for (const auto& p : pts)
        if (p.pixel.u > square.x1 && p.pixel.u < square.x2 && p.pixel.v > square.y1 &&
            p.pixel.v < square.y2)
            ++expected;
    EXPECT_EQ(filtered.size(), expected);
    EXPECT_GT(filtered.size(), 0u);
    EXPECT_LT(filtered.size(), pts.size());

    // Monotone: the filtered set is a subset of its input.
    for (const auto& f : filtered) {
        const bool found = std::any_of(pts.begin(), pts.end(), [&](const ProjectedPoint& p) {
            return p.pixel.u == f.pixel.u && p.pixel.v == f.pixel.v;
        });
        EXPECT_TRUE(found);
    }
}

TEST(MedianPoint, Examples) {
    std::vector<ProjectedPoint> one{{{1.5, -2.0, 4.0}, {}}};
    const auto m1 = median_point(one, 1);
    ASSERT_TRUE(m1.has_value());
    EXPECT_LT((*m1 - Eigen::Vector3d(1.5, -2.0, 4.0)).norm(), 1e-15);

    std::vector<ProjectedPoint> three{{{0, 0, 1}, {}}, {{0, 0, 2}, {}}, {{0, 0, 9}, {}}};
    const auto m3 = median_point(three, 3);
    ASSERT_TRUE(m3.has_value());
    EXPECT_DOUBLE_EQ(m3->z(), 2.0);

    EXPECT_FALSE(median_point(three, 4).has_value());  // too few points
    EXPECT_FALSE(median_point({}, 1).has_value());
}

// Oracle: per-axis full sort.
TEST(MedianPoint, MatchesSortOracleAndStaysInRange) {
    std::mt19937_64 rng(47);
    std::normal_distribution<double> n(0.0, 2.0);
    std::vector<ProjectedPoint> pts;
    for (int i = 0; i < 100; ++i) pts.push_back({{n(rng), n(rng), n(rng) + 5.0}, {}});

    const auto med = median_point(pts, 3);
    ASSERT_TRUE(med.has_value());
    for (int a = 0; a < 3; ++a) {
        std::vector<double> axis;
        for (const auto& p : pts) axis.push_back(p.p_cam[a]);
        std::sort(axis.begin(), axis.end());
        EXPECT_DOUBLE_EQ((*med)[a], axis[(axis.size() - 1) / 2]);
        EXPECT_GE((*med)[a], axis.front());
        EXPECT_LE((*med)[a], axis.back());
    }

    // Permutation invariance.
    std::shuffle(pts.begin(), pts.end(), rng);
    const auto med2 = median_point(pts, 3);
    ASSERT_TRUE(med2.has_value());
    EXPECT_LT((*med - *med2).norm(), 1e-15);
}

TEST(SelectScan, NearestWithinToleranceAndTieBreak) {
    std::vector<LidarScan> scans(3);
    scans[0].scan_t = 1.0;
    scans[1].scan_t = 1.1266;
    scans[2].scan_t = 1.2532;

    EXPECT_EQ(select_scan(scans, 1.1266, 0.063), &scans[1]);          // exact
    EXPECT_EQ(select_scan(scans, 1.06, 0.063), &scans[0]);            // nearest
    EXPECT_EQ(select_scan(scans, 1.5, 0.063), nullptr);               // 247 ms away
    EXPECT_EQ(select_scan({}, 1.0, 0.063), nullptr);

    // Equidistant query (exactly representable offsets): earlier scan wins.
    std::vector<LidarScan> pair(2);
    pair[0].scan_t = 1.0;
    pair[1].scan_t = 1.5;
    EXPECT_EQ(select_scan(pair, 1.25, 0.3), &pair[0]);
}

// Scene invariant: cylinder of radius 0.3 m in front of a wall 3 m behind
// it. When at least 60% of the in-square points are on the cylinder, the
// median depth stays within one radius of the cylinder axis.
TEST(Fusion, CylinderSceneMedianDepthWithinRadius) {
    const CalibrationSet calib = identity_calib();
    FusionParams params;
    const double r = 0.3, zc = 4.0, z_wall = 7.0;
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> phi(-M_PI / 2, M_PI / 2);
    std::uniform_real_distribution<double> yy(-0.8, 0.8);

    LidarScan scan;
    for (int i = 0; i < 140; ++i) {  // 70% cylinder
        const double a = phi(rng);
        scan.points.push_back(lidar_point({r * std::sin(a), yy(rng), zc - r * std::cos(a)}));
    }
    std::uniform_real_distribution<double> wall_x(-1.5, 1.5);
    for (int i = 0; i < 60; ++i)  // background wall, mostly outside the box
        scan.points.push_back(lidar_point({wall_x(rng), yy(rng), z_wall}));

    // Tight bbox of the cylinder silhouette.
    const double half_angle = std::asin(r / zc);
    const double half_width = calib.intrinsics.fx * std::tan(half_angle);
    const BBox bbox{320 - half_width, 240 + 400 * (-0.8) / zc, 320 + half_width,
                    240 + 400 * (0.8) / zc};

    const auto inside = points_in_bbox(scan, calib, bbox);
    const auto filtered = central_square_filter(inside, bbox, 640, 480, params);
    ASSERT_GE(filtered.size(), 3u);
    std::size_t on_cylinder = 0;
    for (const auto& p : filtered)
        if (p.p_cam.z() < zc + r) ++on_cylinder;
    ASSERT_GE(static_cast<double>(on_cylinder), 0.6 * static_cast<double>(filtered.size()));

    const auto med = median_point(filtered, params.min_points);
    ASSERT_TRUE(med.has_value());
    EXPECT_LE(std::abs(med->z() - zc), 0.3);
}
