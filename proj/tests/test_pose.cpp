#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "forge/pose.hpp"

using namespace forge;

namespace {

CameraModel front_camera() {
    CameraModel c;
    c.pose = Transform::translation(0, 0, -0.08);
    return c;
}

double max_error_deg(const BoxCompound& part, const PoseProposals& props, int trials, uint64_t seed, double cell, bool noisy,
                     double* worst_trans) {
    CameraModel cam = front_camera();
    PoseTable table{{3, props}};
    std::mt19937_64 rng(seed);
    double worst = 0;
    *worst_trans = 0;
    for (int t = 0; t < trials; ++t) {
        auto s = fixture::random_view_pose(rng, part, cam, cell, 160);
        PoseLabel l = label_pose(3, part, props, s.part_pose, cam, s.grid);
        Heightmap in = noisy ? degrade(l.label, NoiseConfig{}, seed + t) : l.label;
        PoseEstimate est = estimate_pose(in, table);
        EXPECT_EQ(est.part_id, 3);
        EXPECT_EQ(est.view, l.view);
        auto e = pose_error_modulo_symmetry(est.part_pose, s.part_pose, props[static_cast<int>(est.view)]);
        worst = std::max(worst, rad2deg(e.second));
        *worst_trans = std::max(*worst_trans, e.first);
    }
    return worst;
}

} // namespace

TEST(PrimaryView, Examples) {
    EXPECT_EQ(primary_view({0, 0, 1}), ViewDirection::Top);
    EXPECT_EQ(primary_view({std::sin(deg2rad(30)), 0, std::cos(deg2rad(30))}), ViewDirection::Top);
    EXPECT_EQ(primary_view(Vec3(1, 0, 1).normalized()), ViewDirection::Top);
    EXPECT_EQ(primary_view(Vec3(1, 0, -1).normalized()), ViewDirection::Bottom);
    EXPECT_EQ(primary_view(Vec3(-1, 1, 0).normalized()), ViewDirection::Left);
    EXPECT_EQ(primary_view({0, -1, 0}), ViewDirection::Front);
    EXPECT_EQ(primary_view({0, 0.2, -1}), ViewDirection::Bottom);
}

TEST(CombinedId, DecodeIsExact) {
    for (int p = 0; p <= 20; ++p)
        for (int v = 0; v < kViewCount; ++v) {
            auto id = CombinedId::encode(p, static_cast<ViewDirection>(v));
            EXPECT_EQ(id.part_id(), p);
            EXPECT_EQ(static_cast<int>(id.view()), v);
        }
    EXPECT_EQ(CombinedId::encode(2, ViewDirection::Right).value, 15);
}

TEST(PoseProposals, UnitCubeFaces) {
    auto props = build_pose_proposals(BoxCompound::cuboid(Vec3::Constant(0.5)), {4, 4, 4, 4, 4, 4});
    for (const auto& p : props) {
        EXPECT_NEAR(p.frame.width, 1.0, 1e-12);
        EXPECT_NEAR(p.frame.height, 1.0, 1e-12);
        EXPECT_EQ(p.symmetry, 4);
        Transform f = p.frame.transform();
        EXPECT_LT((f.axis(2) - view_axis(p.view)).norm(), 1e-12);
        EXPECT_NEAR(f.axis(0).cross(f.axis(1)).dot(f.axis(2)), 1.0, 1e-12);
        EXPECT_LT(pose_error(f * p.offset, Transform{}).first, 1e-12);
    }
    EXPECT_LT((props[0].frame.center - Vec3(0, 0, 0.5)).norm(), 1e-12);
}

TEST(PoseProposals, BoxTopFace) {
    auto props = build_pose_proposals(BoxCompound::cuboid(Vec3(0.01, 0.02, 0.03)));
    EXPECT_NEAR(props[0].frame.width, 0.02, 1e-12);
    EXPECT_NEAR(props[0].frame.height, 0.04, 1e-12);
    EXPECT_NEAR(props[static_cast<int>(ViewDirection::Right)].frame.width, 0.04, 1e-12);
    EXPECT_NEAR(props[static_cast<int>(ViewDirection::Right)].frame.height, 0.06, 1e-12);
    EXPECT_EQ(props[3].symmetry, 1);
}

TEST(LabelPose, CombinedIdInGreenChannel) {
    auto part = BoxCompound::cuboid(Vec3::Constant(0.012));
    auto props = build_pose_proposals(part);
    CameraModel cam = front_camera();
    // camera looks along +z; the part's +x face points back at it
    Transform pose = Transform::from_axes(-Vec3::UnitZ(), Vec3::UnitY(), Vec3::UnitX(), Vec3::Zero());
    GridSpec g = camera_grid(cam, 0.12, 0.001, 96);
    PoseLabel l = label_pose(2, part, props, pose, cam, g);
    EXPECT_EQ(l.view, ViewDirection::Right);
    EXPECT_EQ(l.id.value, 15);
    size_t painted = 0;
    for (size_t k = 0; k < l.label.height.size(); ++k)
        if (l.label.height[k] > 0) {
            ++painted;
            EXPECT_EQ(l.label.class_id[k], 15);
        }
    EXPECT_NEAR(static_cast<double>(painted), 24.0 * 24.0, 2 * 24.0 + 1);
}

TEST(LabelPose, OverheadIdentityIsTop) {
    auto part = BoxCompound::cuboid(Vec3(0.02, 0.012, 0.012));
    auto props = build_pose_proposals(part);
    CameraModel cam = fixture::down_camera({0, 0, 0.1});
    GridSpec g = camera_grid(cam, 0.15, 0.001, 128);
    PoseLabel l = label_pose(0, part, props, Transform{}, cam, g);
    EXPECT_EQ(l.view, ViewDirection::Top);
    PoseEstimate est = estimate_pose(l.label, {{0, props}});
    auto e = pose_error(est.part_pose, Transform{});
    EXPECT_LE(e.first, 2 * g.cell);
    EXPECT_LE(rad2deg(e.second), 2.0);
}

TEST(LabelPose, OutOfView) {
    auto part = BoxCompound::cuboid(Vec3::Constant(0.012));
    CameraModel cam = front_camera();
    EXPECT_THROW(label_pose(0, part, build_pose_proposals(part), Transform::translation(0.5, 0, 0), cam, camera_grid(cam, 0.1, 0.001, 64)),
                 PartOutOfView);
}

TEST(LabelPose, SymmetricFaceAnchorsRightHalf) {
    auto part = BoxCompound::cuboid(Vec3::Constant(0.012));
    auto props = build_pose_proposals(part, {4, 4, 4, 4, 4, 4});
    for (double roll : {0.3, 0.3 + kPi / 2}) {
        CameraModel cam = fixture::down_camera({0, 0, 0.1});
        cam.pose = cam.pose * Transform::rot_z(roll);
        PoseLabel l = label_pose(1, part, props, Transform::rot_z(0.1), cam, camera_grid(cam, 0.15, 0.001, 96));
        Vec3 x = cam.pose.inverse().apply_dir(l.frame.axis(0));
        EXPECT_GE(x.x(), std::cos(kPi / 4) - 1e-9);
    }
}

TEST(EstimatePose, Errors) {
    Heightmap empty(GridSpec{});
    EXPECT_THROW(estimate_pose(empty, {}), AmbiguousCluster);
    auto part = BoxCompound::cuboid(Vec3::Constant(0.012));
    auto props = build_pose_proposals(part);
    CameraModel cam = fixture::down_camera({0, 0, 0.1});
    PoseLabel l = label_pose(5, part, props, Transform{}, cam, camera_grid(cam, 0.15, 0.001, 96));
    EXPECT_THROW(estimate_pose(l.label, {{0, props}}), UnknownId);
}

TEST(EstimatePose, RandomRoundTripAsymmetric) {
    auto part = BoxCompound({{Vec3(0.024, 0.012, 0.008), Transform{}}, {Vec3(0.006, 0.006, 0.004), Transform::translation(0.016, 0, 0.012)}});
    double trans = 0;
    double rot = max_error_deg(part, build_pose_proposals(part), 60, 5, 0.001, false, &trans);
    EXPECT_LE(rot, 2.0);
    EXPECT_LE(trans, 0.002);
}

TEST(EstimatePose, RandomRoundTripSymmetricCube) {
    auto part = BoxCompound::cuboid(Vec3::Constant(0.012));
    double trans = 0;
    double rot = max_error_deg(part, build_pose_proposals(part, {4, 4, 4, 4, 4, 4}), 60, 6, 0.001, false, &trans);
    EXPECT_LE(rot, 2.0);
    EXPECT_LE(trans, 0.002);
}

TEST(EstimatePose, DegradedRoundTrip) {
    auto part = BoxCompound::cuboid(Vec3(0.024, 0.012, 0.012));
    double trans = 0;
    double rot = max_error_deg(part, build_pose_proposals(part, {2, 2, 1, 1, 1, 1}), 60, 7, 0.001, true, &trans);
    EXPECT_LE(rot, 5.0);
    EXPECT_LE(trans, 0.004);
}
