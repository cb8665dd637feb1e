#include <gtest/gtest.h>

#include <random>

#include "forge/geom.hpp"
#include "oracles.hpp"

using namespace forge;

namespace {

BoxCompound unit_cube() { return BoxCompound::cuboid(Vec3::Constant(0.5)); }

} // namespace

TEST(Transform, InverseComposesToIdentity) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 100; ++k) {
        Transform t = oracle::random_pose(rng, 2.0);
        Transform id = t * t.inverse();
        EXPECT_NEAR(id.translation().norm(), 0.0, 1e-9);
        EXPECT_NEAR(rotation_angle(id.rotation(), Quat::Identity()), 0.0, 1e-7);
        EXPECT_NEAR(t.rotation().norm(), 1.0, 1e-9);
    }
}

TEST(Transform, ApplyMatchesComposition) {
    Transform a = Transform::rot_z(0.3) * Transform::translation(1, 2, 3);
    Transform b = Transform::rot_x(-1.1) * Transform::translation(-0.5, 0.1, 0.0);
    Vec3 p(0.2, -0.7, 1.5);
    EXPECT_LT(((a * b).apply(p) - a.apply(b.apply(p))).norm(), 1e-12);
}

TEST(Collide, DisjointCubes) {
    auto c = unit_cube();
    EXPECT_FALSE(collide(c, Transform{}, c, Transform::translation(2, 0, 0)));
}

TEST(Collide, IdenticalPose) {
    auto c = unit_cube();
    EXPECT_TRUE(collide(c, Transform{}, c, Transform{}));
}

TEST(Collide, RotatedCubeAgreesWithSamplingOracle) {
    auto c = unit_cube();
    Transform b = Transform::translation(1.2, 0, 0) * Transform::rot_z(kPi / 4);
    bool sampled = oracle::sample_collide(c.boxes()[0], Transform{}, c.boxes()[0], b, 1'000'000, 11);
    // frozen from the sampling oracle: the rotated corner reaches x = 1.2 - 0.7071 < 0.5
    EXPECT_TRUE(sampled);
    EXPECT_EQ(collide(c, Transform{}, c, b), sampled);
}

TEST(Collide, ContactEpsilonCountsAsCollision) {
    auto c = unit_cube();
    EXPECT_TRUE(collide(c, Transform{}, c, Transform::translation(1.0 + 0.5e-4, 0, 0)));
    EXPECT_FALSE(collide(c, Transform{}, c, Transform::translation(1.0 + 2e-4, 0, 0)));
}

TEST(Collide, EdgeEdgeSeparation) {
    // two boxes rotated so only an edge-cross-edge axis separates them
    auto c = unit_cube();
    Transform a = Transform::rot_x(kPi / 4);
    Transform b = Transform::translation(0, 0, 0.7071 + 0.7071 + 0.01) * Transform::rot_y(kPi / 4);
    EXPECT_FALSE(collide(c, a, c, b));
    EXPECT_FALSE(oracle::sample_collide(c.boxes()[0], a, c.boxes()[0], b, 200000, 5));
    Transform b2 = Transform::translation(0, 0, 0.7071 + 0.7071 - 0.01) * Transform::rot_y(kPi / 4);
    EXPECT_TRUE(collide(c, a, c, b2));
}

TEST(Collide, Symmetric) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> sz(0.05, 0.4);
    for (int k = 0; k < 500; ++k) {
        auto a = BoxCompound::cuboid(Vec3(sz(rng), sz(rng), sz(rng)));
        auto b = BoxCompound::cuboid(Vec3(sz(rng), sz(rng), sz(rng)));
        Transform pa = oracle::random_pose(rng, 0.4), pb = oracle::random_pose(rng, 0.4);
        EXPECT_EQ(collide(a, pa, b, pb), collide(b, pb, a, pa));
    }
}

TEST(Collide, CompoundAnyPair) {
    BoxCompound l({{Vec3(0.5, 0.1, 0.1), Transform::translation(0.5, 0, 0)}, {Vec3(0.1, 0.5, 0.1), Transform::translation(0, 0.5, 0)}});
    auto small = BoxCompound::cuboid(Vec3::Constant(0.05));
    EXPECT_TRUE(collide(l, Transform{}, small, Transform::translation(0.9, 0, 0)));
    EXPECT_TRUE(collide(l, Transform{}, small, Transform::translation(0, 0.9, 0)));
    EXPECT_FALSE(collide(l, Transform{}, small, Transform::translation(0.6, 0.6, 0)));
}

TEST(BoxCompound, RejectsBadInput) {
    EXPECT_THROW(BoxCompound(std::vector<Box>{}), std::invalid_argument);
    EXPECT_THROW(BoxCompound::cuboid(Vec3(0.1, 0.0, 0.1)), std::invalid_argument);
}

TEST(Pca, AxisAlignedGrid) {
    std::vector<Vec3> pts;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) pts.emplace_back(0.01 * i, 0.01 * j, 0.0);
    RectFrame f = pca_rect_frame(pts);
    EXPECT_LT((f.center - Vec3(0.015, 0.005, 0)).norm(), 1e-12);
    EXPECT_NEAR(std::abs(f.z_axis.z()), 1.0, 1e-12);
    EXPECT_NEAR(f.width, 0.03, 1e-12);
    EXPECT_NEAR(f.height, 0.01, 1e-12);
}

TEST(Pca, RotatedGridKeepsExtents) {
    std::vector<Vec3> pts;
    Transform r = Transform::rot_z(deg2rad(30));
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 2; ++j) pts.push_back(r.apply(Vec3(0.01 * i, 0.01 * j, 0.0)));
    RectFrame f = pca_rect_frame(pts);
    EXPECT_NEAR(f.width, 0.03, 1e-9);
    EXPECT_NEAR(f.height, 0.01, 1e-9);
    EXPECT_NEAR(std::abs(f.x_axis.dot(r.axis(0))), 1.0, 1e-9);
}

TEST(Pca, RoundTripOnKnownRectangle) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Transform frame = Transform::translation(0.3, -0.2, 0.5) * Transform::rot_x(0.4) * Transform::rot_z(1.1);
    const double w = 0.08, h = 0.03;
    std::vector<Vec3> pts;
    for (double sx : {-1.0, 1.0})
        for (double sy : {-1.0, 1.0}) pts.push_back(frame.apply(Vec3(sx * w / 2, sy * h / 2, 0)));
    for (int k = 0; k < 96; ++k) pts.push_back(frame.apply(Vec3(u(rng) * w / 2, u(rng) * h / 2, 0)));
    RectFrame f = pca_rect_frame(pts);
    Transform rec = f.transform();
    double worst = 0;
    for (const auto& p : pts) {
        Vec3 l = rec.inverse().apply(p);
        worst = std::max(worst, std::abs(l.z()));
    }
    EXPECT_LT(worst, 1e-9); // all points reproject onto the recovered plane
    EXPECT_NEAR(std::abs(f.z_axis.dot(frame.axis(2))), 1.0, 1e-9);

    // a regular 10 x 10 lattice spanning the rectangle recovers axes and extents exactly
    std::vector<Vec3> lattice;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) lattice.push_back(frame.apply(Vec3((i / 9.0 - 0.5) * w, (j / 9.0 - 0.5) * h, 0)));
    RectFrame g = pca_rect_frame(lattice);
    EXPECT_LT((g.center - frame.translation()).norm(), 1e-9);
    EXPECT_NEAR(g.width, w, 1e-9);
    EXPECT_NEAR(g.height, h, 1e-9);
    EXPECT_NEAR(std::abs(g.x_axis.dot(frame.axis(0))), 1.0, 1e-9);
}

TEST(Pca, Equivariance) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec3> pts;
        for (int k = 0; k < 40; ++k) pts.emplace_back(u(rng) * 0.05, u(rng) * 0.02, 0.0);
        Transform t = oracle::random_pose(rng, 1.0);
        std::vector<Vec3> moved;
        for (const auto& p : pts) moved.push_back(t.apply(p));
        RectFrame a = pca_rect_frame(pts), b = pca_rect_frame(moved);
        EXPECT_LT((t.apply(a.center) - b.center).norm(), 1e-6);
        EXPECT_NEAR(std::abs(t.apply_dir(a.x_axis).dot(b.x_axis)), 1.0, 1e-6);
        EXPECT_NEAR(std::abs(t.apply_dir(a.z_axis).dot(b.z_axis)), 1.0, 1e-6);
        EXPECT_NEAR(a.width, b.width, 1e-6);
        EXPECT_NEAR(a.height, b.height, 1e-6);
    }
}

TEST(Pca, TieBreakPrefersWorldX) {
    // square: equal variances in-plane
    std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    RectFrame f = pca_rect_frame(pts);
    EXPECT_NEAR(f.x_axis.x(), 1.0, 1e-9);
}

TEST(Pca, Degenerate) {
    EXPECT_THROW(pca_rect_frame({{0, 0, 0}, {1, 0, 0}}), DegeneratePointSet);
    EXPECT_THROW(pca_rect_frame({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}}), DegeneratePointSet);
}
