#pragma once

// Small hand-built scenes shared by the unit and acceptance tests.

#include <random>

#include "forge/assembly.hpp"
#include "forge/grasp.hpp"
#include "forge/pose.hpp"
#include "forge/regrasp.hpp"
#include "forge/render.hpp"

namespace fixture {

using namespace forge;

inline FingerModel fingers() {
    FingerModel f;
    f.jaw = BoxCompound({{Vec3(0.003, 0.005, 0.025), Transform::translation(0.003, 0, -0.025)}});
    f.body = BoxCompound({{Vec3(0.045, 0.012, 0.01), Transform::translation(0, 0, -0.06)},
                          {Vec3(0.02, 0.02, 0.09), Transform::translation(0, 0, -0.16)}});
    f.finger_width = 0.01;
    f.max_opening = 0.06;
    return f;
}

/// Camera at `eye` looking straight down the world -z axis, image right = world +x.
inline CameraModel down_camera(const Vec3& eye, int w = 320, int h = 240, double f = 300.0) {
    CameraModel c;
    c.pose = Transform::from_axes(Vec3::UnitX(), -Vec3::UnitY(), -Vec3::UnitZ(), eye);
    c.width = w;
    c.height = h;
    c.focal = f;
    c.cx = w / 2.0;
    c.cy = h / 2.0;
    return c;
}

/// Box of the given size with its frame at the bottom-face center.
inline BoxCompound block(double sx, double sy, double sz) {
    return BoxCompound({{Vec3(sx / 2, sy / 2, sz / 2), Transform::translation(0, 0, sz / 2)}});
}

/// Top-down grasp closing along the part y axis, tips `depth` below the top face.
inline GraspDefinition top_grasp(int cls, double sy, double sz, double depth = 0.008, double x = 0.0) {
    Transform tip = Transform::from_axes(Vec3::UnitY(), Vec3::UnitX(), -Vec3::UnitZ(), Vec3(x, 0, sz - depth));
    return GraspDefinition::single(cls, tip, sy + 0.002);
}

/// Same as top_grasp but sliding along the part x axis between x0 and x1.
inline GraspDefinition top_range(int cls, double sy, double sz, double x0, double x1, double depth = 0.008) {
    Transform a = Transform::from_axes(Vec3::UnitY(), Vec3::UnitX(), -Vec3::UnitZ(), Vec3(x0, 0, sz - depth));
    Transform b = Transform::from_axes(Vec3::UnitY(), Vec3::UnitX(), -Vec3::UnitZ(), Vec3(x1, 0, sz - depth));
    return GraspDefinition::range(cls, a, b, sy + 0.002);
}

inline Transform random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Transform(Quat(n(rng), n(rng), n(rng), n(rng)).normalized(), Vec3::Zero());
}

struct ViewSample {
    Transform part_pose;
    GridSpec grid;
};

/// Random part pose in front of `cam` at a distance inside the view interval, fully in view, with a
/// camera-aligned grid placed behind the part.
inline ViewSample random_view_pose(std::mt19937_64& rng, const BoxCompound& part, const CameraModel& cam, double cell, int n) {
    auto [dmin, dmax] = view_distance_interval(part, cam);
    auto [lo, hi] = part.aabb();
    const Vec3 mid = 0.5 * (lo + hi);
    const double diag = (hi - lo).norm();
    std::uniform_real_distribution<double> dist(dmin, dmax), lateral(-0.15, 0.15);
    for (;;) {
        Transform rot = random_rotation(rng);
        double d = dist(rng);
        Vec3 center_cam(lateral(rng) * d * cam.width / (2 * cam.focal), lateral(rng) * d * cam.height / (2 * cam.focal), d);
        Vec3 center = cam.pose.apply(center_cam);
        Transform pose(rot.rotation(), center - rot.apply_dir(mid));
        bool inside = true;
        for (int k = 0; k < 8 && inside; ++k) {
            Vec3 c((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(), (k & 4) ? hi.z() : lo.z());
            auto px = cam.project(pose.apply(c));
            inside = px && px->x() >= 0 && px->y() >= 0 && px->x() <= cam.width && px->y() <= cam.height;
        }
        if (!inside) continue;
        return {pose, camera_grid(cam, d + diag, cell, n)};
    }
}

inline Box box_between(const Vec3& lo, const Vec3& hi) { return {0.5 * (hi - lo), Transform::translation(0.5 * (lo + hi))}; }

/// 100 x 100 x 10 mm plate with its top face at z = 0.
inline std::vector<Box> plate(double half = 0.05) { return {box_between({-half, -half, -0.01}, {half, half, 0.0})}; }

/// 24 mm cube with an 8 mm nub on its -x face; frame at the bottom-face center.
inline BoxCompound nub_block() {
    return BoxCompound({box_between({-0.012, -0.012, 0.0}, {0.012, 0.012, 0.024}), box_between({-0.020, -0.004, 0.004}, {-0.012, 0.004, 0.012})});
}

/// Plate with a tunnelled wall on the -x side and a rim on the +x side.
inline BoxCompound nub_base() {
    auto b = plate();
    b.push_back(box_between({-0.034, -0.020, 0.0}, {-0.013, -0.005, 0.030}));
    b.push_back(box_between({-0.034, 0.005, 0.0}, {-0.013, 0.020, 0.030}));
    b.push_back(box_between({-0.034, -0.005, 0.0}, {-0.013, 0.005, 0.003}));
    b.push_back(box_between({-0.034, -0.005, 0.013}, {-0.013, 0.005, 0.030}));
    b.push_back(box_between({0.040, -0.050, 0.0}, {0.048, 0.050, 0.010}));
    return BoxCompound(b);
}

struct GeneratedDesign {
    AssemblyDesign design;
    GraspSets grasps;
};

/// Single cube on a small plate among random obstacles merged into the base.
inline GeneratedDesign random_design(std::mt19937_64& rng, const FingerModel& fingers) {
    std::uniform_real_distribution<double> size(0.016, 0.024), pos(-0.03, 0.03), hz(0.0, 0.04), half(0.003, 0.015);
    std::uniform_int_distribution<int> count(2, 6);
    double s = size(rng);
    GeneratedDesign g;
    g.design.parts.push_back({1, "cube", block(s, s, s), Transform::translation(0, 0, 0.0005)});
    g.grasps[1] = {top_grasp(1, s, s)};
    std::vector<Box> base = plate(0.035);
    const auto& part = g.design.parts[0];
    const Transform tip = part.goal * g.grasps[1][0].pose_a;
    const BoxCompound fb = fingers.at_opening(g.grasps[1][0].opening);
    int n = count(rng);
    for (int k = 0; k < n; ++k) {
        Vec3 c(pos(rng), pos(rng), hz(rng)), h(half(rng), half(rng), half(rng));
        Box b{h, Transform::translation(c)};
        BoxCompound one({b});
        if (separation(one, {}, part.body, part.goal) < 0.001) continue;
        if (collide(one, {}, fb, tip) || collide(one, {}, fb, tip * Transform::rot_z(kPi))) continue;
        base.push_back(b);
    }
    g.design.base = BoxCompound(base);
    return g;
}

/// Random graph of up to 200 nodes whose edges respect the regrasp and repose adjacency rules.
inline RegraspGraph random_regrasp_graph(std::mt19937_64& rng) {
    RegraspGraph g;
    std::uniform_int_distribution<int> nn(2, 200), sample(0, 5), pose(0, 9), grip(0, 1);
    const int n = nn(rng);
    for (int v = 0; v < n; ++v) g.add_node({sample(rng), pose(rng), grip(rng)});
    std::uniform_real_distribution<double> u(0, 1);
    const double density = 0.5 + 3.0 * u(rng); // expected incident edges per node
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto& na = g.nodes()[a];
            const auto& nb = g.nodes()[b];
            const bool regrasp = na.pose == nb.pose && na.gripper != nb.gripper;
            const bool repose = na.sample == nb.sample && na.gripper == nb.gripper;
            if (!regrasp && !repose) continue;
            if (u(rng) < density / 20.0) g.add_edge(regrasp ? RegraspEdge::Kind::Regrasp : RegraspEdge::Kind::Repose, a, b);
        }
    return g;
}

} // namespace fixture
