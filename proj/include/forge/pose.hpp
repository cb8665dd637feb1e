#pragma once

#include <array>
#include <map>
#include <stdexcept>
#include <string>

#include "forge/geom.hpp"
#include "forge/grasp.hpp"
#include "forge/render.hpp"

namespace forge {

/// Primary view directions along the part frame axes. The numeric order doubles as tie priority.
enum class ViewDirection : int { Top = 0, Bottom = 1, Left = 2, Right = 3, Front = 4, Back = 5 };

inline constexpr int kViewCount = 6;

inline const char* view_name(ViewDirection v) {
    static constexpr const char* names[] = {"top", "bottom", "left", "right", "front", "back"};
    return names[static_cast<int>(v)];
}

/// Outward axis of a view in the part frame.
inline Vec3 view_axis(ViewDirection v) {
    switch (v) {
    case ViewDirection::Top: return Vec3::UnitZ();
    case ViewDirection::Bottom: return -Vec3::UnitZ();
    case ViewDirection::Left: return -Vec3::UnitX();
    case ViewDirection::Right: return Vec3::UnitX();
    case ViewDirection::Front: return -Vec3::UnitY();
    default: return Vec3::UnitY();
    }
}

/// Classifies a direction (from the part toward the viewer, in the part frame) by its nearest axis.
/// Exact ties go to the lower view id.
inline ViewDirection primary_view(const Vec3& dir) {
    Vec3 d = dir.normalized();
    int best = 0;
    double best_dot = -2.0;
    for (int v = 0; v < kViewCount; ++v) {
        double dot = d.dot(view_axis(static_cast<ViewDirection>(v)));
        if (dot > best_dot + 1e-9) {
            best_dot = dot;
            best = v;
        }
    }
    return static_cast<ViewDirection>(best);
}

struct CombinedId {
    int value = 0;

    static CombinedId encode(int part_id, ViewDirection view) { return {static_cast<int>(view) + kViewCount * part_id}; }
    int part_id() const { return value / kViewCount; }
    ViewDirection view() const { return static_cast<ViewDirection>(value % kViewCount); }
};

struct PoseProposal {
    ViewDirection view = ViewDirection::Top;
    RectFrame frame;   // on the bounding-box face, in the part frame; z is the outward face normal
    Transform offset;  // proposal frame -> part frame: part_pose = proposal_pose * offset
    int symmetry = 1;  // rotational symmetry order about the face normal
};

using PoseProposals = std::array<PoseProposal, kViewCount>;

/// One proposal per face of the part's axis-aligned bounding box.
inline PoseProposals build_pose_proposals(const BoxCompound& part, const std::array<int, kViewCount>& symmetry = {1, 1, 1, 1, 1, 1}) {
    if (part.empty()) throw std::invalid_argument("build_pose_proposals: empty part");
    auto [lo, hi] = part.aabb();
    const Vec3 c = 0.5 * (lo + hi);
    const Vec3 size = hi - lo;
    const Vec3 X = Vec3::UnitX(), Y = Vec3::UnitY(), Z = Vec3::UnitZ();
    PoseProposals out;
    for (int v = 0; v < kViewCount; ++v) {
        auto view = static_cast<ViewDirection>(v);
        Vec3 n = view_axis(view);
        Vec3 x, y;
        switch (view) {
        case ViewDirection::Top: x = X; y = Y; break;
        case ViewDirection::Bottom: x = X; y = -Y; break;
        case ViewDirection::Right: x = Y; y = Z; break;
        case ViewDirection::Left: x = -Y; y = Z; break;
        case ViewDirection::Back: x = -X; y = Z; break;
        default: x = X; y = Z; break;
        }
        RectFrame f;
        f.center = c + n.cwiseProduct(0.5 * size);
        f.x_axis = x;
        f.y_axis = y;
        f.z_axis = n;
        f.width = x.cwiseAbs().dot(size);
        f.height = y.cwiseAbs().dot(size);
        out[v] = {view, f, f.transform().inverse(), std::max(1, symmetry[v])};
    }
    return out;
}

/// Proposal tables keyed by part id.
using PoseTable = std::map<int, PoseProposals>;

struct PartOutOfView : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AmbiguousCluster : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnknownId : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Heightmap grid perpendicular to the camera axis: grid z points back toward the camera, grid x
/// along the image right, and the grid plane lies `distance` in front of the camera.
inline GridSpec camera_grid(const CameraModel& cam, double distance, double cell, int n) {
    Transform center = cam.pose * Transform::from_axes(Vec3::UnitX(), -Vec3::UnitY(), -Vec3::UnitZ(), Vec3(0, 0, distance));
    return GridSpec::centered(center, cell, n, n);
}

/// Camera distance interval in which the part spans the given fraction range of the image width.
inline std::pair<double, double> view_distance_interval(const BoxCompound& part, const CameraModel& cam, double min_frac = 0.25,
                                                        double max_frac = 0.40) {
    auto [lo, hi] = part.aabb();
    double s = (hi - lo).maxCoeff();
    return {cam.focal * s / (max_frac * cam.width), cam.focal * s / (min_frac * cam.width)};
}

struct PoseLabel {
    Heightmap label;
    ViewDirection view = ViewDirection::Top;
    CombinedId id;
    Transform frame; // world frame of the rendered proposal (after symmetry anchoring)
};

/// Rotation index k in [0, order) minimizing the image-plane angle between frame x and camera right.
inline int symmetry_anchor(const Transform& frame, int order, const CameraModel& cam) {
    if (order <= 1) return 0;
    const Transform to_cam = cam.pose.inverse();
    int best = 0;
    double best_angle = 1e300;
    for (int k = 0; k < order; ++k) {
        Transform f = frame * Transform::rot_z(2.0 * kPi * k / order);
        Vec3 xc = to_cam.apply_dir(f.axis(0));
        double a = std::abs(std::atan2(xc.y(), xc.x()));
        if (a < best_angle - 1e-9) {
            best_angle = a;
            best = k;
        }
    }
    return best;
}

/// Renders the view-appropriate pose proposal of a part into a label heightmap.
inline PoseLabel label_pose(int part_id, const BoxCompound& body, const PoseProposals& proposals, const Transform& part_pose,
                            const CameraModel& cam, const GridSpec& grid) {
    auto [lo, hi] = body.aabb();
    for (int k = 0; k < 8; ++k) {
        Vec3 corner((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(), (k & 4) ? hi.z() : lo.z());
        auto px = cam.project(part_pose.apply(corner));
        if (!px || px->x() < 0 || px->y() < 0 || px->x() > cam.width || px->y() > cam.height)
            throw PartOutOfView("part " + std::to_string(part_id) + " not fully in view");
    }
    Vec3 center_w = part_pose.apply(0.5 * (lo + hi));
    Vec3 to_cam_part = part_pose.inverse().apply_dir(cam.pose.translation() - center_w);
    ViewDirection view = primary_view(to_cam_part);
    const PoseProposal& p = proposals[static_cast<int>(view)];

    Transform frame = part_pose * p.frame.transform();
    int k = symmetry_anchor(frame, p.symmetry, cam);
    if (k) frame = frame * Transform::rot_z(2.0 * kPi * k / p.symmetry);

    PoseLabel out{Heightmap(grid), view, CombinedId::encode(part_id, view), frame};
    auto samples = rasterize_rect(grid, {frame, p.frame.width, p.frame.height, out.id.value});
    paint_rect(out.label, samples, out.id.value);
    return out;
}

struct PoseEstimate {
    int part_id = 0;
    ViewDirection view = ViewDirection::Top;
    Transform proposal_frame; // recovered proposal frame (world)
    Transform part_pose;      // world
};

/// Recovers the part pose from a single-proposal label.
inline PoseEstimate estimate_pose(const Heightmap& label, const PoseTable& table) {
    auto clusters = cluster_cells(label);
    if (clusters.size() != 1)
        throw AmbiguousCluster("expected exactly one proposal cluster, found " + std::to_string(clusters.size()));
    const auto& cells = clusters.front();
    RectFrame f;
    try {
        f = cluster_frame(label, cells, label.grid.origin.axis(2));
    } catch (const DegeneratePointSet& e) {
        throw AmbiguousCluster(e.what());
    }
    CombinedId id{majority_class(label, cells)};
    auto it = table.find(id.part_id());
    if (it == table.end()) throw UnknownId("unknown part id in combined id " + std::to_string(id.value));
    const PoseProposal& p = it->second[static_cast<int>(id.view())];
    PoseEstimate out;
    out.part_id = id.part_id();
    out.view = id.view();
    out.proposal_frame = f.transform();
    out.part_pose = out.proposal_frame * p.offset;
    return out;
}

/// Symmetry-reduced pose error: minimum over the rotations of the observed view's symmetry group.
inline std::pair<double, double> pose_error_modulo_symmetry(const Transform& estimate, const Transform& truth, const PoseProposal& p) {
    std::pair<double, double> best{1e300, 1e300};
    const Transform face = p.frame.transform();
    for (int k = 0; k < p.symmetry; ++k) {
        Transform sym = face * Transform::rot_z(2.0 * kPi * k / p.symmetry) * face.inverse();
        auto e = pose_error(estimate, truth * sym);
        if (e.second < best.second || (e.second == best.second && e.first < best.first)) best = e;
    }
    return best;
}

} // namespace forge
