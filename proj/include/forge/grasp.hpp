#pragma once

#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "forge/geom.hpp"
#include "forge/render.hpp"

namespace forge {

/// Parallel-jaw fingers in their tip frame: origin midway between the fingertips, +x the closing
/// direction, +z the approach direction (from the wrist toward the tips).
struct FingerModel {
    BoxCompound jaw;  // the +x jaw with its inner face on x = 0
    BoxCompound body; // palm and arm stand-in, fixed in the tip frame
    double finger_width = 0.01;
    double max_opening = 0.06;

    /// Jaws opened to `opening` plus the fixed body, in the tip frame.
    BoxCompound at_opening(double opening) const {
        const Transform right = Transform::translation(0.5 * opening, 0, 0);
        const Transform left = Transform::rot_z(kPi) * right;
        BoxCompound c = BoxCompound(place(jaw, right)).merged(jaw, left);
        if (!body.empty()) c = c.merged(body);
        return c;
    }

private:
    static std::vector<Box> place(const BoxCompound& b, const Transform& t) {
        std::vector<Box> out;
        for (const auto& x : b.boxes()) out.push_back({x.half_extents, t * x.pose});
        return out;
    }
};

struct GraspDefinition {
    enum class Kind { Single, Range };
    int part_class = 0;
    Kind kind = Kind::Single;
    Transform pose_a; // tip frame in the part frame (the single pose, or the first endpoint)
    Transform pose_b; // second endpoint for ranges
    double opening = 0.03;

    static GraspDefinition single(int cls, const Transform& pose, double opening) {
        return {cls, Kind::Single, pose, pose, opening};
    }
    static GraspDefinition range(int cls, const Transform& a, const Transform& b, double opening) {
        if (rotation_angle(a.rotation(), b.rotation()) > 1e-9)
            throw std::invalid_argument("GraspDefinition: range endpoints must differ only by translation");
        return {cls, Kind::Range, a, b, opening};
    }

    GraspDefinition flipped() const {
        GraspDefinition g = *this;
        g.pose_a = pose_a * Transform::rot_z(kPi);
        g.pose_b = pose_b * Transform::rot_z(kPi);
        return g;
    }
    /// Tip pose at parameter t in [0, 1] along a range.
    Transform at(double t) const { return Transform::interpolate(pose_a, pose_b, t); }
};

/// Each authored grasp contributes itself and its 180-degree flip about the tip z axis.
inline std::vector<GraspDefinition> expand_grasp_set(const std::vector<GraspDefinition>& defs) {
    std::vector<GraspDefinition> out;
    out.reserve(defs.size() * 2);
    for (const auto& d : defs) {
        out.push_back(d);
        out.push_back(d.flipped());
    }
    return out;
}

/// Discrete grasp used by the planners: singles give one sample, ranges give endpoints plus midpoint.
struct GraspSample {
    int def_index = 0;
    Transform tip; // in the part frame
    double opening = 0.0;
};

inline std::vector<GraspSample> grasp_samples(const std::vector<GraspDefinition>& expanded) {
    std::vector<GraspSample> out;
    for (int k = 0; k < static_cast<int>(expanded.size()); ++k) {
        const auto& d = expanded[k];
        if (d.kind == GraspDefinition::Kind::Single) {
            out.push_back({k, d.pose_a, d.opening});
        } else {
            for (double t : {0.0, 0.5, 1.0}) out.push_back({k, d.at(t), d.opening});
        }
    }
    return out;
}

struct LabelCell {
    int i, j;
    double height;
    double gradient;
};

struct GraspProposal {
    RectFrame frame; // x = closing direction, z = approach; width/height are the rectangle extents
    int part_class = 0;
    std::vector<LabelCell> cells;

    double width() const { return frame.width; }
    double height() const { return frame.height; }
};

struct ScenePart {
    int part_class = 0;
    const BoxCompound* body = nullptr;
    Transform pose;
};

using GraspSets = std::map<int, std::vector<GraspDefinition>>;

struct MissingGraspSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoProposalForClass : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GraspLabelConfig {
    int range_steps = 5;
    double max_tilt = deg2rad(60.0); // approach axes steeper than this from the view axis are not labeled
};

/// A proposal produced by the label generator, before rasterization.
struct GeneratedProposal {
    int part_index = 0;
    int part_class = 0;
    int def_index = 0;          // into the expanded grasp set of the part
    Transform frame;            // world frame after the right-half convention
    double width = 0.0;         // opening
    double height = 0.0;        // finger width + span
    double opening = 0.0;
    std::vector<Transform> placements; // valid finger tip poses of the run (world)
    std::vector<RectSample> footprint;
};

struct GraspLabel {
    Heightmap label;
    std::vector<GeneratedProposal> proposals; // the ones rendered into the label
};

namespace detail {

inline std::vector<std::pair<int, int>> dilate(const std::vector<RectSample>& cells, int nx, int ny) {
    std::vector<std::pair<int, int>> out;
    for (const auto& c : cells)
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                int i = c.i + di, j = c.j + dj;
                if (i >= 0 && j >= 0 && i < nx && j < ny) out.emplace_back(i, j);
            }
    return out;
}

} // namespace detail

/// Generates the grasp-proposal label for a scene.
inline GraspLabel label_scene(const std::vector<ScenePart>& parts, const GraspSets& grasp_sets, const FingerModel& fingers,
                              const Scene& environment, const CameraModel& camera, const GridSpec& grid,
                              const GraspLabelConfig& cfg = {}) {
    for (const auto& p : parts)
        if (!grasp_sets.count(p.part_class) || grasp_sets.at(p.part_class).empty())
            throw MissingGraspSet("no grasp set for part class " + std::to_string(p.part_class));

    std::vector<GeneratedProposal> candidates;
    const Vec3 cam_right = camera.right();
    const Vec3 cam_fwd = camera.forward();
    const double cos_tilt = std::cos(cfg.max_tilt);

    for (int pi = 0; pi < static_cast<int>(parts.size()); ++pi) {
        const auto& part = parts[pi];
        Scene others = environment;
        for (int o = 0; o < static_cast<int>(parts.size()); ++o)
            if (o != pi) others.push_back({parts[o].body, parts[o].pose});

        auto defs = expand_grasp_set(grasp_sets.at(part.part_class));
        for (int di = 0; di < static_cast<int>(defs.size()); ++di) {
            const auto& def = defs[di];
            const BoxCompound finger_body = fingers.at_opening(def.opening);
            int steps = def.kind == GraspDefinition::Kind::Single ? 1 : std::max(2, cfg.range_steps);
            std::vector<Transform> tips;
            std::vector<bool> valid;
            for (int s = 0; s < steps; ++s) {
                Transform tip = part.pose * (steps == 1 ? def.pose_a : def.at(static_cast<double>(s) / (steps - 1)));
                tips.push_back(tip);
                valid.push_back(!collide_any(finger_body, tip, others));
            }
            for (int s = 0; s < steps;) {
                if (!valid[s]) {
                    ++s;
                    continue;
                }
                int e = s;
                while (e + 1 < steps && valid[e + 1]) ++e;
                GeneratedProposal g;
                g.part_index = pi;
                g.part_class = part.part_class;
                g.def_index = di;
                g.opening = def.opening;
                g.width = def.opening;
                g.height = fingers.finger_width + (tips[e].translation() - tips[s].translation()).norm();
                g.frame = Transform::interpolate(tips[s], tips[e], 0.5);
                g.placements.assign(tips.begin() + s, tips.begin() + e + 1);
                s = e + 1;
                if (g.frame.axis(2).dot(cam_fwd) < cos_tilt) continue;
                if (g.frame.axis(0).dot(cam_right) < 0.0) g.frame = g.frame * Transform::rot_z(kPi);
                g.footprint = rasterize_rect(grid, {g.frame, g.width, g.height, g.part_class});
                if (g.footprint.empty()) continue;
                candidates.push_back(std::move(g));
            }
        }
    }

    // nearest to the camera first; a farther proposal overlapping a kept one is discarded
    std::vector<int> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    const Vec3 cam_pos = camera.pose.translation();
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return (candidates[a].frame.translation() - cam_pos).norm() < (candidates[b].frame.translation() - cam_pos).norm();
    });
    std::vector<char> taken(static_cast<size_t>(grid.nx) * grid.ny, 0);
    GraspLabel out{Heightmap(grid), {}};
    for (int k : order) {
        auto& g = candidates[k];
        bool overlap = false;
        for (auto [i, j] : detail::dilate(g.footprint, grid.nx, grid.ny))
            if (taken[static_cast<size_t>(j) * grid.nx + i]) {
                overlap = true;
                break;
            }
        if (overlap) continue;
        for (const auto& c : g.footprint) taken[static_cast<size_t>(c.j) * grid.nx + c.i] = 1;
        paint_rect(out.label, g.footprint, g.part_class);
        out.proposals.push_back(std::move(g));
    }
    return out;
}

/// 8-connected clusters of occupied cells, in row-major discovery order.
inline std::vector<std::vector<std::pair<int, int>>> cluster_cells(const Heightmap& hm) {
    std::vector<std::vector<std::pair<int, int>>> clusters;
    std::vector<char> seen(hm.height.size(), 0);
    for (int j = 0; j < hm.ny(); ++j)
        for (int i = 0; i < hm.nx(); ++i) {
            if (!hm.occupied(i, j) || seen[hm.index(i, j)]) continue;
            std::vector<std::pair<int, int>> cl;
            std::queue<std::pair<int, int>> q;
            q.emplace(i, j);
            seen[hm.index(i, j)] = 1;
            while (!q.empty()) {
                auto [a, b] = q.front();
                q.pop();
                cl.emplace_back(a, b);
                for (int db = -1; db <= 1; ++db)
                    for (int da = -1; da <= 1; ++da) {
                        int x = a + da, y = b + db;
                        if (x < 0 || y < 0 || x >= hm.nx() || y >= hm.ny()) continue;
                        size_t k = hm.index(x, y);
                        if (seen[k] || !hm.occupied(x, y)) continue;
                        seen[k] = 1;
                        q.emplace(x, y);
                    }
            }
            clusters.push_back(std::move(cl));
        }
    return clusters;
}

/// Rectangle frame of one label cluster: center and normal from PCA, x along the fitted gradient
/// descent direction, normal oriented by `normal_hint`.
inline RectFrame cluster_frame(const Heightmap& hm, const std::vector<std::pair<int, int>>& cells, const Vec3& normal_hint) {
    std::vector<Vec3> pts;
    pts.reserve(cells.size());
    for (auto [i, j] : cells) pts.push_back(hm.cell_point(i, j));
    RectFrame f = pca_rect_frame(pts);

    // least-squares plane fit of the gradient over in-plane coordinates
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (size_t k = 0; k < cells.size(); ++k) {
        Vec3 d = pts[k] - f.center;
        Eigen::Vector3d row(1.0, d.dot(f.x_axis), d.dot(f.y_axis));
        double g = hm.gradient[hm.index(cells[k].first, cells[k].second)];
        ata += row * row.transpose();
        atb += row * g;
    }
    Eigen::Vector3d coef = ata.ldlt().solve(atb);
    Vec3 descent = -(coef[1] * f.x_axis + coef[2] * f.y_axis);

    Vec3 z = f.z_axis.dot(normal_hint) >= 0 ? f.z_axis : Vec3(-f.z_axis);
    Vec3 x = descent - z * z.dot(descent);
    if (x.norm() < 1e-9) {
        x = f.x_axis;
    } else {
        x.normalize();
    }
    Vec3 y = z.cross(x).normalized();

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : pts) {
        Vec3 d = p - f.center;
        xmin = std::min(xmin, d.dot(x));
        xmax = std::max(xmax, d.dot(x));
        ymin = std::min(ymin, d.dot(y));
        ymax = std::max(ymax, d.dot(y));
    }
    RectFrame out;
    out.center = f.center;
    out.x_axis = x;
    out.y_axis = y;
    out.z_axis = z;
    // cell centers sit half a cell inside the rectangle edge
    out.width = xmax - xmin + hm.grid.cell;
    out.height = ymax - ymin + hm.grid.cell;
    return out;
}

inline int majority_class(const Heightmap& hm, const std::vector<std::pair<int, int>>& cells) {
    std::map<int, int> votes;
    for (auto [i, j] : cells) ++votes[hm.class_id[hm.index(i, j)]];
    int best = 0, count = -1;
    for (auto [c, n] : votes)
        if (n > count) {
            best = c;
            count = n;
        }
    return best;
}

/// Decodes grasp proposals from a label heightmap. The approach axis points into the grid.
inline std::vector<GraspProposal> infer_grasps(const Heightmap& label) {
    std::vector<GraspProposal> out;
    const Vec3 down = -label.grid.origin.axis(2);
    for (const auto& cl : cluster_cells(label)) {
        if (cl.size() < 3) continue;
        GraspProposal p;
        try {
            p.frame = cluster_frame(label, cl, down);
        } catch (const DegeneratePointSet&) {
            continue;
        }
        p.part_class = majority_class(label, cl);
        for (auto [i, j] : cl) {
            size_t k = label.index(i, j);
            p.cells.push_back({i, j, label.height[k], label.gradient[k]});
        }
        out.push_back(std::move(p));
    }
    return out;
}

struct SelectedGrasp {
    GraspProposal proposal;
    double opening = 0.0; // commanded finger opening
};

/// Picks the proposal of `part_class` whose center is closest to the camera.
inline SelectedGrasp select_grasp(const std::vector<GraspProposal>& proposals, int part_class, const Transform& camera_pose,
                                  double padding = 0.004) {
    const GraspProposal* best = nullptr;
    double best_d = 1e300;
    for (const auto& p : proposals) {
        if (p.part_class != part_class) continue;
        double d = (p.frame.center - camera_pose.translation()).norm();
        if (d < best_d) {
            best_d = d;
            best = &p;
        }
    }
    if (!best) throw NoProposalForClass("no grasp proposal for class " + std::to_string(part_class));
    return {*best, best->width() + padding};
}

} // namespace forge
