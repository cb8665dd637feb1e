#pragma once

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "forge/executor.hpp"
#include "forge/png_io.hpp"

namespace forge {

enum class LabelKind { Grasp, Pose };

inline LabelKind parse_label_kind(const std::string& s) {
    if (s == "grasp") return LabelKind::Grasp;
    if (s == "pose") return LabelKind::Pose;
    throw std::invalid_argument("unknown label kind '" + s + "' (expected grasp or pose)");
}

/// One training pair: sensor-like input heightmap plus its label, with metadata.
struct LabelSample {
    Heightmap input;
    Heightmap label;
    json meta;
};

inline uint64_t sample_seed(uint64_t seed, int index) {
    // splitmix64 step
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (static_cast<uint64_t>(index) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline json to_json(const GridSpec& g) { return {{"origin", to_json(g.origin)}, {"cell", g.cell}, {"nx", g.nx}, {"ny", g.ny}}; }

namespace detail {

inline Heightmap sensed(const Scene& scene, const CameraModel& cam, const GridSpec& grid, const NoiseConfig& noise, uint64_t seed) {
    DepthImage d = degrade(render_depth(scene, cam), noise, seed);
    return to_heightmap(d, cam.downsampled(noise.factor), grid);
}

} // namespace detail

/// Pile scene seen by the picking gripper's camera, labeled with grasp proposals.
inline LabelSample grasp_sample(const Project& p, const GraspSets& sets, uint64_t seed) {
    const WorkcellModel& w = p.workcell;
    const int picker = picking_gripper(p);
    if (picker < 0) throw std::invalid_argument("no gripper reaches the pickup area");
    const CameraModel& cam = w.camera(w.gripper_cameras[picker]);
    GridSpec grid = detail::area_grid(cam, w.pickup, p.config.pickup_cell, 0.04);

    auto pile = make_pile(p, seed);
    std::vector<ScenePart> parts;
    Scene scene = w.scene();
    for (const auto& item : pile) {
        const BoxCompound* body = &p.part_class(item.part_class).body;
        parts.push_back({item.part_class, body, item.pose});
        scene.push_back({body, item.pose});
    }
    GraspLabel gl = label_scene(parts, sets, w.grippers[picker].fingers, w.scene(), cam, grid, p.config.grasp_label);

    LabelSample s{detail::sensed(scene, cam, grid, p.config.noise, seed), gl.label, header("assembly-forge/label-sample")};
    s.meta["kind"] = "grasp";
    s.meta["seed"] = seed;
    s.meta["camera"] = w.gripper_cameras[picker];
    s.meta["grid"] = to_json(grid);
    json props = json::array();
    for (const auto& g : gl.proposals)
        props.push_back({{"class", g.part_class}, {"frame", to_json(g.frame)}, {"width", g.width}, {"height", g.height}});
    s.meta["proposals"] = props;
    json scene_j = json::array();
    for (const auto& item : pile) scene_j.push_back({{"class", item.part_class}, {"pose", to_json(item.pose)}});
    s.meta["parts"] = scene_j;
    return s;
}

/// One part at a random orientation in front of the pose camera, labeled with its pose proposal.
inline LabelSample pose_sample(const Project& p, const PoseTable& table, uint64_t seed) {
    const WorkcellModel& w = p.workcell;
    const CameraModel& cam = w.camera(w.pose_camera);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const PartClass& cls = p.classes[std::uniform_int_distribution<size_t>(0, p.classes.size() - 1)(rng)];
    auto [near_d, far_d] = view_distance_interval(cls.body, cam);
    GridSpec grid = camera_grid(cam, far_d + 0.05, p.config.pose_cell, static_cast<int>(std::ceil(0.1 / p.config.pose_cell)));
    auto [lo, hi] = cls.body.aabb();
    const Vec3 mid = 0.5 * (lo + hi);

    for (int tries = 0; tries < 100; ++tries) {
        Eigen::Quaterniond q(n01(rng), n01(rng), n01(rng), n01(rng));
        double d = near_d + (far_d - near_d) * u01(rng);
        Transform centered = cam.pose * Transform::translation(0, 0, d) * Transform(q.normalized(), Vec3::Zero());
        Transform pose = centered * Transform::translation(-mid.x(), -mid.y(), -mid.z());
        PoseLabel pl;
        try {
            pl = label_pose(cls.id, cls.body, table.at(cls.id), pose, cam, grid);
        } catch (const PartOutOfView&) {
            continue;
        }
        LabelSample s{detail::sensed({{&cls.body, pose}}, cam, grid, p.config.noise, seed), pl.label, header("assembly-forge/label-sample")};
        s.meta["kind"] = "pose";
        s.meta["seed"] = seed;
        s.meta["camera"] = w.pose_camera;
        s.meta["grid"] = to_json(grid);
        s.meta["class"] = cls.id;
        s.meta["pose"] = to_json(pose);
        s.meta["view"] = view_name(pl.view);
        s.meta["combined_id"] = pl.id.value;
        s.meta["frame"] = to_json(pl.frame);
        return s;
    }
    throw std::runtime_error("pose sample: no in-view pose found for class " + std::to_string(cls.id));
}

/// Writes `count` samples as <kind>_NNNN_input.png, <kind>_NNNN_label.png and <kind>_NNNN.json plus
/// manifest.json. Sample k uses sample_seed(seed, k), so the directory is a pure function of the inputs.
inline void write_dataset(const Project& p, LabelKind kind, int count, uint64_t seed, const std::filesystem::path& dir) {
    if (count < 0) throw std::invalid_argument("labelgen: count must be >= 0");
    std::filesystem::create_directories(dir);
    const GraspSets sets = p.grasp_sets();
    const PoseTable table = p.pose_table();
    const char* name = kind == LabelKind::Grasp ? "grasp" : "pose";
    json manifest = header("assembly-forge/label-dataset");
    manifest["kind"] = name;
    manifest["seed"] = seed;
    manifest["height_unit"] = png::kHeightUnit;
    manifest["samples"] = json::array();
    for (int k = 0; k < count; ++k) {
        const uint64_t s = sample_seed(seed, k);
        LabelSample ls = kind == LabelKind::Grasp ? grasp_sample(p, sets, s) : pose_sample(p, table, s);
        char stem[64];
        std::snprintf(stem, sizeof stem, "%s_%04d", name, k);
        const std::string base = stem;
        png::write_file((dir / (base + "_input.png")).string(), png::encode_heightmap(ls.input));
        png::write_file((dir / (base + "_label.png")).string(), png::encode_label(ls.label));
        std::ofstream((dir / (base + ".json")).string()) << ls.meta.dump(2) << '\n';
        manifest["samples"].push_back(base);
    }
    std::ofstream((dir / "manifest.json").string()) << manifest.dump(2) << '\n';
}

} // namespace forge
