#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/assembly.hpp"
#include "forge/grasp.hpp"
#include "forge/pose.hpp"
#include "forge/regrasp.hpp"
#include "forge/render.hpp"

namespace forge {

struct NamedCamera {
    std::string name;
    CameraModel model;
};

struct WorkcellModel {
    std::optional<BoxCompound> environment; // fixed bodies in the workcell frame (table, fixtures)
    Area pickup, regrasp, assembly;
    std::vector<NamedCamera> cameras;
    std::array<Gripper, 2> grippers;
    std::array<std::string, 2> gripper_cameras; // camera mounted with each gripper
    std::string assembly_camera;
    std::string pose_camera;

    const CameraModel* find_camera(const std::string& name) const {
        for (const auto& c : cameras)
            if (c.name == name) return &c.model;
        return nullptr;
    }
    const CameraModel& camera(const std::string& name) const {
        if (auto c = find_camera(name)) return *c;
        throw std::out_of_range("unknown camera '" + name + "'");
    }
    Scene scene() const {
        if (!environment) return {};
        return {{&*environment, Transform{}}};
    }
    /// Index of the first gripper whose reach contains the whole area, or -1.
    int gripper_reaching(const Area& a) const {
        for (int k = 0; k < 2; ++k)
            if (contains_area(grippers[k].reach, a)) return k;
        return -1;
    }
    static bool contains_area(const Area& outer, const Area& inner) {
        return ((inner.center - outer.center).cwiseAbs() + inner.half - outer.half).maxCoeff() <= 1e-12;
    }
};

struct PartClass {
    int id = 0;
    std::string name;
    BoxCompound body;
    std::array<int, kViewCount> symmetry{1, 1, 1, 1, 1, 1};
    std::vector<ViewDirection> pile_faces; // faces that may point up in a pile
    std::vector<GraspDefinition> grasps;
};

struct ProjectConfig {
    LatticeConfig lattice;
    int trials = 5;
    uint64_t trial_seed = 1;
    NoiseConfig noise;
    RegraspConfig regrasp;
    GraspLabelConfig grasp_label;
    double pickup_cell = 0.002;
    double pose_cell = 0.0005;
    int max_attempts = 3;
    double tolerance_position = 0.001;
    double tolerance_angle = deg2rad(1.0);
};

struct Project {
    WorkcellModel workcell;
    std::vector<PartClass> classes;
    AssemblyDesign design;
    std::array<int, kViewCount> base_symmetry{1, 1, 1, 1, 1, 1};
    DisassemblySequence sequence;
    ProjectConfig config;

    const PartClass& part_class(int id) const {
        for (const auto& c : classes)
            if (c.id == id) return c;
        throw std::out_of_range("unknown part class " + std::to_string(id));
    }
    GraspSets grasp_sets() const {
        GraspSets out;
        for (const auto& c : classes) out[c.id] = c.grasps;
        return out;
    }
    /// Pose id of the base in combined ids; part classes use their own ids.
    int base_pose_id() const {
        int m = -1;
        for (const auto& c : classes) m = std::max(m, c.id);
        return m + 1;
    }
    PoseTable pose_table() const {
        PoseTable t;
        for (const auto& c : classes) t[c.id] = build_pose_proposals(c.body, c.symmetry);
        t[base_pose_id()] = build_pose_proposals(design.base, base_symmetry);
        return t;
    }
    /// Base resting on the floor of the assembly area, centered in xy.
    Transform nominal_base_pose() const {
        const Area& a = workcell.assembly;
        double lo = design.base.aabb(design.base_pose).first.z();
        return Transform::translation(a.center.x(), a.center.y(), a.center.z() - a.half.z() - lo);
    }
    TrialConfig trial_config() const { return {config.trials, config.trial_seed, workcell.assembly, nominal_base_pose()}; }
    /// Gripper that inserts parts: the one reaching the assembly area (the second if both do).
    int assembling_gripper() const {
        if (WorkcellModel::contains_area(workcell.grippers[1].reach, workcell.assembly)) return 1;
        return workcell.gripper_reaching(workcell.assembly);
    }
    SequenceReport verify(const DisassemblySequence& seq) const {
        int g = assembling_gripper();
        if (g < 0) throw std::invalid_argument("no gripper reaches the assembly area");
        return verify_sequence(design, seq, grasp_sets(), workcell.grippers[g].fingers, config.lattice, workcell.scene(), trial_config());
    }
    int part_index(const std::string& name) const {
        for (int k = 0; k < static_cast<int>(design.parts.size()); ++k)
            if (design.parts[k].name == name) return k;
        return -1;
    }
};

} // namespace forge
