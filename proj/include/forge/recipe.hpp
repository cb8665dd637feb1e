#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/io.hpp"

namespace forge {

// ---- authoring validation ----

enum class CheckStatus { Pass, Fail, Skipped };

inline const char* to_string(CheckStatus s) {
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Skipped: return "skipped";
    }
    return "?";
}

/// Authoring steps a failure sends the designer back to.
enum AuthoringStep : int { kStepSequence = 1, kStepGrasps = 2, kStepWorkcell = 3 };

struct ValidationIssue {
    int step = 0;
    std::string part; // design part or class name, empty for workcell issues
    std::string message;
};

struct ValidationCheck {
    std::string name;
    int step = 0; // authoring step the check covers
    CheckStatus status = CheckStatus::Pass;
    std::vector<ValidationIssue> issues;
};

struct ValidationReport {
    uint64_t digest = 0; // project_digest of the validated inputs
    std::vector<ValidationCheck> checks;
    SequenceReport sequence;

    bool ok() const {
        for (const auto& c : checks)
            if (c.status != CheckStatus::Pass) return false;
        return !checks.empty();
    }
    const ValidationCheck* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// FNV-1a over the canonical bundle JSON.
inline uint64_t project_digest(const Project& p) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : project_to_json(p).dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline bool area_in_view(const CameraModel& cam, const Area& a) {
    for (int k = 0; k < 8; ++k) {
        Vec3 corner = a.center + Vec3((k & 1) ? a.half.x() : -a.half.x(), (k & 2) ? a.half.y() : -a.half.y(), (k & 4) ? a.half.z() : -a.half.z());
        auto px = cam.project(corner);
        if (!px || px->x() < 0 || px->y() < 0 || px->x() > cam.width || px->y() > cam.height) return false;
    }
    return true;
}

/// Tip pose that shows a held part to the pose camera: the tip sits on the optical axis in the middle
/// of the part's viewing interval, approach along the image down axis, closing along image left.
inline Transform presentation_tip(const CameraModel& cam, const BoxCompound& body) {
    auto [near_d, far_d] = view_distance_interval(body, cam);
    Transform R = Transform::from_axes(-Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY(), Vec3(0, 0, 0.5 * (near_d + far_d)));
    return cam.pose * R;
}

/// Gripper that picks from the pile: the first one reaching the whole pickup area.
inline int picking_gripper(const Project& p) { return p.workcell.gripper_reaching(p.workcell.pickup); }

using RegraspGraphs = std::map<int, RegraspGraph>;

inline RegraspGraph build_class_graph(const Project& p, const PartClass& c) {
    return build_graph(c.body, c.grasps, default_seed_poses(c.body, p.workcell.regrasp.center), p.workcell.grippers, p.workcell.scene(),
                       p.config.regrasp);
}

namespace detail {

inline std::vector<int> design_classes(const Project& p) {
    std::vector<int> out;
    for (const auto& part : p.design.parts)
        if (std::find(out.begin(), out.end(), part.part_class) == out.end()) out.push_back(part.part_class);
    std::sort(out.begin(), out.end());
    return out;
}

inline void finish(ValidationCheck& c) { c.status = c.issues.empty() ? CheckStatus::Pass : CheckStatus::Fail; }

} // namespace detail

/// Runs the authoring checks in order: grasp sets, camera coverage, reach, regrasp graphs,
/// sequence. Checks that depend on a failed one are skipped. Built graphs land in `graphs`.
inline ValidationReport validate_authoring(const Project& p, RegraspGraphs* graphs = nullptr) {
    ValidationReport rep;
    rep.digest = project_digest(p);
    const auto& w = p.workcell;
    const auto classes = detail::design_classes(p);

    ValidationCheck grasps{"grasp_sets", kStepGrasps, CheckStatus::Pass, {}};
    for (int id : classes) {
        const PartClass& c = p.part_class(id);
        if (c.grasps.empty()) grasps.issues.push_back({kStepGrasps, c.name, "part class '" + c.name + "' has no authored grasps"});
    }
    detail::finish(grasps);

    const int picker = picking_gripper(p);
    const int inserter = p.assembling_gripper();

    ValidationCheck cams{"camera_coverage", kStepWorkcell, CheckStatus::Pass, {}};
    if (picker >= 0 && !area_in_view(w.camera(w.gripper_cameras[picker]), w.pickup))
        cams.issues.push_back({kStepWorkcell, "", "pickup camera '" + w.gripper_cameras[picker] + "' does not see the whole pickup area"});
    if (!area_in_view(w.camera(w.assembly_camera), w.assembly))
        cams.issues.push_back({kStepWorkcell, "", "assembly camera '" + w.assembly_camera + "' does not see the whole assembly area"});
    for (int id : classes) {
        const PartClass& c = p.part_class(id);
        if (!w.regrasp.contains(presentation_tip(w.camera(w.pose_camera), c.body).translation()))
            cams.issues.push_back({kStepWorkcell, c.name, "pose camera viewing spot for '" + c.name + "' lies outside the regrasp area"});
    }
    detail::finish(cams);

    ValidationCheck reach{"reach", kStepWorkcell, CheckStatus::Pass, {}};
    if (picker < 0) reach.issues.push_back({kStepWorkcell, "", "no gripper reaches the whole pickup area"});
    if (inserter < 0) reach.issues.push_back({kStepWorkcell, "", "no gripper reaches the whole assembly area"});
    for (int k = 0; k < 2; ++k)
        if (!WorkcellModel::contains_area(w.grippers[k].reach, w.regrasp))
            reach.issues.push_back({kStepWorkcell, "", "regrasp area is outside the reach of gripper '" + w.grippers[k].name + "'"});
    if (picker >= 0 && picker == inserter)
        reach.issues.push_back({kStepWorkcell, "", "the same gripper picks and inserts; a regrasp needs the other one"});
    for (const Area* a : {&w.pickup, &w.regrasp, &w.assembly})
        for (const Area* b : {&w.pickup, &w.regrasp, &w.assembly})
            if (a < b && ((a->center - b->center).cwiseAbs() - a->half - b->half).maxCoeff() < 0.0)
                reach.issues.push_back({kStepWorkcell, "", "workcell areas overlap"});
    detail::finish(reach);

    ValidationCheck regrasp{"regrasp_graph", kStepGrasps, CheckStatus::Pass, {}};
    RegraspGraphs built;
    if (grasps.status != CheckStatus::Pass || reach.status != CheckStatus::Pass) {
        regrasp.status = CheckStatus::Skipped;
    } else {
        for (int id : classes) {
            const PartClass& c = p.part_class(id);
            RegraspGraph g = build_class_graph(p, c);
            std::array<int, 2> per_gripper{0, 0};
            for (const auto& n : g.nodes()) ++per_gripper[n.gripper];
            if (g.nodes().empty())
                regrasp.issues.push_back({kStepGrasps, c.name, "no grasp of '" + c.name + "' is feasible in the regrasp area"});
            else
                for (int k = 0; k < 2; ++k)
                    if (per_gripper[k] == 0)
                        regrasp.issues.push_back(
                            {kStepGrasps, c.name, "gripper '" + w.grippers[k].name + "' cannot hold '" + c.name + "' in the regrasp area"});
            built.emplace(id, std::move(g));
        }
        detail::finish(regrasp);
    }

    ValidationCheck seq{"sequence", kStepSequence, CheckStatus::Pass, {}};
    if (grasps.status != CheckStatus::Pass || inserter < 0) {
        seq.status = CheckStatus::Skipped;
    } else {
        rep.sequence = p.verify(p.sequence);
        for (const auto& f : rep.sequence.failures) {
            int step = f.kind == "NoValidGrasp" ? kStepGrasps : kStepSequence;
            std::string where = f.trial < 0 ? "nominal base pose" : "trial " + std::to_string(f.trial);
            seq.issues.push_back({step, p.design.parts[f.part].name,
                                  "position " + std::to_string(f.position) + " (" + where + "): " + f.kind + ": " + f.message});
        }
        if (rep.sequence.ok && regrasp.status == CheckStatus::Pass) {
            for (const auto& r : rep.sequence.nominal) {
                const auto& part = p.design.parts[r.part];
                const RegraspGraph& g = built.at(part.part_class);
                bool held = false;
                for (const auto& n : g.nodes()) held |= n.sample == r.sample_index && n.gripper == inserter;
                if (!held)
                    seq.issues.push_back({kStepGrasps, part.name,
                                          "goal grasp of '" + part.name + "' cannot be taken by '" + w.grippers[inserter].name +
                                              "' in the regrasp area"});
            }
        }
        detail::finish(seq);
    }

    rep.checks = {grasps, cams, reach, regrasp, seq};
    if (graphs) *graphs = std::move(built);
    return rep;
}

inline json to_json(const ValidationReport& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        json issues = json::array();
        for (const auto& i : c.issues) issues.push_back({{"step", i.step}, {"part", i.part}, {"message", i.message}});
        checks.push_back({{"name", c.name}, {"step", c.step}, {"status", to_string(c.status)}, {"issues", issues}});
    }
    json j = header("assembly-forge/validation");
    j["ok"] = r.ok();
    j["digest"] = r.digest;
    j["checks"] = checks;
    return j;
}

// ---- recipe ----

struct NotValidated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GoalGrasp {
    int sample = 0;     // into grasp_samples(expand_grasp_set(grasps)) of the class
    int definition = 0; // into the expanded grasp set
    Transform tip;      // in the part frame
    double opening = 0.0;
};

struct RecipeStep {
    std::string part;
    int part_class = 0;
    Area pickup_area;
    std::string pickup_camera;
    std::string pickup_fingers;
    std::string pose_camera;
    std::string goal_fingers;
    GoalGrasp goal_grasp;
    Transform goal;                   // part pose in the base frame
    std::vector<Transform> waypoints; // finger tip in the base frame, insertion order
};

struct Recipe {
    std::string assembly_camera; // base localization preamble
    int base_pose_id = 0;
    Area assembly_area;
    std::vector<RecipeStep> steps; // assembly order
};

/// Task-level recipe from a passing validation of the same inputs.
inline Recipe generate_recipe(const Project& p, const ValidationReport& report) {
    if (!report.ok()) throw NotValidated("generate_recipe: validation has not passed");
    if (report.digest != project_digest(p)) throw NotValidated("generate_recipe: inputs changed since validation");
    const auto& w = p.workcell;
    const int picker = picking_gripper(p);
    const int inserter = p.assembling_gripper();
    Recipe r;
    r.assembly_camera = w.assembly_camera;
    r.base_pose_id = p.base_pose_id();
    r.assembly_area = w.assembly;
    for (auto it = report.sequence.nominal.rbegin(); it != report.sequence.nominal.rend(); ++it) {
        const DesignPart& part = p.design.parts[it->part];
        const auto samples = grasp_samples(expand_grasp_set(p.part_class(part.part_class).grasps));
        const GraspSample& s = samples.at(it->sample_index);
        RecipeStep st;
        st.part = part.name;
        st.part_class = part.part_class;
        st.pickup_area = w.pickup;
        st.pickup_camera = w.gripper_cameras[picker];
        st.pickup_fingers = w.grippers[picker].name;
        st.pose_camera = w.pose_camera;
        st.goal_fingers = w.grippers[inserter].name;
        st.goal_grasp = {it->sample_index, s.def_index, s.tip, s.opening};
        st.goal = part.goal;
        st.waypoints.assign(it->path.waypoints.rbegin(), it->path.waypoints.rend());
        r.steps.push_back(std::move(st));
    }
    return r;
}

inline json write_recipe(const Recipe& r) {
    json j = header("assembly-forge/recipe");
    j["base"] = {{"camera", r.assembly_camera}, {"pose_id", r.base_pose_id}, {"area", to_json(r.assembly_area)}};
    j["steps"] = json::array();
    for (const auto& s : r.steps) {
        json wps = json::array();
        for (const auto& t : s.waypoints) wps.push_back(to_json(t));
        j["steps"].push_back({{"part", s.part},
                              {"class", s.part_class},
                              {"pickup_area", to_json(s.pickup_area)},
                              {"pickup_camera", s.pickup_camera},
                              {"pickup_fingers", s.pickup_fingers},
                              {"pose_camera", s.pose_camera},
                              {"goal_fingers", s.goal_fingers},
                              {"goal_grasp",
                               {{"sample", s.goal_grasp.sample},
                                {"definition", s.goal_grasp.definition},
                                {"tip", to_json(s.goal_grasp.tip)},
                                {"opening", s.goal_grasp.opening}}},
                              {"goal", to_json(s.goal)},
                              {"waypoints", wps}});
    }
    return j;
}

inline Recipe read_recipe(const json& j, const std::string& file = "recipe.json") {
    JsonIn in(j, file);
    check_header(in, "assembly-forge/recipe");
    Recipe r;
    r.assembly_camera = in["base"]["camera"].str();
    r.base_pose_id = in["base"]["pose_id"].integer();
    r.assembly_area = read_area(in["base"]["area"]);
    JsonIn steps = in["steps"];
    for (size_t k = 0; k < steps.size(); ++k) {
        JsonIn s = steps[k];
        RecipeStep st;
        st.part = s["part"].str();
        st.part_class = s["class"].integer();
        st.pickup_area = read_area(s["pickup_area"]);
        st.pickup_camera = s["pickup_camera"].str();
        st.pickup_fingers = s["pickup_fingers"].str();
        st.pose_camera = s["pose_camera"].str();
        st.goal_fingers = s["goal_fingers"].str();
        JsonIn g = s["goal_grasp"];
        st.goal_grasp = {g["sample"].integer(), g["definition"].integer(), g["tip"].transform(), g["opening"].positive()};
        st.goal = s["goal"].transform();
        JsonIn wps = s["waypoints"];
        if (wps.size() < 2) wps.fail("expected at least 2 waypoints");
        for (size_t w = 0; w < wps.size(); ++w) st.waypoints.push_back(wps[w].transform());
        r.steps.push_back(std::move(st));
    }
    return r;
}

} // namespace forge
