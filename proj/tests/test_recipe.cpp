#include <gtest/gtest.h>

#include "forge/recipe.hpp"

using namespace forge;

namespace {

const Project& tower() {
    static const Project p = load_project(FORGE_BUNDLE_DIR);
    return p;
}

const ValidationReport& tower_report() {
    static const ValidationReport r = validate_authoring(tower());
    return r;
}

bool flags_step(const ValidationCheck& c, int step) {
    for (const auto& i : c.issues)
        if (i.step == step) return true;
    return false;
}

} // namespace

TEST(Validate, TowerPassesEveryCheckInOrder) {
    const auto& r = tower_report();
    ASSERT_EQ(r.checks.size(), 5u);
    const char* names[] = {"grasp_sets", "camera_coverage", "reach", "regrasp_graph", "sequence"};
    for (int k = 0; k < 5; ++k) {
        EXPECT_EQ(r.checks[k].name, names[k]);
        EXPECT_EQ(r.checks[k].status, CheckStatus::Pass) << names[k];
    }
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.digest, project_digest(tower()));
    EXPECT_EQ(r.sequence.nominal.size(), 5u);
}

TEST(Validate, PickupAreaOutOfReachFlagsWorkcellStep) {
    Project p = tower();
    p.workcell.pickup.center = Vec3(-0.9, 0.0, 0.05);
    auto r = validate_authoring(p);
    EXPECT_FALSE(r.ok());
    const auto* reach = r.find("reach");
    ASSERT_NE(reach, nullptr);
    EXPECT_EQ(reach->status, CheckStatus::Fail);
    EXPECT_TRUE(flags_step(*reach, kStepWorkcell));
    EXPECT_EQ(r.find("regrasp_graph")->status, CheckStatus::Skipped);
}

TEST(Validate, EmptyGraspSetFlagsGraspStep) {
    Project p = tower();
    p.classes[1].grasps.clear();
    auto r = validate_authoring(p);
    const auto* g = r.find("grasp_sets");
    EXPECT_EQ(g->status, CheckStatus::Fail);
    ASSERT_EQ(g->issues.size(), 1u);
    EXPECT_EQ(g->issues[0].step, kStepGrasps);
    EXPECT_EQ(g->issues[0].part, p.classes[1].name);
    EXPECT_EQ(r.find("regrasp_graph")->status, CheckStatus::Skipped);
    EXPECT_EQ(r.find("sequence")->status, CheckStatus::Skipped);
    EXPECT_FALSE(r.ok());
}

TEST(Validate, BlockedFirstSequenceFlagsPartZero) {
    Project p = tower();
    p.sequence = {0, 1, 2, 3, 4};
    auto r = validate_authoring(p);
    const auto* s = r.find("sequence");
    EXPECT_EQ(s->status, CheckStatus::Fail);
    ASSERT_FALSE(s->issues.empty());
    EXPECT_EQ(s->issues[0].part, "A");
    EXPECT_EQ(s->issues[0].step, kStepSequence);
    EXPECT_EQ(r.sequence.failures.front().position, 0);
}

TEST(Validate, CameraThatMissesTheAssemblyArea) {
    Project p = tower();
    for (auto& c : p.workcell.cameras)
        if (c.name == p.workcell.assembly_camera) c.model.pose = Transform::translation(0.3, 0, 0) * c.model.pose;
    auto r = validate_authoring(p);
    EXPECT_EQ(r.find("camera_coverage")->status, CheckStatus::Fail);
    EXPECT_TRUE(flags_step(*r.find("camera_coverage"), kStepWorkcell));
}

TEST(Validate, ReportJson) {
    json j = to_json(tower_report());
    EXPECT_EQ(j["schema"], "assembly-forge/validation");
    EXPECT_TRUE(j["ok"].get<bool>());
    EXPECT_EQ(j["checks"].size(), 5u);
    EXPECT_EQ(j["checks"][4]["status"], "pass");
}

TEST(Recipe, StepsAreReversedDisassembly) {
    const Project& p = tower();
    Recipe r = generate_recipe(p, tower_report());
    ASSERT_EQ(r.steps.size(), p.sequence.size());
    for (size_t k = 0; k < r.steps.size(); ++k) EXPECT_EQ(r.steps[k].part, p.design.parts[p.sequence[p.sequence.size() - 1 - k]].name);
    EXPECT_EQ(r.assembly_camera, p.workcell.assembly_camera);
    EXPECT_EQ(r.base_pose_id, p.base_pose_id());
}

TEST(Recipe, ResourcesExistAndWaypointsEndAtTheGoal) {
    const Project& p = tower();
    Recipe r = generate_recipe(p, tower_report());
    const auto& w = p.workcell;
    for (const auto& s : r.steps) {
        EXPECT_NE(w.find_camera(s.pickup_camera), nullptr);
        EXPECT_NE(w.find_camera(s.pose_camera), nullptr);
        EXPECT_TRUE(s.pickup_fingers == w.grippers[0].name || s.pickup_fingers == w.grippers[1].name);
        EXPECT_NE(s.pickup_fingers, s.goal_fingers);
        const auto& part = p.design.parts[p.part_index(s.part)];
        EXPECT_EQ(s.part_class, part.part_class);
        auto samples = grasp_samples(expand_grasp_set(p.part_class(s.part_class).grasps));
        ASSERT_LT(s.goal_grasp.sample, static_cast<int>(samples.size()));
        EXPECT_TRUE(near(samples[s.goal_grasp.sample].tip, s.goal_grasp.tip, 1e-12, 1e-12));
        ASSERT_GE(s.waypoints.size(), 2u);
        EXPECT_TRUE(near(s.waypoints.back(), s.goal * s.goal_grasp.tip, 1e-9, 1e-9));
        EXPECT_FALSE(near(s.waypoints.front(), s.waypoints.back(), 1e-3, 1.0));
    }
}

TEST(Recipe, JsonRoundTripIsBitExact) {
    Recipe r = generate_recipe(tower(), tower_report());
    json a = write_recipe(r);
    std::string once = a.dump();
    json b = write_recipe(read_recipe(json::parse(once)));
    EXPECT_EQ(b.dump(), once);
}

TEST(Recipe, Deterministic) {
    EXPECT_EQ(write_recipe(generate_recipe(tower(), tower_report())).dump(), write_recipe(generate_recipe(tower(), tower_report())).dump());
}

TEST(Recipe, RequiresPassingValidationOfTheSameInputs) {
    ValidationReport failed = tower_report();
    failed.checks[2].status = CheckStatus::Fail;
    EXPECT_THROW(generate_recipe(tower(), failed), NotValidated);
    EXPECT_THROW(generate_recipe(tower(), ValidationReport{}), NotValidated);
    Project changed = tower();
    changed.config.trials = 4;
    EXPECT_THROW(generate_recipe(changed, tower_report()), NotValidated);
}

TEST(Recipe, SinglePartDesign) {
    Project p = tower();
    int e = p.part_index("E");
    DesignPart only = p.design.parts[e];
    p.design.parts = {only};
    p.sequence = {0};
    auto r = validate_authoring(p);
    ASSERT_TRUE(r.ok());
    Recipe rc = generate_recipe(p, r);
    ASSERT_EQ(rc.steps.size(), 1u);
    EXPECT_EQ(rc.steps[0].part, "E");
}

TEST(Recipe, SchemaErrorsCarryPointers) {
    json j = write_recipe(generate_recipe(tower(), tower_report()));
    j["steps"][2]["waypoints"][1]["quaternion"] = json::array({2, 0, 0, 0});
    try {
        read_recipe(j);
        FAIL() << "expected SchemaError";
    } catch (const SchemaError& e) {
        EXPECT_EQ(e.pointer, "/steps/2/waypoints/1/quaternion");
    }
}
