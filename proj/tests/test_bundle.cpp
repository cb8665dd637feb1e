#include <gtest/gtest.h>

#include "forge/io.hpp"

using namespace forge;

namespace {

const Project& tower() {
    static const Project p = load_project(FORGE_BUNDLE_DIR);
    return p;
}

} // namespace

TEST(Tower, NominalBaseRestsOnTheTable) {
    const Project& p = tower();
    auto [lo, hi] = p.design.base.aabb(p.nominal_base_pose() * p.design.base_pose);
    EXPECT_NEAR(lo.z(), 0.0, 1e-12);
    EXPECT_EQ(p.assembling_gripper(), 1);
}

TEST(Tower, AuthoredSequencePassesAllTrials) {
    const Project& p = tower();
    ASSERT_EQ(p.config.trials, 5);
    SequenceReport r = p.verify(p.sequence);
    EXPECT_TRUE(r.ok);
    EXPECT_TRUE(r.failures.empty());
    ASSERT_EQ(r.nominal.size(), 5u);
    for (const auto& e : r.nominal) EXPECT_GE(e.path.waypoints.size(), 2u);
}

TEST(Tower, TunnelledBlocksSlideBeforeLifting) {
    const Project& p = tower();
    SequenceReport r = p.verify(p.sequence);
    ASSERT_EQ(r.nominal.size(), 5u);
    for (const auto& e : r.nominal) {
        const std::string& name = p.design.parts[e.part].name;
        if (name == "A" || name == "C") {
            EXPECT_EQ(e.path.directions.size(), 2u) << name;
            EXPECT_EQ(e.path.waypoints.size(), 3u) << name;
        } else {
            EXPECT_EQ(e.path.waypoints.size(), 2u) << name;
        }
    }
}

TEST(Tower, BaseLockedPartFirstIsBlocked) {
    const Project& p = tower();
    DisassemblySequence seq = {p.part_index("A"), p.part_index("B"), p.part_index("C"), p.part_index("D"), p.part_index("E")};
    SequenceReport r = p.verify(seq);
    EXPECT_FALSE(r.ok);
    ASSERT_FALSE(r.failures.empty());
    EXPECT_EQ(r.failures.front().position, 0);
    EXPECT_EQ(r.failures.front().kind, "Blocked");
}
