#pragma once

#include <map>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/motion.hpp"
#include "forge/recipe.hpp"

namespace forge {

// ---- pile ----

struct PileItem {
    int part_class = 0;
    Transform pose;
};

struct PileGenerationFailed : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One free part per design part, resting on one of its pile faces at a random spot and yaw inside
/// the pickup area. Parts keep `spacing` between their footprint circles.
inline std::vector<PileItem> make_pile(const Project& p, uint64_t seed, double spacing = 0.02, double rest_gap = 0.0005) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), yaw(-kPi, kPi);
    const Area& area = p.workcell.pickup;
    const double floor = area.center.z() - area.half.z();
    std::vector<PileItem> out;
    std::vector<std::pair<Vec3, double>> discs;
    for (const auto& part : p.design.parts) {
        const PartClass& c = p.part_class(part.part_class);
        if (c.pile_faces.empty()) throw PileGenerationFailed("part class '" + c.name + "' has no pile faces");
        auto [lo, hi] = c.body.aabb();
        const Vec3 mid = 0.5 * (lo + hi);
        const double radius = 0.5 * (hi - lo).norm();
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            ViewDirection face = c.pile_faces[std::min<size_t>(c.pile_faces.size() - 1, static_cast<size_t>((u(rng) + 1.0) * 0.5 * c.pile_faces.size()))];
            Transform up = Transform::rotation(Quat::FromTwoVectors(view_axis(face), Vec3::UnitZ()));
            Vec3 xy = area.center + Vec3(u(rng) * (area.half.x() - radius), u(rng) * (area.half.y() - radius), 0.0);
            Transform pose = Transform::translation(xy.x(), xy.y(), 0.0) * Transform::rot_z(yaw(rng)) * up * Transform::translation(-mid);
            pose = Transform::translation(0, 0, floor + rest_gap - c.body.aabb(pose).first.z()) * pose;
            bool clear = area.half.x() > radius && area.half.y() > radius;
            for (const auto& [q, r] : discs) clear &= (q - xy).head<2>().norm() >= r + radius + spacing;
            if (!clear) continue;
            discs.emplace_back(xy, radius);
            out.push_back({c.id, pose});
            placed = true;
        }
        if (!placed) throw PileGenerationFailed("no room in the pickup area for part '" + part.name + "'");
    }
    return out;
}

// ---- symmetry ----

/// Rigid motions mapping the body onto itself, generated by the annotated face symmetries about the
/// AABB center. Identity first.
inline std::vector<Transform> symmetry_group(const BoxCompound& body, const std::array<int, kViewCount>& symmetry) {
    auto [lo, hi] = body.aabb();
    const Vec3 c = 0.5 * (lo + hi);
    std::vector<Mat3> gens;
    for (int v = 0; v < kViewCount; ++v)
        if (symmetry[v] > 1) gens.push_back(Eigen::AngleAxisd(2.0 * kPi / symmetry[v], view_axis(static_cast<ViewDirection>(v))).toRotationMatrix());
    std::vector<Mat3> group{Mat3::Identity()};
    for (size_t k = 0; k < group.size(); ++k)
        for (const auto& g : gens) {
            Mat3 m = group[k] * g;
            bool known = false;
            for (const auto& e : group) known |= (e - m).cwiseAbs().maxCoeff() < 1e-9;
            if (!known) group.push_back(m);
        }
    std::vector<Transform> out;
    for (const auto& m : group) out.push_back(Transform::translation(c) * Transform::rotation(Quat(m)) * Transform::translation(-c));
    return out;
}

/// Pose error of `actual` against `goal`, minimized over the symmetry group.
inline std::pair<double, double> symmetric_pose_error(const Transform& actual, const Transform& goal, const std::vector<Transform>& group) {
    std::pair<double, double> best{1e300, 1e300};
    for (const auto& g : group) {
        auto e = pose_error(actual, goal * g);
        if (e.second < best.second - 1e-12 || (std::abs(e.second - best.second) <= 1e-12 && e.first < best.first)) best = e;
    }
    return best;
}

// ---- simulation state ----

struct SimPart {
    int part_class = 0;
    Transform pose;
    Transform pile_pose;
    int held_by = -1;
    Transform P_T_F; // tip in the part frame while held
    std::string placed_as; // design part name once released in the assembly
};

struct SimGripper {
    Transform tip;
    double opening = 0.0;
    int held = -1; // SimPart index
};

struct SimState {
    uint64_t seed = 0;
    Transform base_pose; // true W_T_B
    std::vector<SimPart> parts;
    std::array<SimGripper, 2> grippers;
    long ticks = 0;
};

struct FaultModel {
    int failed_picks = 0; // the first N pick attempts of every step lose the part at close
};

struct ExecutionEvent {
    double time = 0.0; // simulated seconds
    int step = -1;     // -1 for the base localization preamble
    int attempt = 0;
    std::string kind;
    bool ok = true;
    std::string detail;
};

struct PartResult {
    std::string part;
    double position_error = 0.0;
    double angle_error = 0.0;
    bool ok = false;
};

struct ExecutionResult {
    std::vector<ExecutionEvent> log;
    SimState state;
    std::vector<SimState> snapshots; // after the preamble and after every step
    std::vector<PartResult> parts;
    bool success = false;
};

struct StepFailed : std::runtime_error {
    int step;
    std::string cause;
    std::shared_ptr<const ExecutionResult> result;
    StepFailed(int s, std::string c, std::shared_ptr<const ExecutionResult> r)
        : std::runtime_error("step " + std::to_string(s) + " failed: " + c), step(s), cause(std::move(c)), result(std::move(r)) {}
};

/// Static inputs shared by every execution of one project.
struct ExecutionContext {
    const Project* project = nullptr;
    RegraspGraphs graphs;
    PoseTable poses;
    GraspSets grasp_sets;
    std::map<int, std::vector<Transform>> symmetries;
    std::vector<Transform> base_symmetry;

    static ExecutionContext make(const Project& p, RegraspGraphs graphs = {}) {
        ExecutionContext c;
        c.project = &p;
        c.graphs = std::move(graphs);
        for (const auto& cls : p.classes) {
            if (!c.graphs.count(cls.id)) c.graphs.emplace(cls.id, build_class_graph(p, cls));
            c.symmetries[cls.id] = symmetry_group(cls.body, cls.symmetry);
        }
        c.poses = p.pose_table();
        c.grasp_sets = p.grasp_sets();
        return c;
    }
};

namespace detail {

struct AttemptFailed : std::runtime_error {
    std::string kind;
    AttemptFailed(std::string k, const std::string& what) : std::runtime_error(what), kind(std::move(k)) {}
};

class Simulator {
public:
    static constexpr double kTickSeconds = 0.01;
    static constexpr double kGraspRadius = 0.03; // Close takes the nearest part center within this distance

    Simulator(const Project& p, SimState& s) : p_(p), s_(s) {}

    double time() const { return s_.ticks * kTickSeconds; }

    const BoxCompound& fingers(int g, double opening) {
        auto key = std::make_pair(g, opening);
        auto it = cache_.find(key);
        if (it == cache_.end()) it = cache_.emplace(key, p_.workcell.grippers[g].fingers.at_opening(opening)).first;
        return it->second;
    }

    void run(const MotionPrimitive& m) {
        using K = MotionPrimitive::Kind;
        SimGripper& gr = s_.grippers[m.gripper];
        switch (m.kind) {
        case K::Move:
        case K::Linear: {
            auto path = linear_path(gr.tip, m.target, p_.config.regrasp.tick);
            for (size_t k = 1; k < path.size(); ++k) {
                gr.tip = path[k];
                if (gr.held >= 0) s_.parts[gr.held].pose = gr.tip * s_.parts[gr.held].P_T_F.inverse();
                ++s_.ticks;
                check(m.gripper);
            }
            gr.tip = m.target;
            if (gr.held >= 0) s_.parts[gr.held].pose = gr.tip * s_.parts[gr.held].P_T_F.inverse();
            break;
        }
        case K::Open:
            if (gr.held >= 0) s_.parts[gr.held].held_by = -1;
            gr.held = -1;
            gr.opening = m.opening;
            ++s_.ticks;
            check(m.gripper);
            break;
        case K::Close: close(m.gripper, m.opening); break;
        }
    }

    void run(const std::vector<MotionPrimitive>& ms) {
        for (const auto& m : ms) run(m);
    }

    /// Closing stops at first contact with the gripped part.
    void close(int g, double opening) {
        SimGripper& gr = s_.grippers[g];
        ++s_.ticks;
        if (slip_) {
            slip_ = false;
            gr.opening = opening;
            check(g);
            return;
        }
        int target = -1;
        double best = kGraspRadius;
        for (int k = 0; k < static_cast<int>(s_.parts.size()); ++k) {
            const auto& part = s_.parts[k];
            if (!part.placed_as.empty() || part.held_by == g) continue;
            auto [lo, hi] = body(k).aabb(part.pose);
            double d = (0.5 * (lo + hi) - gr.tip.translation()).norm();
            if (d < best) {
                best = d;
                target = k;
            }
        }
        double closed = opening;
        if (target >= 0 && collide(fingers(g, closed), gr.tip, body(target), s_.parts[target].pose)) {
            double a = opening, b = gr.opening; // a penetrates, b clear
            for (int it = 0; it < 30; ++it) {
                double m = 0.5 * (a + b);
                (collide(fingers(g, m), gr.tip, body(target), s_.parts[target].pose) ? a : b) = m;
            }
            closed = b;
        }
        gr.opening = closed;
        if (target >= 0) {
            SimPart& part = s_.parts[target];
            if (part.held_by >= 0) s_.grippers[part.held_by].held = -1;
            part.held_by = g;
            part.P_T_F = part.pose.inverse() * gr.tip;
            gr.held = target;
        }
        check(g);
    }

    void arm_slip() { slip_ = true; }

    const BoxCompound& body(int part) const { return p_.part_class(s_.parts[part].part_class).body; }

    /// Throws AttemptFailed when gripper g or its part leaves reach or touches anything.
    void check(int g) {
        const Gripper& gm = p_.workcell.grippers[g];
        const SimGripper& gr = s_.grippers[g];
        if (!gm.reach.contains(gr.tip.translation())) fail("reach", "gripper '" + gm.name + "' left its reach volume");
        const int o = 1 - g;
        const SimGripper& other = s_.grippers[o];
        Scene obst = p_.workcell.scene();
        if (!p_.design.base.empty()) obst.push_back({&p_.design.base, s_.base_pose * p_.design.base_pose});
        Scene parts;
        for (int k = 0; k < static_cast<int>(s_.parts.size()); ++k)
            if (k != gr.held) parts.push_back({&body(k), s_.parts[k].pose});
        const BoxCompound& mine = fingers(g, gr.opening);
        const BoxCompound& theirs = fingers(o, other.opening);
        if (collide_any(mine, gr.tip, obst)) fail("collision", "gripper '" + gm.name + "' hits the workcell or base");
        if (collide_any(mine, gr.tip, parts)) fail("collision", "gripper '" + gm.name + "' hits a part");
        if (collide(mine, gr.tip, theirs, other.tip)) fail("collision", "grippers collide");
        if (gr.held >= 0) {
            const BoxCompound& held = body(gr.held);
            const Transform& hp = s_.parts[gr.held].pose;
            if (collide_any(held, hp, obst)) fail("collision", "held part hits the workcell or base");
            if (collide_any(held, hp, parts)) fail("collision", "held part hits another part");
            if (collide(held, hp, theirs, other.tip)) fail("collision", "held part hits gripper '" + p_.workcell.grippers[o].name + "'");
        }
    }

    [[noreturn]] void fail(const std::string& kind, const std::string& what) const { throw AttemptFailed(kind, what); }

private:
    const Project& p_;
    SimState& s_;
    std::map<std::pair<int, double>, BoxCompound> cache_;
    bool slip_ = false;
};

inline int gripper_index(const WorkcellModel& w, const std::string& name) {
    for (int k = 0; k < 2; ++k)
        if (w.grippers[k].name == name) return k;
    throw std::invalid_argument("recipe names unknown gripper '" + name + "'");
}

/// Grid perpendicular to the camera axis that covers the area's footprint, with its plane on the area floor.
inline GridSpec area_grid(const CameraModel& cam, const Area& a, double cell, double extra = 0.0) {
    Vec3 floor = a.center - Vec3(0, 0, a.half.z());
    double distance = cam.pose.inverse().apply(floor).z() + 0.01;
    int n = static_cast<int>(std::ceil((2.0 * std::max(a.half.x(), a.half.y()) + extra) / cell));
    return camera_grid(cam, distance, cell, n);
}

} // namespace detail

inline json to_json(const SimState& s) {
    json parts = json::array();
    for (const auto& p : s.parts) {
        json j = {{"class", p.part_class}, {"pose", to_json(p.pose)}, {"held_by", p.held_by}};
        if (!p.placed_as.empty()) j["placed_as"] = p.placed_as;
        parts.push_back(j);
    }
    json grippers = json::array();
    for (const auto& g : s.grippers) grippers.push_back({{"tip", to_json(g.tip)}, {"opening", g.opening}, {"held", g.held}});
    return {{"seed", s.seed}, {"base_pose", to_json(s.base_pose)}, {"parts", parts}, {"grippers", grippers}, {"ticks", s.ticks}};
}

inline json to_json(const ExecutionResult& r) {
    json j = header("assembly-forge/execution-log");
    j["success"] = r.success;
    j["events"] = json::array();
    for (const auto& e : r.log)
        j["events"].push_back({{"time", e.time}, {"step", e.step}, {"attempt", e.attempt}, {"kind", e.kind}, {"ok", e.ok}, {"detail", e.detail}});
    j["parts"] = json::array();
    for (const auto& p : r.parts)
        j["parts"].push_back({{"part", p.part}, {"position_error", p.position_error}, {"angle_error", p.angle_error}, {"ok", p.ok}});
    j["final_state"] = to_json(r.state);
    return j;
}

/// Random true base pose inside the assembly area: nominal height, uniform xy and yaw.
inline Transform random_base_pose(const Project& p, const Area& area, uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> u(-1.0, 1.0), yaw(-kPi, kPi);
    Vec3 c = area.center + Vec3(u(rng) * area.half.x(), u(rng) * area.half.y(), 0.0);
    return Transform::translation(c.x(), c.y(), p.nominal_base_pose().translation().z()) * Transform::rot_z(yaw(rng));
}

/// Runs the recipe in simulation. Throws StepFailed when a step exhausts its attempts; the
/// exception carries the log and state up to that point.
inline ExecutionResult execute(const ExecutionContext& ctx, const Recipe& recipe, const std::vector<PileItem>& pile, uint64_t seed,
                               const FaultModel& faults = {}) {
    const Project& p = *ctx.project;
    const WorkcellModel& w = p.workcell;
    const RegraspConfig& rc = p.config.regrasp;
    ExecutionResult res;
    SimState& s = res.state;
    s.seed = seed;
    for (const auto& item : pile) s.parts.push_back({item.part_class, item.pose, item.pose, -1, {}, {}});
    for (int k = 0; k < 2; ++k) s.grippers[k] = {w.grippers[k].home, w.grippers[k].fingers.max_opening, -1};
    if (recipe.steps.empty()) {
        res.success = true;
        return res;
    }

    detail::Simulator sim(p, s);
    auto log = [&](int step, int attempt, const std::string& kind, bool ok, const std::string& detail) {
        res.log.push_back({sim.time(), step, attempt, kind, ok, detail});
    };

    // base localization preamble
    s.base_pose = random_base_pose(p, recipe.assembly_area, seed);
    Transform W_T_B;
    {
        const CameraModel& cam = w.camera(recipe.assembly_camera);
        auto [lo, hi] = p.design.base.aabb();
        GridSpec grid = detail::area_grid(cam, recipe.assembly_area, p.config.pose_cell, (hi - lo).head<2>().norm());
        const int id = recipe.base_pose_id;
        PoseLabel label = label_pose(id, p.design.base, ctx.poses.at(id), s.base_pose * p.design.base_pose, cam, grid);
        W_T_B = estimate_pose(label.label, ctx.poses).part_pose * p.design.base_pose.inverse();
        auto e = pose_error(W_T_B, s.base_pose);
        log(-1, 1, "localize_base", true, "position error " + std::to_string(e.first) + " m, angle error " + std::to_string(e.second) + " rad");
    }
    res.snapshots.push_back(s);

    for (int step = 0; step < static_cast<int>(recipe.steps.size()); ++step) {
        const RecipeStep& st = recipe.steps[step];
        const int picker = detail::gripper_index(w, st.pickup_fingers);
        const int goal_g = detail::gripper_index(w, st.goal_fingers);
        const PartClass& cls = p.part_class(st.part_class);
        const RegraspGraph& graph = ctx.graphs.at(st.part_class);
        bool done = false;
        for (int attempt = 1; attempt <= p.config.max_attempts && !done; ++attempt) {
            using K = MotionPrimitive::Kind;
            try {
                // pickup
                const CameraModel& pcam = w.camera(st.pickup_camera);
                GridSpec grid = detail::area_grid(pcam, st.pickup_area, p.config.pickup_cell, 0.04);
                std::vector<ScenePart> visible;
                for (int k = 0; k < static_cast<int>(s.parts.size()); ++k) {
                    const auto& part = s.parts[k];
                    if (part.held_by < 0 && part.placed_as.empty() && st.pickup_area.contains(part.pose.translation()))
                        visible.push_back({part.part_class, &sim.body(k), part.pose});
                }
                GraspLabel label = label_scene(visible, ctx.grasp_sets, w.grippers[picker].fingers, w.scene(), pcam, grid, p.config.grasp_label);
                SelectedGrasp sel;
                try {
                    sel = select_grasp(infer_grasps(label.label), st.part_class, pcam.pose, rc.padding);
                } catch (const NoProposalForClass& e) {
                    throw detail::AttemptFailed("pick", e.what());
                }
                const Transform tip = sel.proposal.frame.transform();
                const double open = approach_opening(w.grippers[picker], sel.proposal.width(), rc);
                if (faults.failed_picks >= attempt) sim.arm_slip();
                sim.run({{K::Open, picker, {}, open},
                         {K::Move, picker, backed_off(tip, rc.pre_approach), open},
                         {K::Linear, picker, backed_off(tip, rc.hover), open},
                         {K::Linear, picker, tip, open},
                         {K::Close, picker, {}, sel.proposal.width()}});
                const int held = s.grippers[picker].held;
                const bool got = held >= 0 && s.parts[held].part_class == st.part_class;
                sim.run({{K::Linear, picker, backed_off(tip, rc.hover), s.grippers[picker].opening},
                         {K::Linear, picker, backed_off(tip, rc.pre_approach), s.grippers[picker].opening}});
                if (held < 0) {
                    sim.run({K::Move, picker, w.grippers[picker].home, open});
                    throw detail::AttemptFailed("pick", "part slipped from gripper '" + w.grippers[picker].name + "'");
                }
                if (!got) throw detail::AttemptFailed("pick", "picked a part of the wrong class");
                log(step, attempt, "pick", true, "picked with grasp proposal at " + std::to_string(tip.translation().x()) + ", " +
                                                     std::to_string(tip.translation().y()));

                // presentation and pose estimate
                const CameraModel& cam = w.camera(st.pose_camera);
                const Transform show = presentation_tip(cam, cls.body);
                sim.run({K::Move, picker, show, s.grippers[picker].opening});
                auto [near_d, far_d] = view_distance_interval(cls.body, cam);
                GridSpec pgrid = camera_grid(cam, far_d + 0.05, p.config.pose_cell, static_cast<int>(std::ceil(0.1 / p.config.pose_cell)));
                PoseLabel pl;
                try {
                    pl = label_pose(cls.id, cls.body, ctx.poses.at(cls.id), s.parts[held].pose, cam, pgrid);
                } catch (const PartOutOfView& e) {
                    throw detail::AttemptFailed("pose", e.what());
                }
                const Transform W_T_P = estimate_pose(pl.label, ctx.poses).part_pose;
                HeldPart hp{picker, W_T_P.inverse() * show, show, s.grippers[picker].opening};
                log(step, attempt, "pose_estimate", true, std::string("view ") + view_name(pl.view));

                // regrasp to the goal grasp
                Handoff h;
                try {
                    h = initial_grasp(graph, cls.body, hp, w.grippers, w.scene(), st.goal_grasp.sample, goal_g, rc);
                } catch (const NoFeasibleHandoff& e) {
                    throw detail::AttemptFailed("regrasp", e.what());
                }
                const auto& n0 = graph.nodes()[h.node];
                sim.run({K::Move, picker, h.holder_target, hp.opening});
                sim.run(handoff_motions(w.grippers, picker, h.holder_target, hp.opening, graph.tip_pose(h.node), graph.samples[n0.sample].opening, rc));
                sim.run(emit_motions(graph, h.plan, w.grippers, rc));
                log(step, attempt, "regrasp", true,
                    std::to_string(h.plan.regrasps + 1) + " handoff(s), " + std::to_string(h.plan.reposes) + " repose(s)");
                const int holder = graph.nodes()[h.plan.nodes.back()].gripper;
                if (holder != goal_g || s.grippers[holder].held < 0) throw detail::AttemptFailed("regrasp", "goal gripper does not hold the part");

                // insertion
                const GraspSample& goal = graph.samples.at(st.goal_grasp.sample);
                const Transform F0_T_F = st.goal_grasp.tip.inverse() * goal.tip;
                std::vector<Transform> tips;
                for (const auto& wp : st.waypoints) tips.push_back(W_T_B * wp * F0_T_F);
                Vec3 out_dir = tips[0].translation() - tips[1].translation();
                out_dir = out_dir.norm() > 1e-9 ? out_dir.normalized() : Vec3::UnitZ();
                const Transform pre(tips[0].rotation(), tips[0].translation() + out_dir * rc.pre_approach);
                const double gopen = s.grippers[holder].opening;
                sim.run({K::Move, holder, pre, gopen});
                for (const auto& t : tips) sim.run({K::Linear, holder, t, gopen});
                const int placed = s.grippers[holder].held;
                sim.run({K::Open, holder, {}, gopen});
                s.parts[placed].placed_as = st.part;
                log(step, attempt, "insert", true, "released '" + st.part + "'");
                for (auto it = tips.rbegin() + 1; it != tips.rend(); ++it) sim.run({K::Linear, holder, *it, gopen});
                sim.run({K::Linear, holder, pre, gopen});
                sim.run({K::Move, holder, w.grippers[holder].home, gopen});
                done = true;
            } catch (const detail::AttemptFailed& e) {
                log(step, attempt, e.kind, false, e.what());
                // resume from pickup: a part still in hand goes back to its pile spot, grippers go home
                for (int k = 0; k < 2; ++k) {
                    if (s.grippers[k].held >= 0) {
                        SimPart& part = s.parts[s.grippers[k].held];
                        part.held_by = -1;
                        part.pose = part.pile_pose;
                    }
                    s.grippers[k] = {w.grippers[k].home, w.grippers[k].fingers.max_opening, -1};
                }
                for (auto& part : s.parts)
                    if (part.held_by >= 0) part.held_by = -1;
                if (attempt < p.config.max_attempts) {
                    log(step, attempt, "retry", true, "resuming from pickup");
                } else {
                    log(step, attempt, "step_failed", false, e.what());
                    throw StepFailed(step, e.what(), std::make_shared<ExecutionResult>(res));
                }
            }
        }
        res.snapshots.push_back(s);
    }

    // final poses against the design, modulo part symmetry
    res.success = true;
    for (const auto& st : recipe.steps) {
        PartResult pr{st.part};
        pr.position_error = pr.angle_error = 1e300;
        for (const auto& part : s.parts)
            if (part.placed_as == st.part) {
                auto e = symmetric_pose_error(part.pose, s.base_pose * st.goal, ctx.symmetries.at(st.part_class));
                pr.position_error = e.first;
                pr.angle_error = e.second;
            }
        pr.ok = pr.position_error <= p.config.tolerance_position && pr.angle_error <= p.config.tolerance_angle;
        res.success &= pr.ok;
        res.parts.push_back(pr);
    }
    log(static_cast<int>(recipe.steps.size()), 0, "check", res.success, res.success ? "all parts within tolerance" : "part poses out of tolerance");
    return res;
}

} // namespace forge
