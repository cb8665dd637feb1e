#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "forge/assembly.hpp"
#include "forge/geom.hpp"
#include "forge/grasp.hpp"
#include "forge/motion.hpp"

namespace forge {

/// One of the two arms: finger model, reach volume (axis-aligned, no IK) and parked tip pose.
struct Gripper {
    std::string name;
    FingerModel fingers;
    Area reach;
    Transform home;
};

struct RegraspConfig {
    int repose_steps = 16;
    double hover = 0.03;        // back-off above a grasp along the approach axis
    double padding = 0.004;     // extra opening while approaching or releasing
    double pre_approach = 0.15; // staging distance for gross moves
    double tick = 0.002;        // sweep resolution shared with the simulator
};

struct EmptyGraph : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoPath : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoFeasibleHandoff : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RegraspNode {
    int sample = 0;  // grasp sample id
    int pose = 0;    // seed pose id
    int gripper = 0;
};

struct RegraspEdge {
    enum class Kind { Regrasp, Repose };
    Kind kind = Kind::Regrasp;
    int a = 0;
    int b = 0;
};

class RegraspGraph {
public:
    std::vector<GraspSample> samples;
    std::vector<Transform> seeds; // part poses at the regrasp location, workcell frame

    int add_node(const RegraspNode& n) {
        nodes_.push_back(n);
        adj_.emplace_back();
        return static_cast<int>(nodes_.size()) - 1;
    }
    void add_edge(RegraspEdge::Kind kind, int a, int b) {
        const int id = static_cast<int>(edges_.size());
        edges_.push_back({kind, a, b});
        adj_[a].push_back(id);
        adj_[b].push_back(id);
    }

    const std::vector<RegraspNode>& nodes() const { return nodes_; }
    const std::vector<RegraspEdge>& edges() const { return edges_; }
    const std::vector<int>& incident(int node) const { return adj_[node]; }
    int other(const RegraspEdge& e, int node) const { return e.a == node ? e.b : e.a; }

    std::optional<int> find(int sample, int pose, int gripper) const {
        for (int k = 0; k < static_cast<int>(nodes_.size()); ++k)
            if (nodes_[k].sample == sample && nodes_[k].pose == pose && nodes_[k].gripper == gripper) return k;
        return std::nullopt;
    }

    /// Tip pose of a node in the workcell frame.
    Transform tip_pose(int node) const { return seeds[nodes_[node].pose] * samples[nodes_[node].sample].tip; }

private:
    std::vector<RegraspNode> nodes_;
    std::vector<RegraspEdge> edges_;
    std::vector<std::vector<int>> adj_;
};

/// 24 orientations (6 faces up x 4 yaws) with the part's bounding-box center at `location`.
inline std::vector<Transform> default_seed_poses(const BoxCompound& part, const Vec3& location) {
    const auto [lo, hi] = part.aabb();
    const Vec3 center = 0.5 * (lo + hi);
    const std::array<Transform, 6> faces = {
        Transform{},                        // +z up
        Transform::rot_x(kPi),              // -z up
        Transform::rot_y(-kPi / 2),         // +x up
        Transform::rot_y(kPi / 2),          // -x up
        Transform::rot_x(kPi / 2),          // +y up
        Transform::rot_x(-kPi / 2),         // -y up
    };
    std::vector<Transform> out;
    for (const auto& f : faces)
        for (int k = 0; k < 4; ++k)
            out.push_back(Transform::translation(location) * Transform::rot_z(k * kPi / 2) * f * Transform::translation(-center));
    return out;
}

/// Gross approach used for every grasp at the regrasp location: home, staging, hover, grasp.
inline std::vector<Transform> approach_waypoints(const Gripper& g, const Transform& tip, const RegraspConfig& cfg) {
    return {g.home, backed_off(tip, cfg.pre_approach), backed_off(tip, cfg.hover), tip};
}

/// Every approach waypoint after home lies in the gripper's reach (the reach volume is a box, so the
/// straight segments between them do too).
inline bool approach_in_reach(const Gripper& g, const Transform& tip, const RegraspConfig& cfg) {
    for (const auto& t : approach_waypoints(g, tip, cfg))
        if (!g.reach.contains(t.translation())) return false;
    return true;
}

inline double approach_opening(const Gripper& g, double opening, const RegraspConfig& cfg) {
    return std::min(opening + cfg.padding, g.fingers.max_opening);
}

/// True when `body` swept along the piecewise-linear `waypoints` stays clear of `obstacles`.
inline bool sweep_clear(const BoxCompound& body, const std::vector<Transform>& waypoints, const std::vector<Placed>& obstacles,
                        double tick, int min_ticks = 1) {
    if (waypoints.size() == 1) return !collide_any(body, waypoints[0], obstacles);
    for (size_t k = 0; k + 1 < waypoints.size(); ++k)
        for (const auto& p : linear_path(waypoints[k], waypoints[k + 1], tick, min_ticks))
            if (collide_any(body, p, obstacles)) return false;
    return true;
}

/// Builds the (grasp sample, seed pose, gripper) graph for one part.
inline RegraspGraph build_graph(const BoxCompound& part, const std::vector<GraspDefinition>& grasp_set, const std::vector<Transform>& seeds,
                                const std::array<Gripper, 2>& grippers, const Scene& environment, const RegraspConfig& cfg = {}) {
    if (seeds.empty()) throw std::invalid_argument("build_graph: no seed poses");
    RegraspGraph g;
    g.samples = grasp_samples(expand_grasp_set(grasp_set));
    g.seeds = seeds;
    const std::vector<Placed>& env = environment;

    std::array<BoxCompound, 2> parked;
    for (int k = 0; k < 2; ++k) parked[k] = grippers[k].fingers.at_opening(grippers[k].fingers.max_opening);
    // closed and open bodies per (gripper, sample)
    std::vector<std::array<BoxCompound, 2>> closed(g.samples.size()), open(g.samples.size());
    for (size_t s = 0; s < g.samples.size(); ++s)
        for (int k = 0; k < 2; ++k) {
            closed[s][k] = grippers[k].fingers.at_opening(g.samples[s].opening);
            open[s][k] = grippers[k].fingers.at_opening(approach_opening(grippers[k], g.samples[s].opening, cfg));
        }

    for (int p = 0; p < static_cast<int>(seeds.size()); ++p) {
        if (collide_any(part, seeds[p], env)) continue;
        std::vector<Placed> with_part = env;
        with_part.push_back({&part, seeds[p]});
        for (int k = 0; k < 2; ++k)
            for (int s = 0; s < static_cast<int>(g.samples.size()); ++s) {
                const Transform tip = seeds[p] * g.samples[s].tip;
                if (!approach_in_reach(grippers[k], tip, cfg)) continue;
                if (collide_any(closed[s][k], tip, env)) continue;
                if (!sweep_clear(open[s][k], approach_waypoints(grippers[k], tip, cfg), with_part, cfg.tick)) continue;
                g.add_node({s, p, k});
            }
    }
    if (g.nodes().empty()) throw EmptyGraph("build_graph: no feasible (grasp, pose, gripper) node");

    const auto& nodes = g.nodes();
    const int n = static_cast<int>(nodes.size());
    // regrasp edges: same pose, different gripper
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto& na = nodes[a];
            const auto& nb = nodes[b];
            if (na.pose != nb.pose || na.gripper == nb.gripper) continue;
            const Transform ta = g.tip_pose(a), tb = g.tip_pose(b);
            const auto& ca = closed[na.sample][na.gripper];
            const auto& cb = closed[nb.sample][nb.gripper];
            if (collide(ca, ta, cb, tb)) continue;
            std::vector<Placed> obst = env;
            obst.push_back({&part, seeds[na.pose]});
            obst.push_back({&cb, tb});
            if (!sweep_clear(open[na.sample][na.gripper], approach_waypoints(grippers[na.gripper], ta, cfg), obst, cfg.tick)) continue;
            obst[obst.size() - 1] = {&ca, ta};
            if (!sweep_clear(open[nb.sample][nb.gripper], approach_waypoints(grippers[nb.gripper], tb, cfg), obst, cfg.tick)) continue;
            g.add_edge(RegraspEdge::Kind::Regrasp, a, b);
        }
    // repose edges: same sample and gripper, part moved pose to pose
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const auto& na = nodes[a];
            const auto& nb = nodes[b];
            if (na.sample != nb.sample || na.gripper != nb.gripper) continue;
            const int k = na.gripper;
            std::vector<Placed> obst = env;
            obst.push_back({&parked[1 - k], grippers[1 - k].home});
            const Transform& tip = g.samples[na.sample].tip;
            bool ok = true;
            const Transform tip_inv = tip.inverse();
            for (const auto& t : linear_path(seeds[na.pose] * tip, seeds[nb.pose] * tip, cfg.tick, cfg.repose_steps)) {
                if (!grippers[k].reach.contains(t.translation()) || collide_any(closed[na.sample][k], t, obst) ||
                    collide_any(part, t * tip_inv, obst)) {
                    ok = false;
                    break;
                }
            }
            if (ok) g.add_edge(RegraspEdge::Kind::Repose, a, b);
        }
    return g;
}

struct RegraspPlan {
    std::vector<int> nodes; // start first
    std::vector<RegraspEdge::Kind> kinds; // kinds[k] joins nodes[k] and nodes[k+1]
    int regrasps = 0;
    int reposes = 0;
};

/// Best-first search minimizing (regrasp count, repose count). `goal_gripper` < 0 accepts either gripper.
inline RegraspPlan plan_regrasp(const RegraspGraph& g, const std::vector<int>& starts, int goal_sample, int goal_gripper = -1) {
    if (starts.empty()) throw std::invalid_argument("plan_regrasp: no start nodes");
    using Cost = std::pair<int, int>;
    const int n = static_cast<int>(g.nodes().size());
    const Cost inf{std::numeric_limits<int>::max(), 0};
    std::vector<Cost> dist(n, inf);
    std::vector<int> parent(n, -1), via(n, -1);
    using Item = std::tuple<Cost, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    for (int s : starts) {
        if (s < 0 || s >= n) throw std::out_of_range("plan_regrasp: start node out of range");
        dist[s] = {0, 0};
        open.push({{0, 0}, s});
    }
    auto is_goal = [&](int v) { return g.nodes()[v].sample == goal_sample && (goal_gripper < 0 || g.nodes()[v].gripper == goal_gripper); };
    while (!open.empty()) {
        auto [c, v] = open.top();
        open.pop();
        if (c > dist[v]) continue;
        if (is_goal(v)) {
            RegraspPlan plan;
            plan.regrasps = c.first;
            plan.reposes = c.second;
            for (int x = v; x >= 0; x = parent[x]) {
                plan.nodes.push_back(x);
                if (parent[x] >= 0) plan.kinds.push_back(g.edges()[via[x]].kind);
            }
            std::reverse(plan.nodes.begin(), plan.nodes.end());
            std::reverse(plan.kinds.begin(), plan.kinds.end());
            return plan;
        }
        for (int e : g.incident(v)) {
            const auto& edge = g.edges()[e];
            const int w = g.other(edge, v);
            Cost nc = edge.kind == RegraspEdge::Kind::Regrasp ? Cost{c.first + 1, c.second} : Cost{c.first, c.second + 1};
            if (nc < dist[w]) {
                dist[w] = nc;
                parent[w] = v;
                via[w] = e;
                open.push({nc, w});
            }
        }
    }
    throw NoPath("plan_regrasp: goal grasp " + std::to_string(goal_sample) + " is unreachable");
}

/// The part as currently held: gripper, estimated tip offset and current tip pose.
struct HeldPart {
    int gripper = 0;
    Transform P_T_F;   // estimated tip frame in the part frame
    Transform W_T_F;   // current tip pose
    double opening = 0.0; // jaw opening while holding
};

struct Handoff {
    int node = -1;              // free-gripper node grasped by the handoff
    Transform holder_target;    // holder tip pose presenting the part at the node's seed pose
    RegraspPlan plan;           // from `node` to the goal
};

/// Chooses the first handoff: the free-gripper node, reachable by moving the held part to its seed
/// pose, that minimizes the remaining plan. Ties go to the lowest node id.
inline Handoff initial_grasp(const RegraspGraph& g, const BoxCompound& part, const HeldPart& held, const std::array<Gripper, 2>& grippers,
                             const Scene& environment, int goal_sample, int goal_gripper, const RegraspConfig& cfg = {}) {
    const std::vector<Placed>& env = environment;
    const int h = held.gripper, f = 1 - h;
    const Gripper& holder = grippers[h];
    const BoxCompound parked = grippers[f].fingers.at_opening(grippers[f].fingers.max_opening);
    const BoxCompound hold_body = holder.fingers.at_opening(held.opening);
    const BoxCompound release_body = holder.fingers.at_opening(approach_opening(holder, held.opening, cfg));
    const Transform F_T_P = held.P_T_F.inverse();
    std::optional<Handoff> best;
    std::pair<int, int> best_cost{std::numeric_limits<int>::max(), 0};
    std::map<int, bool> pose_ok;
    for (int v = 0; v < static_cast<int>(g.nodes().size()); ++v) {
        const auto& node = g.nodes()[v];
        if (node.gripper != f) continue;
        const Transform seed = g.seeds[node.pose];
        const Transform holder_tip = seed * held.P_T_F;
        if (!pose_ok.count(node.pose)) {
            bool ok = approach_in_reach(holder, holder_tip, cfg) && !collide_any(hold_body, holder_tip, env);
            if (ok) {
                std::vector<Placed> obst = env;
                obst.push_back({&parked, grippers[f].home});
                for (const auto& t : linear_path(held.W_T_F, holder_tip, cfg.tick)) {
                    if (collide_any(hold_body, t, obst) || collide_any(part, t * F_T_P, obst)) {
                        ok = false;
                        break;
                    }
                }
            }
            pose_ok[node.pose] = ok;
        }
        if (!pose_ok[node.pose]) continue;
        const Transform tip = g.tip_pose(v);
        const auto& sample = g.samples[node.sample];
        const BoxCompound closed = grippers[f].fingers.at_opening(sample.opening);
        if (collide(closed, tip, hold_body, holder_tip)) continue;
        std::vector<Placed> obst = env;
        obst.push_back({&part, seed});
        obst.push_back({&hold_body, holder_tip});
        const BoxCompound open = grippers[f].fingers.at_opening(approach_opening(grippers[f], sample.opening, cfg));
        if (!sweep_clear(open, approach_waypoints(grippers[f], tip, cfg), obst, cfg.tick)) continue;
        // the holder lets go and backs off past the receiver's grip
        obst.pop_back();
        obst.push_back({&closed, tip});
        if (!sweep_clear(release_body, approach_waypoints(holder, holder_tip, cfg), obst, cfg.tick)) continue;
        RegraspPlan plan;
        try {
            plan = plan_regrasp(g, {v}, goal_sample, goal_gripper);
        } catch (const NoPath&) {
            continue;
        }
        std::pair<int, int> cost{plan.regrasps + 1, plan.reposes};
        if (cost < best_cost) {
            best_cost = cost;
            best = Handoff{v, holder_tip, std::move(plan)};
        }
    }
    if (!best) throw NoFeasibleHandoff("initial_grasp: no free-gripper node can take the part");
    return *best;
}

/// Hand the part from `giver` (holding at `giver_tip`) to `receiver` (grasping at `receiver_tip`).
/// The receiver starts parked at home; the giver ends parked at home.
inline std::vector<MotionPrimitive> handoff_motions(const std::array<Gripper, 2>& grippers, int giver, const Transform& giver_tip,
                                                    double giver_opening, const Transform& receiver_tip, double receiver_opening,
                                                    const RegraspConfig& cfg = {}) {
    using K = MotionPrimitive::Kind;
    const int r = 1 - giver;
    const double r_open = approach_opening(grippers[r], receiver_opening, cfg);
    const double g_open = approach_opening(grippers[giver], giver_opening, cfg);
    return {
        {K::Open, r, {}, r_open},
        {K::Move, r, backed_off(receiver_tip, cfg.pre_approach), r_open},
        {K::Linear, r, backed_off(receiver_tip, cfg.hover), r_open},
        {K::Linear, r, receiver_tip, r_open},
        {K::Close, r, {}, receiver_opening},
        {K::Open, giver, {}, g_open},
        {K::Linear, giver, backed_off(giver_tip, cfg.hover), g_open},
        {K::Linear, giver, backed_off(giver_tip, cfg.pre_approach), g_open},
        {K::Move, giver, grippers[giver].home, g_open},
    };
}

/// Motion primitives realizing `plan`, starting with the part held at the plan's first node.
inline std::vector<MotionPrimitive> emit_motions(const RegraspGraph& g, const RegraspPlan& plan, const std::array<Gripper, 2>& grippers,
                                                 const RegraspConfig& cfg = {}) {
    if (plan.nodes.empty()) throw std::invalid_argument("emit_motions: empty plan");
    std::vector<MotionPrimitive> out;
    for (size_t k = 0; k + 1 < plan.nodes.size(); ++k) {
        const int a = plan.nodes[k], b = plan.nodes[k + 1];
        const auto& na = g.nodes()[a];
        const auto& nb = g.nodes()[b];
        if (plan.kinds[k] == RegraspEdge::Kind::Repose) {
            out.push_back({MotionPrimitive::Kind::Move, na.gripper, g.tip_pose(b), g.samples[na.sample].opening});
        } else {
            auto h = handoff_motions(grippers, na.gripper, g.tip_pose(a), g.samples[na.sample].opening, g.tip_pose(b),
                                     g.samples[nb.sample].opening, cfg);
            out.insert(out.end(), h.begin(), h.end());
        }
    }
    return out;
}

} // namespace forge
