#pragma once

#include <array>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "forge/geom.hpp"
#include "forge/grasp.hpp"

namespace forge {

struct DesignPart {
    int part_class = 0;
    std::string name;
    BoxCompound body;
    Transform goal; // part frame in the assembly frame
};

/// A design in its own assembly frame; the fixed base is placed at `base_pose` in that frame.
struct AssemblyDesign {
    std::vector<DesignPart> parts;
    BoxCompound base;
    Transform base_pose;
};

using DisassemblySequence = std::vector<int>;

struct LatticeConfig {
    double step = 0.0; // 0 derives the step from the design clearance
    double margin = 0.005;
    size_t max_expansions = 2'000'000;
};

struct Blocked : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoValidGrasp : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool is_permutation_of(const DisassemblySequence& seq, size_t n) {
    if (seq.size() != n) return false;
    std::vector<char> seen(n, 0);
    for (int i : seq) {
        if (i < 0 || static_cast<size_t>(i) >= n || seen[i]) return false;
        seen[i] = 1;
    }
    return true;
}

/// Smallest positive gap between any two design bodies (parts and base), infinity if none.
inline double min_clearance(const AssemblyDesign& d) {
    double best = std::numeric_limits<double>::infinity();
    auto consider = [&](double gap) {
        if (gap > 0.0) best = std::min(best, gap);
    };
    for (size_t a = 0; a < d.parts.size(); ++a) {
        if (!d.base.empty()) consider(separation(d.parts[a].body, d.parts[a].goal, d.base, d.base_pose));
        for (size_t b = a + 1; b < d.parts.size(); ++b)
            consider(separation(d.parts[a].body, d.parts[a].goal, d.parts[b].body, d.parts[b].goal));
    }
    return best;
}

inline double lattice_step(const AssemblyDesign& d, const LatticeConfig& cfg) {
    if (cfg.step > 0.0) return cfg.step;
    double c = min_clearance(d);
    if (!std::isfinite(c)) return 0.01;
    return std::max(0.001, 0.5 * c);
}

using Cell = std::array<int, 3>;

/// Lattice directions along the part frame axes: +x, -x, +y, -y, +z, -z.
inline constexpr int kNoDirection = 6;

inline Cell direction_step(int d) {
    Cell c{0, 0, 0};
    c[d / 2] = (d % 2 == 0) ? 1 : -1;
    return c;
}

/// Translation lattice around a part's goal pose. Offsets are along the part axes.
class ExtractionLattice {
public:
    ExtractionLattice(const BoxCompound& part, const Transform& goal, const BoxCompound& fingers, const Transform& tip_in_part,
                      Scene obstacles, Scene environment, double step, double margin)
        : part_(part), goal_(goal), fingers_(fingers), tip_(tip_in_part), obstacles_(std::move(obstacles)),
          environment_(std::move(environment)), step_(step), margin_(margin) {
        if (step_ <= 0) throw std::invalid_argument("ExtractionLattice: step must be positive");
        std::tie(part_lo_, part_hi_) = part_.aabb();
        bounds_lo_ = part_lo_;
        bounds_hi_ = part_hi_;
        const Transform inv = goal_.inverse();
        for (const auto& o : obstacles_) {
            auto [lo, hi] = o.body->aabb(inv * o.pose);
            bounds_lo_ = bounds_lo_.cwiseMin(lo);
            bounds_hi_ = bounds_hi_.cwiseMax(hi);
        }
        bounds_lo_.array() -= margin_;
        bounds_hi_.array() += margin_;
        for (int a = 0; a < 3; ++a) {
            double reach = std::max(part_hi_[a] - bounds_lo_[a], bounds_hi_[a] - part_lo_[a]);
            limit_[a] = static_cast<int>(std::ceil(reach / step_)) + 1;
        }
    }

    double step() const { return step_; }
    const Transform& grasp_tip() const { return tip_; }
    const Cell& limits() const { return limit_; }
    size_t node_count() const {
        return static_cast<size_t>(2 * limit_[0] + 1) * (2 * limit_[1] + 1) * (2 * limit_[2] + 1);
    }

    Transform part_pose(const Cell& c) const { return goal_ * Transform::translation(step_ * c[0], step_ * c[1], step_ * c[2]); }
    Transform finger_pose(const Cell& c) const { return part_pose(c) * tip_; }

    bool in_range(const Cell& c) const {
        for (int a = 0; a < 3; ++a)
            if (std::abs(c[a]) > limit_[a]) return false;
        return true;
    }

    /// Part and fingers clear of the remaining bodies and the environment.
    bool is_free(const Cell& c) const {
        auto key = pack(c);
        if (auto it = free_cache_.find(key); it != free_cache_.end()) return it->second;
        const Transform p = part_pose(c), f = p * tip_;
        bool ok = !collide_any(part_, p, obstacles_) && !collide_any(part_, p, environment_) && !collide_any(fingers_, f, obstacles_) &&
                  !collide_any(fingers_, f, environment_);
        free_cache_.emplace(key, ok);
        return ok;
    }

    /// The part's bounds are separated from the assembly bounds plus margin along some axis.
    bool is_exit(const Cell& c) const {
        for (int a = 0; a < 3; ++a) {
            double off = step_ * c[a];
            if (part_hi_[a] + off < bounds_lo_[a] || part_lo_[a] + off > bounds_hi_[a]) return true;
        }
        return false;
    }

    /// Steps along direction d from c until the exit condition holds on that axis.
    int steps_to_exit(const Cell& c, int d) const {
        int a = d / 2;
        double off = step_ * c[a];
        double need = (d % 2 == 0) ? bounds_hi_[a] - (part_lo_[a] + off) : (part_hi_[a] + off) - bounds_lo_[a];
        if (need < 0) return 0;
        return static_cast<int>(std::floor(need / step_)) + 1;
    }

    static int64_t pack(const Cell& c, int last = 0) {
        auto u = [](int v) { return static_cast<int64_t>(v + (1 << 16)) & 0x1ffff; };
        return (u(c[0]) << 37) | (u(c[1]) << 20) | (u(c[2]) << 3) | last;
    }

private:
    BoxCompound part_;
    Transform goal_;
    BoxCompound fingers_;
    Transform tip_;
    Scene obstacles_;
    Scene environment_;
    double step_;
    double margin_;
    Vec3 part_lo_, part_hi_, bounds_lo_, bounds_hi_;
    Cell limit_{};
    mutable std::unordered_map<int64_t, bool> free_cache_;
};

inline constexpr int kDirectionChangeCost = 1000;

struct ExtractionSearch {
    bool found = false;
    std::vector<Cell> cells;      // start (goal pose) to exit
    std::vector<int> directions;  // one per segment
    int direction_changes = 0;
    size_t expansions = 0;
};

/// Best-first search from the goal pose to free space. Cost is steps plus a large penalty per
/// direction change, so the change count is minimized first.
inline ExtractionSearch search_extraction(const ExtractionLattice& lat, size_t max_expansions) {
    ExtractionSearch out;
    const Cell start{0, 0, 0};
    if (!lat.is_free(start)) return out;
    auto h = [&](const Cell& c, int last) {
        int best = std::numeric_limits<int>::max();
        for (int d = 0; d < 6; ++d)
            best = std::min(best, lat.steps_to_exit(c, d) + ((last != kNoDirection && last != d) ? kDirectionChangeCost : 0));
        return best;
    };
    struct Entry {
        int f;
        uint64_t seq;
        int g;
        Cell c;
        int last;
        bool operator>(const Entry& o) const { return f != o.f ? f > o.f : seq > o.seq; }
    };
    struct Visit {
        int g;
        int64_t parent;
        Cell c;
        int last;
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    std::unordered_map<int64_t, Visit> best;
    uint64_t seq = 0;
    const int64_t start_key = ExtractionLattice::pack(start, kNoDirection);
    best[start_key] = {0, -1, start, kNoDirection};
    open.push({h(start, kNoDirection), seq++, 0, start, kNoDirection});
    while (!open.empty()) {
        Entry e = open.top();
        open.pop();
        const int64_t key = ExtractionLattice::pack(e.c, e.last);
        if (best[key].g < e.g) continue;
        if (lat.is_exit(e.c)) {
            int64_t k = key;
            std::vector<std::pair<Cell, int>> rev;
            while (k != -1) {
                const Visit& v = best[k];
                rev.emplace_back(v.c, v.last);
                k = v.parent;
            }
            for (auto it = rev.rbegin(); it != rev.rend(); ++it) {
                out.cells.push_back(it->first);
                if (it->second != kNoDirection && (out.directions.empty() || out.directions.back() != it->second))
                    out.directions.push_back(it->second);
            }
            out.found = true;
            out.direction_changes = std::max(0, static_cast<int>(out.directions.size()) - 1);
            return out;
        }
        if (++out.expansions > max_expansions) break;
        for (int d = 0; d < 6; ++d) {
            Cell step = direction_step(d);
            Cell n{e.c[0] + step[0], e.c[1] + step[1], e.c[2] + step[2]};
            if (!lat.in_range(n) || !lat.is_free(n)) continue;
            int g = e.g + 1 + ((e.last != kNoDirection && e.last != d) ? kDirectionChangeCost : 0);
            int64_t nk = ExtractionLattice::pack(n, d);
            auto it = best.find(nk);
            if (it != best.end() && it->second.g <= g) continue;
            best[nk] = {g, key, n, d};
            open.push({g + h(n, d), seq++, g, n, d});
        }
    }
    return out;
}

/// Finger waypoints of an extraction, at the ends of its straight segments.
struct WaypointPath {
    std::vector<Transform> waypoints; // finger tip frame in the assembly frame, goal pose first
    GraspSample grasp;                // tip in the part frame
    std::vector<int> directions;
    int direction_changes = 0;
};

struct ExtractionResult {
    int part = -1;
    int sample_index = -1; // into grasp_samples(expand_grasp_set(defs))
    WaypointPath path;
    std::vector<Cell> cells;
    double step = 0.0;
};

inline WaypointPath make_waypoints(const ExtractionLattice& lat, const ExtractionSearch& s, const GraspSample& g) {
    WaypointPath p;
    p.grasp = g;
    p.directions = s.directions;
    p.direction_changes = s.direction_changes;
    for (size_t k = 0; k < s.cells.size(); ++k) {
        bool corner = k == 0 || k + 1 == s.cells.size();
        if (!corner) {
            const Cell &a = s.cells[k - 1], &b = s.cells[k], &c = s.cells[k + 1];
            for (int i = 0; i < 3; ++i) corner |= (b[i] - a[i]) != (c[i] - b[i]);
        }
        if (corner) p.waypoints.push_back(lat.finger_pose(s.cells[k]));
    }
    return p;
}

/// Bodies other than `part` still present, plus the base, in the assembly frame.
inline Scene remaining_bodies(const AssemblyDesign& d, int part, const std::vector<bool>& present) {
    Scene s;
    if (!d.base.empty()) s.push_back({&d.base, d.base_pose});
    for (int i = 0; i < static_cast<int>(d.parts.size()); ++i)
        if (i != part && present[i]) s.push_back({&d.parts[i].body, d.parts[i].goal});
    return s;
}

inline ExtractionLattice make_lattice(const AssemblyDesign& d, int part, const std::vector<bool>& present, const GraspSample& g,
                                      const FingerModel& fingers, const Scene& environment, const LatticeConfig& cfg) {
    return ExtractionLattice(d.parts[part].body, d.parts[part].goal, fingers.at_opening(g.opening), g.tip, remaining_bodies(d, part, present),
                             environment, lattice_step(d, cfg), cfg.margin);
}

/// Verifies that a part can be pulled out of the design while held. Grasp samples are searched
/// independently; a grasp whose closing axis is aligned with a motion direction is preferred, then
/// fewer direction changes, then the lower sample index.
inline ExtractionResult verify_extraction(const AssemblyDesign& d, int part, const std::vector<bool>& present,
                                          const std::vector<GraspDefinition>& grasps, const FingerModel& fingers,
                                          const LatticeConfig& cfg, const Scene& environment = {}) {
    auto samples = grasp_samples(expand_grasp_set(grasps));
    const std::string who = "part " + std::to_string(part) + " (" + d.parts[part].name + ")";
    bool any_free = false;
    std::optional<ExtractionResult> chosen;
    bool chosen_aligned = false;
    for (int s = 0; s < static_cast<int>(samples.size()); ++s) {
        ExtractionLattice lat = make_lattice(d, part, present, samples[s], fingers, environment, cfg);
        if (!lat.is_free({0, 0, 0})) continue;
        any_free = true;
        ExtractionSearch res = search_extraction(lat, cfg.max_expansions);
        if (!res.found) continue;
        bool aligned = false;
        const Vec3 closing = samples[s].tip.axis(0);
        for (int dir : res.directions) aligned |= std::abs(closing[dir / 2]) > 1.0 - 1e-6;
        bool better = !chosen || (aligned && !chosen_aligned) ||
                      (aligned == chosen_aligned && res.direction_changes < chosen->path.direction_changes);
        if (better) {
            chosen = ExtractionResult{part, s, make_waypoints(lat, res, samples[s]), res.cells, lat.step()};
            chosen_aligned = aligned;
        }
    }
    if (!any_free) throw NoValidGrasp(who + ": no grasp is collision-free at the goal pose");
    if (!chosen) throw Blocked(who + ": no collision-free extraction path");
    return *chosen;
}

/// Insertion program: the extraction reversed, re-expressed through the observed base pose and the
/// in-hand part-to-finger offset.
inline std::vector<Transform> insertion_waypoints(const WaypointPath& extraction, const Transform& W_T_B, const Transform& P_T_F) {
    std::vector<Transform> out;
    const Transform F0_T_F = extraction.grasp.tip.inverse() * P_T_F;
    for (auto it = extraction.waypoints.rbegin(); it != extraction.waypoints.rend(); ++it) out.push_back(W_T_B * *it * F0_T_F);
    return out;
}

/// Axis-aligned region in the workcell frame.
struct Area {
    Vec3 center = Vec3::Zero();
    Vec3 half = Vec3::Zero();

    bool contains(const Vec3& p) const { return ((p - center).cwiseAbs().array() <= half.array() + 1e-12).all(); }
};

struct PartFailure {
    int position = -1; // index into the sequence
    int part = -1;
    int trial = -1;    // -1 is the nominal placement
    std::string kind;  // "Blocked" or "NoValidGrasp"
    std::string message;
};

struct SequenceReport {
    bool ok = true;
    std::vector<ExtractionResult> nominal; // per sequence position, nominal base placement
    std::vector<PartFailure> failures;
};

struct TrialConfig {
    int trials = 5;
    uint64_t seed = 1;
    Area area;                  // random positions for the base origin (x, y); z from the nominal pose
    Transform nominal_base;     // W_T_B used for the nominal pass
};

/// Verifies the disassembly sequence at the nominal base placement and at random placements inside
/// the assembly area. The environment is given in the workcell frame.
inline SequenceReport verify_sequence(const AssemblyDesign& d, const DisassemblySequence& seq, const GraspSets& grasp_sets,
                                      const FingerModel& fingers, const LatticeConfig& cfg, const Scene& environment,
                                      const TrialConfig& trials) {
    if (!is_permutation_of(seq, d.parts.size())) throw std::invalid_argument("verify_sequence: sequence is not a permutation of the parts");
    SequenceReport rep;
    std::mt19937_64 rng(trials.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0), yaw(-kPi, kPi);
    for (int t = -1; t < trials.trials; ++t) {
        Transform W_T_B = trials.nominal_base;
        if (t >= 0) {
            Vec3 p = trials.area.center + Vec3(u(rng) * trials.area.half.x(), u(rng) * trials.area.half.y(), 0.0);
            p.z() = trials.nominal_base.translation().z();
            W_T_B = Transform::translation(p) * Transform::rot_z(yaw(rng));
        }
        const Transform B_T_W = W_T_B.inverse();
        Scene env;
        for (const auto& e : environment) env.push_back({e.body, B_T_W * e.pose});
        std::vector<bool> present(d.parts.size(), true);
        for (int pos = 0; pos < static_cast<int>(seq.size()); ++pos) {
            const int part = seq[pos];
            const int cls = d.parts[part].part_class;
            try {
                auto it = grasp_sets.find(cls);
                ExtractionResult r = verify_extraction(d, part, present, it == grasp_sets.end() ? std::vector<GraspDefinition>{} : it->second,
                                                       fingers, cfg, env);
                if (t < 0) rep.nominal.push_back(std::move(r));
            } catch (const NoValidGrasp& e) {
                rep.failures.push_back({pos, part, t, "NoValidGrasp", e.what()});
            } catch (const Blocked& e) {
                rep.failures.push_back({pos, part, t, "Blocked", e.what()});
            }
            present[part] = false;
        }
        if (!rep.failures.empty()) break;
    }
    rep.ok = rep.failures.empty();
    return rep;
}

} // namespace forge
