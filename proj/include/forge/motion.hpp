#pragma once

#include <vector>

#include "forge/geom.hpp"

namespace forge {

/// Interpolation ticks for a straight-line move: translation and the arc swept at `lever` from the
/// tool frame both stay under `step` per tick.
inline int tick_count(const Transform& a, const Transform& b, double step = 0.002, double lever = 0.3) {
    double d = (b.translation() - a.translation()).norm();
    double arc = rotation_angle(a.rotation(), b.rotation()) * lever;
    return std::max(1, static_cast<int>(std::ceil(std::max(d, arc) / step)));
}

/// Poses along a straight-line move, both ends included.
inline std::vector<Transform> linear_path(const Transform& a, const Transform& b, double step = 0.002, int min_ticks = 1) {
    int n = std::max(min_ticks, tick_count(a, b, step));
    std::vector<Transform> out;
    out.reserve(n + 1);
    for (int k = 0; k <= n; ++k) out.push_back(Transform::interpolate(a, b, static_cast<double>(k) / n));
    return out;
}

/// Task-level arm command. Move and Linear carry an explicit tip target in the workcell frame;
/// Open and Close set the jaw opening (Close grips whatever part the jaws enclose).
struct MotionPrimitive {
    enum class Kind { Move, Linear, Open, Close };
    Kind kind = Kind::Move;
    int gripper = 0;
    Transform target;
    double opening = 0.0;
};

inline const char* to_string(MotionPrimitive::Kind k) {
    switch (k) {
    case MotionPrimitive::Kind::Move: return "move";
    case MotionPrimitive::Kind::Linear: return "linear";
    case MotionPrimitive::Kind::Open: return "open";
    case MotionPrimitive::Kind::Close: return "close";
    }
    return "?";
}

/// Pose backed off along the approach axis (tip-frame -z).
inline Transform backed_off(const Transform& tip, double distance) { return tip * Transform::translation(0, 0, -distance); }

} // namespace forge
