#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace forge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

/// Gap below which two bodies are treated as touching (and therefore colliding).
inline constexpr double kContactEpsilon = 1e-4;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Rigid transform. Maps points from the child frame into the parent frame.
class Transform {
public:
    Transform() : rot_(Quat::Identity()), trans_(Vec3::Zero()) {}
    Transform(const Quat& q, const Vec3& t) : rot_(q), trans_(t) {
        if (std::abs(rot_.squaredNorm() - 1.0) > 1e-12) rot_.normalize(); // leave near-unit input bit-exact
        if (rot_.w() < 0) rot_.coeffs() *= -1.0;
    }

    static Transform identity() { return {}; }
    static Transform translation(const Vec3& t) { return {Quat::Identity(), t}; }
    static Transform translation(double x, double y, double z) { return translation(Vec3(x, y, z)); }
    static Transform rotation(const Quat& q) { return {q, Vec3::Zero()}; }
    static Transform axis_angle(const Vec3& axis, double angle) {
        return rotation(Quat(Eigen::AngleAxisd(angle, axis.normalized())));
    }
    static Transform rot_x(double a) { return axis_angle(Vec3::UnitX(), a); }
    static Transform rot_y(double a) { return axis_angle(Vec3::UnitY(), a); }
    static Transform rot_z(double a) { return axis_angle(Vec3::UnitZ(), a); }
    /// Frame whose columns are the given orthonormal axes.
    static Transform from_axes(const Vec3& x, const Vec3& y, const Vec3& z, const Vec3& origin) {
        Mat3 m;
        m.col(0) = x;
        m.col(1) = y;
        m.col(2) = z;
        return {Quat(m), origin};
    }

    const Quat& rotation() const { return rot_; }
    const Vec3& translation() const { return trans_; }
    Mat3 matrix() const { return rot_.toRotationMatrix(); }
    Vec3 axis(int i) const { return rot_ * Vec3::Unit(i); }

    Vec3 apply(const Vec3& p) const { return rot_ * p + trans_; }
    Vec3 apply_dir(const Vec3& v) const { return rot_ * v; }

    Transform operator*(const Transform& o) const { return {rot_ * o.rot_, rot_ * o.trans_ + trans_}; }
    Transform inverse() const {
        Quat qi = rot_.conjugate();
        return {qi, -(qi * trans_)};
    }

    /// Screw-free interpolation: slerp on rotation, lerp on translation.
    static Transform interpolate(const Transform& a, const Transform& b, double t) {
        return {a.rot_.slerp(t, b.rot_), (1.0 - t) * a.trans_ + t * b.trans_};
    }

private:
    Quat rot_;
    Vec3 trans_;
};

inline double rotation_angle(const Quat& a, const Quat& b) {
    return a.angularDistance(b);
}

/// Translation distance and rotation angle between two transforms.
inline std::pair<double, double> pose_error(const Transform& a, const Transform& b) {
    return {(a.translation() - b.translation()).norm(), rotation_angle(a.rotation(), b.rotation())};
}

inline bool near(const Transform& a, const Transform& b, double lin_tol, double ang_tol) {
    auto [d, ang] = pose_error(a, b);
    return d <= lin_tol && ang <= ang_tol;
}

struct Box {
    Vec3 half_extents;
    Transform pose; // box center frame within the compound frame
};

/// A rigid body described as a union of oriented boxes in its local frame.
class BoxCompound {
public:
    BoxCompound() = default;
    explicit BoxCompound(std::vector<Box> boxes, std::string frame = "part") : boxes_(std::move(boxes)), frame_(std::move(frame)) {
        if (boxes_.empty()) throw std::invalid_argument("BoxCompound: empty box list");
        for (const auto& b : boxes_)
            if ((b.half_extents.array() <= 0.0).any()) throw std::invalid_argument("BoxCompound: non-positive half extent");
    }

    static BoxCompound cuboid(const Vec3& half, const Transform& pose = {}) { return BoxCompound({Box{half, pose}}); }

    const std::vector<Box>& boxes() const { return boxes_; }
    const std::string& frame() const { return frame_; }
    bool empty() const { return boxes_.empty(); }

    /// Merge another compound placed at `pose` within this compound's frame.
    BoxCompound merged(const BoxCompound& other, const Transform& pose = {}) const {
        std::vector<Box> out = boxes_;
        for (const auto& b : other.boxes_) out.push_back({b.half_extents, pose * b.pose});
        return BoxCompound(std::move(out), frame_);
    }

    /// Axis-aligned bounds (min, max) of the compound in a frame where the compound sits at `pose`.
    std::pair<Vec3, Vec3> aabb(const Transform& pose = {}) const {
        Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
        Vec3 hi = -lo;
        for (const auto& b : boxes_) {
            Transform w = pose * b.pose;
            Mat3 r = w.matrix();
            Vec3 ext = r.cwiseAbs() * b.half_extents;
            lo = lo.cwiseMin(w.translation() - ext);
            hi = hi.cwiseMax(w.translation() + ext);
        }
        return {lo, hi};
    }

private:
    std::vector<Box> boxes_;
    std::string frame_ = "part";
};

/// Eight corners of a box placed at `pose`.
inline std::array<Vec3, 8> box_corners(const Box& b, const Transform& pose) {
    std::array<Vec3, 8> out;
    Transform w = pose * b.pose;
    for (int i = 0; i < 8; ++i) {
        Vec3 c((i & 1) ? b.half_extents.x() : -b.half_extents.x(),
               (i & 2) ? b.half_extents.y() : -b.half_extents.y(),
               (i & 4) ? b.half_extents.z() : -b.half_extents.z());
        out[i] = w.apply(c);
    }
    return out;
}

namespace detail {

// Separating-axis test for two oriented boxes in a common frame. Returns true
// when no axis separates them by more than `eps`.
inline bool obb_overlap(const Vec3& ca, const Mat3& ra, const Vec3& ea, const Vec3& cb, const Mat3& rb, const Vec3& eb,
                        double eps) {
    const Mat3 r = ra.transpose() * rb;
    const Vec3 t = ra.transpose() * (cb - ca);
    Mat3 absr = r.cwiseAbs();
    // Parallel edges make the cross-product axes vanish; pad to keep them inert.
    absr.array() += 1e-12;

    for (int i = 0; i < 3; ++i) {
        double ra_i = ea[i];
        double rb_i = eb.dot(absr.row(i));
        if (std::abs(t[i]) > ra_i + rb_i + eps) return false;
    }
    for (int j = 0; j < 3; ++j) {
        double ra_j = ea.dot(absr.col(j));
        double rb_j = eb[j];
        if (std::abs(t.dot(r.col(j))) > ra_j + rb_j + eps) return false;
    }
    for (int i = 0; i < 3; ++i) {
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        for (int j = 0; j < 3; ++j) {
            int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            // axis = A_i x B_j expressed in A's frame; its length is sin(angle).
            double len = std::sqrt(std::max(0.0, 1.0 - r(i, j) * r(i, j)));
            if (len < 1e-9) continue;
            double ra_ij = ea[i1] * absr(i2, j) + ea[i2] * absr(i1, j);
            double rb_ij = eb[j1] * absr(i, j2) + eb[j2] * absr(i, j1);
            double dist = std::abs(t[i2] * r(i1, j) - t[i1] * r(i2, j));
            if (dist > ra_ij + rb_ij + eps * len) return false;
        }
    }
    return true;
}

} // namespace detail

/// Box-vs-box test with contact tolerance.
inline bool collide_boxes(const Box& a, const Transform& pose_a, const Box& b, const Transform& pose_b,
                          double eps = kContactEpsilon) {
    Transform wa = pose_a * a.pose;
    Transform wb = pose_b * b.pose;
    return detail::obb_overlap(wa.translation(), wa.matrix(), a.half_extents, wb.translation(), wb.matrix(),
                               b.half_extents, eps);
}

/// True iff any box of `a` intersects any box of `b` or lies within the contact epsilon of it.
inline bool collide(const BoxCompound& a, const Transform& pose_a, const BoxCompound& b, const Transform& pose_b,
                    double eps = kContactEpsilon) {
    // cheap reject on bounds first
    auto [alo, ahi] = a.aabb(pose_a);
    auto [blo, bhi] = b.aabb(pose_b);
    if (((alo.array() - eps) > bhi.array()).any() || ((blo.array() - eps) > ahi.array()).any()) return false;
    for (const auto& ba : a.boxes())
        for (const auto& bb : b.boxes())
            if (collide_boxes(ba, pose_a, bb, pose_b, eps)) return true;
    return false;
}

/// Largest gap between two boxes along any of the 15 SAT axes; a lower bound on their distance that
/// is exact for face-aligned boxes. Negative when they overlap.
inline double box_separation(const Box& a, const Transform& pose_a, const Box& b, const Transform& pose_b) {
    Transform wa = pose_a * a.pose, wb = pose_b * b.pose;
    const Mat3 ra = wa.matrix(), rb = wb.matrix();
    const Vec3 d = wb.translation() - wa.translation();
    std::vector<Vec3> axes;
    for (int i = 0; i < 3; ++i) {
        axes.push_back(ra.col(i));
        axes.push_back(rb.col(i));
        for (int j = 0; j < 3; ++j) {
            Vec3 c = ra.col(i).cross(rb.col(j));
            if (c.norm() > 1e-9) axes.push_back(c.normalized());
        }
    }
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& n : axes) {
        double r1 = (ra.transpose() * n).cwiseAbs().dot(a.half_extents);
        double r2 = (rb.transpose() * n).cwiseAbs().dot(b.half_extents);
        best = std::max(best, std::abs(d.dot(n)) - r1 - r2);
    }
    return best;
}

inline double separation(const BoxCompound& a, const Transform& pose_a, const BoxCompound& b, const Transform& pose_b) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& ba : a.boxes())
        for (const auto& bb : b.boxes()) best = std::min(best, box_separation(ba, pose_a, bb, pose_b));
    return best;
}

/// A placed body, used for scene-level queries.
struct Placed {
    const BoxCompound* body;
    Transform pose;
};

inline bool collide_any(const BoxCompound& a, const Transform& pose_a, const std::vector<Placed>& others,
                        double eps = kContactEpsilon) {
    for (const auto& o : others)
        if (collide(a, pose_a, *o.body, o.pose, eps)) return true;
    return false;
}

struct DegeneratePointSet : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Oriented rectangle recovered from a planar point set.
struct RectFrame {
    Vec3 center = Vec3::Zero();
    Vec3 x_axis = Vec3::UnitX();
    Vec3 y_axis = Vec3::UnitY();
    Vec3 z_axis = Vec3::UnitZ();
    double width = 0.0;  // extent along x
    double height = 0.0; // extent along y

    Transform transform() const { return Transform::from_axes(x_axis, y_axis, z_axis, center); }

    /// Rotate the frame 180 degrees about its z axis.
    RectFrame flipped() const {
        RectFrame r = *this;
        r.x_axis = -x_axis;
        r.y_axis = -y_axis;
        return r;
    }
};

/// PCA rectangle fit. Returns axes sorted by descending variance as (x = major, y = minor, z = normal),
/// right-handed, with width/height the extents along major/minor.
///
/// Sign conventions: the major axis points toward world +x (or +y when perpendicular to x) and the
/// normal toward world +z (or the side making the frame right-handed otherwise). When the two largest
/// eigenvalues tie within 1e-9 the major axis is the in-plane direction closest to world +x.
inline RectFrame pca_rect_frame(const std::vector<Vec3>& points) {
    if (points.size() < 3) throw DegeneratePointSet("pca_rect_frame: fewer than 3 points");
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    c /= static_cast<double>(points.size());
    Mat3 cov = Mat3::Zero();
    for (const auto& p : points) {
        Vec3 d = p - c;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(points.size());

    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 ev = es.eigenvalues(); // ascending
    const Mat3 vecs = es.eigenvectors();
    const double scale = std::max(ev[2], 1e-300);
    if (ev[1] <= 1e-12 * scale || ev[2] <= 0.0) throw DegeneratePointSet("pca_rect_frame: collinear points");

    Vec3 normal = vecs.col(0).normalized();
    Vec3 major = vecs.col(2).normalized();
    if (std::abs(ev[2] - ev[1]) <= 1e-9 * std::max(1.0, scale) || std::abs(ev[2] - ev[1]) <= 1e-9) {
        Vec3 ref = Vec3::UnitX() - normal * normal.dot(Vec3::UnitX());
        if (ref.norm() < 1e-9) ref = Vec3::UnitY() - normal * normal.dot(Vec3::UnitY());
        major = ref.normalized();
    }
    if (major.dot(Vec3::UnitX()) < -1e-12 ||
        (std::abs(major.dot(Vec3::UnitX())) <= 1e-12 && major.dot(Vec3::UnitY()) < 0))
        major = -major;
    if (normal.dot(Vec3::UnitZ()) < -1e-12) normal = -normal;
    Vec3 minor = normal.cross(major).normalized();
    normal = major.cross(minor).normalized();

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : points) {
        Vec3 d = p - c;
        double u = d.dot(major), v = d.dot(minor);
        xmin = std::min(xmin, u);
        xmax = std::max(xmax, u);
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
    }
    RectFrame f;
    f.center = c;
    f.x_axis = major;
    f.y_axis = minor;
    f.z_axis = normal;
    f.width = xmax - xmin;
    f.height = ymax - ymin;
    return f;
}

} // namespace forge
