#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "forge/geom.hpp"

namespace forge {

/// Pinhole camera. The camera looks along its local +z with +x to the image right and +y down.
struct CameraModel {
    Transform pose; // camera frame in the workcell frame
    double focal = 300.0; // px
    double cx = 160.0;
    double cy = 120.0;
    int width = 320;
    int height = 240;
    double near = 0.05;
    double far = 3.0;

    void check() const {
        if (width <= 0 || height <= 0) throw std::invalid_argument("CameraModel: non-positive image size");
        if (!(near > 0.0 && near < far)) throw std::invalid_argument("CameraModel: require 0 < near < far");
    }

    /// Camera with the image downsampled by an integer factor.
    CameraModel downsampled(int factor) const {
        CameraModel c = *this;
        c.focal /= factor;
        c.cx /= factor;
        c.cy /= factor;
        c.width /= factor;
        c.height /= factor;
        return c;
    }

    /// Projects a camera-frame point to pixel coordinates (continuous, pixel centers at +0.5).
    Eigen::Vector2d project_cam(const Vec3& p) const { return {focal * p.x() / p.z() + cx, focal * p.y() / p.z() + cy}; }
    std::optional<Eigen::Vector2d> project(const Vec3& world) const {
        Vec3 p = pose.inverse().apply(world);
        if (p.z() <= near) return std::nullopt;
        return project_cam(p);
    }
    Vec3 right() const { return pose.axis(0); }
    Vec3 forward() const { return pose.axis(2); }
};

/// Camera-frame z depth per pixel in meters, row-major; 0 means no hit.
struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> depth;

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), depth(static_cast<size_t>(w) * h, 0.0f) {}
    float& at(int u, int v) { return depth[static_cast<size_t>(v) * width + u]; }
    float at(int u, int v) const { return depth[static_cast<size_t>(v) * width + u]; }
};

/// Grid placement for heightmaps: cell (i, j) has its center at origin * ((i + .5) cell, (j + .5) cell, 0)
/// and heights are measured along the origin's +z.
struct GridSpec {
    Transform origin;
    double cell = 0.002;
    int nx = 200;
    int ny = 200;

    /// Grid of nx by ny cells centered on `center` (a frame whose z is the grid normal).
    static GridSpec centered(const Transform& center, double cell, int nx, int ny) {
        GridSpec g;
        g.origin = center * Transform::translation(-0.5 * nx * cell, -0.5 * ny * cell, 0.0);
        g.cell = cell;
        g.nx = nx;
        g.ny = ny;
        return g;
    }
};

struct Heightmap {
    GridSpec grid;
    std::vector<float> height;       // meters above the grid plane, 0 = empty
    std::vector<int> class_id;       // label channel
    std::vector<float> gradient;     // label channel, 0..1

    Heightmap() = default;
    explicit Heightmap(const GridSpec& g) : grid(g) {
        if (!(g.cell > 0.0) || g.nx <= 0 || g.ny <= 0) throw std::invalid_argument("Heightmap: bad grid");
        size_t n = static_cast<size_t>(g.nx) * g.ny;
        height.assign(n, 0.0f);
        class_id.assign(n, 0);
        gradient.assign(n, 0.0f);
    }
    int nx() const { return grid.nx; }
    int ny() const { return grid.ny; }
    size_t index(int i, int j) const { return static_cast<size_t>(j) * grid.nx + i; }
    bool occupied(int i, int j) const { return height[index(i, j)] > 0.0f; }
    size_t occupied_count() const {
        size_t n = 0;
        for (float h : height) n += h > 0.0f;
        return n;
    }
    /// Cell center on the grid plane, in grid-local coordinates.
    Eigen::Vector2d cell_center(int i, int j) const { return {(i + 0.5) * grid.cell, (j + 0.5) * grid.cell}; }
    /// World point of a cell at its stored height.
    Vec3 cell_point(int i, int j) const {
        auto c = cell_center(i, j);
        return grid.origin.apply(Vec3(c.x(), c.y(), height[index(i, j)]));
    }
};

struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Scene = std::vector<Placed>;

namespace detail {

inline std::vector<Vec3> clip_near(const std::array<Vec3, 3>& tri, double near) {
    std::vector<Vec3> out;
    for (int k = 0; k < 3; ++k) {
        const Vec3& a = tri[k];
        const Vec3& b = tri[(k + 1) % 3];
        bool ain = a.z() >= near, bin = b.z() >= near;
        if (ain) out.push_back(a);
        if (ain != bin) {
            double t = (near - a.z()) / (b.z() - a.z());
            out.push_back(a + t * (b - a));
        }
    }
    return out;
}

inline void raster_triangle(DepthImage& img, const CameraModel& cam, const Vec3& a, const Vec3& b, const Vec3& c) {
    Eigen::Vector2d pa = cam.project_cam(a), pb = cam.project_cam(b), pc = cam.project_cam(c);
    double area = (pb.x() - pa.x()) * (pc.y() - pa.y()) - (pb.y() - pa.y()) * (pc.x() - pa.x());
    if (std::abs(area) < 1e-12) return;
    int u0 = std::max(0, static_cast<int>(std::floor(std::min({pa.x(), pb.x(), pc.x()}) - 0.5)));
    int u1 = std::min(img.width - 1, static_cast<int>(std::ceil(std::max({pa.x(), pb.x(), pc.x()}) - 0.5)));
    int v0 = std::max(0, static_cast<int>(std::floor(std::min({pa.y(), pb.y(), pc.y()}) - 0.5)));
    int v1 = std::min(img.height - 1, static_cast<int>(std::ceil(std::max({pa.y(), pb.y(), pc.y()}) - 0.5)));
    const double iza = 1.0 / a.z(), izb = 1.0 / b.z(), izc = 1.0 / c.z();
    for (int v = v0; v <= v1; ++v) {
        for (int u = u0; u <= u1; ++u) {
            double px = u + 0.5, py = v + 0.5;
            double w0 = ((pb.x() - px) * (pc.y() - py) - (pb.y() - py) * (pc.x() - px)) / area;
            double w1 = ((pc.x() - px) * (pa.y() - py) - (pc.y() - py) * (pa.x() - px)) / area;
            double w2 = 1.0 - w0 - w1;
            // edges inclusive; the depth test resolves shared pixels
            if (w0 < -1e-12 || w1 < -1e-12 || w2 < -1e-12) continue;
            double z = 1.0 / (w0 * iza + w1 * izb + w2 * izc);
            if (z < cam.near || z > cam.far) continue;
            float& d = img.at(u, v);
            if (d == 0.0f || z < d) d = static_cast<float>(z);
        }
    }
}

} // namespace detail

/// Software z-buffer rasterization of box compounds. Depth is camera-frame z.
inline DepthImage render_depth(const Scene& scene, const CameraModel& cam) {
    cam.check();
    DepthImage img(cam.width, cam.height);
    static constexpr int kFaces[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    const Transform to_cam = cam.pose.inverse();
    for (const auto& placed : scene) {
        for (const auto& box : placed.body->boxes()) {
            auto corners = box_corners(box, placed.pose);
            for (auto& p : corners) p = to_cam.apply(p);
            for (const auto& f : kFaces) {
                for (int t = 0; t < 2; ++t) {
                    std::array<Vec3, 3> tri = t == 0 ? std::array<Vec3, 3>{corners[f[0]], corners[f[1]], corners[f[2]]}
                                                     : std::array<Vec3, 3>{corners[f[0]], corners[f[2]], corners[f[3]]};
                    auto poly = detail::clip_near(tri, cam.near);
                    for (size_t k = 1; k + 1 < poly.size(); ++k)
                        detail::raster_triangle(img, cam, poly[0], poly[k], poly[k + 1]);
                }
            }
        }
    }
    return img;
}

/// Improved-Perlin gradient noise in 2D with a seeded permutation table.
class PerlinNoise {
public:
    explicit PerlinNoise(uint64_t seed) {
        for (int i = 0; i < 256; ++i) perm_[i] = static_cast<uint8_t>(i);
        std::mt19937_64 rng(seed);
        for (int i = 255; i > 0; --i) {
            int j = static_cast<int>(rng() % static_cast<uint64_t>(i + 1));
            std::swap(perm_[i], perm_[j]);
        }
        for (int i = 0; i < 256; ++i) perm_[256 + i] = perm_[i];
    }

    /// Noise value in [-1, 1].
    double operator()(double x, double y) const {
        int xi = static_cast<int>(std::floor(x)), yi = static_cast<int>(std::floor(y));
        double xf = x - xi, yf = y - yi;
        xi &= 255;
        yi &= 255;
        double u = fade(xf), v = fade(yf);
        int aa = perm_[perm_[xi] + yi], ab = perm_[perm_[xi] + yi + 1];
        int ba = perm_[perm_[xi + 1] + yi], bb = perm_[perm_[xi + 1] + yi + 1];
        double x1 = lerp(grad(aa, xf, yf), grad(ba, xf - 1, yf), u);
        double x2 = lerp(grad(ab, xf, yf - 1), grad(bb, xf - 1, yf - 1), u);
        return std::clamp(lerp(x1, x2, v), -1.0, 1.0);
    }

private:
    static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
    static double lerp(double a, double b, double t) { return a + t * (b - a); }
    static double grad(int h, double x, double y) {
        switch (h & 7) {
        case 0: return x + y;
        case 1: return -x + y;
        case 2: return x - y;
        case 3: return -x - y;
        case 4: return x;
        case 5: return -x;
        case 6: return y;
        default: return -y;
        }
    }
    std::array<uint8_t, 512> perm_{};
};

struct NoiseConfig {
    int factor = 2;
    double amplitude = 0.002;
    double scale = 8.0; // cells per noise lattice period
};

/// Sensor degradation: block-average downsample (zero pixels excluded) plus seeded Perlin noise.
/// Pixels without any hit stay zero.
inline DepthImage degrade(const DepthImage& img, int factor, double amplitude, double scale, uint64_t seed) {
    if (factor < 1) throw std::invalid_argument("degrade: factor must be >= 1");
    DepthImage out(img.width / factor, img.height / factor);
    PerlinNoise noise(seed);
    for (int v = 0; v < out.height; ++v) {
        for (int u = 0; u < out.width; ++u) {
            double sum = 0.0;
            int n = 0;
            for (int dv = 0; dv < factor; ++dv)
                for (int du = 0; du < factor; ++du) {
                    float d = img.at(u * factor + du, v * factor + dv);
                    if (d > 0.0f) {
                        sum += d;
                        ++n;
                    }
                }
            if (n == 0) continue;
            double d = sum / n;
            if (amplitude != 0.0) d += amplitude * noise(u / scale, v / scale);
            out.at(u, v) = static_cast<float>(d);
        }
    }
    return out;
}

inline DepthImage degrade(const DepthImage& img, const NoiseConfig& cfg, uint64_t seed) {
    return degrade(img, cfg.factor, cfg.amplitude, cfg.scale, seed);
}

/// Heightmap version of the degradation: heights of occupied cells are block-averaged in place
/// and perturbed with Perlin noise. Label channels are preserved.
inline Heightmap degrade(const Heightmap& hm, const NoiseConfig& cfg, uint64_t seed) {
    if (cfg.factor < 1) throw std::invalid_argument("degrade: factor must be >= 1");
    Heightmap out = hm;
    PerlinNoise noise(seed);
    const int f = cfg.factor;
    for (int bj = 0; bj < hm.ny(); bj += f)
        for (int bi = 0; bi < hm.nx(); bi += f) {
            double sum = 0.0;
            int n = 0;
            for (int j = bj; j < std::min(bj + f, hm.ny()); ++j)
                for (int i = bi; i < std::min(bi + f, hm.nx()); ++i)
                    if (hm.occupied(i, j)) {
                        sum += hm.height[hm.index(i, j)];
                        ++n;
                    }
            if (n == 0) continue;
            for (int j = bj; j < std::min(bj + f, hm.ny()); ++j)
                for (int i = bi; i < std::min(bi + f, hm.nx()); ++i)
                    if (hm.occupied(i, j)) {
                        double h = sum / n + cfg.amplitude * noise(i / cfg.scale, j / cfg.scale);
                        out.height[out.index(i, j)] = static_cast<float>(std::max(h, 1e-6));
                    }
        }
    return out;
}

/// Back-projects each depth pixel and bins it into the grid; each cell keeps the maximum height
/// above the grid plane.
inline Heightmap to_heightmap(const DepthImage& img, const CameraModel& cam, const GridSpec& grid) {
    Heightmap hm(grid);
    const Transform cam_to_grid = grid.origin.inverse() * cam.pose;
    bool any_hit = false, any_in = false;
    for (int v = 0; v < img.height; ++v) {
        for (int u = 0; u < img.width; ++u) {
            double z = img.at(u, v);
            if (z <= 0.0) continue;
            any_hit = true;
            Vec3 pc((u + 0.5 - cam.cx) * z / cam.focal, (v + 0.5 - cam.cy) * z / cam.focal, z);
            Vec3 g = cam_to_grid.apply(pc);
            int i = static_cast<int>(std::floor(g.x() / grid.cell));
            int j = static_cast<int>(std::floor(g.y() / grid.cell));
            if (i < 0 || j < 0 || i >= grid.nx || j >= grid.ny) continue;
            any_in = true;
            float h = static_cast<float>(std::max(g.z(), 0.0));
            float& cellh = hm.height[hm.index(i, j)];
            cellh = std::max(cellh, h);
        }
    }
    if (any_hit && !any_in) throw GridMismatch("to_heightmap: no back-projected point lands in the grid");
    return hm;
}

/// A planar rectangle (frame center, x/y extents) to rasterize into a label heightmap.
struct LabelRect {
    Transform frame;  // world frame of the rectangle; x/y span the rectangle
    double width = 0; // along frame x
    double height = 0; // along frame y
    int class_id = 0;
};

/// Cells of `grid` whose vertical line (along grid z) crosses the rectangle, with the crossing height
/// and the linear 1 -> 0 gradient ramp along the rectangle +x.
struct RectSample {
    int i, j;
    double height;
    double gradient;
};

inline std::vector<RectSample> rasterize_rect(const GridSpec& grid, const LabelRect& r) {
    std::vector<RectSample> out;
    const Transform to_grid = grid.origin.inverse() * r.frame;
    const Vec3 c = to_grid.translation();
    const Vec3 ax = to_grid.axis(0), ay = to_grid.axis(1), n = to_grid.axis(2);
    if (std::abs(n.z()) < 1e-6) return out;
    // footprint bounds
    double hx = 0.5 * r.width, hy = 0.5 * r.height;
    Vec3 ext = ax.cwiseAbs() * hx + ay.cwiseAbs() * hy;
    int i0 = std::max(0, static_cast<int>(std::floor((c.x() - ext.x()) / grid.cell)) - 1);
    int i1 = std::min(grid.nx - 1, static_cast<int>(std::ceil((c.x() + ext.x()) / grid.cell)) + 1);
    int j0 = std::max(0, static_cast<int>(std::floor((c.y() - ext.y()) / grid.cell)) - 1);
    int j1 = std::min(grid.ny - 1, static_cast<int>(std::ceil((c.y() + ext.y()) / grid.cell)) + 1);
    for (int j = j0; j <= j1; ++j)
        for (int i = i0; i <= i1; ++i) {
            double x = (i + 0.5) * grid.cell, y = (j + 0.5) * grid.cell;
            // plane: n . (p - c) = 0, solve for z
            double z = c.z() - (n.x() * (x - c.x()) + n.y() * (y - c.y())) / n.z();
            Vec3 d = Vec3(x, y, z) - c;
            double u = d.dot(ax), w = d.dot(ay);
            if (std::abs(u) > hx || std::abs(w) > hy) continue;
            if (z <= 0.0) continue;
            out.push_back({i, j, z, 0.5 - u / r.width});
        }
    return out;
}

/// Writes rectangle samples into the label channels; higher samples win per cell.
inline void paint_rect(Heightmap& hm, const std::vector<RectSample>& samples, int class_id) {
    for (const auto& s : samples) {
        size_t k = hm.index(s.i, s.j);
        if (s.height > hm.height[k]) {
            hm.height[k] = static_cast<float>(s.height);
            hm.class_id[k] = class_id;
            hm.gradient[k] = static_cast<float>(std::clamp(s.gradient, 0.0, 1.0));
        }
    }
}

} // namespace forge
