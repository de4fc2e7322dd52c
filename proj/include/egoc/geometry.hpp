// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace egoc::geom {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Depths at or below this are treated as behind the camera (meters).
inline constexpr double kMinDepth = 1e-4;

/// Pinhole camera; no distortion model.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (!(fx > 0.0) || !(fy > 0.0))
            throw std::invalid_argument("intrinsics: fx and fy must be positive");
        if (!(cx >= 0.0 && cx < width))
            throw std::invalid_argument("intrinsics: cx must lie in [0, width)");
        if (!(cy >= 0.0 && cy < height))
            throw std::invalid_argument("intrinsics: cy must lie in [0, height)");
    }
};

/// Pixel coordinates plus disparity (1/depth). valid implies d > 0.
struct ProjectedJoint {
    Vec2 u{0.0, 0.0};
    double d = 0.0;
    bool valid = false;
};

inline ProjectedJoint project(const Vec3& p, const CameraIntrinsics& k) {
    ProjectedJoint out;
    if (!(p.z() > kMinDepth)) return out;  // behind camera or degenerate depth
    out.u.x() = k.fx * p.x() / p.z() + k.cx;
    out.u.y() = k.fy * p.y() / p.z() + k.cy;
    out.d = 1.0 / p.z();
    out.valid = true;
    return out;
}

/// Inverse of project for d > 0.
inline Vec3 unproject(const Vec2& u, double d, const CameraIntrinsics& k) {
    if (!(d > 0.0)) throw std::invalid_argument("unproject: disparity must be positive");
    const double z = 1.0 / d;
    return {(u.x() - k.cx) * z / k.fx, (u.y() - k.cy) * z / k.fy, z};
}

inline bool in_image(const Vec2& u, const CameraIntrinsics& k) {
    return u.x() >= 0.0 && u.x() < k.width && u.y() >= 0.0 && u.y() < k.height;
}

/// Proper rigid transform (rotation + translation).
struct RigidPose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    void validate() const {
        const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
        if (ortho > 1e-9) throw std::invalid_argument("pose: rotation is not orthonormal");
        if (std::abs(rotation.determinant() - 1.0) > 1e-9)
            throw std::invalid_argument("pose: rotation determinant must be +1");
    }
};

/// Rz(roll) * Ry(yaw) * Rx(pitch). This composition order is fixed across
/// the toolkit and in every file format that stores Euler angles.
inline Mat3 euler_to_rotation(double pitch, double yaw, double roll) {
    return (Eigen::AngleAxisd(roll, Vec3::UnitZ()) * Eigen::AngleAxisd(yaw, Vec3::UnitY()) *
            Eigen::AngleAxisd(pitch, Vec3::UnitX()))
        .toRotationMatrix();
}

inline Vec3 apply_pose(const RigidPose& pose, const Vec3& p) {
    return pose.rotation * p + pose.translation;
}

inline RigidPose compose(const RigidPose& a, const RigidPose& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

/// Conditioning-grid domain. Cell (ix, iy) is centered at grid coordinates
/// (ix, iy); pixel coordinates map onto the grid as u / scale.
struct GridSpec {
    int gh = 32;
    int gw = 32;
    double scale = 8.0;  // pixels per grid cell

    void validate() const {
        if (gh < 1 || gw < 1) throw std::invalid_argument("grid: gh and gw must be >= 1");
        if (!(scale > 0.0)) throw std::invalid_argument("grid: scale must be positive");
    }
    bool operator==(const GridSpec&) const = default;
};

inline Vec2 grid_from_pixel(const Vec2& u, const GridSpec& grid) { return u / grid.scale; }

/// One joint's spatial influence field; values in [0, 1], peak at the cell
/// nearest the center.
struct Heatmap {
    GridSpec grid;
    Vec2 center{0.0, 0.0};
    std::vector<double> values;  // row-major [gh][gw]

    double at(int y, int x) const { return values[static_cast<std::size_t>(y) * grid.gw + x]; }
    double& at(int y, int x) { return values[static_cast<std::size_t>(y) * grid.gw + x]; }

    double sum() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
};

inline Heatmap gaussian_heatmap(const Vec2& center, double sigma, const GridSpec& grid) {
    if (!(sigma > 0.0)) throw std::invalid_argument("heatmap: sigma must be positive");
    grid.validate();
    Heatmap h;
    h.grid = grid;
    h.center = center;
    h.values.resize(static_cast<std::size_t>(grid.gh) * grid.gw);
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int y = 0; y < grid.gh; ++y) {
        for (int x = 0; x < grid.gw; ++x) {
            const double dx = x - center.x();
            const double dy = y - center.y();
            h.at(y, x) = std::exp(-(dx * dx + dy * dy) * inv);
        }
    }
    return h;
}

/// All-zero field; stands in for joints that are invalid in a frame.
inline Heatmap zero_heatmap(const GridSpec& grid) {
    grid.validate();
    Heatmap h;
    h.grid = grid;
    h.values.assign(static_cast<std::size_t>(grid.gh) * grid.gw, 0.0);
    return h;
}

}  // namespace egoc::geom
