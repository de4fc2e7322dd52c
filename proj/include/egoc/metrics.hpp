// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "egoc/geometry.hpp"
#include "egoc/tensor.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::metrics {

/// Maps p to scale·rotation·p + translation.
struct SimilarityTransform {
    double scale = 1.0;
    geom::Mat3 rotation = geom::Mat3::Identity();
    geom::Vec3 translation = geom::Vec3::Zero();

    geom::Vec3 apply(const geom::Vec3& p) const { return scale * (rotation * p) + translation; }
};

/// Least-squares similarity registration of `predicted` onto `reference`:
/// centroid removal, cross-covariance SVD with reflection correction, and a
/// variance-ratio scale. Needs at least 3 points; collinear or coincident
/// predicted sets cannot pin down a rotation and are reported as failures.
inline SimilarityTransform procrustes_align(const std::vector<geom::Vec3>& predicted,
                                            const std::vector<geom::Vec3>& reference) {
    if (predicted.size() != reference.size())
        throw std::invalid_argument("procrustes: point counts differ");
    const std::size_t m = predicted.size();
    if (m < 3) throw std::invalid_argument("procrustes: need at least 3 points");

    geom::Vec3 cp = geom::Vec3::Zero(), cr = geom::Vec3::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        cp += predicted[i];
        cr += reference[i];
    }
    cp /= static_cast<double>(m);
    cr /= static_cast<double>(m);

    double var_p = 0.0;
    geom::Mat3 cov = geom::Mat3::Zero();
    for (std::size_t i = 0; i < m; ++i) {
        const geom::Vec3 dp = predicted[i] - cp;
        const geom::Vec3 dr = reference[i] - cr;
        var_p += dp.squaredNorm();
        cov += dr * dp.transpose();
    }
    var_p /= static_cast<double>(m);
    cov /= static_cast<double>(m);
    if (var_p < 1e-24) throw std::runtime_error("procrustes: predicted points are coincident");

    Eigen::JacobiSVD<geom::Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const geom::Vec3 d = svd.singularValues();
    if (d[1] < 1e-12 * d[0] || d[0] == 0.0)
        throw std::runtime_error("procrustes: degenerate (rank < 2) configuration");

    geom::Vec3 s_diag(1.0, 1.0, 1.0);
    if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) s_diag[2] = -1.0;

    SimilarityTransform t;
    t.rotation = svd.matrixU() * s_diag.asDiagonal() * svd.matrixV().transpose();
    t.scale = d.dot(s_diag) / var_p;
    t.translation = cr - t.scale * (t.rotation * cp);
    return t;
}

namespace detail {

inline double mean_position_error_mm(const std::vector<geom::Vec3>& predicted,
                                     const std::vector<geom::Vec3>& reference, bool align) {
    if (predicted.size() != reference.size())
        throw std::invalid_argument("position error: point counts differ");
    if (predicted.empty()) throw std::invalid_argument("position error: empty point set");
    SimilarityTransform t;
    if (align) t = procrustes_align(predicted, reference);
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        sum += (t.apply(predicted[i]) - reference[i]).norm();
    return 1000.0 * sum / static_cast<double>(predicted.size());
}

}  // namespace detail

/// Mean per-joint position error in millimeters; correspondence is by
/// position in the list. With align=true the error is measured after
/// similarity registration (PA-MPJPE).
inline double mpjpe(const std::vector<geom::Vec3>& predicted,
                    const std::vector<geom::Vec3>& reference, bool align) {
    return detail::mean_position_error_mm(predicted, reference, align);
}

/// Mean per-vertex position error in millimeters over mesh vertex sets;
/// the contract mirrors mpjpe (positional correspondence — permuting
/// vertices changes the result).
inline double mpvpe(const std::vector<geom::Vec3>& predicted,
                    const std::vector<geom::Vec3>& reference, bool align) {
    return detail::mean_position_error_mm(predicted, reference, align);
}

// ---- Image quality ------------------------------------------------------

/// Images are {H, W, C} tensors of intensities in [0, 1].
inline void check_image_pair(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3) throw std::invalid_argument("image: expected H×W×C");
    if (!a.same_shape(b)) throw std::invalid_argument("image: shapes differ");
    for (std::size_t e = 0; e < a.numel(); ++e)
        if (a[e] < 0.0 || a[e] > 1.0 || b[e] < 0.0 || b[e] > 1.0)
            throw std::invalid_argument("image: intensities must lie in [0, 1]");
}

/// 10·log10(1/MSE) against a unit dynamic range, capped at 99 dB so that
/// identical images still produce a finite score.
inline double psnr(const Tensor& a, const Tensor& b) {
    check_image_pair(a, b);
    double mse = 0.0;
    for (std::size_t e = 0; e < a.numel(); ++e) {
        const double d = a[e] - b[e];
        mse += d * d;
    }
    mse /= static_cast<double>(a.numel());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

/// Mean local structural similarity: 11×11 Gaussian window (σ = 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 1, windows fully inside the image,
/// averaged over channels. Requires H, W ≥ 11.
inline double ssim(const Tensor& a, const Tensor& b) {
    check_image_pair(a, b);
    const int h = static_cast<int>(a.dim(0));
    const int w = static_cast<int>(a.dim(1));
    const int c = static_cast<int>(a.dim(2));
    constexpr int kWin = 11;
    constexpr int kHalf = kWin / 2;
    if (h < kWin || w < kWin) throw std::invalid_argument("ssim: image smaller than 11×11 window");

    double window[kWin][kWin];
    double total = 0.0;
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
            const double di = i - kHalf, dj = j - kHalf;
            window[i][j] = std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5));
            total += window[i][j];
        }
    for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) window[i][j] /= total;

    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;

    double channel_sum = 0.0;
    for (int ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        long long count = 0;
        for (int y = 0; y + kWin <= h; ++y) {
            for (int x = 0; x + kWin <= w; ++x) {
                double mx = 0.0, my = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
                for (int i = 0; i < kWin; ++i) {
                    for (int j = 0; j < kWin; ++j) {
                        const double wv = window[i][j];
                        const double xv = a(y + i, x + j, ch);
                        const double yv = b(y + i, x + j, ch);
                        mx += wv * xv;
                        my += wv * yv;
                        sxx += wv * xv * xv;
                        syy += wv * yv * yv;
                        sxy += wv * xv * yv;
                    }
                }
                const double vx = sxx - mx * mx;
                const double vy = syy - my * my;
                const double cxy = sxy - mx * my;
                acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
                       ((mx * mx + my * my + c1) * (vx + vy + c2));
                ++count;
            }
        }
        channel_sum += acc / static_cast<double>(count);
    }
    return channel_sum / c;
}

// ---- Trajectory-level aggregation ---------------------------------------

enum class AlignScope { PerFrame, Sequence };

struct TrajectoryMetric {
    double aggregate_mm = 0.0;           // pooled mean over every measured point
    std::vector<double> per_frame_mm;    // 0 where a frame had no measurable points
    std::vector<long long> per_frame_points;
    long long total_points = 0;
    long long fallback_groups = 0;  // groups aligned without PA for lack of points
};

/// Position error between two trajectories sharing joint metadata. Points
/// enter where both trajectories mark the joint valid; joints are grouped
/// by handedness, and each group is aligned per frame (default) or once
/// over the whole sequence. Groups with fewer than 3 common points fall
/// back to unaligned errors — too few constraints for a similarity fit.
inline TrajectoryMetric trajectory_error(const JointTrajectory& predicted,
                                         const JointTrajectory& reference, bool align,
                                         AlignScope scope = AlignScope::PerFrame) {
    if (predicted.frames() != reference.frames())
        throw std::runtime_error("metrics: trajectories differ in frame count");
    if (predicted.joints() != reference.joints() || predicted.handedness != reference.handedness ||
        predicted.semantic_id != reference.semantic_id)
        throw std::runtime_error("metrics: trajectories differ in joint layout");

    const std::size_t frames = predicted.frames();
    TrajectoryMetric out;
    out.per_frame_mm.assign(frames, 0.0);
    out.per_frame_points.assign(frames, 0);
    double pooled = 0.0;

    const Hand sides[2] = {Hand::Left, Hand::Right};

    if (align && scope == AlignScope::Sequence) {
        for (Hand side : sides) {
            std::vector<geom::Vec3> p, r;
            std::vector<std::size_t> frame_of;
            for (std::size_t f = 0; f < frames; ++f)
                for (std::size_t i = 0; i < predicted.joints(); ++i)
                    if (predicted.handedness[i] == side && predicted.is_valid(f, i) &&
                        reference.is_valid(f, i)) {
                        p.push_back(predicted.position(f, i));
                        r.push_back(reference.position(f, i));
                        frame_of.push_back(f);
                    }
            if (p.empty()) continue;
            SimilarityTransform t;
            bool aligned = false;
            if (p.size() >= 3) {
                try {
                    t = procrustes_align(p, r);
                    aligned = true;
                } catch (const std::runtime_error&) {
                }
            }
            if (!aligned) ++out.fallback_groups;
            for (std::size_t k = 0; k < p.size(); ++k) {
                const double err = 1000.0 * (t.apply(p[k]) - r[k]).norm();
                pooled += err;
                out.per_frame_mm[frame_of[k]] += err;
                out.per_frame_points[frame_of[k]] += 1;
                ++out.total_points;
            }
        }
    } else {
        for (std::size_t f = 0; f < frames; ++f) {
            for (Hand side : sides) {
                std::vector<geom::Vec3> p, r;
                for (std::size_t i = 0; i < predicted.joints(); ++i)
                    if (predicted.handedness[i] == side && predicted.is_valid(f, i) &&
                        reference.is_valid(f, i)) {
                        p.push_back(predicted.position(f, i));
                        r.push_back(reference.position(f, i));
                    }
                if (p.empty()) continue;
                SimilarityTransform t;
                bool aligned = false;
                if (align && p.size() >= 3) {
                    try {
                        t = procrustes_align(p, r);
                        aligned = true;
                    } catch (const std::runtime_error&) {
                    }
                }
                if (align && !aligned) ++out.fallback_groups;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    const double err = 1000.0 * (t.apply(p[k]) - r[k]).norm();
                    pooled += err;
                    out.per_frame_mm[f] += err;
                    out.per_frame_points[f] += 1;
                    ++out.total_points;
                }
            }
        }
    }

    for (std::size_t f = 0; f < frames; ++f)
        if (out.per_frame_points[f] > 0)
            out.per_frame_mm[f] /= static_cast<double>(out.per_frame_points[f]);
    out.aggregate_mm = out.total_points > 0 ? pooled / static_cast<double>(out.total_points) : 0.0;
    return out;
}

}  // namespace egoc::metrics
