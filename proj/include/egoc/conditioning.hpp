// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "egoc/geometry.hpp"
#include "egoc/tensor.hpp"

namespace egoc::cond {

/// Controls how strongly joints shadow each other and how sharply depth
/// ordering is resolved. tau shares units with the heatmap sigma (grid
/// cells); gamma and lambda act on disparities (1/m).
struct OcclusionParams {
    double tau = 1.5;
    double gamma = 50.0;
    double lambda = 1.0;
    double epsilon = 1e-6;

    void validate() const {
        if (!(tau > 0.0)) throw std::invalid_argument("occlusion: tau must be positive");
        if (!(gamma > 0.0)) throw std::invalid_argument("occlusion: gamma must be positive");
        if (!(epsilon > 0.0)) throw std::invalid_argument("occlusion: epsilon must be positive");
    }
};

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// P(i, j): how strongly joint j shadows joint i. Row i collects everything
/// that can hide joint i. Grows when the two joints overlap on the grid and
/// joint j sits nearer the camera (larger disparity). Invalid joints
/// contribute nothing in either role; the diagonal is zero — a joint cannot
/// occlude itself.
inline Eigen::MatrixXd occlusion_penalty(const std::vector<geom::ProjectedJoint>& projected,
                                         const OcclusionParams& params) {
    params.validate();
    const int n = static_cast<int>(projected.size());
    Eigen::MatrixXd pen = Eigen::MatrixXd::Zero(n, n);
    const double inv = 1.0 / (2.0 * params.tau * params.tau);
    for (int i = 0; i < n; ++i) {
        if (!projected[i].valid) continue;
        for (int j = 0; j < n; ++j) {
            if (j == i || !projected[j].valid) continue;
            const double d2 = (projected[i].u - projected[j].u).squaredNorm();
            pen(i, j) = std::exp(-d2 * inv) * sigmoid(params.gamma * (projected[j].d - projected[i].d));
        }
    }
    return pen;
}

/// Per-joint pooled source feature plus the visibility gate that scaled it.
struct JointFeature {
    Eigen::VectorXd vector;
    double visibility = 0.0;
    bool off_grid = false;  // heatmap mass vanished; vector forced to zero
};

/// Pools the source latent under each joint's heatmap, then closes the gate
/// in proportion to the strongest occluder: f_i = (1 − max_{j≠i} P[i][j]) ·
/// Σ_x M_i(x)/(Σ M_i + ε) · Z(x). A heatmap with (near-)zero mass marks the
/// joint off-grid and yields an exact zero vector.
inline std::vector<JointFeature> aggregate_context(const Tensor& latent,
                                                   const std::vector<geom::Heatmap>& heatmaps,
                                                   const Eigen::MatrixXd& penalty, double epsilon) {
    if (latent.rank() != 3) throw std::invalid_argument("aggregate_context: latent must be C×gh×gw");
    const int channels = static_cast<int>(latent.dim(0));
    const int gh = static_cast<int>(latent.dim(1));
    const int gw = static_cast<int>(latent.dim(2));
    const int n = static_cast<int>(heatmaps.size());
    if (penalty.rows() != n || penalty.cols() != n)
        throw std::invalid_argument("aggregate_context: penalty matrix does not match joint count");

    std::vector<JointFeature> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const geom::Heatmap& h = heatmaps[i];
        if (h.grid.gh != gh || h.grid.gw != gw)
            throw std::invalid_argument("aggregate_context: heatmap grid does not match latent");

        double worst = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i) worst = std::max(worst, penalty(i, j));
        const double gate = 1.0 - worst;

        JointFeature& f = out[static_cast<std::size_t>(i)];
        f.visibility = gate;
        f.vector = Eigen::VectorXd::Zero(channels);

        const double mass = h.sum();
        if (mass < 1e-12) {
            f.off_grid = true;
            continue;
        }
        const double norm = gate / (mass + epsilon);
        for (int c = 0; c < channels; ++c) {
            double acc = 0.0;
            for (int y = 0; y < gh; ++y)
                for (int x = 0; x < gw; ++x) acc += h.at(y, x) * latent(c, y, x);
            f.vector[c] = acc * norm;
        }
    }
    return out;
}

/// Soft Z-buffer. Per cell, a softmax over joints of log(M_i(x)+ε) + λ·d_i:
/// the nearest joint with appreciable heatmap support wins smoothly.
/// `valid` masks joints out of the softmax entirely (empty = all valid);
/// excluded joints get exact zero weight, and a cell with no valid joints is
/// all zeros. Returns weights with dims {N, gh, gw}.
inline Tensor depth_weight_field(const std::vector<geom::Heatmap>& heatmaps,
                                 const std::vector<double>& disparities, const OcclusionParams& params,
                                 const std::vector<char>& valid = {}) {
    params.validate();
    const int n = static_cast<int>(heatmaps.size());
    if (n < 1) throw std::invalid_argument("depth_weight_field: need at least one joint");
    if (static_cast<int>(disparities.size()) != n)
        throw std::invalid_argument("depth_weight_field: disparity count does not match heatmaps");
    if (!valid.empty() && static_cast<int>(valid.size()) != n)
        throw std::invalid_argument("depth_weight_field: valid mask does not match heatmaps");
    const geom::GridSpec grid = heatmaps[0].grid;
    for (const auto& h : heatmaps)
        if (!(h.grid == grid)) throw std::invalid_argument("depth_weight_field: heatmaps disagree on grid");

    Tensor weights({static_cast<std::size_t>(n), static_cast<std::size_t>(grid.gh),
                    static_cast<std::size_t>(grid.gw)},
                   0.0);
    std::vector<double> score(static_cast<std::size_t>(n));
    for (int y = 0; y < grid.gh; ++y) {
        for (int x = 0; x < grid.gw; ++x) {
            double peak = -std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                if (!valid.empty() && !valid[static_cast<std::size_t>(i)]) continue;
                score[static_cast<std::size_t>(i)] =
                    std::log(heatmaps[static_cast<std::size_t>(i)].at(y, x) + params.epsilon) +
                    params.lambda * disparities[static_cast<std::size_t>(i)];
                peak = std::max(peak, score[static_cast<std::size_t>(i)]);
            }
            if (!std::isfinite(peak)) continue;  // no valid joints: leave the cell zero
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                if (!valid.empty() && !valid[static_cast<std::size_t>(i)]) continue;
                total += std::exp(score[static_cast<std::size_t>(i)] - peak);
            }
            for (int i = 0; i < n; ++i) {
                if (!valid.empty() && !valid[static_cast<std::size_t>(i)]) continue;
                weights(i, y, x) = std::exp(score[static_cast<std::size_t>(i)] - peak) / total;
            }
        }
    }
    return weights;
}

/// F(x) = (Σ_i A_i(x)·f_i) · (Σ_j M_j(x)). The attention mixes joint
/// features per cell; the heatmap-sum factor zeroes background far from
/// every joint. Returns a {C, gh, gw} frame.
inline Tensor propagate_motion(const std::vector<JointFeature>& features, const Tensor& attention,
                               const std::vector<geom::Heatmap>& heatmaps) {
    if (attention.rank() != 3) throw std::invalid_argument("propagate_motion: attention must be N×gh×gw");
    const int n = static_cast<int>(attention.dim(0));
    const int gh = static_cast<int>(attention.dim(1));
    const int gw = static_cast<int>(attention.dim(2));
    if (static_cast<int>(features.size()) != n || static_cast<int>(heatmaps.size()) != n)
        throw std::invalid_argument("propagate_motion: joint count mismatch");
    if (n < 1) throw std::invalid_argument("propagate_motion: need at least one joint");
    const int channels = static_cast<int>(features[0].vector.size());
    for (const auto& f : features)
        if (static_cast<int>(f.vector.size()) != channels)
            throw std::invalid_argument("propagate_motion: feature lengths disagree");
    for (const auto& h : heatmaps)
        if (h.grid.gh != gh || h.grid.gw != gw)
            throw std::invalid_argument("propagate_motion: heatmap grid does not match attention");

    Tensor frame({static_cast<std::size_t>(channels), static_cast<std::size_t>(gh),
                  static_cast<std::size_t>(gw)},
                 0.0);
    for (int y = 0; y < gh; ++y) {
        for (int x = 0; x < gw; ++x) {
            double opacity = 0.0;
            for (int j = 0; j < n; ++j) opacity += heatmaps[static_cast<std::size_t>(j)].at(y, x);
            for (int c = 0; c < channels; ++c) {
                double mix = 0.0;
                for (int i = 0; i < n; ++i)
                    mix += attention(i, y, x) * features[static_cast<std::size_t>(i)].vector[c];
                frame(c, y, x) = mix * opacity;
            }
        }
    }
    return frame;
}

/// Motion features for a sequence of target frames, each C×gh×gw.
struct MotionVolume {
    std::vector<Tensor> frames;
};

/// 4× temporal compression with an uncompressed first frame: frame 0 passes
/// through; each later output frame is the mean of its group of up to 4
/// inputs. T inputs become 1 + ceil((T−1)/4) outputs.
inline MotionVolume compress_temporal(const MotionVolume& volume) {
    const std::size_t t = volume.frames.size();
    if (t < 1) throw std::invalid_argument("compress_temporal: need at least one frame");
    for (const Tensor& f : volume.frames)
        if (!f.same_shape(volume.frames[0]))
            throw std::invalid_argument("compress_temporal: frames disagree on shape");

    MotionVolume out;
    out.frames.push_back(volume.frames[0]);
    for (std::size_t start = 1; start < t; start += 4) {
        const std::size_t stop = std::min(start + 4, t);
        Tensor mean(volume.frames[0].dims(), 0.0);
        for (std::size_t k = start; k < stop; ++k)
            for (std::size_t e = 0; e < mean.numel(); ++e) mean[e] += volume.frames[k][e];
        const double inv = 1.0 / static_cast<double>(stop - start);
        for (std::size_t e = 0; e < mean.numel(); ++e) mean[e] *= inv;
        out.frames.push_back(std::move(mean));
    }
    return out;
}

/// Assembles the conditioning stack: slot 0 holds the reference-image
/// features, the remaining slots the compressed motion frames. Output dims
/// {T_latent, C, gh, gw}.
inline Tensor inject_condition(const Tensor& reference, const MotionVolume& compressed) {
    if (reference.rank() != 3) throw std::invalid_argument("inject_condition: reference must be C×gh×gw");
    const std::size_t t = compressed.frames.size();
    if (t < 1) throw std::invalid_argument("inject_condition: motion volume is empty");
    for (const Tensor& f : compressed.frames)
        if (!f.same_shape(reference))
            throw std::invalid_argument("inject_condition: motion frames do not match reference shape");

    Tensor y({t, reference.dim(0), reference.dim(1), reference.dim(2)}, 0.0);
    const std::size_t stride = reference.numel();
    std::copy(reference.data(), reference.data() + stride, y.data());
    for (std::size_t k = 1; k < t; ++k)
        std::copy(compressed.frames[k].data(), compressed.frames[k].data() + stride,
                  y.data() + k * stride);
    return y;
}

}  // namespace egoc::cond
