// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "egoc/conditioning.hpp"
#include "egoc/geometry.hpp"
#include "egoc/parallel.hpp"
#include "egoc/rng.hpp"
#include "egoc/tensor.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::embed {

inline constexpr double kPi = 3.14159265358979323846;

/// Multi-octave sinusoidal coordinate encoding.
struct EncodingSpec {
    int bands = 8;
    double base_freq = kPi / 64.0;  // radians per grid cell at the lowest octave

    void validate() const {
        if (bands < 1) throw std::invalid_argument("encoding: bands must be >= 1");
        if (!(base_freq > 0.0)) throw std::invalid_argument("encoding: base_freq must be positive");
    }
};

/// For each scalar in (u_x, u_y, d) and each octave k: sin(2^k·f0·s),
/// cos(2^k·f0·s). Length 6·bands, ordered scalar-major then octave.
inline Eigen::VectorXd sincos_encode(const geom::Vec2& u, double d, const EncodingSpec& spec) {
    spec.validate();
    const double scalars[3] = {u.x(), u.y(), d};
    Eigen::VectorXd out(6 * spec.bands);
    int at = 0;
    for (double s : scalars) {
        double freq = spec.base_freq;
        for (int k = 0; k < spec.bands; ++k, freq *= 2.0) {
            out[at++] = std::sin(freq * s);
            out[at++] = std::cos(freq * s);
        }
    }
    return out;
}

/// Fixed per-joint embedding vectors, drawn once from a seeded RNG. Stands
/// in for a trained identity embedding; determinism is the contract.
struct IdentityTable {
    Eigen::MatrixXd entries;  // N_max × D_id
    std::uint64_t seed = 0;

    static IdentityTable seeded(int n_max, int d_id, std::uint64_t seed) {
        if (n_max < 1 || d_id < 1)
            throw std::invalid_argument("identity table: dimensions must be >= 1");
        IdentityTable t;
        t.seed = seed;
        t.entries.resize(n_max, d_id);
        Rng rng(seed);
        const double bound = 1.0 / std::sqrt(static_cast<double>(d_id));
        for (int i = 0; i < n_max; ++i)
            for (int j = 0; j < d_id; ++j) t.entries(i, j) = rng.uniform(-bound, bound);
        return t;
    }
};

/// Two-layer perceptron with tanh (or linear, for test configurations).
struct MlpProjector {
    enum class Activation { Tanh, Linear };

    Eigen::MatrixXd w1, w2;
    Eigen::VectorXd b1, b2;
    Activation activation = Activation::Tanh;
    std::uint64_t seed = 0;

    int input_dim() const { return static_cast<int>(w1.cols()); }
    int output_dim() const { return static_cast<int>(w2.rows()); }

    static MlpProjector seeded(int in, int hidden, int out, std::uint64_t seed) {
        if (in < 1 || hidden < 1 || out < 1)
            throw std::invalid_argument("mlp: dimensions must be >= 1");
        MlpProjector m;
        m.seed = seed;
        Rng rng(seed);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        m.w1.resize(hidden, in);
        for (int r = 0; r < hidden; ++r)
            for (int c = 0; c < in; ++c) m.w1(r, c) = rng.uniform(-s1, s1);
        m.w2.resize(out, hidden);
        for (int r = 0; r < out; ++r)
            for (int c = 0; c < hidden; ++c) m.w2(r, c) = rng.uniform(-s2, s2);
        m.b1 = Eigen::VectorXd::Zero(hidden);
        m.b2 = Eigen::VectorXd::Zero(out);
        return m;
    }

    /// Pure passthrough (identity weights, linear activation); lets tests
    /// observe the concatenated input unchanged.
    static MlpProjector identity(int dim) {
        MlpProjector m;
        m.w1 = Eigen::MatrixXd::Identity(dim, dim);
        m.w2 = Eigen::MatrixXd::Identity(dim, dim);
        m.b1 = Eigen::VectorXd::Zero(dim);
        m.b2 = Eigen::VectorXd::Zero(dim);
        m.activation = Activation::Linear;
        return m;
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const {
        if (x.size() != w1.cols()) throw std::invalid_argument("mlp: input length mismatch");
        Eigen::VectorXd h = w1 * x + b1;
        if (activation == Activation::Tanh)
            for (int i = 0; i < h.size(); ++i) h[i] = std::tanh(h[i]);
        return w2 * h + b2;
    }
};

/// z = φ([encoding ; E_id[index]]).
inline Eigen::VectorXd joint_embedding(const Eigen::VectorXd& enc, int id_index,
                                       const IdentityTable& table, const MlpProjector& mlp) {
    if (id_index < 0 || id_index >= table.entries.rows())
        throw std::invalid_argument("joint_embedding: identity index out of range");
    Eigen::VectorXd x(enc.size() + table.entries.cols());
    x << enc, table.entries.row(id_index).transpose();
    return mlp.apply(x);
}

/// F_geo(x) = Σ_i M_i(x)·z_i, a {D_geo, gh, gw} frame.
inline Tensor splat_geo(const std::vector<Eigen::VectorXd>& embeddings,
                        const std::vector<geom::Heatmap>& heatmaps) {
    if (embeddings.size() != heatmaps.size())
        throw std::invalid_argument("splat_geo: one embedding required per heatmap");
    if (embeddings.empty()) throw std::invalid_argument("splat_geo: need at least one joint");
    const int d_geo = static_cast<int>(embeddings[0].size());
    for (const auto& z : embeddings)
        if (static_cast<int>(z.size()) != d_geo)
            throw std::invalid_argument("splat_geo: embedding lengths disagree");
    const geom::GridSpec grid = heatmaps[0].grid;
    for (const auto& h : heatmaps)
        if (!(h.grid == grid)) throw std::invalid_argument("splat_geo: heatmaps disagree on grid");

    Tensor frame({static_cast<std::size_t>(d_geo), static_cast<std::size_t>(grid.gh),
                  static_cast<std::size_t>(grid.gw)},
                 0.0);
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (int y = 0; y < grid.gh; ++y) {
            for (int x = 0; x < grid.gw; ++x) {
                const double m = heatmaps[i].at(y, x);
                if (m == 0.0) continue;
                for (int c = 0; c < d_geo; ++c) frame(c, y, x) += m * embeddings[i][c];
            }
        }
    }
    return frame;
}

/// Causal 3D convolution plus per-position layer normalization. Temporal
/// padding (kt−1 cells) lies entirely in the past, so frame t of the output
/// never reads input frames later than t; spatial padding is symmetric
/// zero-fill.
struct CausalConvHead {
    Tensor kernel{{1, 1, 1, 1, 1}, 0.0};  // {C_out, C_in, kt, kh, kw}
    Eigen::VectorXd bias;                 // C_out
    Eigen::VectorXd ln_gain;              // C_out
    Eigen::VectorXd ln_bias;              // C_out
    std::uint64_t seed = 0;

    int out_channels() const { return static_cast<int>(kernel.dim(0)); }
    int in_channels() const { return static_cast<int>(kernel.dim(1)); }

    static CausalConvHead seeded(int in_ch, int out_ch, int kt, int kh, int kw,
                                 std::uint64_t seed) {
        if (in_ch < 1 || out_ch < 1 || kt < 1 || kh < 1 || kw < 1)
            throw std::invalid_argument("conv head: dimensions must be >= 1");
        CausalConvHead head;
        head.seed = seed;
        head.kernel = Tensor({static_cast<std::size_t>(out_ch), static_cast<std::size_t>(in_ch),
                              static_cast<std::size_t>(kt), static_cast<std::size_t>(kh),
                              static_cast<std::size_t>(kw)},
                             0.0);
        Rng rng(seed);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_ch) * kt * kh * kw);
        for (std::size_t e = 0; e < head.kernel.numel(); ++e)
            head.kernel[e] = rng.uniform(-bound, bound);
        head.bias = Eigen::VectorXd::Zero(out_ch);
        head.ln_gain = Eigen::VectorXd::Ones(out_ch);
        head.ln_bias = Eigen::VectorXd::Zero(out_ch);
        return head;
    }

    /// 1×1×1 identity channel map: output = layer-normalized input.
    static CausalConvHead dirac(int channels) {
        CausalConvHead head;
        head.kernel = Tensor({static_cast<std::size_t>(channels), static_cast<std::size_t>(channels),
                              1, 1, 1},
                             0.0);
        for (int c = 0; c < channels; ++c) head.kernel(c, c, 0, 0, 0) = 1.0;
        head.bias = Eigen::VectorXd::Zero(channels);
        head.ln_gain = Eigen::VectorXd::Ones(channels);
        head.ln_bias = Eigen::VectorXd::Zero(channels);
        return head;
    }

    std::vector<Tensor> apply(const std::vector<Tensor>& volume) const {
        if (volume.empty()) throw std::invalid_argument("conv head: empty input volume");
        const int c_in = in_channels();
        const int c_out = out_channels();
        const int kt = static_cast<int>(kernel.dim(2));
        const int kh = static_cast<int>(kernel.dim(3));
        const int kw = static_cast<int>(kernel.dim(4));
        for (const Tensor& f : volume)
            if (f.rank() != 3 || static_cast<int>(f.dim(0)) != c_in || !f.same_shape(volume[0]))
                throw std::invalid_argument("conv head: input frames must share shape C_in×gh×gw");
        const int gh = static_cast<int>(volume[0].dim(1));
        const int gw = static_cast<int>(volume[0].dim(2));
        const int t_len = static_cast<int>(volume.size());
        const int py = kh / 2;
        const int px = kw / 2;

        std::vector<Tensor> out(volume.size(),
                                Tensor({static_cast<std::size_t>(c_out), static_cast<std::size_t>(gh),
                                        static_cast<std::size_t>(gw)},
                                       0.0));
        // Output frames are written disjointly; inputs are read-only.
        parallel_for(static_cast<std::size_t>(t_len), [&](std::size_t tt) {
            const int t = static_cast<int>(tt);
            Eigen::VectorXd pre(c_out);
            for (int y = 0; y < gh; ++y) {
                for (int x = 0; x < gw; ++x) {
                    for (int co = 0; co < c_out; ++co) pre[co] = bias[co];
                    for (int dt = 0; dt < kt; ++dt) {
                        const int ts = t - (kt - 1) + dt;  // past-only temporal tap
                        if (ts < 0 || ts >= t_len) continue;
                        const Tensor& src = volume[static_cast<std::size_t>(ts)];
                        for (int dy = 0; dy < kh; ++dy) {
                            const int ys = y - py + dy;
                            if (ys < 0 || ys >= gh) continue;
                            for (int dx = 0; dx < kw; ++dx) {
                                const int xs = x - px + dx;
                                if (xs < 0 || xs >= gw) continue;
                                for (int ci = 0; ci < c_in; ++ci) {
                                    const double v = src(ci, ys, xs);
                                    if (v == 0.0) continue;
                                    for (int co = 0; co < c_out; ++co)
                                        pre[co] += kernel(co, ci, dt, dy, dx) * v;
                                }
                            }
                        }
                    }
                    // Layer normalization over channels at this (t, y, x).
                    const double mean = pre.mean();
                    double var = 0.0;
                    for (int co = 0; co < c_out; ++co) var += (pre[co] - mean) * (pre[co] - mean);
                    var /= c_out;
                    const double inv = 1.0 / std::sqrt(var + 1e-12);
                    Tensor& dst = out[tt];
                    for (int co = 0; co < c_out; ++co)
                        dst(co, y, x) = ln_gain[co] * (pre[co] - mean) * inv + ln_bias[co];
                }
            }
        });
        return out;
    }
};

/// C_geo = LayerNorm(Conv3D_causal([F_geo ; F_motion])), channel order
/// geometric-stream first.
inline std::vector<Tensor> causal_head(const std::vector<Tensor>& geo,
                                       const cond::MotionVolume& motion,
                                       const CausalConvHead& head) {
    if (geo.size() != motion.frames.size())
        throw std::invalid_argument("causal_head: geo and motion frame counts differ");
    if (geo.empty()) throw std::invalid_argument("causal_head: empty volume");
    std::vector<Tensor> stacked;
    stacked.reserve(geo.size());
    for (std::size_t t = 0; t < geo.size(); ++t) {
        const Tensor& g = geo[t];
        const Tensor& m = motion.frames[t];
        if (g.rank() != 3 || m.rank() != 3 || g.dim(1) != m.dim(1) || g.dim(2) != m.dim(2))
            throw std::invalid_argument("causal_head: geo/motion grids disagree");
        Tensor cat({g.dim(0) + m.dim(0), g.dim(1), g.dim(2)}, 0.0);
        std::copy(g.data(), g.data() + g.numel(), cat.data());
        std::copy(m.data(), m.data() + m.numel(), cat.data() + g.numel());
        stacked.push_back(std::move(cat));
    }
    return head.apply(stacked);
}

/// Randomly zeroes joints. Default selects whole joint trajectories (each
/// joint kept or dropped across all frames); per_frame instead draws
/// independently per (frame, joint). Selected entries get zero coordinates
/// and cleared validity. Deterministic given seed.
inline JointTrajectory mask_joints(const JointTrajectory& traj, double rate, std::uint64_t seed,
                                   bool per_frame = false) {
    if (!(rate >= 0.0 && rate <= 1.0))
        throw std::invalid_argument("mask_joints: rate must lie in [0, 1]");
    JointTrajectory out = traj;
    Rng rng(seed);
    const std::size_t n = traj.joints();
    if (per_frame) {
        for (std::size_t f = 0; f < traj.frames(); ++f)
            for (std::size_t i = 0; i < n; ++i)
                if (rng.uniform() < rate) {
                    out.position(f, i).setZero();
                    out.set_valid(f, i, false);
                }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.uniform() >= rate) continue;
            for (std::size_t f = 0; f < traj.frames(); ++f) {
                out.position(f, i).setZero();
                out.set_valid(f, i, false);
            }
        }
    }
    return out;
}

}  // namespace egoc::embed
