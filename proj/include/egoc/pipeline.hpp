// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "egoc/calibration.hpp"
#include "egoc/clipper.hpp"
#include "egoc/conditioning.hpp"
#include "egoc/config.hpp"
#include "egoc/geoembed.hpp"
#include "egoc/geometry.hpp"
#include "egoc/image_io.hpp"
#include "egoc/metrics.hpp"
#include "egoc/parallel.hpp"
#include "egoc/tensor.hpp"
#include "egoc/tensor_file.hpp"
#include "egoc/tracking.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::cli {

/// Exit-code contract shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;  // bad input or config
inline constexpr int kExitNegative = 3;    // clean negative (discarded / nothing qualified)

namespace detail {

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
    os << j.dump(2) << "\n";
    if (!os.good()) throw std::runtime_error("write to '" + path + "' failed");
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return j;
}

/// Stacks T equally-shaped {a, b, c} frames into one {T, a, b, c} tensor.
inline Tensor stack_frames(const std::vector<Tensor>& frames) {
    if (frames.empty()) throw std::invalid_argument("stack_frames: empty volume");
    std::vector<std::size_t> dims;
    dims.push_back(frames.size());
    for (std::size_t i = 0; i < frames[0].rank(); ++i) dims.push_back(frames[0].dim(i));
    Tensor out(dims, 0.0);
    const std::size_t stride = frames[0].numel();
    for (std::size_t t = 0; t < frames.size(); ++t) {
        if (!frames[t].same_shape(frames[0]))
            throw std::invalid_argument("stack_frames: frames disagree on shape");
        std::copy(frames[t].data(), frames[t].data() + stride, out.data() + t * stride);
    }
    return out;
}

inline Tensor to_double(const TensorF& t) {
    Tensor out(t.dims(), 0.0);
    for (std::size_t e = 0; e < t.numel(); ++e) out[e] = static_cast<double>(t[e]);
    return out;
}

inline TensorF eigen_to_tensor(const Eigen::MatrixXd& m) {
    TensorF out({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())}, 0.0f);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) =
                static_cast<float>(m(r, c));
    return out;
}

inline TensorF concat_flat(const std::vector<TensorF>& parts) {
    std::size_t total = 0;
    for (const auto& p : parts) total += p.numel();
    TensorF out({std::max<std::size_t>(total, 1)}, 0.0f);
    std::size_t at = 0;
    for (const auto& p : parts)
        for (std::size_t e = 0; e < p.numel(); ++e) out[at++] = p[e];
    return out;
}

}  // namespace detail

// ---- Detections ----------------------------------------------------------

/// JSON Lines, one detection per line:
/// {"frame", "translation": [x,y,z], "handedness", "joints"?, "has_params"}.
/// Frame indices must be non-decreasing; record ids are line positions.
inline std::vector<track::Detection> read_detections(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("detections: cannot open '" + path + "'");
    std::vector<track::Detection> out;
    std::string line;
    int last_frame = -1;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        track::Detection d;
        d.frame = rec.at("frame").get<int>();
        if (d.frame < 0) throw std::runtime_error("detections: negative frame index");
        if (d.frame < last_frame) {
            std::ostringstream msg;
            msg << "detections: frame order regresses at line " << line_no;
            throw std::runtime_error(msg.str());
        }
        last_frame = d.frame;
        const auto t = rec.at("translation").get<std::vector<double>>();
        if (t.size() != 3) throw std::runtime_error("detections: translation must be a 3-vector");
        d.translation = geom::Vec3(t[0], t[1], t[2]);
        d.handedness = hand_from_string(rec.at("handedness").get<std::string>());
        d.has_params = rec.value("has_params", false);
        if (rec.contains("joints")) {
            for (const auto& row : rec.at("joints")) {
                const auto p = row.get<std::vector<double>>();
                if (p.size() != 3) throw std::runtime_error("detections: joint must be a 3-vector");
                d.joints.emplace_back(p[0], p[1], p[2]);
            }
        }
        d.validate();
        out.push_back(std::move(d));
    }
    return out;
}

// ---- track ----------------------------------------------------------------

/// Resolves a detection stream into the two left/right slots, applies the
/// quality filter, and writes a track file. frames_total defaults to
/// max frame + 1; pass a positive override when the episode length is known
/// independently of the detections.
inline int cmd_track(const std::string& detections_path, const PipelineConfig& cfg,
                     const std::string& out_path, long long frames_total_override = 0) {
    const std::vector<track::Detection> records = read_detections(detections_path);

    long long frames_total = frames_total_override;
    if (frames_total <= 0) {
        frames_total = 0;
        for (const auto& d : records) frames_total = std::max(frames_total, static_cast<long long>(d.frame) + 1);
    }

    std::map<int, std::vector<int>> by_frame;  // frame -> record ids, in file order
    for (std::size_t i = 0; i < records.size(); ++i)
        by_frame[records[i].frame].push_back(static_cast<int>(i));

    std::vector<track::TrackSlot> slots(2);
    slots[0].nominal_class = Hand::Left;
    slots[1].nominal_class = Hand::Right;
    long long swap_candidates = 0, swaps_accepted = 0, gap_resets = 0;
    for (const auto& [frame, ids] : by_frame) {
        std::vector<track::Detection> dets;
        dets.reserve(ids.size());
        for (int id : ids) dets.push_back(records[static_cast<std::size_t>(id)]);
        const track::UpdateDiagnostics diag =
            track::update_tracks(slots, dets, frame, cfg.tracker, ids);
        swap_candidates += diag.swap_candidate;
        swaps_accepted += diag.swap_accepted;
        gap_resets += diag.gap_resets;
    }

    const track::VideoStats stats = track::collect_stats(records, frames_total);
    const track::FilterVerdict verdict = track::quality_filter(stats);

    nlohmann::json j;
    j["config"] = {{"lambda_hand", cfg.tracker.lambda_hand},
                   {"tau_swap", cfg.tracker.tau_swap},
                   {"tau_gap", cfg.tracker.tau_gap}};
    j["frames_total"] = frames_total;
    nlohmann::json slots_json = nlohmann::json::array();
    for (const auto& slot : slots) {
        nlohmann::json segs = nlohmann::json::array();
        for (const auto& seg : slot.segments) {
            nlohmann::json sj = {{"frame", seg.frame}, {"detection", seg.detection}};
            const track::Detection& det = records[static_cast<std::size_t>(seg.detection)];
            if (!det.joints.empty()) {
                // Canonical (left-hand convention) joints: right hands mirror
                // across the x axis.
                const std::vector<geom::Vec3> joints = det.handedness == Hand::Right
                                                           ? track::mirror_right_hand(det.joints)
                                                           : det.joints;
                nlohmann::json rows = nlohmann::json::array();
                for (const auto& p : joints) rows.push_back({p.x(), p.y(), p.z()});
                sj["joints"] = rows;
            }
            segs.push_back(std::move(sj));
        }
        slots_json.push_back(
            {{"nominal_class", to_string(slot.nominal_class)}, {"segments", segs}});
    }
    j["slots"] = slots_json;
    j["stats"] = {{"frames_total", stats.frames_total},
                  {"frames_with_valid_hand", stats.frames_with_valid_hand},
                  {"frames_with_valid_params", stats.frames_with_valid_params},
                  {"frames_with_more_than_two_hands", stats.frames_with_more_than_two_hands}};
    j["verdict"] = {{"keep", verdict.keep}, {"reasons", verdict.reasons}};
    j["diagnostics"] = {{"swap_candidates", swap_candidates},
                        {"swaps_accepted", swaps_accepted},
                        {"gap_resets", gap_resets}};
    detail::write_json_file(out_path, j);
    return verdict.keep ? kExitOk : kExitNegative;
}

// ---- condition -------------------------------------------------------------

/// Everything cmd_condition computes, exposed for direct library use.
struct ConditionArtifacts {
    geom::GridSpec grid;
    cond::MotionVolume motion;   // T frames of {C, gh, gw}
    std::vector<Tensor> geo;     // T frames of {D_geo, gh, gw}
    std::vector<Tensor> c_geo;   // T frames of {C_out, gh, gw}
    Tensor y;                    // {T_latent, C, gh, gw}
    std::uint32_t crc_identity = 0;
    std::uint32_t crc_mlp = 0;
    std::uint32_t crc_head = 0;
};

/// Full conditioning stack for one trajectory against one source latent.
/// The latent's spatial dims define the grid; the configured scale maps
/// pixels onto it. Frame 0 is the source frame: occlusion-gated context is
/// pooled there, then propagated to every frame.
inline ConditionArtifacts run_condition(const JointTrajectory& traj, const Tensor& latent,
                                        const PipelineConfig& cfg) {
    traj.validate();
    cfg.validate();
    if (latent.rank() != 3) throw std::runtime_error("condition: latent must be C×gh×gw");
    const std::size_t n = traj.joints();
    if (static_cast<int>(n) > cfg.encoding.n_max)
        throw std::runtime_error("condition: trajectory exceeds configured n_max identities");

    ConditionArtifacts art;
    art.grid = geom::GridSpec{static_cast<int>(latent.dim(1)), static_cast<int>(latent.dim(2)),
                              cfg.grid.scale};
    const geom::GridSpec& grid = art.grid;
    const std::size_t frames = traj.frames();

    // Per-frame projections (grid coordinates) and heatmaps.
    std::vector<std::vector<geom::ProjectedJoint>> proj(frames);
    std::vector<std::vector<geom::Heatmap>> maps(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        proj[f].resize(n);
        maps[f].reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            geom::ProjectedJoint pj;
            if (traj.is_valid(f, i)) {
                pj = geom::project(traj.position(f, i), traj.intrinsics);
                if (pj.valid) pj.u = geom::grid_from_pixel(pj.u, grid);
            }
            proj[f][i] = pj;
            maps[f].push_back(pj.valid ? geom::gaussian_heatmap(pj.u, cfg.sigma, grid)
                                       : geom::zero_heatmap(grid));
        }
    }

    // Source-frame context, occlusion-gated.
    const Eigen::MatrixXd penalty = cond::occlusion_penalty(proj[0], cfg.occlusion);
    const std::vector<cond::JointFeature> context =
        cond::aggregate_context(latent, maps[0], penalty, cfg.occlusion.epsilon);

    // Per-frame propagation and geometric splats.
    const embed::IdentityTable table =
        embed::IdentityTable::seeded(cfg.encoding.n_max, cfg.encoding.d_id, cfg.encoding.seed_identity);
    const embed::MlpProjector mlp =
        embed::MlpProjector::seeded(6 * cfg.encoding.spec.bands + cfg.encoding.d_id,
                                    cfg.encoding.hidden, cfg.encoding.d_geo, cfg.encoding.seed_mlp);

    art.motion.frames.assign(frames, Tensor({1}, 0.0));
    art.geo.assign(frames, Tensor({1}, 0.0));
    parallel_for(frames, [&](std::size_t f) {
        std::vector<double> disparity(n, 0.0);
        std::vector<char> valid(n, 0);
        for (std::size_t i = 0; i < n; ++i) {
            disparity[i] = proj[f][i].d;
            valid[i] = proj[f][i].valid ? 1 : 0;
        }
        const Tensor weights = cond::depth_weight_field(maps[f], disparity, cfg.occlusion, valid);
        art.motion.frames[f] = cond::propagate_motion(context, weights, maps[f]);

        std::vector<Eigen::VectorXd> embeddings;
        std::vector<geom::Heatmap> visible;
        for (std::size_t i = 0; i < n; ++i) {
            if (!proj[f][i].valid) continue;
            const Eigen::VectorXd enc =
                embed::sincos_encode(proj[f][i].u, proj[f][i].d, cfg.encoding.spec);
            embeddings.push_back(embed::joint_embedding(enc, static_cast<int>(i), table, mlp));
            visible.push_back(maps[f][i]);
        }
        art.geo[f] = embeddings.empty()
                         ? Tensor({static_cast<std::size_t>(cfg.encoding.d_geo),
                                   static_cast<std::size_t>(grid.gh),
                                   static_cast<std::size_t>(grid.gw)},
                                  0.0)
                         : embed::splat_geo(embeddings, visible);
    });

    const embed::CausalConvHead head = embed::CausalConvHead::seeded(
        cfg.encoding.d_geo + static_cast<int>(latent.dim(0)), cfg.encoding.c_out, cfg.encoding.kt,
        cfg.encoding.kh, cfg.encoding.kw, cfg.encoding.seed_head);
    art.c_geo = embed::causal_head(art.geo, art.motion, head);
    art.y = cond::inject_condition(latent, cond::compress_temporal(art.motion));

    art.crc_identity = io::crc32_tensor(detail::eigen_to_tensor(table.entries));
    {
        TensorF kernel_f(head.kernel.dims(), 0.0f);
        for (std::size_t e = 0; e < head.kernel.numel(); ++e)
            kernel_f[e] = static_cast<float>(head.kernel[e]);
        art.crc_mlp = io::crc32_tensor(detail::concat_flat(
            {detail::eigen_to_tensor(mlp.w1), detail::eigen_to_tensor(mlp.b1),
             detail::eigen_to_tensor(mlp.w2), detail::eigen_to_tensor(mlp.b2)}));
        art.crc_head = io::crc32_tensor(detail::concat_flat(
            {kernel_f, detail::eigen_to_tensor(head.bias), detail::eigen_to_tensor(head.ln_gain),
             detail::eigen_to_tensor(head.ln_bias)}));
    }
    return art;
}

/// Reads a trajectory and a source latent, runs the conditioning stack, and
/// writes y, F_motion, F_geo, C_geo tensors plus a manifest into out_dir.
inline int cmd_condition(const std::string& traj_path, const std::string& latent_path,
                         const PipelineConfig& cfg, const std::string& out_dir) {
    const JointTrajectory traj = read_trajectory(traj_path);
    const Tensor latent = detail::to_double(io::read_tensor(latent_path));
    const ConditionArtifacts art = run_condition(traj, latent, cfg);

    std::filesystem::create_directories(out_dir);
    const auto tensor_path = [&](const char* name) {
        return (std::filesystem::path(out_dir) / (std::string(name) + io::kTensorExtension))
            .string();
    };
    const Tensor f_motion = detail::stack_frames(art.motion.frames);
    const Tensor f_geo = detail::stack_frames(art.geo);
    const Tensor c_geo = detail::stack_frames(art.c_geo);
    io::write_tensor(tensor_path("f_motion"), f_motion);
    io::write_tensor(tensor_path("f_geo"), f_geo);
    io::write_tensor(tensor_path("c_geo"), c_geo);
    io::write_tensor(tensor_path("y"), art.y);

    const auto shape_json = [](const Tensor& t) {
        nlohmann::json dims = nlohmann::json::array();
        for (std::size_t i = 0; i < t.rank(); ++i) dims.push_back(t.dim(i));
        return dims;
    };
    nlohmann::json j;
    j["inputs"] = {{"trajectory", traj_path}, {"latent", latent_path}};
    j["config"] = cfg.to_json();
    j["grid"] = {{"gh", art.grid.gh}, {"gw", art.grid.gw}, {"scale", art.grid.scale}};
    j["shapes"] = {{"f_motion", shape_json(f_motion)},
                   {"f_geo", shape_json(f_geo)},
                   {"c_geo", shape_json(c_geo)},
                   {"y", shape_json(art.y)}};
    j["seeds"] = {{"identity", cfg.encoding.seed_identity},
                  {"mlp", cfg.encoding.seed_mlp},
                  {"head", cfg.encoding.seed_head}};
    j["param_crc32"] = {{"identity", art.crc_identity},
                        {"mlp", art.crc_mlp},
                        {"head", art.crc_head}};
    j["outputs"] = {"f_motion" + std::string(io::kTensorExtension),
                    "f_geo" + std::string(io::kTensorExtension),
                    "c_geo" + std::string(io::kTensorExtension),
                    "y" + std::string(io::kTensorExtension)};
    detail::write_json_file((std::filesystem::path(out_dir) / "manifest.json").string(), j);
    return kExitOk;
}

// ---- calibrate / fk --------------------------------------------------------

struct CalibrateEpisode {
    std::string configs_path;      // JSONL per-frame joint values
    std::string annotations_path;  // JSON pixel annotations
};

/// FK over every episode, one shared 6-DoF solve, batch projection, and a
/// trajectory-schema output covering all frames of all episodes in order.
inline int cmd_calibrate(const std::string& chain_path,
                         const std::vector<CalibrateEpisode>& episodes,
                         const std::string& intrinsics_path, double fps,
                         const std::string& report_path, const std::string& traj_path) {
    if (episodes.empty()) throw std::runtime_error("calibrate: need at least one episode");
    const calib::KinematicChain chain = calib::read_chain(chain_path);
    const geom::CameraIntrinsics k = calib::read_intrinsics(intrinsics_path);

    std::vector<std::vector<geom::Vec3>> keypoints_w;
    std::vector<calib::Annotation> annotations;
    for (const auto& ep : episodes) {
        const int base = static_cast<int>(keypoints_w.size());
        for (const auto& q : calib::read_joint_configs(ep.configs_path))
            keypoints_w.push_back(calib::forward_kinematics(chain, q));
        for (calib::Annotation a : calib::read_annotations(ep.annotations_path)) {
            a.frame += base;
            annotations.push_back(a);
        }
    }
    calib::validate_annotations(annotations, keypoints_w);
    if (annotations.empty()) throw std::runtime_error("calibrate: no annotations given");

    const calib::ThetaBounds bounds = calib::default_bounds();
    const calib::Vector6d initial = 0.5 * (bounds.lo + bounds.hi);
    const auto residual_fn = [&](const calib::Vector6d& theta) {
        return calib::reprojection_residuals(theta, annotations, keypoints_w, k);
    };
    const calib::SolveResult sol =
        calib::solve_extrinsics(residual_fn, bounds.lo, bounds.hi, initial);

    const Eigen::VectorXd final_res = residual_fn(sol.theta);
    nlohmann::json res_json = nlohmann::json::array();
    for (std::size_t a = 0; a < annotations.size(); ++a)
        res_json.push_back({final_res[static_cast<Eigen::Index>(2 * a)],
                            final_res[static_cast<Eigen::Index>(2 * a + 1)]});
    nlohmann::json report;
    report["theta"] = {sol.theta[0], sol.theta[1], sol.theta[2],
                       sol.theta[3], sol.theta[4], sol.theta[5]};
    report["cost"] = sol.cost;
    report["rms_px"] = std::sqrt(sol.cost / static_cast<double>(annotations.size()));
    report["status"] = calib::to_string(sol.status);
    report["iterations"] = sol.iterations;
    report["accepted_steps"] = sol.accepted_steps;
    report["annotations"] = annotations.size();
    report["frames"] = keypoints_w.size();
    report["residuals"] = res_json;
    detail::write_json_file(report_path, report);

    const auto projected = calib::batch_project(calib::pose_from_theta(sol.theta), keypoints_w, k);
    JointTrajectory traj;
    traj.fps = fps;
    traj.intrinsics = k;
    for (std::size_t i = 0; i < chain.keypoints.size(); ++i) {
        traj.handedness.push_back(chain.keypoints[i].hand);
        traj.semantic_id.push_back(chain.keypoints[i].semantic < 0 ? static_cast<int>(i)
                                                                   : chain.keypoints[i].semantic);
    }
    for (const auto& frame : projected)
        for (const auto& rec : frame) {
            traj.positions.push_back(rec.camera);
            traj.valid.push_back(rec.in_bounds ? 1 : 0);
        }
    write_trajectory(traj_path, traj);
    return kExitOk;
}

/// Forward kinematics only: JSONL {"frame", "keypoints": [[x,y,z], ...]}.
inline int cmd_fk(const std::string& chain_path, const std::string& configs_path,
                  const std::string& out_path) {
    const calib::KinematicChain chain = calib::read_chain(chain_path);
    const auto series = calib::read_joint_configs(configs_path);
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw std::runtime_error("fk: cannot open '" + out_path + "' for writing");
    for (std::size_t f = 0; f < series.size(); ++f) {
        const auto pts = calib::forward_kinematics(chain, series[f]);
        nlohmann::json rec;
        rec["frame"] = f;
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& p : pts) rows.push_back({p.x(), p.y(), p.z()});
        rec["keypoints"] = rows;
        os << rec.dump() << "\n";
    }
    if (!os.good()) throw std::runtime_error("fk: write to '" + out_path + "' failed");
    return kExitOk;
}

// ---- clip -------------------------------------------------------------------

inline JointTrajectory slice_trajectory(const JointTrajectory& traj, int start, int end) {
    JointTrajectory out;
    out.fps = traj.fps;
    out.intrinsics = traj.intrinsics;
    out.handedness = traj.handedness;
    out.semantic_id = traj.semantic_id;
    for (int f = start; f <= end; ++f)
        for (std::size_t i = 0; i < traj.joints(); ++i) {
            out.positions.push_back(traj.position(static_cast<std::size_t>(f), i));
            out.valid.push_back(traj.is_valid(static_cast<std::size_t>(f), i) ? 1 : 0);
        }
    return out;
}

/// Scores visibility, smooths it, and extracts the qualifying clip(s).
/// Writes a manifest always; writes sliced trajectories when slice_prefix
/// is non-empty. Returns the clean-negative code when nothing qualifies.
inline int cmd_clip(const std::string& traj_path, const PipelineConfig& cfg,
                    const std::string& manifest_path, const std::string& slice_prefix = "") {
    const JointTrajectory traj = read_trajectory(traj_path);
    const std::vector<int> raw = clip::visibility_score(traj);
    const std::vector<double> smoothed = clip::smooth_series(raw, cfg.clip.window);

    std::vector<clip::ClipIndex> clips;
    if (cfg.clip.multi) {
        clips = clip::select_clips_multi(raw, smoothed, cfg.clip.tiers);
    } else if (const auto one = clip::select_clip(raw, smoothed, cfg.clip.tiers)) {
        clips.push_back(*one);
    }

    nlohmann::json j;
    j["episode"] = traj_path;
    j["window"] = cfg.clip.window;
    j["tiers"] = cfg.clip.tiers;
    j["raw"] = raw;
    j["smoothed"] = smoothed;
    nlohmann::json clip_json = nlohmann::json::array();
    for (const auto& c : clips)
        clip_json.push_back({{"center", c.center},
                             {"start", c.start},
                             {"end", c.end},
                             {"tier", c.tier},
                             {"score", c.score}});
    j["clips"] = clip_json;
    detail::write_json_file(manifest_path, j);

    if (!slice_prefix.empty()) {
        for (std::size_t i = 0; i < clips.size(); ++i) {
            const std::string path = clips.size() == 1 && !cfg.clip.multi
                                         ? slice_prefix + ".jsonl"
                                         : slice_prefix + "_" + std::to_string(i) + ".jsonl";
            write_trajectory(path, slice_trajectory(traj, clips[i].start, clips[i].end));
        }
    }
    return clips.empty() ? kExitNegative : kExitOk;
}

// ---- metrics ----------------------------------------------------------------

inline std::vector<std::string> list_images(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext == ".png" || ext == ".ppm" || ext == ".pgm") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

struct MetricsInputs {
    std::string pred_traj;
    std::string ref_traj;
    std::string pred_vertices;  // optional trajectory-schema vertex streams
    std::string ref_vertices;
    std::string pred_images;  // optional image directories
    std::string ref_images;
};

/// Joint error (PA and unaligned), optional vertex error, optional image
/// quality; one JSON report with aggregates and per-frame series.
inline int cmd_metrics(const MetricsInputs& in, const PipelineConfig& cfg,
                       const std::string& out_path) {
    if (in.pred_vertices.empty() != in.ref_vertices.empty())
        throw std::runtime_error("metrics: vertex files must be given for both sides");
    if (in.pred_images.empty() != in.ref_images.empty())
        throw std::runtime_error("metrics: image directories must be given for both sides");

    nlohmann::json j;
    j["alignment"] = {{"scope", cfg.metrics.scope == metrics::AlignScope::PerFrame ? "frame"
                                                                                   : "sequence"}};
    {
        const JointTrajectory pred = read_trajectory(in.pred_traj);
        const JointTrajectory ref = read_trajectory(in.ref_traj);
        const metrics::TrajectoryMetric pa =
            metrics::trajectory_error(pred, ref, true, cfg.metrics.scope);
        const metrics::TrajectoryMetric plain =
            metrics::trajectory_error(pred, ref, false, cfg.metrics.scope);
        j["mpjpe"] = {{"pa_mm", pa.aggregate_mm},
                      {"unaligned_mm", plain.aggregate_mm},
                      {"per_frame_pa_mm", pa.per_frame_mm},
                      {"per_frame_points", pa.per_frame_points},
                      {"fallback_groups", pa.fallback_groups}};
    }
    if (!in.pred_vertices.empty()) {
        const JointTrajectory pred = read_trajectory(in.pred_vertices);
        const JointTrajectory ref = read_trajectory(in.ref_vertices);
        const metrics::TrajectoryMetric pa =
            metrics::trajectory_error(pred, ref, true, cfg.metrics.scope);
        const metrics::TrajectoryMetric plain =
            metrics::trajectory_error(pred, ref, false, cfg.metrics.scope);
        j["mpvpe"] = {{"pa_mm", pa.aggregate_mm},
                      {"unaligned_mm", plain.aggregate_mm},
                      {"per_frame_pa_mm", pa.per_frame_mm},
                      {"per_frame_points", pa.per_frame_points},
                      {"fallback_groups", pa.fallback_groups}};
    }
    if (!in.pred_images.empty()) {
        const std::vector<std::string> pred_files = list_images(in.pred_images);
        const std::vector<std::string> ref_files = list_images(in.ref_images);
        if (pred_files.size() != ref_files.size())
            throw std::runtime_error("metrics: image counts differ between directories");
        if (pred_files.empty()) throw std::runtime_error("metrics: image directories are empty");
        std::vector<double> psnr_series(pred_files.size()), ssim_series(pred_files.size());
        parallel_for(pred_files.size(), [&](std::size_t i) {
            const Tensor a = io::read_image(pred_files[i]);
            const Tensor b = io::read_image(ref_files[i]);
            psnr_series[i] = metrics::psnr(a, b);
            ssim_series[i] = metrics::ssim(a, b);
        });
        double psnr_mean = 0.0, ssim_mean = 0.0;
        for (std::size_t i = 0; i < pred_files.size(); ++i) {
            psnr_mean += psnr_series[i];
            ssim_mean += ssim_series[i];
        }
        psnr_mean /= static_cast<double>(pred_files.size());
        ssim_mean /= static_cast<double>(pred_files.size());
        j["psnr"] = {{"mean_db", psnr_mean}, {"per_frame_db", psnr_series}};
        j["ssim"] = {{"mean", ssim_mean}, {"per_frame", ssim_series}};
        j["image_count"] = pred_files.size();
    }
    // Embedding-based video metrics (FID/FVD) need pretrained networks and
    // are deliberately absent; the report says so instead of omitting them
    // silently.
    j["excluded"] = {"fid", "fvd"};
    detail::write_json_file(out_path, j);
    return kExitOk;
}

// ---- mask -------------------------------------------------------------------

/// Applies joint masking and writes the masked trajectory plus a manifest
/// listing which (frame, joint) validity entries were cleared.
inline int cmd_mask(const std::string& traj_path, const PipelineConfig& cfg,
                    const std::string& out_traj, const std::string& manifest_path) {
    const JointTrajectory traj = read_trajectory(traj_path);
    const JointTrajectory masked =
        embed::mask_joints(traj, cfg.mask.rate, cfg.mask.seed, cfg.mask.per_frame);
    write_trajectory(out_traj, masked);

    std::vector<int> masked_joints;
    long long cleared = 0;
    for (std::size_t i = 0; i < traj.joints(); ++i) {
        bool any = false;
        for (std::size_t f = 0; f < traj.frames(); ++f)
            if (traj.is_valid(f, i) && !masked.is_valid(f, i)) {
                any = true;
                ++cleared;
            }
        if (any) masked_joints.push_back(static_cast<int>(i));
    }
    nlohmann::json j;
    j["input"] = traj_path;
    j["rate"] = cfg.mask.rate;
    j["seed"] = cfg.mask.seed;
    j["per_frame"] = cfg.mask.per_frame;
    j["joints_touched"] = masked_joints;
    j["entries_cleared"] = cleared;
    detail::write_json_file(manifest_path, j);
    return kExitOk;
}

// ---- validate ---------------------------------------------------------------

/// Parses and validates any toolkit file, printing a one-line summary per
/// check. Unknown or malformed files throw (the CLI maps that to the
/// validation exit code).
inline int cmd_validate(const std::string& path, std::ostream& os) {
    const std::string ext = std::filesystem::path(path).extension().string();
    if (ext == io::kTensorExtension) {
        const TensorF t = io::read_tensor(path);
        os << "ok: tensor rank " << t.rank() << ", " << t.numel() << " elements\n";
        return kExitOk;
    }
    if (ext == ".jsonl") {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("validate: cannot open '" + path + "'");
        std::string first;
        if (!std::getline(is, first)) throw std::runtime_error("validate: empty file");
        const nlohmann::json head = nlohmann::json::parse(first);
        if (head.value("type", "") == "joint_trajectory") {
            const JointTrajectory t = read_trajectory(path);
            os << "ok: trajectory with " << t.frames() << " frames x " << t.joints() << " joints\n";
        } else if (head.contains("translation")) {
            const auto dets = read_detections(path);
            os << "ok: " << dets.size() << " detections\n";
        } else if (head.contains("q")) {
            const auto series = calib::read_joint_configs(path);
            os << "ok: " << series.size() << " joint-config frames\n";
        } else {
            throw std::runtime_error("validate: unrecognized JSONL content");
        }
        return kExitOk;
    }
    if (ext == ".json") {
        const nlohmann::json j = detail::read_json_file(path);
        if (j.contains("links")) {
            const calib::KinematicChain chain = calib::chain_from_json(j);
            os << "ok: chain with " << chain.links.size() << " links, " << chain.keypoints.size()
               << " keypoints, " << chain.dof() << " dof\n";
        } else if (j.contains("annotations")) {
            const auto anns = calib::annotations_from_json(j);
            os << "ok: " << anns.size() << " annotations\n";
        } else if (j.contains("fx")) {
            geom::CameraIntrinsics k;
            k.fx = j.at("fx").get<double>();
            k.fy = j.at("fy").get<double>();
            k.cx = j.at("cx").get<double>();
            k.cy = j.at("cy").get<double>();
            k.width = j.at("width").get<int>();
            k.height = j.at("height").get<int>();
            k.validate();
            os << "ok: intrinsics " << k.width << "x" << k.height << "\n";
        } else {
            const PipelineConfig cfg = PipelineConfig::from_json(j);
            cfg.validate();
            os << "ok: pipeline config\n";
        }
        return kExitOk;
    }
    throw std::runtime_error("validate: unsupported file type '" + ext + "'");
}

}  // namespace egoc::cli
