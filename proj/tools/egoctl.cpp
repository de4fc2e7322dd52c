// SPDX-License-Identifier: Apache-2.0
//
// egoctl — command-line front end for the hand-conditioning toolkit.
// Every subcommand is a pure function of its input files, the config, and
// the seeds it reports, so reruns reproduce outputs byte for byte.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "egoc/pipeline.hpp"

namespace {

struct Cli {
    std::string config_path;

    // track
    std::string track_detections, track_out;
    long long track_frames_total = 0;
    double track_lambda_hand = 0.0, track_tau_swap = 0.0;
    int track_tau_gap = 0;

    // condition
    std::string cond_traj, cond_latent, cond_out_dir;
    double cond_sigma = 0.0, cond_scale = 0.0, cond_tau = 0.0, cond_gamma = 0.0,
           cond_lambda = 0.0, cond_epsilon = 0.0;
    std::uint64_t cond_seed_identity = 0, cond_seed_mlp = 0, cond_seed_head = 0;

    // calibrate
    std::string cal_chain, cal_intrinsics, cal_report, cal_traj;
    std::vector<std::string> cal_configs, cal_annotations;
    double cal_fps = 30.0;

    // fk
    std::string fk_chain, fk_configs, fk_out;

    // clip
    std::string clip_traj, clip_manifest, clip_slices;
    int clip_window = 0;
    bool clip_multi = false;
    std::vector<int> clip_tiers;

    // metrics
    egoc::cli::MetricsInputs met;
    std::string met_out, met_scope;

    // mask
    std::string mask_traj, mask_out, mask_manifest;
    double mask_rate = -1.0;
    std::uint64_t mask_seed = 0;
    bool mask_per_frame = false;

    // validate
    std::vector<std::string> validate_paths;
};

egoc::PipelineConfig load_config(const std::string& path) {
    return path.empty() ? egoc::PipelineConfig{} : egoc::PipelineConfig::load(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"egoctl: occlusion-aware conditioning tensors from sparse 3D hand joints"};
    app.require_subcommand(1);
    Cli o;
    app.add_option("--config", o.config_path, "pipeline config JSON (defaults apply when omitted)");

    auto* track = app.add_subcommand("track", "resolve per-frame hand detections into left/right tracks");
    track->add_option("detections", o.track_detections, "detections JSONL")->required();
    track->add_option("-o,--out", o.track_out, "track file to write")->required();
    track->add_option("--frames-total", o.track_frames_total,
                      "episode length override (default: max frame + 1)");
    auto* opt_lh = track->add_option("--lambda-hand", o.track_lambda_hand, "handedness penalty");
    auto* opt_ts = track->add_option("--tau-swap", o.track_tau_swap, "swap hysteresis threshold");
    auto* opt_tg = track->add_option("--tau-gap", o.track_tau_gap, "gap reset length (frames)");

    auto* condition = app.add_subcommand("condition", "build y, F_motion, F_geo, C_geo from a trajectory");
    condition->add_option("trajectory", o.cond_traj, "trajectory JSONL")->required();
    condition->add_option("latent", o.cond_latent, "source latent tensor (.egoc)")->required();
    condition->add_option("-o,--out-dir", o.cond_out_dir, "output directory")->required();
    auto* opt_sigma = condition->add_option("--sigma", o.cond_sigma, "heatmap bandwidth (cells)");
    auto* opt_scale = condition->add_option("--scale", o.cond_scale, "pixels per grid cell");
    auto* opt_tau = condition->add_option("--tau", o.cond_tau, "occlusion overlap bandwidth");
    auto* opt_gamma = condition->add_option("--gamma", o.cond_gamma, "depth-ordering sharpness");
    auto* opt_dl = condition->add_option("--depth-lambda", o.cond_lambda, "depth prioritization scale");
    auto* opt_eps = condition->add_option("--epsilon", o.cond_epsilon, "numerical floor");
    auto* opt_si = condition->add_option("--seed-identity", o.cond_seed_identity, "identity table seed");
    auto* opt_sm = condition->add_option("--seed-mlp", o.cond_seed_mlp, "projector seed");
    auto* opt_sh = condition->add_option("--seed-head", o.cond_seed_head, "conv head seed");

    auto* calibrate = app.add_subcommand("calibrate", "solve the 6-DoF mount and project robot keypoints");
    calibrate->add_option("--chain", o.cal_chain, "kinematic chain JSON")->required();
    calibrate->add_option("--configs", o.cal_configs, "joint-config JSONL (repeat per episode)")
        ->required();
    calibrate->add_option("--annotations", o.cal_annotations, "annotation JSON (repeat per episode)")
        ->required();
    calibrate->add_option("--intrinsics", o.cal_intrinsics, "camera intrinsics JSON")->required();
    calibrate->add_option("--fps", o.cal_fps, "frame rate for the projected trajectory");
    calibrate->add_option("--report", o.cal_report, "calibration report JSON to write")->required();
    calibrate->add_option("--traj", o.cal_traj, "projected trajectory JSONL to write")->required();

    auto* fk = app.add_subcommand("fk", "forward kinematics for a joint-config series");
    fk->add_option("chain", o.fk_chain, "kinematic chain JSON")->required();
    fk->add_option("configs", o.fk_configs, "joint-config JSONL")->required();
    fk->add_option("-o,--out", o.fk_out, "keypoints JSONL to write")->required();

    auto* clip = app.add_subcommand("clip", "extract 121-frame visibility-anchored clips");
    clip->add_option("trajectory", o.clip_traj, "projected trajectory JSONL")->required();
    clip->add_option("-o,--manifest", o.clip_manifest, "clip manifest JSON to write")->required();
    clip->add_option("--slices", o.clip_slices, "prefix for sliced trajectory output");
    auto* opt_win = clip->add_option("--window", o.clip_window, "smoothing window (odd)");
    auto* opt_tiers = clip->add_option("--tiers", o.clip_tiers, "visibility thresholds, decreasing");
    auto* opt_multi = clip->add_flag("--multi", o.clip_multi, "extract non-overlapping repeats");

    auto* metrics = app.add_subcommand("metrics", "MPJPE/MPVPE/PSNR/SSIM report");
    metrics->add_option("--pred", o.met.pred_traj, "predicted trajectory JSONL")->required();
    metrics->add_option("--ref", o.met.ref_traj, "reference trajectory JSONL")->required();
    metrics->add_option("--pred-vertices", o.met.pred_vertices, "predicted vertex streams");
    metrics->add_option("--ref-vertices", o.met.ref_vertices, "reference vertex streams");
    metrics->add_option("--pred-images", o.met.pred_images, "predicted frame directory");
    metrics->add_option("--ref-images", o.met.ref_images, "reference frame directory");
    metrics->add_option("-o,--out", o.met_out, "report JSON to write")->required();
    auto* opt_scope = metrics->add_option("--scope", o.met_scope, "alignment scope: frame|sequence");

    auto* mask = app.add_subcommand("mask", "randomly zero joints for conditioning robustness");
    mask->add_option("trajectory", o.mask_traj, "trajectory JSONL")->required();
    mask->add_option("-o,--out", o.mask_out, "masked trajectory to write")->required();
    mask->add_option("--manifest", o.mask_manifest, "mask manifest JSON to write")->required();
    auto* opt_rate = mask->add_option("--rate", o.mask_rate, "masking probability per joint");
    auto* opt_seed = mask->add_option("--seed", o.mask_seed, "RNG seed");
    auto* opt_pf = mask->add_flag("--per-frame", o.mask_per_frame, "draw per frame instead of per joint");

    auto* validate = app.add_subcommand("validate", "parse and validate toolkit files");
    validate->add_option("files", o.validate_paths, "files to check")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return egoc::cli::kExitValidation;
    }

    try {
        egoc::PipelineConfig cfg = load_config(o.config_path);

        if (track->parsed()) {
            if (opt_lh->count()) cfg.tracker.lambda_hand = o.track_lambda_hand;
            if (opt_ts->count()) cfg.tracker.tau_swap = o.track_tau_swap;
            if (opt_tg->count()) cfg.tracker.tau_gap = o.track_tau_gap;
            cfg.validate();
            return egoc::cli::cmd_track(o.track_detections, cfg, o.track_out, o.track_frames_total);
        }
        if (condition->parsed()) {
            if (opt_sigma->count()) {
                cfg.sigma = o.cond_sigma;
                if (!opt_tau->count()) cfg.occlusion.tau = o.cond_sigma;
            }
            if (opt_scale->count()) cfg.grid.scale = o.cond_scale;
            if (opt_tau->count()) cfg.occlusion.tau = o.cond_tau;
            if (opt_gamma->count()) cfg.occlusion.gamma = o.cond_gamma;
            if (opt_dl->count()) cfg.occlusion.lambda = o.cond_lambda;
            if (opt_eps->count()) cfg.occlusion.epsilon = o.cond_epsilon;
            if (opt_si->count()) cfg.encoding.seed_identity = o.cond_seed_identity;
            if (opt_sm->count()) cfg.encoding.seed_mlp = o.cond_seed_mlp;
            if (opt_sh->count()) cfg.encoding.seed_head = o.cond_seed_head;
            cfg.validate();
            return egoc::cli::cmd_condition(o.cond_traj, o.cond_latent, cfg, o.cond_out_dir);
        }
        if (calibrate->parsed()) {
            if (o.cal_configs.size() != o.cal_annotations.size())
                throw std::runtime_error("calibrate: --configs and --annotations counts differ");
            std::vector<egoc::cli::CalibrateEpisode> episodes;
            for (std::size_t i = 0; i < o.cal_configs.size(); ++i)
                episodes.push_back({o.cal_configs[i], o.cal_annotations[i]});
            return egoc::cli::cmd_calibrate(o.cal_chain, episodes, o.cal_intrinsics, o.cal_fps,
                                            o.cal_report, o.cal_traj);
        }
        if (fk->parsed()) return egoc::cli::cmd_fk(o.fk_chain, o.fk_configs, o.fk_out);
        if (clip->parsed()) {
            if (opt_win->count()) cfg.clip.window = o.clip_window;
            if (opt_tiers->count()) cfg.clip.tiers = o.clip_tiers;
            if (opt_multi->count()) cfg.clip.multi = o.clip_multi;
            cfg.validate();
            return egoc::cli::cmd_clip(o.clip_traj, cfg, o.clip_manifest, o.clip_slices);
        }
        if (metrics->parsed()) {
            if (opt_scope->count()) {
                if (o.met_scope == "frame") cfg.metrics.scope = egoc::metrics::AlignScope::PerFrame;
                else if (o.met_scope == "sequence")
                    cfg.metrics.scope = egoc::metrics::AlignScope::Sequence;
                else throw std::runtime_error("metrics: scope must be 'frame' or 'sequence'");
            }
            return egoc::cli::cmd_metrics(o.met, cfg, o.met_out);
        }
        if (mask->parsed()) {
            if (opt_rate->count()) cfg.mask.rate = o.mask_rate;
            if (opt_seed->count()) cfg.mask.seed = o.mask_seed;
            if (opt_pf->count()) cfg.mask.per_frame = o.mask_per_frame;
            cfg.validate();
            return egoc::cli::cmd_mask(o.mask_traj, cfg, o.mask_out, o.mask_manifest);
        }
        if (validate->parsed()) {
            for (const std::string& path : o.validate_paths) {
                std::cout << path << ": ";
                egoc::cli::cmd_validate(path, std::cout);
            }
            return egoc::cli::kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return egoc::cli::kExitValidation;
    }
    return egoc::cli::kExitOk;
}
