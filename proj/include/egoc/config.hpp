// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egoc/conditioning.hpp"
#include "egoc/geoembed.hpp"
#include "egoc/geometry.hpp"
#include "egoc/metrics.hpp"
#include "egoc/tracking.hpp"

namespace egoc {

namespace detail {

/// Config files are rejected outright on unknown keys: a typo silently
/// falling back to a default is worse than a hard error.
inline void check_keys(const nlohmann::json& j, const std::string& section,
                       std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::runtime_error("config: section '" + section + "' must be an object");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) {
                known = true;
                break;
            }
        if (!known)
            throw std::runtime_error("config: unknown key '" + item.key() + "' in section '" +
                                     section + "'");
    }
}

}  // namespace detail

/// Dimensions, seeds, and shapes of the geometric-embedding stream.
struct EncodingConfig {
    embed::EncodingSpec spec;
    int d_id = 16;
    int d_geo = 32;
    int hidden = 64;
    int kt = 3;
    int kh = 3;
    int kw = 3;
    int c_out = 16;
    int n_max = static_cast<int>(kMaxJoints);
    std::uint64_t seed_identity = 1;
    std::uint64_t seed_mlp = 2;
    std::uint64_t seed_head = 3;

    void validate() const {
        spec.validate();
        if (d_id < 1 || d_geo < 1 || hidden < 1 || c_out < 1)
            throw std::runtime_error("config: encoding dimensions must be >= 1");
        if (kt < 1 || kh < 1 || kw < 1) throw std::runtime_error("config: kernel dims must be >= 1");
        if (n_max < 1) throw std::runtime_error("config: n_max must be >= 1");
    }
};

struct ClipConfig {
    int window = 5;
    std::vector<int> tiers{8, 4, 2, 0};
    bool multi = false;

    void validate() const {
        if (window < 1 || window % 2 == 0)
            throw std::runtime_error("config: clip window must be odd and >= 1");
        if (tiers.empty()) throw std::runtime_error("config: clip tiers must be non-empty");
        for (std::size_t i = 1; i < tiers.size(); ++i)
            if (tiers[i] >= tiers[i - 1])
                throw std::runtime_error("config: clip tiers must be strictly decreasing");
    }
};

struct MetricsConfig {
    bool align = true;
    metrics::AlignScope scope = metrics::AlignScope::PerFrame;
};

struct MaskConfig {
    double rate = 0.05;
    std::uint64_t seed = 4;
    bool per_frame = false;

    void validate() const {
        if (!(rate >= 0.0 && rate <= 1.0)) throw std::runtime_error("config: mask rate must be in [0, 1]");
    }
};

/// Every tunable in one place. All sections optional in the file; the
/// occlusion bandwidth tau falls back to the heatmap sigma when not given
/// explicitly.
struct PipelineConfig {
    geom::GridSpec grid;
    double sigma = 1.5;  // heatmap bandwidth, grid cells
    cond::OcclusionParams occlusion;
    EncodingConfig encoding;
    track::TrackerConfig tracker;
    ClipConfig clip;
    MetricsConfig metrics;
    MaskConfig mask;

    void validate() const {
        grid.validate();
        if (!(sigma > 0.0)) throw std::runtime_error("config: sigma must be positive");
        occlusion.validate();
        encoding.validate();
        tracker.validate();
        clip.validate();
        mask.validate();
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["grid"] = {{"gh", grid.gh}, {"gw", grid.gw}, {"scale", grid.scale}};
        j["heatmap"] = {{"sigma", sigma}};
        j["occlusion"] = {{"tau", occlusion.tau},
                          {"gamma", occlusion.gamma},
                          {"lambda", occlusion.lambda},
                          {"epsilon", occlusion.epsilon}};
        j["encoding"] = {{"bands", encoding.spec.bands},
                         {"base_freq", encoding.spec.base_freq},
                         {"d_id", encoding.d_id},
                         {"d_geo", encoding.d_geo},
                         {"hidden", encoding.hidden},
                         {"kernel", {encoding.kt, encoding.kh, encoding.kw}},
                         {"c_out", encoding.c_out},
                         {"n_max", encoding.n_max},
                         {"seeds",
                          {{"identity", encoding.seed_identity},
                           {"mlp", encoding.seed_mlp},
                           {"head", encoding.seed_head}}}};
        j["tracker"] = {{"lambda_hand", tracker.lambda_hand},
                        {"tau_swap", tracker.tau_swap},
                        {"tau_gap", tracker.tau_gap}};
        j["clip"] = {{"window", clip.window}, {"tiers", clip.tiers}, {"multi", clip.multi}};
        j["metrics"] = {{"align", metrics.align},
                        {"scope", metrics.scope == egoc::metrics::AlignScope::PerFrame
                                      ? "frame"
                                      : "sequence"}};
        j["mask"] = {{"rate", mask.rate}, {"seed", mask.seed}, {"per_frame", mask.per_frame}};
        return j;
    }

    static PipelineConfig from_json(const nlohmann::json& j) {
        PipelineConfig cfg;
        detail::check_keys(j, "(root)",
                           {"grid", "heatmap", "occlusion", "encoding", "tracker", "clip",
                            "metrics", "mask"});
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            detail::check_keys(g, "grid", {"gh", "gw", "scale"});
            cfg.grid.gh = g.value("gh", cfg.grid.gh);
            cfg.grid.gw = g.value("gw", cfg.grid.gw);
            cfg.grid.scale = g.value("scale", cfg.grid.scale);
        }
        if (j.contains("heatmap")) {
            const auto& h = j.at("heatmap");
            detail::check_keys(h, "heatmap", {"sigma"});
            cfg.sigma = h.value("sigma", cfg.sigma);
        }
        cfg.occlusion.tau = cfg.sigma;  // bandwidths match unless overridden
        if (j.contains("occlusion")) {
            const auto& o = j.at("occlusion");
            detail::check_keys(o, "occlusion", {"tau", "gamma", "lambda", "epsilon"});
            cfg.occlusion.tau = o.value("tau", cfg.occlusion.tau);
            cfg.occlusion.gamma = o.value("gamma", cfg.occlusion.gamma);
            cfg.occlusion.lambda = o.value("lambda", cfg.occlusion.lambda);
            cfg.occlusion.epsilon = o.value("epsilon", cfg.occlusion.epsilon);
        }
        if (j.contains("encoding")) {
            const auto& e = j.at("encoding");
            detail::check_keys(e, "encoding",
                               {"bands", "base_freq", "d_id", "d_geo", "hidden", "kernel", "c_out",
                                "n_max", "seeds"});
            cfg.encoding.spec.bands = e.value("bands", cfg.encoding.spec.bands);
            cfg.encoding.spec.base_freq = e.value("base_freq", cfg.encoding.spec.base_freq);
            cfg.encoding.d_id = e.value("d_id", cfg.encoding.d_id);
            cfg.encoding.d_geo = e.value("d_geo", cfg.encoding.d_geo);
            cfg.encoding.hidden = e.value("hidden", cfg.encoding.hidden);
            if (e.contains("kernel")) {
                const auto k = e.at("kernel").get<std::vector<int>>();
                if (k.size() != 3) throw std::runtime_error("config: kernel must be [kt, kh, kw]");
                cfg.encoding.kt = k[0];
                cfg.encoding.kh = k[1];
                cfg.encoding.kw = k[2];
            }
            cfg.encoding.c_out = e.value("c_out", cfg.encoding.c_out);
            cfg.encoding.n_max = e.value("n_max", cfg.encoding.n_max);
            if (e.contains("seeds")) {
                const auto& s = e.at("seeds");
                detail::check_keys(s, "encoding.seeds", {"identity", "mlp", "head"});
                cfg.encoding.seed_identity = s.value("identity", cfg.encoding.seed_identity);
                cfg.encoding.seed_mlp = s.value("mlp", cfg.encoding.seed_mlp);
                cfg.encoding.seed_head = s.value("head", cfg.encoding.seed_head);
            }
        }
        if (j.contains("tracker")) {
            const auto& t = j.at("tracker");
            detail::check_keys(t, "tracker", {"lambda_hand", "tau_swap", "tau_gap"});
            cfg.tracker.lambda_hand = t.value("lambda_hand", cfg.tracker.lambda_hand);
            cfg.tracker.tau_swap = t.value("tau_swap", cfg.tracker.tau_swap);
            cfg.tracker.tau_gap = t.value("tau_gap", cfg.tracker.tau_gap);
        }
        if (j.contains("clip")) {
            const auto& c = j.at("clip");
            detail::check_keys(c, "clip", {"window", "tiers", "multi"});
            cfg.clip.window = c.value("window", cfg.clip.window);
            if (c.contains("tiers")) cfg.clip.tiers = c.at("tiers").get<std::vector<int>>();
            cfg.clip.multi = c.value("multi", cfg.clip.multi);
        }
        if (j.contains("metrics")) {
            const auto& m = j.at("metrics");
            detail::check_keys(m, "metrics", {"align", "scope"});
            cfg.metrics.align = m.value("align", cfg.metrics.align);
            const std::string scope = m.value("scope", std::string("frame"));
            if (scope == "frame") cfg.metrics.scope = egoc::metrics::AlignScope::PerFrame;
            else if (scope == "sequence") cfg.metrics.scope = egoc::metrics::AlignScope::Sequence;
            else throw std::runtime_error("config: metrics scope must be 'frame' or 'sequence'");
        }
        if (j.contains("mask")) {
            const auto& m = j.at("mask");
            detail::check_keys(m, "mask", {"rate", "seed", "per_frame"});
            cfg.mask.rate = m.value("rate", cfg.mask.rate);
            cfg.mask.seed = m.value("seed", cfg.mask.seed);
            cfg.mask.per_frame = m.value("per_frame", cfg.mask.per_frame);
        }
        cfg.validate();
        return cfg;
    }

    static PipelineConfig load(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("config: cannot open '" + path + "'");
        nlohmann::json j;
        is >> j;
        return from_json(j);
    }
};

}  // namespace egoc
