// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "egoc/calibration.hpp"
#include "egoc/geometry.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::clip {

/// Clips span the anchor frame plus 60 frames on either side.
inline constexpr int kHalfWindow = 60;
inline constexpr int kWindowLength = 2 * kHalfWindow + 1;

/// Visibility tiers tried in order: the strict threshold first, then the
/// fallbacks.
inline const std::vector<int> kDefaultTiers{8, 4, 2, 0};

/// Per-frame count of keypoints whose projection landed inside the image.
inline std::vector<int> visibility_score(
    const std::vector<std::vector<calib::ProjectedPoint>>& frames) {
    std::vector<int> raw;
    raw.reserve(frames.size());
    for (const auto& frame : frames) {
        int count = 0;
        for (const auto& p : frame) count += p.in_bounds;
        raw.push_back(count);
    }
    return raw;
}

/// Same count computed from a trajectory: a joint is visible when it is
/// valid and projects inside the image bounds.
inline std::vector<int> visibility_score(const JointTrajectory& traj) {
    std::vector<int> raw;
    raw.reserve(traj.frames());
    for (std::size_t f = 0; f < traj.frames(); ++f) {
        int count = 0;
        for (std::size_t i = 0; i < traj.joints(); ++i) {
            if (!traj.is_valid(f, i)) continue;
            const geom::ProjectedJoint p = geom::project(traj.position(f, i), traj.intrinsics);
            count += (p.valid && geom::in_image(p.u, traj.intrinsics));
        }
        raw.push_back(count);
    }
    return raw;
}

/// Centered moving average. Windows are truncated at the series edges and
/// normalized by the number of frames actually inside.
inline std::vector<double> smooth_series(const std::vector<int>& raw, int window = 5) {
    if (window < 1 || window % 2 == 0)
        throw std::invalid_argument("smooth_series: window must be odd and >= 1");
    const int n = static_cast<int>(raw.size());
    const int half = window / 2;
    std::vector<double> out(raw.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - half);
        const int hi = std::min(n - 1, i + half);
        double sum = 0.0;
        for (int k = lo; k <= hi; ++k) sum += raw[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = sum / (hi - lo + 1);
    }
    return out;
}

/// A qualified 121-frame window.
struct ClipIndex {
    int center = 0;
    int start = 0;  // center − 60
    int end = 0;    // center + 60
    int tier = 0;   // threshold that admitted the anchor
    double score = 0.0;  // smoothed visibility at the anchor
};

namespace detail {

inline std::optional<ClipIndex> select_with_exclusion(const std::vector<int>& raw,
                                                      const std::vector<double>& smoothed,
                                                      const std::vector<int>& tiers,
                                                      const std::vector<char>& excluded) {
    const int n = static_cast<int>(raw.size());
    if (n < kWindowLength) return std::nullopt;
    for (int tier : tiers) {
        int best = -1;
        for (int c = kHalfWindow; c + kHalfWindow < n; ++c) {
            if (!excluded.empty() && excluded[static_cast<std::size_t>(c)]) continue;
            if (raw[static_cast<std::size_t>(c)] < tier) continue;
            // Strictly-greater comparison keeps the earliest center on ties.
            if (best < 0 || smoothed[static_cast<std::size_t>(c)] > smoothed[static_cast<std::size_t>(best)])
                best = c;
        }
        if (best >= 0) {
            return ClipIndex{best, best - kHalfWindow, best + kHalfWindow, tier,
                             smoothed[static_cast<std::size_t>(best)]};
        }
    }
    return std::nullopt;
}

inline void check_inputs(const std::vector<int>& raw, const std::vector<double>& smoothed,
                         const std::vector<int>& tiers) {
    if (raw.size() != smoothed.size())
        throw std::invalid_argument("select_clip: raw and smoothed lengths differ");
    if (tiers.empty()) throw std::invalid_argument("select_clip: no thresholds");
    for (std::size_t i = 1; i < tiers.size(); ++i)
        if (tiers[i] >= tiers[i - 1])
            throw std::invalid_argument("select_clip: thresholds must be strictly decreasing");
}

}  // namespace detail

/// Picks the clip anchor: the first tier (in order) with any frame whose
/// raw count meets it and whose full window fits, anchored at the maximum
/// smoothed visibility (earliest index on ties). Series shorter than 121
/// frames yield nothing.
inline std::optional<ClipIndex> select_clip(const std::vector<int>& raw,
                                            const std::vector<double>& smoothed,
                                            const std::vector<int>& tiers = kDefaultTiers) {
    detail::check_inputs(raw, smoothed, tiers);
    return detail::select_with_exclusion(raw, smoothed, tiers, {});
}

/// Repeats the cascade, excluding anchors whose window would overlap an
/// already-selected clip, until nothing qualifies. Clips are returned in
/// selection order.
inline std::vector<ClipIndex> select_clips_multi(const std::vector<int>& raw,
                                                 const std::vector<double>& smoothed,
                                                 const std::vector<int>& tiers = kDefaultTiers) {
    detail::check_inputs(raw, smoothed, tiers);
    std::vector<ClipIndex> out;
    std::vector<char> excluded(raw.size(), 0);
    while (true) {
        const auto pick = detail::select_with_exclusion(raw, smoothed, tiers, excluded);
        if (!pick) break;
        out.push_back(*pick);
        for (int c = 0; c < static_cast<int>(raw.size()); ++c)
            if (c - kHalfWindow <= pick->end && c + kHalfWindow >= pick->start)
                excluded[static_cast<std::size_t>(c)] = 1;
    }
    return out;
}

}  // namespace egoc::clip
