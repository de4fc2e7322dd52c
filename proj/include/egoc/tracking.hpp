// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egoc/geometry.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::track {

/// One hand observation in one frame, as produced by an upstream detector.
struct Detection {
    geom::Vec3 translation = geom::Vec3::Zero();
    Hand handedness = Hand::Left;
    std::vector<geom::Vec3> joints;  // empty, or exactly 21 positions
    bool has_params = false;
    int frame = 0;

    void validate() const {
        if (!translation.allFinite()) throw std::invalid_argument("detection: non-finite translation");
        if (!joints.empty() && joints.size() != 21)
            throw std::invalid_argument("detection: joints must have exactly 21 rows when present");
    }
};

struct SegmentRecord {
    int frame = 0;
    int detection = -1;  // caller-scoped detection id
};

/// One of the two persistent left/right track identities.
struct TrackSlot {
    Hand nominal_class = Hand::Left;
    std::optional<geom::Vec3> last_translation;
    std::optional<int> last_seen;
    std::vector<SegmentRecord> segments;
};

struct TrackerConfig {
    double lambda_hand = 0.05;  // handedness mismatch penalty, meters-equivalent
    double tau_swap = 0.02;     // hysteresis threshold, meters-equivalent
    int tau_gap = 10;           // frames without a match before history resets

    void validate() const {
        if (lambda_hand < 0.0 || tau_swap < 0.0 || tau_gap < 0)
            throw std::invalid_argument("tracker: config values must be nonnegative");
    }
};

/// C(i, j) = ‖T_i − T_j^last‖ + λ·[handedness mismatch], detections in
/// rows, slots in columns. A slot without history contributes no spatial
/// term: at track birth only the handedness prior discriminates.
inline Eigen::MatrixXd assignment_cost(const std::vector<Detection>& detections,
                                       const std::vector<TrackSlot>& slots,
                                       const TrackerConfig& cfg) {
    cfg.validate();
    Eigen::MatrixXd cost(static_cast<Eigen::Index>(detections.size()),
                         static_cast<Eigen::Index>(slots.size()));
    for (std::size_t i = 0; i < detections.size(); ++i) {
        for (std::size_t j = 0; j < slots.size(); ++j) {
            double c = 0.0;
            if (slots[j].last_translation)
                c = (detections[i].translation - *slots[j].last_translation).norm();
            if (detections[i].handedness != slots[j].nominal_class) c += cfg.lambda_hand;
            cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
        }
    }
    return cost;
}

/// Injective detection-to-slot matching; det_for_slot[j] is a detection row
/// or -1 for an unmatched slot.
struct Assignment {
    std::vector<int> det_for_slot;
    double total = 0.0;

    int matched() const {
        int m = 0;
        for (int d : det_for_slot) m += (d >= 0);
        return m;
    }
};

/// Exact matching for at most two slots: maximize the number of matched
/// slots, then minimize total cost, by direct enumeration. Ties keep the
/// first candidate in enumeration order (slot 0's detection index ascending,
/// then slot 1's), which makes results reproducible.
inline Assignment solve_assignment(const Eigen::MatrixXd& cost) {
    const int m = static_cast<int>(cost.rows());
    const int s = static_cast<int>(cost.cols());
    if (s > 2) throw std::invalid_argument("solve_assignment: more than two slots is unsupported");

    Assignment best;
    best.det_for_slot.assign(static_cast<std::size_t>(s), -1);
    if (s == 0) return best;

    int best_card = -1;
    double best_total = 0.0;
    auto consider = [&](int a, int b) {
        const int card = (a >= 0) + (b >= 0);
        double total = 0.0;
        if (a >= 0) total += cost(a, 0);
        if (b >= 0) total += cost(b, 1);
        if (card > best_card || (card == best_card && total < best_total)) {
            best_card = card;
            best_total = total;
            best.det_for_slot[0] = a;
            if (s == 2) best.det_for_slot[1] = b;
            best.total = total;
        }
    };
    if (s == 1) {
        consider(-1, -1);
        for (int a = 0; a < m; ++a) consider(a, -1);
    } else {
        for (int a = -1; a < m; ++a)
            for (int b = -1; b < m; ++b) {
                if (a >= 0 && a == b) continue;
                consider(a, b);
            }
    }
    return best;
}

struct UpdateDiagnostics {
    bool swap_candidate = false;  // optimal matching reversed the identity mapping
    bool swap_accepted = false;   // and cleared the hysteresis threshold
    int gap_resets = 0;
};

/// Advances both track slots by one frame.
///   1. Slots silent for more than tau_gap frames forget their position
///      history (segments persist) so a stale track cannot capture a new
///      hand.
///   2. Detections are matched to slots by minimum total cost.
///   3. Hysteresis: when both slots carry history and both receive a
///      detection, the matching that continues each slot from its nearer
///      predecessor (lower pure-spatial cost) is the identity-preserving
///      one; adopting the reversed matching requires a total-cost
///      improvement strictly greater than tau_swap.
///   4. Matched slots record the segment and refresh history.
/// `ids` optionally maps local detection rows to caller-scoped record ids.
inline UpdateDiagnostics update_tracks(std::vector<TrackSlot>& slots,
                                       const std::vector<Detection>& detections, int frame,
                                       const TrackerConfig& cfg, const std::vector<int>& ids = {}) {
    cfg.validate();
    for (const auto& d : detections) d.validate();
    if (!ids.empty() && ids.size() != detections.size())
        throw std::invalid_argument("update_tracks: ids must match detections");
    for (const auto& slot : slots)
        if (slot.last_seen && *slot.last_seen >= frame)
            throw std::invalid_argument("update_tracks: frame must increase monotonically");

    UpdateDiagnostics diag;
    for (auto& slot : slots) {
        if (slot.last_seen && frame - *slot.last_seen > cfg.tau_gap) {
            slot.last_translation.reset();
            slot.last_seen.reset();
            ++diag.gap_resets;
        }
    }

    const Eigen::MatrixXd cost = assignment_cost(detections, slots, cfg);
    Assignment chosen = solve_assignment(cost);

    if (slots.size() == 2 && slots[0].last_translation && slots[1].last_translation &&
        chosen.det_for_slot[0] >= 0 && chosen.det_for_slot[1] >= 0) {
        Assignment exchanged = chosen;
        std::swap(exchanged.det_for_slot[0], exchanged.det_for_slot[1]);
        exchanged.total = cost(exchanged.det_for_slot[0], 0) + cost(exchanged.det_for_slot[1], 1);

        auto spatial = [&](const Assignment& a) {
            return (detections[static_cast<std::size_t>(a.det_for_slot[0])].translation -
                    *slots[0].last_translation)
                       .norm() +
                   (detections[static_cast<std::size_t>(a.det_for_slot[1])].translation -
                    *slots[1].last_translation)
                       .norm();
        };
        // The optimum counts as a swap when pure spatial continuity prefers
        // the exchanged pairing.
        if (spatial(exchanged) < spatial(chosen)) {
            diag.swap_candidate = true;
            const double improvement = exchanged.total - chosen.total;
            if (improvement > cfg.tau_swap) {
                diag.swap_accepted = true;
            } else {
                chosen = exchanged;
            }
        }
    }

    for (std::size_t j = 0; j < slots.size(); ++j) {
        const int det = chosen.det_for_slot[j];
        if (det < 0) continue;
        const int record = ids.empty() ? det : ids[static_cast<std::size_t>(det)];
        slots[j].segments.push_back({frame, record});
        slots[j].last_translation = detections[static_cast<std::size_t>(det)].translation;
        slots[j].last_seen = frame;
    }
    return diag;
}

struct VideoStats {
    long long frames_total = 0;
    long long frames_with_valid_hand = 0;
    long long frames_with_valid_params = 0;
    long long frames_with_more_than_two_hands = 0;
};

struct FilterVerdict {
    bool keep = true;
    std::vector<std::string> reasons;  // every violated rule, in fixed order
};

/// Discards low-quality videos. All three thresholds are strict (a ratio
/// exactly at the limit passes), so the comparisons run on cross-multiplied
/// integers rather than floating-point ratios. An empty video trivially
/// lacks hand presence and parameter density.
inline FilterVerdict quality_filter(const VideoStats& s) {
    if (s.frames_with_valid_hand > s.frames_total || s.frames_with_valid_params > s.frames_total ||
        s.frames_with_more_than_two_hands > s.frames_total)
        throw std::invalid_argument("quality_filter: counts exceed frames_total");
    if (s.frames_total < 0) throw std::invalid_argument("quality_filter: negative frame count");

    FilterVerdict v;
    if (s.frames_total == 0) {
        v.keep = false;
        v.reasons = {"hand-presence", "params-density"};
        return v;
    }
    if (5 * s.frames_with_valid_hand < s.frames_total) v.reasons.emplace_back("hand-presence");
    if (20 * s.frames_with_valid_params < s.frames_total) v.reasons.emplace_back("params-density");
    if (4 * s.frames_with_more_than_two_hands > s.frames_total) v.reasons.emplace_back("excess-hands");
    v.keep = v.reasons.empty();
    return v;
}

/// Frame-level statistics over a detection stream. A frame counts toward
/// hand presence when at least one detection lands in it, toward parameter
/// density when one of them carries a valid reconstruction.
inline VideoStats collect_stats(const std::vector<Detection>& detections, long long frames_total) {
    std::map<int, std::pair<int, bool>> per_frame;  // frame -> {count, any has_params}
    for (const auto& d : detections) {
        auto& entry = per_frame[d.frame];
        entry.first += 1;
        entry.second = entry.second || d.has_params;
    }
    VideoStats s;
    s.frames_total = frames_total;
    for (const auto& [frame, entry] : per_frame) {
        (void)frame;
        s.frames_with_valid_hand += 1;
        if (entry.second) s.frames_with_valid_params += 1;
        if (entry.first > 2) s.frames_with_more_than_two_hands += 1;
    }
    return s;
}

/// Reflects a right hand into left-hand convention: x negated, y and z kept.
inline std::vector<geom::Vec3> mirror_right_hand(const std::vector<geom::Vec3>& joints) {
    std::vector<geom::Vec3> out = joints;
    for (auto& p : out) p.x() = -p.x();
    return out;
}

}  // namespace egoc::track
