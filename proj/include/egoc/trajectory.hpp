// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "egoc/geometry.hpp"

namespace egoc {

enum class Hand { Left, Right };

inline const char* to_string(Hand h) { return h == Hand::Left ? "left" : "right"; }

inline Hand hand_from_string(const std::string& s) {
    if (s == "left") return Hand::Left;
    if (s == "right") return Hand::Right;
    throw std::runtime_error("trajectory: unknown handedness '" + s + "'");
}

/// Maximum joint count a trajectory may carry (two hands of 21 joints).
inline constexpr std::size_t kMaxJoints = 42;

/// Per-frame, per-joint 3D positions in the camera frame with a validity
/// mask. The universal control signal every pipeline stage consumes.
/// Storage is row-major over (frame, joint).
struct JointTrajectory {
    double fps = 30.0;
    geom::CameraIntrinsics intrinsics;
    std::vector<Hand> handedness;   // per joint
    std::vector<int> semantic_id;   // per joint; unique within a handedness
    std::vector<geom::Vec3> positions;  // frames*joints entries
    std::vector<char> valid;            // frames*joints entries

    std::size_t joints() const { return handedness.size(); }
    std::size_t frames() const { return joints() == 0 ? 0 : positions.size() / joints(); }

    const geom::Vec3& position(std::size_t frame, std::size_t joint) const {
        return positions[frame * joints() + joint];
    }
    geom::Vec3& position(std::size_t frame, std::size_t joint) {
        return positions[frame * joints() + joint];
    }
    bool is_valid(std::size_t frame, std::size_t joint) const {
        return valid[frame * joints() + joint] != 0;
    }
    void set_valid(std::size_t frame, std::size_t joint, bool v) {
        valid[frame * joints() + joint] = v ? 1 : 0;
    }

    void validate() const {
        const std::size_t n = joints();
        if (n < 1) throw std::runtime_error("trajectory: needs at least one joint");
        if (n > kMaxJoints) throw std::runtime_error("trajectory: joint count exceeds 42");
        if (semantic_id.size() != n)
            throw std::runtime_error("trajectory: semantic_id length does not match joint count");
        if (!(fps > 0.0)) throw std::runtime_error("trajectory: fps must be positive");
        intrinsics.validate();
        std::set<std::pair<int, int>> seen;
        for (std::size_t i = 0; i < n; ++i)
            if (!seen.insert({handedness[i] == Hand::Left ? 0 : 1, semantic_id[i]}).second)
                throw std::runtime_error("trajectory: duplicate (handedness, semantic_id) pair");
        if (positions.size() != valid.size() || positions.size() % n != 0)
            throw std::runtime_error("trajectory: positions/valid arrays inconsistent with joint count");
        if (frames() < 1) throw std::runtime_error("trajectory: needs at least one frame");
        for (const auto& p : positions)
            if (!p.allFinite()) throw std::runtime_error("trajectory: non-finite position");
    }
};

namespace detail {

inline nlohmann::json intrinsics_to_json(const geom::CameraIntrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy},
            {"width", k.width}, {"height", k.height}};
}

inline geom::CameraIntrinsics intrinsics_from_json(const nlohmann::json& j) {
    geom::CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    return k;
}

}  // namespace detail

/// JSON Lines: one header record, then one record per frame in order.
inline void write_trajectory(std::ostream& os, const JointTrajectory& traj) {
    traj.validate();
    nlohmann::json header;
    header["type"] = "joint_trajectory";
    header["version"] = 1;
    header["fps"] = traj.fps;
    header["joints"] = traj.joints();
    header["intrinsics"] = detail::intrinsics_to_json(traj.intrinsics);
    nlohmann::json hands = nlohmann::json::array();
    for (Hand h : traj.handedness) hands.push_back(to_string(h));
    header["handedness"] = hands;
    header["semantic_id"] = traj.semantic_id;
    os << header.dump() << "\n";

    const std::size_t n = traj.joints();
    for (std::size_t f = 0; f < traj.frames(); ++f) {
        nlohmann::json rec;
        rec["frame"] = f;
        nlohmann::json pos = nlohmann::json::array();
        nlohmann::json val = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            const geom::Vec3& p = traj.position(f, i);
            pos.push_back({p.x(), p.y(), p.z()});
            val.push_back(traj.is_valid(f, i));
        }
        rec["positions"] = pos;
        rec["valid"] = val;
        os << rec.dump() << "\n";
    }
}

inline void write_trajectory(const std::string& path, const JointTrajectory& traj) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("trajectory: cannot open '" + path + "' for writing");
    write_trajectory(os, traj);
    if (!os.good()) throw std::runtime_error("trajectory: write to '" + path + "' failed");
}

inline JointTrajectory read_trajectory(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("trajectory: empty input");
    nlohmann::json header = nlohmann::json::parse(line);
    if (header.value("type", "") != std::string("joint_trajectory"))
        throw std::runtime_error("trajectory: header type is not 'joint_trajectory'");
    if (header.at("version").get<int>() != 1)
        throw std::runtime_error("trajectory: unsupported version");

    JointTrajectory traj;
    traj.fps = header.at("fps").get<double>();
    traj.intrinsics = detail::intrinsics_from_json(header.at("intrinsics"));
    for (const auto& h : header.at("handedness"))
        traj.handedness.push_back(hand_from_string(h.get<std::string>()));
    traj.semantic_id = header.at("semantic_id").get<std::vector<int>>();
    const std::size_t n = header.at("joints").get<std::size_t>();
    if (n != traj.handedness.size())
        throw std::runtime_error("trajectory: 'joints' disagrees with handedness length");

    std::size_t expect = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        const std::size_t frame = rec.at("frame").get<std::size_t>();
        if (frame != expect) {
            std::ostringstream msg;
            msg << "trajectory: frame " << frame << " out of order (expected " << expect << ")";
            throw std::runtime_error(msg.str());
        }
        const auto& pos = rec.at("positions");
        const auto& val = rec.at("valid");
        if (pos.size() != n || val.size() != n)
            throw std::runtime_error("trajectory: frame record length does not match joint count");
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p = pos[i];
            if (p.size() != 3) throw std::runtime_error("trajectory: position is not a 3-vector");
            traj.positions.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
            traj.valid.push_back(val[i].get<bool>() ? 1 : 0);
        }
        ++expect;
    }
    traj.validate();
    return traj;
}

inline JointTrajectory read_trajectory(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("trajectory: cannot open '" + path + "'");
    return read_trajectory(is);
}

}  // namespace egoc
