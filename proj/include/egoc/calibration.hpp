// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "egoc/geometry.hpp"
#include "egoc/trajectory.hpp"

namespace egoc::calib {

using Vector6d = Eigen::Matrix<double, 6, 1>;

enum class JointType { Revolute, Prismatic, Fixed };

/// One rigid link: a fixed offset from its parent followed by an optional
/// articulated transform.
struct Link {
    int parent = -1;  // -1 marks the root
    geom::RigidPose offset;
    JointType joint = JointType::Fixed;
    geom::Vec3 axis = geom::Vec3::UnitZ();
};

/// A tracked point rigidly attached to a link. Handedness and semantic id
/// flow into projected-trajectory output so downstream stages can treat
/// robot keypoints like human joints.
struct Keypoint {
    int link = 0;
    geom::Vec3 local = geom::Vec3::Zero();
    Hand hand = Hand::Left;
    int semantic = -1;  // -1: use the keypoint's own index
};

struct KinematicChain {
    std::vector<Link> links;
    std::vector<Keypoint> keypoints;

    int dof() const {
        int d = 0;
        for (const auto& l : links) d += (l.joint != JointType::Fixed);
        return d;
    }

    void validate() const {
        if (links.empty()) throw std::invalid_argument("chain: no links");
        if (links[0].parent != -1) throw std::invalid_argument("chain: link 0 must be the root");
        for (std::size_t i = 1; i < links.size(); ++i)
            if (links[i].parent < 0 || links[i].parent >= static_cast<int>(i))
                throw std::invalid_argument(
                    "chain: parent indices must precede their link (rooted tree)");
        for (const auto& l : links) {
            l.offset.validate();
            if (l.joint != JointType::Fixed && std::abs(l.axis.norm() - 1.0) > 1e-9)
                throw std::invalid_argument("chain: joint axis must be unit-norm");
        }
        for (const auto& kp : keypoints)
            if (kp.link < 0 || kp.link >= static_cast<int>(links.size()))
                throw std::invalid_argument("chain: keypoint references a missing link");
    }
};

/// Composes fixed offsets and joint transforms from root to leaf, then
/// applies keypoint offsets. Joint values are consumed in link order by the
/// non-fixed joints (radians for revolute, meters for prismatic).
inline std::vector<geom::Vec3> forward_kinematics(const KinematicChain& chain,
                                                  const std::vector<double>& q) {
    chain.validate();
    if (static_cast<int>(q.size()) != chain.dof())
        throw std::invalid_argument("fk: joint vector length does not match chain dof");

    std::vector<geom::RigidPose> pose(chain.links.size());
    std::size_t qi = 0;
    for (std::size_t i = 0; i < chain.links.size(); ++i) {
        const Link& link = chain.links[i];
        geom::RigidPose local = link.offset;
        if (link.joint == JointType::Revolute) {
            const double angle = q[qi++];
            local.rotation = local.rotation * Eigen::AngleAxisd(angle, link.axis).toRotationMatrix();
        } else if (link.joint == JointType::Prismatic) {
            const double shift = q[qi++];
            local.translation += local.rotation * (link.axis * shift);
        }
        pose[i] = link.parent < 0 ? local : geom::compose(pose[static_cast<std::size_t>(link.parent)], local);
    }

    std::vector<geom::Vec3> out;
    out.reserve(chain.keypoints.size());
    for (const auto& kp : chain.keypoints)
        out.push_back(geom::apply_pose(pose[static_cast<std::size_t>(kp.link)], kp.local));
    return out;
}

/// 6-DoF mount parameters: [pitch, yaw, roll, tx, ty, tz].
inline geom::RigidPose pose_from_theta(const Vector6d& theta) {
    return {geom::euler_to_rotation(theta[0], theta[1], theta[2]),
            geom::Vec3(theta[3], theta[4], theta[5])};
}

/// Default feasible box: ±0.5 rad and ±0.3 m around a nominal mount.
struct ThetaBounds {
    Vector6d lo;
    Vector6d hi;
};

inline ThetaBounds default_bounds(const Vector6d& nominal = Vector6d::Zero()) {
    Vector6d half;
    half << 0.5, 0.5, 0.5, 0.3, 0.3, 0.3;
    return {nominal - half, nominal + half};
}

struct Annotation {
    int frame = 0;
    int joint_id = 0;
    geom::Vec2 u_star = geom::Vec2::Zero();
};

inline void validate_annotations(const std::vector<Annotation>& annotations,
                                 const std::vector<std::vector<geom::Vec3>>& keypoints_w) {
    for (const auto& a : annotations) {
        if (a.frame < 0 || a.frame >= static_cast<int>(keypoints_w.size())) {
            std::ostringstream msg;
            msg << "annotation references missing frame " << a.frame << " (joint " << a.joint_id
                << ")";
            throw std::runtime_error(msg.str());
        }
        const auto& pts = keypoints_w[static_cast<std::size_t>(a.frame)];
        if (a.joint_id < 0 || a.joint_id >= static_cast<int>(pts.size())) {
            std::ostringstream msg;
            msg << "annotation references missing joint " << a.joint_id << " in frame " << a.frame;
            throw std::runtime_error(msg.str());
        }
        if (!a.u_star.allFinite()) throw std::runtime_error("annotation: non-finite pixel target");
    }
}

/// Stacked 2D reprojection residuals r = u* − π(R·p + t), two entries per
/// annotation. A transformed point at or behind the near plane contributes
/// a large smooth penalty 1e4·(z_min − z + 1) in both coordinates; dropping
/// such terms would make the cost discontinuous and stall the solver.
inline Eigen::VectorXd reprojection_residuals(const Vector6d& theta,
                                              const std::vector<Annotation>& annotations,
                                              const std::vector<std::vector<geom::Vec3>>& keypoints_w,
                                              const geom::CameraIntrinsics& k) {
    validate_annotations(annotations, keypoints_w);
    const geom::RigidPose pose = pose_from_theta(theta);
    Eigen::VectorXd r(2 * static_cast<Eigen::Index>(annotations.size()));
    for (std::size_t a = 0; a < annotations.size(); ++a) {
        const Annotation& ann = annotations[a];
        const geom::Vec3 p =
            geom::apply_pose(pose, keypoints_w[static_cast<std::size_t>(ann.frame)]
                                               [static_cast<std::size_t>(ann.joint_id)]);
        if (p.z() <= geom::kMinDepth) {
            const double penalty = 1e4 * (geom::kMinDepth - p.z() + 1.0);
            r[2 * static_cast<Eigen::Index>(a)] = penalty;
            r[2 * static_cast<Eigen::Index>(a) + 1] = penalty;
            continue;
        }
        const geom::ProjectedJoint proj = geom::project(p, k);
        r[2 * static_cast<Eigen::Index>(a)] = ann.u_star.x() - proj.u.x();
        r[2 * static_cast<Eigen::Index>(a) + 1] = ann.u_star.y() - proj.u.y();
    }
    return r;
}

enum class SolveStatus { CostTolerance, GradientTolerance, MaxIterations };

inline const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::CostTolerance: return "cost-tolerance";
        case SolveStatus::GradientTolerance: return "gradient-tolerance";
        default: return "max-iterations";
    }
}

struct SolveOptions {
    double cost_tol = 1e-12;
    double grad_tol = 1e-10;
    int max_iterations = 200;
    double fd_step = 1e-6;
};

struct SolveResult {
    Vector6d theta = Vector6d::Zero();
    double cost = 0.0;  // sum of squared residuals
    SolveStatus status = SolveStatus::MaxIterations;
    int iterations = 0;
    int accepted_steps = 0;
    std::vector<Vector6d> iterates;  // initial point plus every accepted step
};

/// Bound-constrained Levenberg–Marquardt over a 6-vector. The Jacobian is
/// numeric (central differences); each damped normal-equations step is
/// reflected at a violated bound once, then clamped; the damping factor
/// adapts by gain ratio. Accepted iterates only ever decrease the cost and
/// always satisfy the bounds.
template <typename ResidualFn>
SolveResult solve_extrinsics(ResidualFn&& residual_fn, const Vector6d& lo, const Vector6d& hi,
                             const Vector6d& initial, const SolveOptions& opts = {}) {
    for (int i = 0; i < 6; ++i) {
        if (!(lo[i] <= hi[i])) throw std::invalid_argument("solve: inverted bounds");
        if (initial[i] < lo[i] || initial[i] > hi[i])
            throw std::invalid_argument("solve: initial point violates bounds");
    }

    SolveResult res;
    res.theta = initial;
    res.iterates.push_back(initial);

    Eigen::VectorXd r = residual_fn(res.theta);
    res.cost = r.squaredNorm();
    if (r.size() == 0) {
        res.status = SolveStatus::CostTolerance;
        return res;
    }

    const auto jacobian = [&](const Vector6d& theta) {
        Eigen::MatrixXd j(r.size(), 6);
        for (int c = 0; c < 6; ++c) {
            Vector6d plus = theta, minus = theta;
            plus[c] += opts.fd_step;
            minus[c] -= opts.fd_step;
            j.col(c) = (residual_fn(plus) - residual_fn(minus)) / (2.0 * opts.fd_step);
        }
        return j;
    };

    Eigen::MatrixXd jac = jacobian(res.theta);
    Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    Vector6d g = jac.transpose() * r;
    if (g.cwiseAbs().maxCoeff() < opts.grad_tol) {
        res.status = SolveStatus::GradientTolerance;
        return res;
    }

    double mu = 1e-3 * jtj.diagonal().maxCoeff();
    if (!(mu > 0.0)) mu = 1e-3;
    double nu = 2.0;

    while (res.iterations < opts.max_iterations) {
        ++res.iterations;
        const Vector6d delta =
            (jtj + mu * Eigen::Matrix<double, 6, 6>::Identity()).ldlt().solve(-g);

        Vector6d candidate = res.theta + delta;
        for (int i = 0; i < 6; ++i) {  // reflect once at a crossed bound, then clamp
            if (candidate[i] < lo[i]) candidate[i] = lo[i] + (lo[i] - candidate[i]);
            else if (candidate[i] > hi[i]) candidate[i] = hi[i] - (candidate[i] - hi[i]);
            candidate[i] = std::clamp(candidate[i], lo[i], hi[i]);
        }
        const Vector6d step = candidate - res.theta;
        // Quadratic model of the squared-residual cost along the bent step.
        const double predicted = -(2.0 * g.dot(step) + step.dot(jtj * step));
        if (!(predicted > 0.0)) {
            mu *= nu;
            nu *= 2.0;
            continue;
        }

        const Eigen::VectorXd r_new = residual_fn(candidate);
        const double cost_new = r_new.squaredNorm();
        if (cost_new < res.cost) {
            const double rho = (res.cost - cost_new) / predicted;
            const double drop = res.cost - cost_new;
            res.theta = candidate;
            r = r_new;
            res.cost = cost_new;
            ++res.accepted_steps;
            res.iterates.push_back(res.theta);
            mu *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3.0));
            nu = 2.0;
            jac = jacobian(res.theta);
            jtj = jac.transpose() * jac;
            g = jac.transpose() * r;
            if (g.cwiseAbs().maxCoeff() < opts.grad_tol) {
                res.status = SolveStatus::GradientTolerance;
                return res;
            }
            if (drop < opts.cost_tol) {
                res.status = SolveStatus::CostTolerance;
                return res;
            }
        } else {
            mu *= nu;
            nu *= 2.0;
        }
    }
    res.status = SolveStatus::MaxIterations;
    return res;
}

/// A world point pushed through the solved mount: camera-frame position,
/// projection, and whether the pixel lands inside the image.
struct ProjectedPoint {
    geom::Vec3 camera = geom::Vec3::Zero();
    geom::ProjectedJoint pixel;
    bool in_bounds = false;
};

inline std::vector<std::vector<ProjectedPoint>> batch_project(
    const geom::RigidPose& pose, const std::vector<std::vector<geom::Vec3>>& keypoints_w,
    const geom::CameraIntrinsics& k) {
    pose.validate();
    k.validate();
    std::vector<std::vector<ProjectedPoint>> out(keypoints_w.size());
    for (std::size_t f = 0; f < keypoints_w.size(); ++f) {
        out[f].resize(keypoints_w[f].size());
        for (std::size_t i = 0; i < keypoints_w[f].size(); ++i) {
            ProjectedPoint& rec = out[f][i];
            rec.camera = geom::apply_pose(pose, keypoints_w[f][i]);
            rec.pixel = geom::project(rec.camera, k);
            rec.in_bounds = rec.pixel.valid && geom::in_image(rec.pixel.u, k);
        }
    }
    return out;
}

/// Known embodiments ship a fixed tracked-keypoint count per hand side.
inline void validate_platform(const std::string& platform, std::size_t keypoint_count) {
    std::size_t per_side = 0;
    if (platform == "inspire") per_side = 12;
    else if (platform == "dex3-1" || platform == "dex3") per_side = 7;
    else throw std::runtime_error("unknown platform tag '" + platform + "'");
    if (keypoint_count != per_side && keypoint_count != 2 * per_side) {
        std::ostringstream msg;
        msg << "platform '" << platform << "' expects " << per_side << " keypoints per side, got "
            << keypoint_count;
        throw std::runtime_error(msg.str());
    }
}

// ---- File formats -------------------------------------------------------

inline KinematicChain chain_from_json(const nlohmann::json& j) {
    KinematicChain chain;
    for (const auto& lj : j.at("links")) {
        Link link;
        link.parent = lj.at("parent").get<int>();
        const auto& off = lj.at("offset");
        const auto euler = off.at("euler").get<std::vector<double>>();
        const auto trans = off.at("translation").get<std::vector<double>>();
        if (euler.size() != 3 || trans.size() != 3)
            throw std::runtime_error("chain: offset euler/translation must be 3-vectors");
        link.offset.rotation = geom::euler_to_rotation(euler[0], euler[1], euler[2]);
        link.offset.translation = geom::Vec3(trans[0], trans[1], trans[2]);
        const std::string type = lj.at("joint").get<std::string>();
        if (type == "revolute") link.joint = JointType::Revolute;
        else if (type == "prismatic") link.joint = JointType::Prismatic;
        else if (type == "fixed") link.joint = JointType::Fixed;
        else throw std::runtime_error("chain: unknown joint type '" + type + "'");
        if (link.joint != JointType::Fixed) {
            const auto axis = lj.at("axis").get<std::vector<double>>();
            if (axis.size() != 3) throw std::runtime_error("chain: axis must be a 3-vector");
            link.axis = geom::Vec3(axis[0], axis[1], axis[2]);
        }
        chain.links.push_back(link);
    }
    for (const auto& kj : j.at("keypoints")) {
        Keypoint kp;
        kp.link = kj.at("link").get<int>();
        const auto local = kj.at("local").get<std::vector<double>>();
        if (local.size() != 3) throw std::runtime_error("chain: keypoint local must be a 3-vector");
        kp.local = geom::Vec3(local[0], local[1], local[2]);
        if (kj.contains("hand")) kp.hand = hand_from_string(kj.at("hand").get<std::string>());
        kp.semantic = kj.value("semantic", static_cast<int>(chain.keypoints.size()));
        chain.keypoints.push_back(kp);
    }
    chain.validate();
    if (j.contains("platform"))
        validate_platform(j.at("platform").get<std::string>(), chain.keypoints.size());
    return chain;
}

inline KinematicChain read_chain(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("chain: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return chain_from_json(j);
}

/// JSON Lines {"frame": k, "q": [...]}; frames must be dense and in order.
inline std::vector<std::vector<double>> read_joint_configs(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("joint configs: cannot open '" + path + "'");
    std::vector<std::vector<double>> series;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line);
        const auto frame = rec.at("frame").get<std::size_t>();
        if (frame != series.size()) {
            std::ostringstream msg;
            msg << "joint configs: frame " << frame << " out of order (expected " << series.size()
                << ")";
            throw std::runtime_error(msg.str());
        }
        series.push_back(rec.at("q").get<std::vector<double>>());
    }
    if (series.empty()) throw std::runtime_error("joint configs: no frames in '" + path + "'");
    return series;
}

inline std::vector<Annotation> annotations_from_json(const nlohmann::json& j) {
    std::vector<Annotation> out;
    for (const auto& aj : j.at("annotations")) {
        Annotation a;
        a.frame = aj.at("frame").get<int>();
        a.joint_id = aj.at("joint").get<int>();
        const auto u = aj.at("u").get<std::vector<double>>();
        if (u.size() != 2) throw std::runtime_error("annotation: u must be a 2-vector");
        a.u_star = geom::Vec2(u[0], u[1]);
        out.push_back(a);
    }
    return out;
}

inline std::vector<Annotation> read_annotations(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("annotations: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    return annotations_from_json(j);
}

inline geom::CameraIntrinsics read_intrinsics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("intrinsics: cannot open '" + path + "'");
    nlohmann::json j;
    is >> j;
    geom::CameraIntrinsics k;
    k.fx = j.at("fx").get<double>();
    k.fy = j.at("fy").get<double>();
    k.cx = j.at("cx").get<double>();
    k.cy = j.at("cy").get<double>();
    k.width = j.at("width").get<int>();
    k.height = j.at("height").get<int>();
    k.validate();
    return k;
}

}  // namespace egoc::calib
