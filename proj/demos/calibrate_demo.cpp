// SPDX-License-Identifier: Apache-2.0
//
// Synthetic extrinsic calibration: a two-finger chain waves in front of a
// camera whose true mount pose is known, sparse pixel annotations are
// rendered from that truth, and the solver recovers the pose from them.

#include <cstdio>

#include "egoc/calibration.hpp"

using egoc::calib::Vector6d;

int main() {
    egoc::calib::KinematicChain chain;
    egoc::calib::Link base;  // root, fixed
    chain.links.push_back(base);
    egoc::calib::Link finger;
    finger.parent = 0;
    finger.offset.translation = egoc::geom::Vec3(0.03, 0.0, 0.0);
    finger.joint = egoc::calib::JointType::Revolute;
    finger.axis = egoc::geom::Vec3::UnitZ();
    chain.links.push_back(finger);
    egoc::calib::Link finger2 = finger;
    finger2.offset.translation = egoc::geom::Vec3(-0.03, 0.0, 0.0);
    chain.links.push_back(finger2);
    chain.keypoints = {{0, {0.0, 0.0, 0.0}}, {1, {0.05, 0.0, 0.0}}, {2, {0.05, 0.0, 0.0}}};

    const egoc::geom::CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
    Vector6d truth;
    truth << 0.10, -0.15, 0.05, 0.04, -0.06, 0.25;  // inside the default mount bounds

    std::vector<std::vector<egoc::geom::Vec3>> keypoints_w;
    std::vector<egoc::calib::Annotation> annotations;
    const egoc::geom::RigidPose true_pose = egoc::calib::pose_from_theta(truth);
    for (int f = 0; f < 8; ++f) {
        const double q = -0.6 + 0.15 * f;
        keypoints_w.push_back(egoc::calib::forward_kinematics(chain, {q, -q}));
        for (int j = 0; j < 3; ++j) {
            const egoc::geom::Vec3 p = egoc::geom::apply_pose(true_pose, keypoints_w.back()[std::size_t(j)]);
            const egoc::geom::ProjectedJoint proj = egoc::geom::project(p, k);
            if (proj.valid) annotations.push_back({f, j, proj.u});
        }
    }

    const egoc::calib::ThetaBounds bounds = egoc::calib::default_bounds();
    const auto residuals = [&](const Vector6d& theta) {
        return egoc::calib::reprojection_residuals(theta, annotations, keypoints_w, k);
    };
    const egoc::calib::SolveResult sol = egoc::calib::solve_extrinsics(
        residuals, bounds.lo, bounds.hi, Vector6d::Zero());

    std::printf("status: %s after %d iterations (%d accepted)\n",
                egoc::calib::to_string(sol.status), sol.iterations, sol.accepted_steps);
    std::printf("truth    : % .4f % .4f % .4f % .4f % .4f % .4f\n", truth[0], truth[1], truth[2],
                truth[3], truth[4], truth[5]);
    std::printf("recovered: % .4f % .4f % .4f % .4f % .4f % .4f\n", sol.theta[0], sol.theta[1],
                sol.theta[2], sol.theta[3], sol.theta[4], sol.theta[5]);
    std::printf("final cost: %.3e px^2 over %zu annotations\n", sol.cost, annotations.size());
    return 0;
}
