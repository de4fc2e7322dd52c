// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <egoc/calibration.hpp>
#include <egoc/rng.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace egoc;
using namespace egoc::calib;

namespace {

// Independent FK oracle: 4x4 homogeneous matrices with Rodrigues-formula
// rotations, composed by plain matrix products.
Eigen::Matrix4d rodrigues_transform(const geom::Vec3& axis, double angle) {
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    const Eigen::Matrix3d r =
        Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
    Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
    t.topLeftCorner<3, 3>() = r;
    return t;
}

std::vector<geom::Vec3> fk_oracle(const KinematicChain& chain, const std::vector<double>& q) {
    std::vector<Eigen::Matrix4d> world(chain.links.size());
    std::size_t qi = 0;
    for (std::size_t i = 0; i < chain.links.size(); ++i) {
        const Link& link = chain.links[i];
        Eigen::Matrix4d local = Eigen::Matrix4d::Identity();
        local.topLeftCorner<3, 3>() = link.offset.rotation;
        local.topRightCorner<3, 1>() = link.offset.translation;
        if (link.joint == JointType::Revolute) {
            local = local * rodrigues_transform(link.axis, q[qi++]);
        } else if (link.joint == JointType::Prismatic) {
            Eigen::Matrix4d shift = Eigen::Matrix4d::Identity();
            shift.topRightCorner<3, 1>() = link.axis * q[qi++];
            local = local * shift;
        }
        world[i] = link.parent < 0 ? local : world[std::size_t(link.parent)] * local;
    }
    std::vector<geom::Vec3> out;
    for (const auto& kp : chain.keypoints) {
        Eigen::Vector4d h;
        h << kp.local, 1.0;
        out.push_back((world[std::size_t(kp.link)] * h).head<3>());
    }
    return out;
}

KinematicChain branched_chain() {
    KinematicChain chain;
    Link root;
    root.offset.rotation = geom::euler_to_rotation(0.1, 0.2, 0.3);
    root.offset.translation = {0.01, 0.02, 0.03};
    chain.links.push_back(root);

    Link swing;
    swing.parent = 0;
    swing.offset.translation = {0.05, 0.0, 0.0};
    swing.joint = JointType::Revolute;
    swing.axis = geom::Vec3::UnitZ();
    chain.links.push_back(swing);

    Link slide;
    slide.parent = 1;
    slide.offset.translation = {0.04, 0.0, 0.01};
    slide.joint = JointType::Prismatic;
    slide.axis = geom::Vec3::UnitY();
    chain.links.push_back(slide);

    Link tilt;
    tilt.parent = 0;
    tilt.offset.translation = {-0.05, 0.01, 0.0};
    tilt.joint = JointType::Revolute;
    tilt.axis = geom::Vec3(1.0, 2.0, 2.0).normalized();
    chain.links.push_back(tilt);

    chain.keypoints = {{0, {0.0, 0.0, 0.0}, Hand::Left, -1},
                       {1, {0.03, 0.0, 0.0}, Hand::Left, -1},
                       {2, {0.0, 0.02, 0.0}, Hand::Left, -1},
                       {2, {0.01, 0.0, 0.02}, Hand::Left, -1},
                       {3, {0.0, 0.0, 0.04}, Hand::Left, -1}};
    return chain;
}

// 12 tracked points watched over 5 frames by a camera whose mount is the
// quantity under recovery.
struct RecoveryFixture {
    geom::CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};
    Vector6d truth;
    std::vector<std::vector<geom::Vec3>> keypoints_w;
    std::vector<Annotation> annotations;

    explicit RecoveryFixture(double noise_px = 0.0, std::uint64_t seed = 0) {
        truth << 0.1, -0.2, 0.05, 0.05, -0.1, 0.4;
        Rng rng(seed);
        std::vector<geom::Vec3> base;
        for (int iy = 0; iy < 3; ++iy)
            for (int ix = 0; ix < 4; ++ix)
                base.emplace_back(-0.12 + 0.08 * ix, -0.08 + 0.08 * iy, 0.02 * ((ix + iy) % 3));
        const geom::RigidPose mount = pose_from_theta(truth);
        for (int f = 0; f < 5; ++f) {
            const geom::RigidPose wiggle{geom::euler_to_rotation(0.05 * f, -0.04 * f, 0.03 * f),
                                         {0.01 * f, -0.005 * f, 0.0}};
            std::vector<geom::Vec3> frame;
            for (const auto& p : base) frame.push_back(geom::apply_pose(wiggle, p));
            keypoints_w.push_back(frame);
            for (int j = 0; j < 12; ++j) {
                const geom::Vec3 cam = geom::apply_pose(mount, frame[std::size_t(j)]);
                const geom::ProjectedJoint proj = geom::project(cam, k);
                REQUIRE(proj.valid);
                Annotation a;
                a.frame = f;
                a.joint_id = j;
                a.u_star = proj.u + noise_px * geom::Vec2(rng.normal(), rng.normal());
                annotations.push_back(a);
            }
        }
    }

    auto residual_fn() const {
        return [this](const Vector6d& theta) {
            return reprojection_residuals(theta, annotations, keypoints_w, k);
        };
    }
};

}  // namespace

TEST_CASE("forward kinematics matches a homogeneous-matrix oracle") {
    const KinematicChain chain = branched_chain();
    REQUIRE(chain.dof() == 3);
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const std::vector<double> q = {rng.uniform(-1.5, 1.5), rng.uniform(-0.1, 0.1),
                                       rng.uniform(-1.5, 1.5)};
        const std::vector<geom::Vec3> got = forward_kinematics(chain, q);
        const std::vector<geom::Vec3> want = fk_oracle(chain, q);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i)
            REQUIRE((got[i] - want[i]).norm() < 1e-10);
    }
}

TEST_CASE("forward kinematics moves keypoints as their joints articulate") {
    KinematicChain chain;
    chain.links.push_back(Link{});  // fixed root at the origin
    Link arm;
    arm.parent = 0;
    arm.joint = JointType::Revolute;
    arm.axis = geom::Vec3::UnitZ();
    chain.links.push_back(arm);
    chain.keypoints = {{1, {0.2, 0.0, 0.0}, Hand::Left, -1}};

    const double q = 0.7;
    const std::vector<geom::Vec3> pts = forward_kinematics(chain, {q});
    CHECK(pts[0].x() == Catch::Approx(0.2 * std::cos(q)).margin(1e-14));
    CHECK(pts[0].y() == Catch::Approx(0.2 * std::sin(q)).margin(1e-14));
    CHECK(pts[0].z() == Catch::Approx(0.0).margin(1e-14));

    SECTION("prismatic joints slide along their axis") {
        chain.links[1].joint = JointType::Prismatic;
        chain.links[1].axis = geom::Vec3::UnitY();
        const std::vector<geom::Vec3> slid = forward_kinematics(chain, {0.15});
        CHECK((slid[0] - geom::Vec3(0.2, 0.15, 0.0)).norm() < 1e-14);
    }

    SECTION("pairwise distances on one rigid link never change") {
        KinematicChain rigid = branched_chain();
        rigid.keypoints = {{2, {0.0, 0.0, 0.0}, Hand::Left, -1},
                           {2, {0.05, 0.01, 0.0}, Hand::Left, -1},
                           {2, {0.02, 0.0, 0.03}, Hand::Left, -1}};
        Rng rng(5);
        const std::vector<geom::Vec3> ref = forward_kinematics(rigid, {0.0, 0.0, 0.0});
        for (int trial = 0; trial < 10; ++trial) {
            const std::vector<geom::Vec3> moved = forward_kinematics(
                rigid, {rng.uniform(-1.0, 1.0), rng.uniform(-0.1, 0.1), rng.uniform(-1.0, 1.0)});
            for (std::size_t a = 0; a < 3; ++a)
                for (std::size_t b = a + 1; b < 3; ++b)
                    REQUIRE(std::abs((moved[a] - moved[b]).norm() - (ref[a] - ref[b]).norm()) <
                            1e-9);
        }
    }

    SECTION("chain validation rejects malformed trees") {
        KinematicChain bad = branched_chain();
        bad.links[2].parent = 2;  // self-parent
        CHECK_THROWS_AS(forward_kinematics(bad, {0, 0, 0}), std::invalid_argument);
        bad = branched_chain();
        bad.links[1].axis = geom::Vec3(0.5, 0.0, 0.0);  // not unit
        CHECK_THROWS_AS(forward_kinematics(bad, {0, 0, 0}), std::invalid_argument);
        bad = branched_chain();
        bad.keypoints[0].link = 9;
        CHECK_THROWS_AS(forward_kinematics(bad, {0, 0, 0}), std::invalid_argument);
        CHECK_THROWS_AS(forward_kinematics(branched_chain(), {0, 0}), std::invalid_argument);
    }
}

TEST_CASE("mount parameter vectors map to rigid poses and boxed bounds") {
    Vector6d theta;
    theta << 0.2, -0.3, 0.4, 1.0, 2.0, 3.0;
    const geom::RigidPose pose = pose_from_theta(theta);
    CHECK((pose.rotation - geom::euler_to_rotation(0.2, -0.3, 0.4)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(pose.translation == geom::Vec3(1.0, 2.0, 3.0));

    Vector6d nominal;
    nominal << 0.0, 0.1, 0.0, 0.0, 0.0, 0.4;
    const ThetaBounds b = default_bounds(nominal);
    CHECK(b.lo[0] == Catch::Approx(-0.5));
    CHECK(b.hi[1] == Catch::Approx(0.6));
    CHECK(b.lo[5] == Catch::Approx(0.1));
    CHECK(b.hi[5] == Catch::Approx(0.7));
}

TEST_CASE("reprojection residuals vanish at the true mount and flag bad refs") {
    const RecoveryFixture fix;
    const Eigen::VectorXd at_truth = fix.residual_fn()(fix.truth);
    REQUIRE(at_truth.size() == 120);  // two rows per annotation
    CHECK(at_truth.cwiseAbs().maxCoeff() < 1e-12);

    SECTION("residual sign is target minus projection") {
        std::vector<Annotation> shifted = fix.annotations;
        shifted[0].u_star.x() += 2.0;
        const Eigen::VectorXd r =
            reprojection_residuals(fix.truth, shifted, fix.keypoints_w, fix.k);
        CHECK(r[0] == Catch::Approx(2.0).margin(1e-12));
        CHECK(r[1] == Catch::Approx(0.0).margin(1e-12));
    }

    SECTION("points driven behind the camera earn a smooth penalty") {
        Vector6d behind = fix.truth;
        behind[5] = -1.0;  // mount pulled far back
        const std::vector<std::vector<geom::Vec3>> pts = {{geom::Vec3(0.0, 0.0, 0.0)}};
        const std::vector<Annotation> ann = {{0, 0, {320.0, 240.0}}};
        const Eigen::VectorXd r = reprojection_residuals(behind, ann, pts, fix.k);
        const double expect = 1e4 * (geom::kMinDepth - (-1.0) + 1.0);
        CHECK(r[0] == Catch::Approx(expect).margin(1e-9));
        CHECK(r[1] == Catch::Approx(expect).margin(1e-9));
    }

    SECTION("annotations referencing missing frames or joints are named") {
        std::vector<Annotation> bad = {{7, 3, {0.0, 0.0}}};
        CHECK_THROWS_WITH(reprojection_residuals(fix.truth, bad, fix.keypoints_w, fix.k),
                          Catch::Matchers::ContainsSubstring("frame 7"));
        bad = {{0, 40, {0.0, 0.0}}};
        CHECK_THROWS_WITH(reprojection_residuals(fix.truth, bad, fix.keypoints_w, fix.k),
                          Catch::Matchers::ContainsSubstring("joint 40"));
        bad = {{0, 0, {std::nan(""), 0.0}}};
        CHECK_THROWS_AS(reprojection_residuals(fix.truth, bad, fix.keypoints_w, fix.k),
                        std::runtime_error);
    }
}

TEST_CASE("central-difference jacobians agree with an independent stencil") {
    const RecoveryFixture fix;
    const auto fn = fix.residual_fn();
    Rng rng(13);
    for (int trial = 0; trial < 5; ++trial) {
        Vector6d theta = fix.truth;
        for (int i = 0; i < 6; ++i) theta[i] += rng.uniform(-0.05, 0.05);

        Eigen::MatrixXd central(120, 6), forward(120, 6);
        const Eigen::VectorXd r0 = fn(theta);
        for (int c = 0; c < 6; ++c) {
            Vector6d plus = theta, minus = theta;
            plus[c] += 1e-6;
            minus[c] -= 1e-6;
            central.col(c) = (fn(plus) - fn(minus)) / 2e-6;
            Vector6d fwd = theta;
            fwd[c] += 1e-7;
            forward.col(c) = (fn(fwd) - r0) / 1e-7;
        }
        const double scale = central.cwiseAbs().maxCoeff();
        REQUIRE((central - forward).cwiseAbs().maxCoeff() / scale < 1e-3);
    }
}

TEST_CASE("the bounded solver recovers the true mount from clean targets") {
    const RecoveryFixture fix;
    Vector6d init = fix.truth;
    init[0] += 0.1;
    init[1] -= 0.1;
    init[2] += 0.1;
    init[3] -= 0.1;
    init[4] += 0.1;
    init[5] -= 0.1;
    const ThetaBounds bounds = default_bounds(init);

    const SolveResult sol = solve_extrinsics(fix.residual_fn(), bounds.lo, bounds.hi, init);
    INFO("status " << to_string(sol.status) << " cost " << sol.cost);
    CHECK((sol.theta - fix.truth).cwiseAbs().maxCoeff() < 1e-3);
    CHECK(sol.cost < 1e-6);
    CHECK(sol.accepted_steps > 0);
    CHECK(sol.iterations <= 200);

    SECTION("every iterate stays inside the bounds") {
        REQUIRE_FALSE(sol.iterates.empty());
        CHECK(sol.iterates.front() == init);
        for (const auto& th : sol.iterates)
            for (int i = 0; i < 6; ++i) {
                REQUIRE(th[i] >= bounds.lo[i]);
                REQUIRE(th[i] <= bounds.hi[i]);
            }
    }

    SECTION("accepted iterates never increase the cost") {
        const auto fn = fix.residual_fn();
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& th : sol.iterates) {
            const double c = fn(th).squaredNorm();
            REQUIRE(c <= prev + 1e-15);
            prev = c;
        }
        CHECK(prev == Catch::Approx(sol.cost).margin(1e-12));
    }
}

TEST_CASE("the solver tolerates pixel noise and honors hard bounds") {
    SECTION("one-pixel noise leaves the mount within 0.02") {
        for (std::uint64_t seed : {1ULL, 2ULL}) {
            const RecoveryFixture fix(1.0, seed);
            const ThetaBounds bounds = default_bounds(fix.truth);
            const Vector6d init = fix.truth;  // midpoint of these bounds
            const SolveResult sol = solve_extrinsics(fix.residual_fn(), bounds.lo, bounds.hi, init);
            CHECK((sol.theta - fix.truth).cwiseAbs().maxCoeff() < 0.02);
            // 120 residual rows carrying ~unit noise.
            CHECK(std::sqrt(sol.cost / 120.0) <= 1.5);
        }
    }

    SECTION("an optimum outside the box lands on the boundary") {
        const auto fn = [](const Vector6d& theta) {
            Eigen::VectorXd r(6);
            for (int i = 0; i < 6; ++i) r[i] = theta[i] - 2.0;  // optimum far outside
            return r;
        };
        Vector6d lo = Vector6d::Constant(-1.0);
        Vector6d hi = Vector6d::Constant(1.0);
        const SolveResult sol = solve_extrinsics(fn, lo, hi, Vector6d::Zero());
        for (int i = 0; i < 6; ++i) CHECK(sol.theta[i] == Catch::Approx(1.0).margin(1e-9));
        CHECK(sol.cost >= 0.0);
        CHECK(sol.cost == Catch::Approx(6.0).margin(1e-6));  // clamped optimum
    }

    SECTION("invalid boxes and infeasible starts are rejected") {
        const auto fn = [](const Vector6d&) { return Eigen::VectorXd::Zero(1).eval(); };
        Vector6d lo = Vector6d::Zero(), hi = Vector6d::Ones();
        CHECK_THROWS_AS(solve_extrinsics(fn, hi, lo, Vector6d::Constant(0.5)),
                        std::invalid_argument);
        CHECK_THROWS_AS(solve_extrinsics(fn, lo, hi, Vector6d::Constant(2.0)),
                        std::invalid_argument);
    }

    SECTION("status labels are stable strings") {
        CHECK(std::string(to_string(SolveStatus::CostTolerance)) == "cost-tolerance");
        CHECK(std::string(to_string(SolveStatus::GradientTolerance)) == "gradient-tolerance");
        CHECK(std::string(to_string(SolveStatus::MaxIterations)) == "max-iterations");
    }
}

TEST_CASE("batch projection composes the mount with the pinhole camera") {
    const geom::CameraIntrinsics k{500.0, 500.0, 320.0, 240.0, 640, 480};

    SECTION("identity mount centers the optical axis") {
        const auto out = batch_project(geom::RigidPose{}, {{geom::Vec3(0.0, 0.0, 1.0)}}, k);
        REQUIRE(out.size() == 1);
        REQUIRE(out[0].size() == 1);
        CHECK(out[0][0].pixel.u.x() == Catch::Approx(320.0));
        CHECK(out[0][0].pixel.u.y() == Catch::Approx(240.0));
        CHECK(out[0][0].in_bounds);
    }

    SECTION("agrees with pose-then-project elementwise, bit-exact") {
        Vector6d theta;
        theta << 0.1, -0.2, 0.05, 0.05, -0.1, 0.4;
        const geom::RigidPose pose = pose_from_theta(theta);
        std::vector<std::vector<geom::Vec3>> pts = {
            {{0.1, 0.0, 0.1}, {-0.2, 0.1, 0.0}},
            {{0.0, 0.0, 0.0}, {0.05, -0.05, 0.3}},
        };
        const auto batch = batch_project(pose, pts, k);
        for (std::size_t f = 0; f < pts.size(); ++f)
            for (std::size_t i = 0; i < pts[f].size(); ++i) {
                const geom::Vec3 cam = geom::apply_pose(pose, pts[f][i]);
                const geom::ProjectedJoint pj = geom::project(cam, k);
                REQUIRE(batch[f][i].camera == cam);
                REQUIRE(batch[f][i].pixel.u == pj.u);
                REQUIRE(batch[f][i].pixel.d == pj.d);
                REQUIRE(batch[f][i].in_bounds == (pj.valid && geom::in_image(pj.u, k)));
            }
    }

    SECTION("points behind the camera keep their record with a false flag") {
        const auto out = batch_project(geom::RigidPose{}, {{geom::Vec3(0.0, 0.0, -2.0)}}, k);
        CHECK_FALSE(out[0][0].in_bounds);
        CHECK_FALSE(out[0][0].pixel.valid);
        CHECK(out[0][0].camera == geom::Vec3(0.0, 0.0, -2.0));
    }
}

TEST_CASE("platform tags pin the tracked keypoint count") {
    CHECK_NOTHROW(validate_platform("inspire", 12));
    CHECK_NOTHROW(validate_platform("inspire", 24));
    CHECK_THROWS_WITH(validate_platform("inspire", 13),
                      Catch::Matchers::ContainsSubstring("12"));
    CHECK_NOTHROW(validate_platform("dex3-1", 7));
    CHECK_NOTHROW(validate_platform("dex3", 14));
    CHECK_THROWS_AS(validate_platform("dex3", 12), std::runtime_error);
    CHECK_THROWS_AS(validate_platform("widget", 12), std::runtime_error);
}

TEST_CASE("chain, config, annotation, and intrinsics files parse strictly") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "egoc_calib_io_test";
    fs::create_directories(dir);

    SECTION("chain json round-trips structure and platform check") {
        nlohmann::json j;
        j["links"] = nlohmann::json::array();
        j["links"].push_back({{"parent", -1},
                              {"offset", {{"euler", {0.0, 0.0, 0.0}}, {"translation", {0, 0, 0}}}},
                              {"joint", "fixed"}});
        j["links"].push_back({{"parent", 0},
                              {"offset", {{"euler", {0.0, 0.5, 0.0}}, {"translation", {0.1, 0, 0}}}},
                              {"joint", "revolute"},
                              {"axis", {0.0, 0.0, 1.0}}});
        j["keypoints"] = nlohmann::json::array();
        for (int i = 0; i < 7; ++i)
            j["keypoints"].push_back(
                {{"link", 1}, {"local", {0.01 * i, 0.0, 0.0}}, {"hand", "right"}});
        j["platform"] = "dex3";

        const KinematicChain chain = chain_from_json(j);
        REQUIRE(chain.links.size() == 2);
        CHECK(chain.links[1].joint == JointType::Revolute);
        CHECK(chain.dof() == 1);
        REQUIRE(chain.keypoints.size() == 7);
        CHECK(chain.keypoints[3].hand == Hand::Right);
        CHECK(chain.keypoints[3].semantic == 3);  // defaults to its own index

        j["platform"] = "inspire";  // 7 keypoints no longer acceptable
        CHECK_THROWS_AS(chain_from_json(j), std::runtime_error);
        j.erase("platform");
        j["links"][1]["joint"] = "helical";
        CHECK_THROWS_AS(chain_from_json(j), std::runtime_error);

        const fs::path p = dir / "chain.json";
        j["links"][1]["joint"] = "revolute";
        std::ofstream(p) << j.dump();
        CHECK(read_chain(p.string()).links.size() == 2);
        CHECK_THROWS_AS(read_chain((dir / "missing.json").string()), std::runtime_error);
    }

    SECTION("joint configs demand dense ordered frames") {
        const fs::path p = dir / "configs.jsonl";
        std::ofstream(p) << R"({"frame": 0, "q": [0.1, 0.2]})" << "\n"
                         << R"({"frame": 1, "q": [0.3, 0.4]})" << "\n";
        const auto series = read_joint_configs(p.string());
        REQUIRE(series.size() == 2);
        CHECK(series[1] == std::vector<double>{0.3, 0.4});

        std::ofstream(p) << R"({"frame": 0, "q": [0.1]})" << "\n"
                         << R"({"frame": 2, "q": [0.2]})" << "\n";
        CHECK_THROWS_WITH(read_joint_configs(p.string()),
                          Catch::Matchers::ContainsSubstring("out of order"));
        std::ofstream(p) << "";
        CHECK_THROWS_AS(read_joint_configs(p.string()), std::runtime_error);
    }

    SECTION("annotation and intrinsics documents parse and validate") {
        const fs::path ap = dir / "ann.json";
        std::ofstream(ap) << R"({"annotations": [{"frame": 0, "joint": 3, "u": [12.5, 99.0]}]})";
        const auto anns = read_annotations(ap.string());
        REQUIRE(anns.size() == 1);
        CHECK(anns[0].joint_id == 3);
        CHECK(anns[0].u_star == geom::Vec2(12.5, 99.0));

        std::ofstream(ap) << R"({"annotations": [{"frame": 0, "joint": 0, "u": [1.0]}]})";
        CHECK_THROWS_AS(read_annotations(ap.string()), std::runtime_error);

        const fs::path kp = dir / "k.json";
        std::ofstream(kp)
            << R"({"fx": 500, "fy": 500, "cx": 320, "cy": 240, "width": 640, "height": 480})";
        const geom::CameraIntrinsics k = read_intrinsics(kp.string());
        CHECK(k.fx == 500.0);
        CHECK(k.height == 480);
        std::ofstream(kp)
            << R"({"fx": -1, "fy": 500, "cx": 320, "cy": 240, "width": 640, "height": 480})";
        CHECK_THROWS_AS(read_intrinsics(kp.string()), std::invalid_argument);
    }

    fs::remove_all(dir);
}
