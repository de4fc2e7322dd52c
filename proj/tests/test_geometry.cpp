// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <egoc/geometry.hpp>

#include <cmath>

using namespace egoc::geom;

namespace {

CameraIntrinsics test_camera() { return {100.0, 100.0, 64.0, 64.0, 128, 128}; }

}  // namespace

TEST_CASE("pinhole projection maps camera points to pixels and disparity") {
    const CameraIntrinsics k = test_camera();
    k.validate();

    // u = f * x / z + c, d = 1 / z, computed by hand.
    const ProjectedJoint p = project({0.1, -0.2, 0.5}, k);
    REQUIRE(p.valid);
    CHECK(p.u.x() == Catch::Approx(84.0).margin(1e-12));
    CHECK(p.u.y() == Catch::Approx(24.0).margin(1e-12));
    CHECK(p.d == Catch::Approx(2.0).margin(1e-12));

    const ProjectedJoint center = project({0.0, 0.0, 1.0}, k);
    REQUIRE(center.valid);
    CHECK(center.u.x() == Catch::Approx(64.0));
    CHECK(center.u.y() == Catch::Approx(64.0));
}

TEST_CASE("points behind or on the camera plane are invalid") {
    const CameraIntrinsics k = test_camera();
    CHECK_FALSE(project({0.1, 0.1, 0.0}, k).valid);
    CHECK_FALSE(project({0.1, 0.1, -0.4}, k).valid);
    CHECK_FALSE(project({0.1, 0.1, 1e-5}, k).valid);  // below the depth floor
    const ProjectedJoint p = project({0.1, 0.1, -0.4}, k);
    CHECK(p.u.x() == 0.0);
    CHECK(p.u.y() == 0.0);
    CHECK(p.d == 0.0);
}

TEST_CASE("unproject inverts project for valid depths") {
    const CameraIntrinsics k = test_camera();
    const Vec3 p{0.25, -0.17, 0.83};
    const ProjectedJoint pj = project(p, k);
    REQUIRE(pj.valid);
    const Vec3 back = unproject(pj.u, pj.d, k);
    CHECK((back - p).norm() < 1e-12);
    CHECK_THROWS_AS(unproject({1.0, 1.0}, 0.0, k), std::invalid_argument);
    CHECK_THROWS_AS(unproject({1.0, 1.0}, -2.0, k), std::invalid_argument);
}

TEST_CASE("in_image uses half-open pixel bounds") {
    const CameraIntrinsics k = test_camera();
    CHECK(in_image({0.0, 0.0}, k));
    CHECK(in_image({127.999, 127.999}, k));
    CHECK_FALSE(in_image({128.0, 10.0}, k));
    CHECK_FALSE(in_image({10.0, 128.0}, k));
    CHECK_FALSE(in_image({-0.001, 10.0}, k));
}

TEST_CASE("intrinsics validation rejects non-positive focals and off-image centers") {
    CHECK_THROWS_AS((CameraIntrinsics{0.0, 100.0, 64.0, 64.0, 128, 128}.validate()),
                    std::invalid_argument);
    CHECK_THROWS_AS((CameraIntrinsics{100.0, 100.0, 128.0, 64.0, 128, 128}.validate()),
                    std::invalid_argument);
    CHECK_THROWS_AS((CameraIntrinsics{100.0, 100.0, 64.0, -1.0, 128, 128}.validate()),
                    std::invalid_argument);
}

TEST_CASE("euler composition order is Rz(roll) * Ry(yaw) * Rx(pitch)") {
    // Oracle: yaw of +pi/2 about Y sends +X to -Z.
    const Mat3 ry = euler_to_rotation(0.0, M_PI / 2.0, 0.0);
    const Vec3 image = ry * Vec3{1.0, 0.0, 0.0};
    CHECK(image.x() == Catch::Approx(0.0).margin(1e-12));
    CHECK(image.y() == Catch::Approx(0.0).margin(1e-12));
    CHECK(image.z() == Catch::Approx(-1.0).margin(1e-12));

    // Oracle: explicit matrix product for generic angles.
    const double pitch = 0.3, yaw = -0.2, roll = 0.7;
    Mat3 rx, ryy, rz;
    rx << 1, 0, 0, 0, std::cos(pitch), -std::sin(pitch), 0, std::sin(pitch), std::cos(pitch);
    ryy << std::cos(yaw), 0, std::sin(yaw), 0, 1, 0, -std::sin(yaw), 0, std::cos(yaw);
    rz << std::cos(roll), -std::sin(roll), 0, std::sin(roll), std::cos(roll), 0, 0, 0, 1;
    const Mat3 expected = rz * ryy * rx;
    const Mat3 got = euler_to_rotation(pitch, yaw, roll);
    CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("poses validate rotations and compose left to right") {
    RigidPose pose;
    pose.rotation = euler_to_rotation(0.1, 0.2, 0.3);
    pose.translation = {1.0, -2.0, 0.5};
    pose.validate();

    RigidPose bad;
    bad.rotation(0, 0) = 2.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    RigidPose reflected;
    reflected.rotation = Mat3::Identity();
    reflected.rotation(2, 2) = -1.0;
    CHECK_THROWS_AS(reflected.validate(), std::invalid_argument);

    const Vec3 p{0.4, 0.1, -0.6};
    const RigidPose a{euler_to_rotation(0.0, 0.5, 0.0), {1.0, 0.0, 0.0}};
    const RigidPose b{euler_to_rotation(0.2, 0.0, 0.0), {0.0, 1.0, 0.0}};
    const Vec3 direct = apply_pose(a, apply_pose(b, p));
    const Vec3 composed = apply_pose(compose(a, b), p);
    CHECK((direct - composed).norm() < 1e-12);
}

TEST_CASE("pixels map onto the grid by dividing by the cell scale") {
    const GridSpec grid{32, 32, 8.0};
    grid.validate();
    const Vec2 g = grid_from_pixel({84.0, 24.0}, grid);
    CHECK(g.x() == Catch::Approx(10.5));
    CHECK(g.y() == Catch::Approx(3.0));

    CHECK_THROWS_AS((GridSpec{0, 32, 8.0}.validate()), std::invalid_argument);
    CHECK_THROWS_AS((GridSpec{32, 32, 0.0}.validate()), std::invalid_argument);
}

TEST_CASE("gaussian fields peak at the center cell and decay isotropically") {
    const GridSpec grid{16, 16, 8.0};

    // Center exactly on cell (5, 7): peak value exp(0) = 1, and a cell at
    // distance 1 with sigma 1 reads exp(-0.5) = 0.6065306597126334.
    const Heatmap h = gaussian_heatmap({7.0, 5.0}, 1.0, grid);
    CHECK(h.at(5, 7) == Catch::Approx(1.0).margin(1e-15));
    CHECK(h.at(5, 8) == Catch::Approx(0.6065306597126334).margin(1e-15));
    CHECK(h.at(4, 7) == Catch::Approx(0.6065306597126334).margin(1e-15));
    CHECK(h.at(6, 8) == Catch::Approx(std::exp(-1.0)).margin(1e-15));
    CHECK(h.sum() > 1.0);

    for (double v : h.values) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
    }

    CHECK_THROWS_AS(gaussian_heatmap({1.0, 1.0}, 0.0, grid), std::invalid_argument);

    const Heatmap z = zero_heatmap(grid);
    CHECK(z.sum() == 0.0);
    CHECK(z.values.size() == 256);
}
