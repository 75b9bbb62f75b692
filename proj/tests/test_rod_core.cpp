#include <doctest.h>

#include "helpers.hpp"

using namespace drod;

TEST_SUITE_BEGIN("rod-core");

TEST_CASE("edges follow the definition") {
    MaterialParams params = test::small_params(5);
    RodState s = make_rest_state(params, Vec3::Zero());
    s.positions.setZero();
    s.positions.row(1) = Vec3(1, 0, 0);
    s.positions.row(2) = Vec3(2, 0, 0);
    s.positions.row(3) = Vec3(2, 1, 0);
    s.positions.row(4) = Vec3(2, 2, 0);
    const Mat3X e = edges(s);
    CHECK((e.row(0) - Eigen::RowVector3d(1, 0, 0)).norm() == 0.0);
    CHECK((e.row(2) - Eigen::RowVector3d(0, 1, 0)).norm() == 0.0);
}

TEST_CASE("edge rows telescope to last minus first") {
    MaterialParams params = test::small_params(13);
    RodState s = test::bent_state(params, 0.3, 7);
    const Mat3X e = edges(s);
    REQUIRE(e.rows() == 12);
    const Vec3 total = e.colwise().sum();
    const Vec3 want = s.positions.row(12) - s.positions.row(0);
    CHECK((total - want).norm() < 1e-14);
}

TEST_CASE("apply_boundary identity keeps the rest state") {
    MaterialParams params = test::small_params(7);
    RodState s = make_rest_state(params, Vec3::Zero());
    const GripperInput u = rest_input(s);
    const RodState out = apply_boundary(s, u, params, 0.01);
    CHECK((out.positions - s.positions).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(out.velocities.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("apply_boundary translates the held pair only") {
    MaterialParams params = test::small_params(7);
    RodState s = make_rest_state(params, Vec3::Zero());
    GripperInput u = rest_input(s);
    u.left.position += Vec3(0.1, 0, 0);
    const RodState out = apply_boundary(s, u, params, 0.01);
    CHECK((out.positions.row(0) - (s.positions.row(0) + Eigen::RowVector3d(0.1, 0, 0)))
              .norm() < 1e-15);
    CHECK((out.positions.row(1) - (s.positions.row(1) + Eigen::RowVector3d(0.1, 0, 0)))
              .norm() < 1e-15);
    for (Eigen::Index i = 2; i <= 4; ++i)
        CHECK((out.positions.row(i) - s.positions.row(i)).norm() == 0.0);
    // Velocity of the moved pair reflects the translation over dt.
    CHECK(out.velocities(0, 0) == doctest::Approx(10.0));
}

TEST_CASE("apply_boundary rotates the held edge by Rodrigues") {
    MaterialParams params = test::small_params(7);
    RodState s = make_rest_state(params, Vec3::Zero());
    GripperInput u = rest_input(s);
    u.left.axis_angle = Vec3(0, 0, M_PI / 2);
    const RodState out = apply_boundary(s, u, params, 0.01);
    // Rest edge (h,0,0) rotated 90 degrees about z is (0,h,0).
    const Vec3 e0 = out.positions.row(1) - out.positions.row(0);
    const Vec3 want(0.0, params.rest_edges.row(0).norm(), 0.0);
    CHECK((e0 - want).norm() < 1e-12 * want.norm());
    // Held edge lengths stay at rest length.
    CHECK(std::abs(e0.norm() - params.rest_edges.row(0).norm()) <
          1e-12 * params.rest_edges.row(0).norm());
}

TEST_CASE("apply_boundary rejects non-finite poses") {
    MaterialParams params = test::small_params(5);
    RodState s = make_rest_state(params, Vec3::Zero());
    GripperInput u = rest_input(s);
    u.right.position[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(apply_boundary(s, u, params, 0.01), SimError);
}

TEST_CASE("validate flags constructed failures") {
    MaterialParams params = test::small_params(6);
    RodState s = make_rest_state(params, Vec3::Zero());
    CHECK(validate(params, s).empty());

    MaterialParams bad = params;
    bad.twist_modulus[1] = -1.0;
    auto issues = validate(bad, s);
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].find("twist") != std::string::npos);
    CHECK(issues[0].find("2") != std::string::npos); // names the interior index

    MaterialParams mismatched = test::small_params(7);
    CHECK(!validate(mismatched, s).empty());
}

TEST_SUITE_END();
