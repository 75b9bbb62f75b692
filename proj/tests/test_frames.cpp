#include <doctest.h>

#include "drod/frames.hpp"
#include "helpers.hpp"

using namespace drod;

TEST_SUITE_BEGIN("frames");

TEST_CASE("parallel transport spec values") {
    // Identity tangents.
    CHECK((parallel_transport(Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(1, 0, 0)) -
           Vec3(0, 1, 0))
              .norm() < 1e-15);
    // 90 degrees about z: hand Rodrigues.
    CHECK((parallel_transport(Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)) -
           Vec3(-1, 0, 0))
              .norm() < 1e-14);
    // Vector along the rotation axis is unchanged.
    CHECK((parallel_transport(Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0, 1, 0)) -
           Vec3(0, 0, 1))
              .norm() < 1e-14);
}

TEST_CASE("parallel transport is orthogonal") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        Vec3 a = Vec3(g(rng), g(rng), g(rng)).normalized();
        Vec3 b = Vec3(g(rng), g(rng), g(rng)).normalized();
        if (a.dot(b) < -0.9) b = -b;
        const Vec3 u(g(rng), g(rng), g(rng));
        const Vec3 v(g(rng), g(rng), g(rng));
        const Vec3 tu = parallel_transport(u, a, b);
        const Vec3 tv = parallel_transport(v, a, b);
        CHECK(std::abs(tu.norm() - u.norm()) < 1e-12 * (1 + u.norm()));
        CHECK(std::abs(tu.dot(tv) - u.dot(v)) < 1e-12 * (1 + std::abs(u.dot(v))));
        // Transport maps a to b.
        CHECK((parallel_transport(a, a, b) - b).norm() < 1e-12);
    }
}

TEST_CASE("parallel transport rejects antipodal tangents") {
    CHECK_THROWS_AS(
        parallel_transport(Vec3(0, 1, 0), Vec3(1, 0, 0), Vec3(-1, 0, 0)), SimError);
}

TEST_CASE("curvature binormal spec values") {
    CHECK(curvature_binormal(Vec3(1, 0, 0), Vec3(1, 0, 0)).norm() == 0.0);
    CHECK((curvature_binormal(Vec3(1, 0, 0), Vec3(0, 1, 0)) - Vec3(0, 0, 2)).norm() <
          1e-15);
    // Homogeneity: scaling both edges leaves kb unchanged.
    const Vec3 e1(0.3, 0.1, -0.2), e2(0.25, 0.2, 0.1);
    const Vec3 kb = curvature_binormal(e1, e2);
    const Vec3 kb5 = curvature_binormal(5.0 * e1, 5.0 * e2);
    CHECK((kb - kb5).norm() < 1e-12 * kb.norm());
    CHECK_THROWS_AS(curvature_binormal(Vec3(1, 0, 0), Vec3(-1, 0, 0)), SimError);
}

TEST_CASE("bishop frames on straight and L-shaped rods") {
    MaterialParams params = test::small_params(5);
    RodState straight = make_rest_state(params, Vec3::Zero());
    FrameSet fs = bishop_frames(straight, Vec3(0, 1, 0));
    for (Eigen::Index e = 0; e < 4; ++e)
        CHECK((fs.bishop1.row(e) - Eigen::RowVector3d(0, 1, 0)).norm() < 1e-14);

    // L-shape: edges +x then +y; single transport of (0,1,0) is (-1,0,0).
    RodState ell = straight;
    ell.positions.row(0) = Vec3(0, 0, 0);
    ell.positions.row(1) = Vec3(0.1, 0, 0);
    ell.positions.row(2) = Vec3(0.1, 0.1, 0);
    ell.positions.row(3) = Vec3(0.1, 0.2, 0);
    ell.positions.row(4) = Vec3(0.1, 0.3, 0);
    FrameSet fl = bishop_frames(ell, Vec3(0, 1, 0));
    CHECK((fl.bishop1.row(1) - Eigen::RowVector3d(-1, 0, 0)).norm() < 1e-13);
}

TEST_CASE("triads stay orthonormal on random smooth rods") {
    MaterialParams params = test::small_params(13);
    for (unsigned seed = 0; seed < 5; ++seed) {
        RodState s = test::bent_state(params, 0.4, seed);
        FrameSet fs = bishop_frames(s, Vec3(0, 1, 0));
        for (Eigen::Index e = 0; e < fs.tangents.rows(); ++e) {
            const Vec3 t = fs.tangents.row(e);
            const Vec3 w1 = fs.bishop1.row(e);
            const Vec3 w2 = fs.bishop2.row(e);
            CHECK(std::abs(t.norm() - 1) < 1e-10);
            CHECK(std::abs(w1.norm() - 1) < 1e-10);
            CHECK(std::abs(t.dot(w1)) < 1e-10);
            CHECK(std::abs(t.dot(w2)) < 1e-10);
            CHECK(std::abs(w1.dot(w2)) < 1e-10);
            CHECK((t.cross(w1) - w2).norm() < 1e-10); // right-handed
        }
    }
}

TEST_CASE("material frames rotate by theta") {
    MaterialParams params = test::small_params(7);
    RodState s = test::bent_state(params, 0.2, 3);
    FrameSet fs = bishop_frames(s, Vec3(0, 1, 0));
    VecX theta = VecX::LinSpaced(6, -0.4, 0.8);
    set_twist(fs, theta);
    for (Eigen::Index e = 0; e < 6; ++e) {
        const Vec3 w1 = fs.bishop1.row(e), w2 = fs.bishop2.row(e);
        const Vec3 m1 = fs.material1.row(e), m2 = fs.material2.row(e);
        const double c = std::cos(theta[e]), sn = std::sin(theta[e]);
        CHECK((m1 - (c * w1 + sn * w2)).norm() < 1e-12);
        CHECK((m2 - (-sn * w1 + c * w2)).norm() < 1e-12);
    }
}

TEST_CASE("material curvature magnitude at an L corner is |kb|") {
    MaterialParams params = test::small_params(5);
    RodState ell = make_rest_state(params, Vec3::Zero());
    ell.positions.row(0) = Vec3(0, 0, 0);
    ell.positions.row(1) = Vec3(0.1, 0, 0);
    ell.positions.row(2) = Vec3(0.1, 0.1, 0);
    ell.positions.row(3) = Vec3(0.1, 0.2, 0);
    ell.positions.row(4) = Vec3(0.1, 0.3, 0);
    FrameSet fs = bishop_frames(ell, Vec3(0, 1, 0));
    CurvatureSet cs = material_curvatures(fs, ell);
    CHECK(cs.omega[0][0].norm() == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(cs.omega[0][1].norm() == doctest::Approx(2.0).epsilon(1e-12));
    // kb is orthogonal to both adjacent tangents.
    for (Eigen::Index k = 0; k < cs.kb.rows(); ++k) {
        CHECK(std::abs(cs.kb.row(k).dot(fs.tangents.row(k))) < 1e-10);
        CHECK(std::abs(cs.kb.row(k).dot(fs.tangents.row(k + 1))) < 1e-10);
    }
}

TEST_CASE("quarter-turn twist swaps and negates curvature coordinates") {
    MaterialParams params = test::small_params(7);
    RodState s = test::bent_state(params, 0.3, 5);
    FrameSet fs = bishop_frames(s, Vec3(0, 1, 0));
    CurvatureSet base = material_curvatures(fs, s);

    VecX theta = VecX::Zero(6);
    theta[2] = M_PI / 2;
    set_twist(fs, theta);
    CurvatureSet rot = material_curvatures(fs, s);

    // Vertex 2's leading edge is edge 2: omega -> (omega_2, -omega_1).
    const Vec2 before = base.omega[1][1];
    const Vec2 after = rot.omega[1][1];
    CHECK(after.x() == doctest::Approx(before.y()).epsilon(1e-12));
    CHECK(after.y() == doctest::Approx(-before.x()).epsilon(1e-12));
}

TEST_CASE("global rotation rotates every frame vector") {
    MaterialParams params = test::small_params(9);
    RodState s = test::bent_state(params, 0.3, 9);
    const Vec3 ref(0, 1, 0);
    FrameSet base = bishop_frames(s, ref);

    const Eigen::Matrix3d r =
        Eigen::AngleAxisd(0.83, Vec3(0.2, -0.5, 0.84).normalized()).toRotationMatrix();
    RodState rotated = s;
    for (Eigen::Index i = 0; i < s.n(); ++i)
        rotated.positions.row(i) = (r * s.positions.row(i).transpose()).transpose();
    FrameSet rot = bishop_frames(rotated, r * ref);

    for (Eigen::Index e = 0; e < base.tangents.rows(); ++e) {
        CHECK((rot.tangents.row(e).transpose() - r * base.tangents.row(e).transpose())
                  .norm() < 1e-10);
        CHECK((rot.bishop1.row(e).transpose() - r * base.bishop1.row(e).transpose())
                  .norm() < 1e-10);
        CHECK((rot.bishop2.row(e).transpose() - r * base.bishop2.row(e).transpose())
                  .norm() < 1e-10);
    }
}

TEST_CASE("time-parallel reference: static rod unchanged, rigid rotation tracked") {
    MaterialParams params = test::small_params(7);
    RodState s = test::bent_state(params, 0.2, 13);
    FrameSet fs = bishop_frames(s, Vec3(0, 1, 0));
    CHECK((time_parallel_reference(fs, s) - fs.bishop1.row(0).transpose()).norm() <
          1e-14);

    // The minimal rotation between tangents coincides with the rigid motion
    // only when the motion has no component about the first tangent, so pick
    // an axis orthogonal to it.
    const Vec3 t0 = fs.tangents.row(0);
    const Vec3 axis = t0.cross(Vec3(0.3, 0.2, 0.93)).normalized();
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.4, axis).toRotationMatrix();
    RodState rotated = s;
    for (Eigen::Index i = 0; i < s.n(); ++i)
        rotated.positions.row(i) = (r * s.positions.row(i).transpose()).transpose();
    const Vec3 moved = time_parallel_reference(fs, rotated);
    CHECK((moved - r * fs.bishop1.row(0).transpose()).norm() < 1e-9);
}

TEST_CASE("time-parallel reference changes continuously with the first edge") {
    MaterialParams params = test::small_params(7);
    RodState s = make_rest_state(params, Vec3::Zero());
    FrameSet fs = bishop_frames(s, Vec3(0, 1, 0));

    RodState nudged = s;
    nudged.positions.row(1) += Vec3(0, 0, 1e-3);
    const Vec3 t_old = fs.tangents.row(0);
    const Vec3 e_new =
        (nudged.positions.row(1) - nudged.positions.row(0)).normalized();
    const double tangent_angle = std::acos(std::clamp(t_old.dot(e_new), -1.0, 1.0));

    const Vec3 ref = time_parallel_reference(fs, nudged);
    const double ref_angle = std::acos(
        std::clamp(ref.normalized().dot(fs.bishop1.row(0).transpose().normalized()),
                   -1.0, 1.0));
    CHECK(ref_angle <= 2.0 * tangent_angle + 1e-12);
}

TEST_SUITE_END();
