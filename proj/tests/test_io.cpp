#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "drod/io.hpp"
#include "helpers.hpp"

using namespace drod;

TEST_SUITE_BEGIN("io");

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("drod_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string &name) const { return (path / name).string(); }
    static int &counter() {
        static int c = 0;
        return c;
    }
};

Trajectory sample_trajectory() {
    MaterialParams params = test::small_params(7);
    RodState s = test::bent_state(params, 0.4, 3);
    StepConfig cfg;
    cfg.projection_epsilon = 2e-3;
    cfg.max_projection_iters = 200;
    GripperInput base = test::input_for(s, params);
    SwingSpec swing;
    swing.steps = 12;
    swing.seed = 9;
    const auto inputs = swing_inputs(base, s, params, cfg, swing);
    return rollout(s, inputs, params, nullptr, cfg);
}

} // namespace

TEST_CASE("trajectory CSV round-trip is bit-identical on carried fields") {
    const TempDir tmp;
    const Trajectory traj = sample_trajectory();
    const std::string path = tmp.file("traj.csv");
    save_trajectory_csv(traj, path);
    const Trajectory loaded = load_trajectory_csv(path);

    REQUIRE(loaded.states.size() == traj.states.size());
    REQUIRE(loaded.inputs.size() == traj.inputs.size());
    CHECK(loaded.dt == traj.dt);
    for (size_t t = 0; t < traj.states.size(); ++t) {
        CHECK(loaded.states[t].time == traj.states[t].time);
        CHECK((loaded.states[t].positions - traj.states[t].positions)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    }
    for (size_t t = 0; t < traj.inputs.size(); ++t) {
        CHECK((loaded.inputs[t].left.position - traj.inputs[t].left.position).norm() ==
              0.0);
        CHECK((loaded.inputs[t].right.axis_angle - traj.inputs[t].right.axis_angle)
                  .norm() == 0.0);
    }

    // Save -> load -> save produces identical bytes.
    const std::string again = tmp.file("traj2.csv");
    save_trajectory_csv(loaded, again);
    std::ifstream a(path), b(again);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);

    // Header shape matches the declared format.
    CHECK(sa.substr(0, 14) == "t,x1x,x1y,x1z,");
    CHECK(sa.find(",uLpx,") != std::string::npos);
    CHECK(sa.find(",uRrz\n") != std::string::npos);
}

TEST_CASE("trajectory binary round-trip") {
    const TempDir tmp;
    const Trajectory traj = sample_trajectory();
    const std::string path = tmp.file("traj.drod");
    save_trajectory_binary(traj, path);
    const Trajectory loaded = load_trajectory_binary(path);
    REQUIRE(loaded.states.size() == traj.states.size());
    CHECK(loaded.dt == traj.dt);
    for (size_t t = 0; t < traj.states.size(); ++t)
        CHECK((loaded.states[t].positions - traj.states[t].positions)
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
    std::ifstream f(path, std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "DROD");
}

TEST_CASE("loaded velocities follow the finite-difference convention") {
    const TempDir tmp;
    const Trajectory traj = sample_trajectory();
    const std::string path = tmp.file("traj.csv");
    save_trajectory_csv(traj, path);
    const Trajectory loaded = load_trajectory_csv(path);
    CHECK(loaded.states[0].velocities.cwiseAbs().maxCoeff() == 0.0);
    for (size_t t = 1; t < loaded.states.size(); ++t) {
        const Mat3X want = (loaded.states[t].positions -
                            loaded.states[t - 1].positions) /
                           loaded.dt;
        CHECK((loaded.states[t].velocities - want).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("net checkpoint round-trip") {
    const TempDir tmp;
    MaterialParams params = test::small_params(9);
    const ResidualNet net = test::live_net(9, 77, params);
    const std::string path = tmp.file("net.dnet");
    save_net(net, path);
    const ResidualNet loaded = load_net(path);
    VecX a, b;
    net.to_vector(a);
    loaded.to_vector(b);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.feature_scale - net.feature_scale).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.alpha_scale - net.alpha_scale).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("params checkpoint round-trip") {
    const TempDir tmp;
    MaterialParams params = test::small_params(9);
    test::randomize_masses(params, 13);
    params.bend_modulus[2] << 3e-3, 5e-4, 5e-4, 2e-3;
    const std::string path = tmp.file("params.dprm");
    save_params(params, path);
    const MaterialParams loaded = load_params(path);
    CHECK(loaded.n() == params.n());
    for (size_t i = 0; i < params.masses.size(); ++i)
        CHECK((loaded.masses[i] - params.masses[i]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.bend_modulus[2] - params.bend_modulus[2]).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((loaded.rest_edges - params.rest_edges).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.rest_bishop1 - params.rest_bishop1).cwiseAbs().maxCoeff() == 0.0);
    const RodState rest = make_rest_state(loaded, Vec3::Zero());
    CHECK(validate(loaded, rest).empty());
}

TEST_CASE("cloud frame and manifest round-trip") {
    const TempDir tmp;
    PointCloud cloud;
    cloud.points.resize(5, 3);
    cloud.points.setRandom();
    cloud.depth.resize(5);
    cloud.depth << 1.0, 1.1, 0.9, 1.3, 1.05;
    const std::string path = tmp.file("frame0.csv");
    save_cloud_csv(cloud, path);
    const PointCloud loaded = load_cloud_csv(path, 0.25);
    CHECK(loaded.frame_time == 0.25);
    CHECK((loaded.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);
    CHECK((loaded.depth - cloud.depth).cwiseAbs().maxCoeff() == 0.0);

    CloudManifest manifest;
    manifest.times = {0.0, 0.25};
    manifest.paths = {"frame0.csv", "frame1.csv"};
    const std::string mpath = tmp.file("manifest.csv");
    save_manifest(manifest, mpath);
    const CloudManifest mloaded = load_manifest(mpath);
    CHECK(mloaded.times == manifest.times);
    CHECK(mloaded.paths == manifest.paths);
}

TEST_CASE("camera config round-trip and unknown keys rejected") {
    const TempDir tmp;
    Camera cam;
    cam.fx = 612.5;
    cam.fy = 598.0;
    cam.cx = 322.0;
    cam.cy = 251.5;
    cam.position = Vec3(0.4, -1.0, -0.05);
    cam.axis_angle = Vec3(-1.2, 0.1, 0.05);
    const std::string path = tmp.file("camera.cfg");
    save_camera(cam, path);
    const Camera loaded = load_camera(path);
    CHECK(loaded.fx == cam.fx);
    CHECK(loaded.cy == cam.cy);
    CHECK((loaded.position - cam.position).norm() == 0.0);
    CHECK((loaded.axis_angle - cam.axis_angle).norm() == 0.0);

    const std::string bad = tmp.file("bad.cfg");
    std::ofstream f(bad);
    f << "fx=600\nzoom=2\n";
    f.close();
    CHECK_THROWS_AS(load_camera(bad), SimError);
}

TEST_CASE("kv parser: comments, trimming, duplicate rejection") {
    const TempDir tmp;
    const std::string path = tmp.file("run.cfg");
    {
        std::ofstream f(path);
        f << "# comment line\n"
          << "  steps = 500   # trailing\n"
          << "net=ckpt.dnet\n"
          << "\n";
    }
    const auto kv = parse_kv_file(path);
    CHECK(kv.at("steps") == "500");
    CHECK(kv.at("net") == "ckpt.dnet");

    {
        std::ofstream f(path);
        f << "a=1\na=2\n";
    }
    CHECK_THROWS_AS(parse_kv_file(path), SimError);
}

TEST_SUITE_END();
