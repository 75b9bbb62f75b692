#include <doctest.h>

#include "drod/train.hpp"
#include "helpers.hpp"

using namespace drod;

TEST_SUITE_BEGIN("train");

namespace {

// Short synthetic dataset: swings of a hanging 7-vertex rod.
std::vector<Trajectory> make_dataset(const MaterialParams &params,
                                     const StepConfig &cfg, int trajectories,
                                     int steps, unsigned seed0) {
    RodState arc = hanging_arc_state(params, 0.8);
    const GripperInput base = pose_from_state(arc, params);
    RodState start = settle_state(arc, base, params, nullptr, cfg, 0.9, 3000);

    std::vector<Trajectory> out;
    for (int k = 0; k < trajectories; ++k) {
        SwingSpec swing;
        swing.steps = steps;
        swing.seed = seed0 + static_cast<unsigned>(k);
        swing.amplitude_y = 0.015;
        swing.amplitude_z = 0.02;
        swing.twist_amplitude = 0.4;
        const auto inputs = swing_inputs(base, start, params, cfg, swing);
        out.push_back(rollout(start, inputs, params, nullptr, cfg));
    }
    return out;
}

} // namespace

TEST_CASE("softplus reparameterization round-trips") {
    for (double v : {1e-4, 1e-2, 0.5, 3.0, 40.0})
        CHECK(softplus(softplus_inverse(v)) == doctest::Approx(v).epsilon(1e-10));
}

TEST_CASE("zero learning rate leaves parameters untouched and history flat") {
    MaterialParams params = test::small_params(7);
    StepConfig cfg;
    cfg.projection_epsilon = 1e-4;
    cfg.max_projection_iters = 300;
    const auto dataset = make_dataset(params, cfg, 2, 30, 3);

    TrainConfig tcfg;
    tcfg.horizon = 10;
    tcfg.learning_rate = 0.0;
    tcfg.max_epochs = 4;
    tcfg.seed = 5;
    tcfg.train_masses = false;
    tcfg.train_net = true;

    const ResidualNet net0 = zero_residual_net(7);
    const TrainResult res = train(dataset, params, net0, tcfg, cfg);
    REQUIRE(res.history.size() == 4);
    for (const EpochStats &st : res.history)
        CHECK(st.eval_loss == doctest::Approx(res.history[0].eval_loss));
    for (Eigen::Index k = 0; k < params.twist_modulus.size(); ++k)
        CHECK(res.params.twist_modulus[k] == params.twist_modulus[k]);
    VecX v0, v1;
    net0.to_vector(v0);
    res.net.to_vector(v1);
    CHECK((v0 - v1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("training is deterministic under a fixed seed") {
    MaterialParams params = test::small_params(7);
    StepConfig cfg;
    cfg.projection_epsilon = 1e-4;
    cfg.max_projection_iters = 300;
    const auto dataset = make_dataset(params, cfg, 2, 30, 11);

    MaterialParams init = params;
    for (Mat2 &b : init.bend_modulus) b *= 1.4;
    init.twist_modulus *= 1.3;

    TrainConfig tcfg;
    tcfg.horizon = 10;
    tcfg.learning_rate = 3e-4;
    tcfg.max_epochs = 3;
    tcfg.seed = 21;
    tcfg.train_net = false;

    const ResidualNet net0 = zero_residual_net(7);
    const TrainResult a = train(dataset, init, net0, tcfg, cfg);
    const TrainResult b = train(dataset, init, net0, tcfg, cfg);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t k = 0; k < a.history.size(); ++k) {
        CHECK(a.history[k].train_loss == b.history[k].train_loss);
        CHECK(a.history[k].eval_loss == b.history[k].eval_loss);
    }
    for (Eigen::Index k = 0; k < init.twist_modulus.size(); ++k)
        CHECK(a.params.twist_modulus[k] == b.params.twist_modulus[k]);
}

TEST_CASE("updates respect feasibility: moduli stay positive definite") {
    MaterialParams params = test::small_params(7);
    StepConfig cfg;
    cfg.projection_epsilon = 1e-4;
    cfg.max_projection_iters = 300;
    const auto dataset = make_dataset(params, cfg, 1, 25, 29);

    MaterialParams init = params;
    init.twist_modulus *= 0.2;
    TrainConfig tcfg;
    tcfg.horizon = 8;
    tcfg.learning_rate = 1e-2; // deliberately aggressive
    tcfg.max_epochs = 5;
    tcfg.seed = 2;
    tcfg.train_net = false;
    tcfg.train_masses = true;

    const TrainResult res = train(dataset, init, zero_residual_net(7), tcfg, cfg);
    for (Eigen::Index k = 0; k < res.params.twist_modulus.size(); ++k)
        CHECK(res.params.twist_modulus[k] > 0.0);
    for (const Vec3 &m : res.params.masses) CHECK(m.minCoeff() > 0.0);
    for (const Mat2 &b : res.params.bend_modulus) {
        Eigen::SelfAdjointEigenSolver<Mat2> es(b);
        CHECK(es.eigenvalues().minCoeff() >= 1e-8 * 0.99);
        CHECK(std::abs(b(0, 1) - b(1, 0)) < 1e-15);
    }
}

TEST_SUITE_END();
