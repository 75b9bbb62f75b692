#include <doctest.h>

#include "drod/gradients.hpp"
#include "drod/train.hpp"
#include "helpers.hpp"

using namespace drod;

TEST_SUITE_BEGIN("diff-engine");

TEST_CASE("finite difference oracle sanity") {
    auto square = [](const VecX &x) { return x[0] * x[0]; };
    VecX x0(1);
    x0[0] = 3.0;
    const VecX g = finite_difference_oracle(square, x0, 1e-6);
    CHECK(g[0] == doctest::Approx(6.0).epsilon(1e-6));

    auto constant = [](const VecX &) { return 2.5; };
    VecX y0 = VecX::Zero(4);
    CHECK(finite_difference_oracle(constant, y0, 1e-6).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("loss_multistep spec values") {
    MaterialParams params = test::small_params(5);
    RodState s = make_rest_state(params, Vec3::Zero());
    Trajectory a;
    a.dt = 0.01;
    a.states = {s, s, s};
    a.inputs.resize(2);
    CHECK(loss_multistep(a, a, LossNorm::L1) == 0.0);

    Trajectory b = a;
    for (size_t t = 1; t < b.states.size(); ++t)
        for (Eigen::Index i = 0; i < 5; ++i)
            b.states[t].positions(i, 0) += 0.01;
    CHECK(loss_multistep(b, a, LossNorm::L1) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(loss_multistep(b, a, LossNorm::L2) == doctest::Approx(0.01).epsilon(1e-12));
}

namespace {

struct GradScene {
    MaterialParams params;
    RodState state0;
    std::vector<GripperInput> inputs;
    Trajectory truth;
    ResidualNet net;
    StepConfig cfg;
    TrainConfig tcfg;
};

// Five-vertex scene whose four steps exercise boundary motion, the inner
// solve, the net, and actual projection sweeps; truth comes from perturbed
// physics so the loss is away from its minimum (and the L1 kinks).
GradScene make_grad_scene(unsigned seed) {
    GradScene sc;
    sc.params = test::small_params(5);
    test::randomize_masses(sc.params, seed, 0.8, 1.6);

    sc.state0 = hanging_arc_state(sc.params, 0.82);
    test::slide_noise(sc.state0, 8e-4, seed + 50);
    sc.state0.velocities.setZero();

    sc.cfg.dt = 0.01;
    sc.cfg.projection_epsilon = 1e-4;
    sc.cfg.max_projection_iters = 500;
    sc.cfg.residual_enabled = true;

    const GripperInput base = test::input_for(sc.state0, sc.params);
    SwingSpec swing;
    swing.steps = 4;
    swing.frequency_hz = 2.0;
    swing.amplitude_y = 0.002;
    swing.amplitude_z = 0.0025;
    swing.twist_amplitude = 0.25;
    swing.seed = seed;
    sc.inputs = swing_inputs(base, sc.state0, sc.params, sc.cfg, swing);

    sc.net = test::live_net(5, seed + 1, sc.params, 0.01);

    // Truth: same inputs, stiffer material, no net.
    MaterialParams truth_params = sc.params;
    for (Mat2 &b : truth_params.bend_modulus) b *= 1.3;
    truth_params.twist_modulus *= 1.25;
    sc.truth = rollout(sc.state0, sc.inputs, truth_params, nullptr, sc.cfg);

    sc.tcfg.loss_norm = LossNorm::L1;
    sc.tcfg.train_masses = true;
    sc.tcfg.train_bend = true;
    sc.tcfg.train_twist = true;
    sc.tcfg.train_net = true;
    return sc;
}

double loss_of(const GradScene &sc, const MaterialParams &params,
               const ResidualNet &net) {
    const Trajectory pred = rollout(sc.state0, sc.inputs, params, &net, sc.cfg);
    return loss_multistep(pred, sc.truth, sc.tcfg.loss_norm);
}

} // namespace

TEST_CASE("rollout gradients match finite differences (T=5, n=5 rod)") {
    for (unsigned seed : {0u, 1u, 2u}) {
        const GradScene sc = make_grad_scene(seed);
        const GradientBundle g = grad_rollout(sc.state0, sc.inputs, sc.truth,
                                              sc.params, &sc.net, sc.cfg, sc.tcfg);
        CHECK(g.loss_value > 0.0);

        // The scene must actually exercise projection sweeps, or the
        // through-projection gradient path would go untested.
        {
            std::vector<ProjectionReport> reports;
            rollout(sc.state0, sc.inputs, sc.params, &sc.net, sc.cfg, nullptr,
                    &reports);
            int sweeps = 0;
            for (const auto &r : reports) sweeps += r.iterations;
            CHECK(sweeps > 0);
        }

        // Twist moduli.
        {
            VecX x0 = sc.params.twist_modulus;
            auto f = [&](const VecX &v) {
                MaterialParams p = sc.params;
                p.twist_modulus = v;
                return loss_of(sc, p, sc.net);
            };
            const VecX fd = finite_difference_oracle(f, x0, 1e-6);
            CHECK(test::rel_err(g.d_twist, fd) < 2e-4);
        }

        // Bend moduli: symmetric 3-parameter packing per interior vertex.
        {
            VecX x0(9);
            for (int k = 0; k < 3; ++k) {
                const Mat2 &b = sc.params.bend_modulus[static_cast<size_t>(k)];
                x0[3 * k] = b(0, 0);
                x0[3 * k + 1] = b(0, 1);
                x0[3 * k + 2] = b(1, 1);
            }
            auto f = [&](const VecX &v) {
                MaterialParams p = sc.params;
                for (int k = 0; k < 3; ++k) {
                    Mat2 b;
                    b << v[3 * k], v[3 * k + 1], v[3 * k + 1], v[3 * k + 2];
                    p.bend_modulus[static_cast<size_t>(k)] = b;
                }
                return loss_of(sc, p, sc.net);
            };
            // h = 1e-7: the L1 loss has kinks, and the finite-difference
            // error across a nearby kink shrinks only linearly in h.
            const VecX fd = finite_difference_oracle(f, x0, 1e-7);
            VecX analytic(9);
            for (int k = 0; k < 3; ++k) {
                const Mat2 &b = g.d_bend[static_cast<size_t>(k)];
                analytic[3 * k] = b(0, 0);
                analytic[3 * k + 1] = b(0, 1);
                analytic[3 * k + 2] = b(1, 1);
            }
            CHECK(test::rel_err(analytic, fd) < 2e-4);
        }

        // Per-vertex isotropic masses.
        {
            VecX x0(5);
            for (int i = 0; i < 5; ++i)
                x0[i] = sc.params.masses[static_cast<size_t>(i)].maxCoeff();
            auto f = [&](const VecX &v) {
                MaterialParams p = sc.params;
                for (int i = 0; i < 5; ++i)
                    p.masses[static_cast<size_t>(i)] = Vec3::Constant(v[i]);
                return loss_of(sc, p, sc.net);
            };
            const VecX fd = finite_difference_oracle(f, x0, 1e-6);
            CHECK(test::rel_err(g.d_mass, fd) < 2e-4);
        }

        // Net parameters, deterministic subsample.
        {
            VecX x0;
            sc.net.to_vector(x0);
            std::mt19937_64 pick(seed + 7);
            std::uniform_int_distribution<Eigen::Index> coord(0, x0.size() - 1);
            for (int k = 0; k < 60; ++k) {
                const Eigen::Index c = coord(pick);
                const double h = 1e-6 * std::max(1.0, std::abs(x0[c]));
                VecX xp = x0, xm = x0;
                xp[c] += h;
                xm[c] -= h;
                ResidualNet np = sc.net, nm = sc.net;
                np.from_vector(xp);
                nm.from_vector(xm);
                const double fd =
                    (loss_of(sc, sc.params, np) - loss_of(sc, sc.params, nm)) /
                    (2.0 * h);
                const double scale =
                    std::max({std::abs(fd), g.d_net.cwiseAbs().maxCoeff() * 1e-3,
                              1e-10});
                CHECK(std::abs(g.d_net[c] - fd) <= 2e-4 * scale + 1e-9);
            }
        }
    }
}

TEST_CASE("frozen components return zero gradients") {
    const GradScene sc = make_grad_scene(5);
    TrainConfig frozen = sc.tcfg;
    frozen.train_masses = false;
    frozen.train_bend = false;
    frozen.train_twist = false;
    frozen.train_net = false;
    const GradientBundle g = grad_rollout(sc.state0, sc.inputs, sc.truth,
                                          sc.params, &sc.net, sc.cfg, frozen);
    CHECK(g.d_mass.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_twist.cwiseAbs().maxCoeff() == 0.0);
    for (const Mat2 &b : g.d_bend) CHECK(b.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.d_net.cwiseAbs().maxCoeff() == 0.0);
    CHECK(g.loss_value > 0.0);
}

TEST_CASE("gradients are deterministic") {
    const GradScene sc = make_grad_scene(9);
    const GradientBundle a = grad_rollout(sc.state0, sc.inputs, sc.truth,
                                          sc.params, &sc.net, sc.cfg, sc.tcfg);
    const GradientBundle b = grad_rollout(sc.state0, sc.inputs, sc.truth,
                                          sc.params, &sc.net, sc.cfg, sc.tcfg);
    CHECK((a.d_twist - b.d_twist).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.d_net - b.d_net).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.loss_value == b.loss_value);
}

TEST_CASE("loss is invariant to a global translation of the whole problem") {
    const GradScene sc = make_grad_scene(11);
    const double base = loss_of(sc, sc.params, sc.net);

    const Vec3 shift(0.13, -0.07, 0.21);
    GradScene moved = sc;
    moved.state0.positions.rowwise() += shift.transpose();
    for (GripperInput &u : moved.inputs) {
        u.left.position += shift;
        u.right.position += shift;
    }
    for (RodState &st : moved.truth.states)
        st.positions.rowwise() += shift.transpose();
    const double shifted = loss_of(moved, moved.params, moved.net);
    CHECK(shifted == doctest::Approx(base).epsilon(1e-8));
}

TEST_CASE("implicit theta sensitivity: closed form and finite differences") {
    // Straight rod with a twisted right gripper: theta* solves a weighted
    // discrete Laplace problem, so the dense-QP derivative is available in
    // closed form.
    MaterialParams params = test::small_params(7);
    // Non-uniform twist moduli so the sensitivity is nontrivial.
    params.twist_modulus << 1e-3, 2e-3, 1.5e-3, 2.5e-3, 1.2e-3;
    RodState rest = make_rest_state(params, Vec3::Zero());
    const double twist = 0.4;
    const GripperInput u = test::input_for(rest, params, twist);
    const RodState held = apply_boundary(rest, u, params, 0.01);
    const ThetaSolve sol = solve_theta_star(held, u, params);
    const ThetaSensitivity sens = implicit_grad_theta(held, u, params, sol);

    const Eigen::Index ne = 6, nfree = ne - 2;

    // Dense assembly of H(beta) theta_free = rhs(beta).
    auto qp_solution = [&](const VecX &beta) {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(nfree, nfree);
        VecX rhs = VecX::Zero(nfree);
        for (Eigen::Index k = 0; k < beta.size(); ++k) {
            const double w = 2.0 * beta[k] / params.voronoi_lengths[k];
            const Eigen::Index ea = k, eb = k + 1;
            const bool fa = ea >= 1 && ea <= ne - 2;
            const bool fb = eb >= 1 && eb <= ne - 2;
            if (fa) h(ea - 1, ea - 1) += w;
            if (fb) h(eb - 1, eb - 1) += w;
            if (fa && fb) {
                h(ea - 1, eb - 1) -= w;
                h(eb - 1, ea - 1) -= w;
            }
            if (fa && !fb) rhs(ea - 1) += w * twist;
        }
        return std::pair(h, rhs);
    };

    for (Eigen::Index k = 0; k < 5; ++k) {
        // Analytic derivative of theta* = H^{-1} rhs with respect to beta_k.
        auto [h, rhs] = qp_solution(params.twist_modulus);
        const VecX theta_free = h.ldlt().solve(rhs);
        VecX beta_dir = VecX::Zero(5);
        beta_dir[k] = 1.0;
        auto [hp, rhsp] = qp_solution(params.twist_modulus + 1e-100 * beta_dir);
        (void)hp;
        (void)rhsp;
        // dH/dbeta_k and drhs/dbeta_k assembled directly:
        Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(nfree, nfree);
        VecX drhs = VecX::Zero(nfree);
        {
            const double w = 2.0 / params.voronoi_lengths[k];
            const Eigen::Index ea = k, eb = k + 1;
            const bool fa = ea >= 1 && ea <= ne - 2;
            const bool fb = eb >= 1 && eb <= ne - 2;
            if (fa) dh(ea - 1, ea - 1) += w;
            if (fb) dh(eb - 1, eb - 1) += w;
            if (fa && fb) {
                dh(ea - 1, eb - 1) -= w;
                dh(eb - 1, ea - 1) -= w;
            }
            if (fa && !fb) drhs(ea - 1) += w * twist;
        }
        const VecX closed_form = h.ldlt().solve(drhs - dh * theta_free);

        der::PotentialSeeds seeds;
        seeds.twist = beta_dir;
        const VecX jvp = sens.directional(seeds);
        CHECK(test::rel_err(jvp, closed_form) <
              1e-6 * std::max(1.0, closed_form.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("implicit theta sensitivity matches finite differences in X") {
    MaterialParams params = test::small_params(7);
    RodState s = test::bent_state(params, 0.3, 3);
    const GripperInput u = test::input_for(s, params, 0.25);
    const RodState held = apply_boundary(s, u, params, 0.01);
    const ThetaSolve sol = solve_theta_star(held, u, params);
    const ThetaSensitivity sens = implicit_grad_theta(held, u, params, sol);

    std::mt19937_64 rng(17);
    std::uniform_int_distribution<Eigen::Index> vertex(0, 6);
    std::uniform_int_distribution<int> axis(0, 2);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::Index vi = vertex(rng);
        const int c = axis(rng);
        der::PotentialSeeds seeds;
        seeds.x = Mat3X::Zero(7, 3);
        seeds.x(vi, c) = 1.0;
        const VecX jvp = sens.directional(seeds);

        const double h = 1e-6;
        RodState plus = held, minus = held;
        plus.positions(vi, c) += h;
        minus.positions(vi, c) -= h;
        const VecX tp = solve_theta_star(plus, u, params).theta_star;
        const VecX tm = solve_theta_star(minus, u, params).theta_star;
        const VecX fd = (tp.segment(1, 4) - tm.segment(1, 4)) / (2.0 * h);
        const double scale = std::max(fd.cwiseAbs().maxCoeff(), 1e-6);
        CHECK((jvp - fd).cwiseAbs().maxCoeff() <= 1e-5 * std::max(1.0, scale));
    }

    // A perturbation direction with no theta coupling: translating the whole
    // rod uniformly leaves the equilibrium untouched.
    der::PotentialSeeds seeds;
    seeds.x = Mat3X::Zero(7, 3);
    seeds.x.col(1).setOnes();
    CHECK(sens.directional(seeds).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("envelope consistency through the inner solve") {
    // The total derivative of P(X, theta*(X)) equals the partial derivative
    // at fixed theta* because dP/dtheta vanishes at the solution.
    MaterialParams params = test::small_params(5);
    RodState s = test::bent_state(params, 0.4, 7);
    const GripperInput u = test::input_for(s, params, 0.3);
    const RodState held = apply_boundary(s, u, params, 0.01);
    const ThetaSolve sol = solve_theta_star(held, u, params);
    const Mat3X partial = grad_potential_x(held, u, sol, params);

    auto f = [&](const VecX &x) {
        RodState probe = held;
        probe.positions = test::unflatten(x);
        const ThetaSolve ts = solve_theta_star(probe, u, params);
        return total_potential(probe, u, ts.theta_star, params).total;
    };
    const VecX fd = finite_difference_oracle(f, test::flatten(held.positions), 1e-6);
    CHECK(test::rel_err(test::flatten(partial), fd) < 1e-6);
}

TEST_SUITE_END();
