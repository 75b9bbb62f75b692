#include "drod/train.hpp"

#include <cmath>
#include <random>

namespace drod {

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double softplus_inverse(double y) {
    if (y > 30.0) return y;
    return std::log(std::expm1(y));
}

namespace {

// Window of `horizon` states starting at `start`.
Trajectory window_of(const Trajectory &traj, size_t start, int horizon) {
    Trajectory w;
    w.dt = traj.dt;
    w.states.assign(traj.states.begin() + static_cast<long>(start),
                    traj.states.begin() + static_cast<long>(start) +
                        static_cast<long>(horizon));
    w.inputs.assign(traj.inputs.begin() + static_cast<long>(start),
                    traj.inputs.begin() + static_cast<long>(start) +
                        static_cast<long>(horizon) - 1);
    return w;
}

void floor_spd(Mat2 &b) {
    b = 0.5 * (b + b.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat2> es(b);
    Vec2 ev = es.eigenvalues().cwiseMax(1e-8);
    b = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

TrainResult train(const std::vector<Trajectory> &dataset,
                  const MaterialParams &params0, const ResidualNet &net0,
                  const TrainConfig &cfg, const StepConfig &step_cfg,
                  const std::vector<Trajectory> *eval_set) {
    if (dataset.empty())
        throw SimError(ErrorCode::InvalidArgument, "empty training dataset");
    for (const Trajectory &t : dataset)
        if (static_cast<int>(t.states.size()) < cfg.horizon)
            throw SimError(ErrorCode::InvalidArgument,
                           "trajectory shorter than the training horizon");
    const std::vector<Trajectory> &evals = eval_set ? *eval_set : dataset;

    TrainResult result;
    result.params = params0;
    result.net = net0;

    const Eigen::Index n = params0.n();

    VecX net_vec;
    result.net.to_vector(net_vec);

    std::mt19937_64 rng(cfg.seed);

    auto eval_loss = [&]() {
        double acc = 0.0;
        for (const Trajectory &t : evals) {
            const Trajectory w = window_of(t, 0, cfg.horizon);
            const Trajectory pred =
                rollout(w.states[0], w.inputs, result.params, &result.net, step_cfg);
            acc += loss_multistep(pred, w, cfg.loss_norm);
        }
        return acc / static_cast<double>(evals.size());
    };

    double initial_loss = -1.0;
    int high_loss_streak = 0;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        double train_acc = 0.0;
        double gnorm_acc = 0.0;
        int windows = 0;

        for (const Trajectory &traj : dataset) {
            const size_t max_start = traj.states.size() - static_cast<size_t>(cfg.horizon);
            std::uniform_int_distribution<size_t> pick(0, max_start);
            const Trajectory w = window_of(traj, pick(rng), cfg.horizon);

            const GradientBundle g =
                grad_rollout(w.states[0], w.inputs, w, result.params, &result.net,
                             step_cfg, cfg);
            train_acc += g.loss_value;
            ++windows;

            // Projected SGD: plain steps with feasibility restored by floors.
            // (A softplus reparameterization scales the effective step by the
            // parameter squared, which stalls moduli of order 1e-3 entirely.)
            double sq = 0.0;
            if (cfg.learning_rate > 0.0) {
                if (cfg.train_twist)
                    for (Eigen::Index k = 0; k < n - 2; ++k) {
                        sq += g.d_twist[k] * g.d_twist[k];
                        result.params.twist_modulus[k] = std::max(
                            result.params.twist_modulus[k] -
                                cfg.learning_rate * g.d_twist[k],
                            1e-8);
                    }
                if (cfg.train_bend)
                    for (Eigen::Index k = 0; k < n - 2; ++k) {
                        Mat2 &b = result.params.bend_modulus[static_cast<size_t>(k)];
                        const Mat2 &db = g.d_bend[static_cast<size_t>(k)];
                        sq += db.squaredNorm();
                        b -= cfg.learning_rate * db;
                        floor_spd(b);
                    }
                if (cfg.train_masses)
                    for (Eigen::Index i = 0; i < n; ++i) {
                        sq += g.d_mass[i] * g.d_mass[i];
                        const double m = std::max(
                            result.params.masses[static_cast<size_t>(i)].maxCoeff() -
                                cfg.learning_rate * g.d_mass[i],
                            1e-8);
                        result.params.masses[static_cast<size_t>(i)] =
                            Vec3::Constant(m);
                    }
                if (cfg.train_net && g.d_net.size()) {
                    sq += g.d_net.squaredNorm();
                    net_vec -= cfg.learning_rate * g.d_net;
                    result.net.from_vector(net_vec);
                }
            }
            gnorm_acc += std::sqrt(sq);
        }

        EpochStats st;
        st.epoch = epoch;
        st.train_loss = train_acc / windows;
        st.eval_loss = eval_loss();
        st.grad_norm = gnorm_acc / windows;
        result.history.push_back(st);

        if (initial_loss < 0.0) initial_loss = st.train_loss;
        high_loss_streak = st.train_loss > 10.0 * initial_loss ? high_loss_streak + 1 : 0;
        if (high_loss_streak >= 3) {
            result.diverged = true;
            break;
        }
    }
    return result;
}

} // namespace drod
