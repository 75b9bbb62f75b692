#include "drod/gradients.hpp"

#include <cmath>

namespace drod {

void AlphaAdjoint::set_zero(Eigen::Index n) {
    mass = VecX::Zero(n);
    bend.assign(static_cast<size_t>(n - 2), Mat2::Zero());
    twist = VecX::Zero(n - 2);
}

double loss_multistep(const Trajectory &pred, const Trajectory &truth,
                      LossNorm norm) {
    const size_t t_count = pred.states.size();
    if (t_count != truth.states.size() || t_count < 2)
        throw SimError(ErrorCode::InvalidArgument, "trajectory length mismatch");
    const Eigen::Index n = pred.states[0].n();
    if (truth.states[0].n() != n)
        throw SimError(ErrorCode::InvalidArgument, "vertex count mismatch");
    if ((pred.states[0].positions - truth.states[0].positions).cwiseAbs().maxCoeff() >
        1e-9)
        throw SimError(ErrorCode::InvalidArgument,
                       "prediction and truth must share the initial state");

    double acc = 0.0;
    for (size_t t = 1; t < t_count; ++t) {
        const Mat3X err = pred.states[t].positions - truth.states[t].positions;
        for (Eigen::Index i = 0; i < n; ++i)
            acc += norm == LossNorm::L1 ? err.row(i).cwiseAbs().sum()
                                        : err.row(i).norm();
    }
    return acc / (static_cast<double>(t_count - 1) * static_cast<double>(n));
}

namespace {

// Dual parts of the potential gradient under the given input seeds: one
// tape-over-dual sweep yields every Hessian-vector product at once.
struct DualGrad {
    Mat3X x;
    VecX theta_free;
    AlphaAdjoint alpha;
};

DualGrad dual_sweep(const RodState &state, const VecX &theta_full,
                    const MaterialParams &params,
                    const der::PotentialConstants &constants,
                    const der::PotentialSeeds &seeds) {
    der::TapedPotential<ad::Dual> tp;
    der::build_taped_potential<ad::Dual>(state, theta_full, params, constants,
                                         &seeds, tp);
    std::vector<ad::Dual> adj;
    tp.tape.backward(tp.total_idx, adj);

    const Eigen::Index n = state.n();
    DualGrad out;
    out.x.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
            out.x(i, c) = adj[static_cast<size_t>(tp.x_idx[static_cast<size_t>(3 * i + c)])].d;
    out.theta_free.resize(static_cast<Eigen::Index>(tp.theta_free_idx.size()));
    for (size_t k = 0; k < tp.theta_free_idx.size(); ++k)
        out.theta_free[static_cast<Eigen::Index>(k)] =
            adj[static_cast<size_t>(tp.theta_free_idx[k])].d;
    out.alpha.set_zero(n);
    for (Eigen::Index k = 0; k < n - 2; ++k) {
        const double d11 = adj[static_cast<size_t>(tp.bend_idx[static_cast<size_t>(3 * k)])].d;
        const double d12 = adj[static_cast<size_t>(tp.bend_idx[static_cast<size_t>(3 * k + 1)])].d;
        const double d22 = adj[static_cast<size_t>(tp.bend_idx[static_cast<size_t>(3 * k + 2)])].d;
        out.alpha.bend[static_cast<size_t>(k)] << d11, d12, d12, d22;
        out.alpha.twist[k] = adj[static_cast<size_t>(tp.twist_idx[static_cast<size_t>(k)])].d;
    }
    return out;
}

} // namespace

ThetaSensitivity::ThetaSensitivity(const RodState &state, const GripperInput &input,
                                   const MaterialParams &params,
                                   const ThetaSolve &solve)
    : state_(state), params_(params), solve_(solve),
      constants_(der::make_potential_constants(params, input)) {
    if (solve_.stationarity > 1e-6)
        throw SimError(ErrorCode::InvalidArgument,
                       "implicit differentiation needs a stationary inner solve");
}

VecX ThetaSensitivity::solve_free(const VecX &rhs) const {
    VecX w;
    if (!detail::tridiag_solve(solve_.hess_diag, solve_.hess_off, 0.0, rhs, w))
        throw SimError(ErrorCode::IllConditioned,
                       "twist Hessian is singular at the equilibrium");
    return w;
}

VecX ThetaSensitivity::directional(const der::PotentialSeeds &seeds) const {
    const DualGrad g =
        dual_sweep(state_, solve_.theta_star, params_, constants_, seeds);
    return -solve_free(g.theta_free);
}

void ThetaSensitivity::accumulate(const VecX &theta_bar, Mat3X &x_bar,
                                  AlphaAdjoint &alpha_bar) const {
    const VecX w = solve_free(theta_bar);
    der::PotentialSeeds seeds;
    seeds.theta_free = w;
    const DualGrad g =
        dual_sweep(state_, solve_.theta_star, params_, constants_, seeds);
    x_bar -= g.x;
    alpha_bar.mass -= g.alpha.mass;
    for (size_t k = 0; k < alpha_bar.bend.size(); ++k)
        alpha_bar.bend[k] -= g.alpha.bend[k];
    alpha_bar.twist -= g.alpha.twist;
}

namespace {

// d(per-vertex norm)/d(error) scaled by the averaging factor.
Mat3X loss_grad(const Mat3X &err, LossNorm norm, double scale) {
    Mat3X g = Mat3X::Zero(err.rows(), 3);
    for (Eigen::Index i = 0; i < err.rows(); ++i) {
        if (norm == LossNorm::L1) {
            for (int c = 0; c < 3; ++c) {
                const double e = err(i, c);
                g(i, c) = e > 0.0 ? scale : (e < 0.0 ? -scale : 0.0);
            }
        } else {
            const double len = err.row(i).norm();
            if (len > 0.0) g.row(i) = scale * err.row(i) / len;
        }
    }
    return g;
}

bool vertex_free(Eigen::Index v, Eigen::Index n) { return v >= 2 && v <= n - 3; }

} // namespace

GradientBundle grad_rollout(const RodState &state0,
                            const std::vector<GripperInput> &inputs,
                            const Trajectory &truth, const MaterialParams &params,
                            const ResidualNet *net, const StepConfig &cfg,
                            const TrainConfig &tcfg) {
    if (truth.states.size() != inputs.size() + 1)
        throw SimError(ErrorCode::InvalidArgument,
                       "truth length must be inputs length + 1");
    const Eigen::Index n = state0.n();

    std::vector<StepTrace> traces;
    const Trajectory pred = rollout(state0, inputs, params, net, cfg, &traces);

    GradientBundle bundle;
    bundle.loss_value = loss_multistep(pred, truth, tcfg.loss_norm);

    AlphaAdjoint alpha_bar;
    alpha_bar.set_zero(n);
    VecX net_bar;
    if (net) net_bar = VecX::Zero(net->parameter_count());

    const size_t steps = inputs.size();
    const double scale =
        1.0 / (static_cast<double>(steps) * static_cast<double>(n));

    Mat3X x_bar = Mat3X::Zero(n, 3);
    Mat3X v_bar = Mat3X::Zero(n, 3);

    for (size_t s = steps; s-- > 0;) {
        const StepTrace &tr = traces[s];
        const RodState &next = pred.states[s + 1];

        // Loss contribution of the state this step produced.
        x_bar += loss_grad(next.positions - truth.states[s + 1].positions,
                           tcfg.loss_norm, scale);

        // V_{t+1} = (X_proj - X_t) / dt.
        Mat3X proj_bar = x_bar + v_bar / cfg.dt;
        Mat3X prev_x_bar = -v_bar / cfg.dt;

        // Projection sweeps, replayed in reverse.
        VecX mass_bar_step = VecX::Zero(n);
        for (size_t u = tr.proj_log.size(); u-- > 0;) {
            const detail::PairUpdate &up = tr.proj_log[u];
            const Eigen::Index i = up.pair, j = up.pair + 1;
            const Vec3 d = up.xj - up.xi;
            const double len = d.norm();
            const double r = up.rest;
            const Vec3 yi_bar = proj_bar.row(i);
            const Vec3 yj_bar = proj_bar.row(j);
            const Vec3 g_bar = up.beta_i * yi_bar - up.beta_j * yj_bar;
            const Vec3 d_bar = (1.0 - r / len) * g_bar +
                               (r / (len * len * len)) * d * d.dot(g_bar);
            proj_bar.row(i) = yi_bar - d_bar;
            proj_bar.row(j) = yj_bar + d_bar;

            if (vertex_free(i, n) && vertex_free(j, n)) {
                const Vec3 g = (1.0 - r / len) * d;
                const double bi_bar = yi_bar.dot(g);
                const double bj_bar = -yj_bar.dot(g);
                const double sum = up.mass_i + up.mass_j;
                mass_bar_step[i] += up.beta_i / sum * (bj_bar - bi_bar);
                mass_bar_step[j] += up.beta_j / sum * (bi_bar - bj_bar);
            }
        }
        alpha_bar.mass += mass_bar_step;

        // Boundary overwrite: held rows of the integrated positions were
        // replaced by the bounded positions.
        Mat3X bounded_x_bar = Mat3X::Zero(n, 3);
        Mat3X integ_x_bar = proj_bar;
        for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(1), n - 2, n - 1}) {
            bounded_x_bar.row(i) = proj_bar.row(i);
            integ_x_bar.row(i).setZero();
        }

        // X' = X_b + dt (V' + DNN_v).
        bounded_x_bar += integ_x_bar;
        Mat3X vprime_bar = cfg.dt * integ_x_bar;
        Mat3X dnnv_bar = cfg.dt * integ_x_bar;

        // V' = V_b + dt (-(F + DNN_f) / m + g).
        Mat3X bounded_v_bar = vprime_bar;
        Mat3X force_bar(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 &m = params.masses[static_cast<size_t>(i)];
            force_bar.row(i) =
                -cfg.dt * vprime_bar.row(i).cwiseQuotient(m.transpose());
            const Vec3 total_force =
                tr.elastic_force.row(i) + tr.net_out.force.row(i);
            alpha_bar.mass[i] += cfg.dt *
                                 vprime_bar.row(i)
                                     .cwiseProduct(total_force.transpose())
                                     .cwiseQuotient(m.cwiseProduct(m).transpose())
                                     .sum();
        }

        // Residual net.
        if (tr.net_used) {
            const NetBackward nb =
                net_backward(*net, tr.net_tape, force_bar, dnnv_bar);
            bounded_x_bar += nb.d_positions;
            bounded_v_bar += nb.d_velocities;
            alpha_bar.mass += nb.d_mass;
            for (Eigen::Index k = 0; k < n - 2; ++k) {
                alpha_bar.bend[static_cast<size_t>(k)](0, 0) += nb.d_bend_trace[k];
                alpha_bar.bend[static_cast<size_t>(k)](1, 1) += nb.d_bend_trace[k];
                alpha_bar.twist[k] += nb.d_twist[k];
            }
            VecX g;
            nb.param_grad.to_vector(g);
            net_bar += g;
        }

        // Elastic force F = dP/dX(X_b, theta*): one dual sweep seeded with the
        // force adjoint gives H_xx u, H_theta-x u and H_alpha-x u.
        const der::PotentialConstants constants =
            der::make_potential_constants(params, inputs[s]);
        der::PotentialSeeds force_seeds;
        force_seeds.x = force_bar;
        const DualGrad fg = dual_sweep(tr.bounded, tr.theta.theta_star, params,
                                       constants, force_seeds);
        bounded_x_bar += fg.x;
        VecX theta_bar = fg.theta_free;
        alpha_bar.mass += fg.alpha.mass;
        for (size_t k = 0; k < alpha_bar.bend.size(); ++k)
            alpha_bar.bend[k] += fg.alpha.bend[k];
        alpha_bar.twist += fg.alpha.twist;

        // Inner solve via the implicit function theorem.
        if (theta_bar.cwiseAbs().maxCoeff() > 0.0) {
            const ThetaSensitivity sens(tr.bounded, inputs[s], params, tr.theta);
            sens.accumulate(theta_bar, bounded_x_bar, alpha_bar);
        }

        // apply_boundary: interior rows pass through; held velocity rows are
        // (pose - X_t) / dt.
        Mat3X prev_v_bar = Mat3X::Zero(n, 3);
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool held = i <= 1 || i >= n - 2;
            if (held) {
                prev_x_bar.row(i) -= bounded_v_bar.row(i) / cfg.dt;
            } else {
                prev_x_bar.row(i) += bounded_x_bar.row(i);
                prev_v_bar.row(i) = bounded_v_bar.row(i);
            }
        }

        x_bar = prev_x_bar;
        v_bar = prev_v_bar;
    }

    bundle.d_mass = tcfg.train_masses ? alpha_bar.mass : VecX::Zero(n);
    bundle.d_twist = tcfg.train_twist ? alpha_bar.twist : VecX::Zero(n - 2);
    bundle.d_bend.assign(static_cast<size_t>(n - 2), Mat2::Zero());
    if (tcfg.train_bend) bundle.d_bend = alpha_bar.bend;
    if (net) bundle.d_net = tcfg.train_net ? net_bar : VecX::Zero(net_bar.size());

    double sq = bundle.d_mass.squaredNorm() + bundle.d_twist.squaredNorm() +
                bundle.d_net.squaredNorm();
    for (const Mat2 &b : bundle.d_bend) sq += b.squaredNorm();
    if (std::sqrt(sq) > 1e6)
        bundle.diagnostic = "gradient norm " + std::to_string(std::sqrt(sq)) +
                            " exceeds 1e6";
    return bundle;
}

VecX finite_difference_oracle(const std::function<double(const VecX &)> &f,
                              const VecX &x0, double h) {
    VecX g(x0.size());
    for (Eigen::Index k = 0; k < x0.size(); ++k) {
        const double hk = h * std::max(1.0, std::abs(x0[k]));
        VecX xp = x0, xm = x0;
        xp[k] += hk;
        xm[k] -= hk;
        const double fp = f(xp);
        const double fm = f(xm);
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw SimError(ErrorCode::InvalidArgument,
                           "finite differences hit a non-finite value");
        g[k] = (fp - fm) / (2.0 * hk);
    }
    return g;
}

} // namespace drod
