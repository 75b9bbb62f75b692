#include "drod/integrator.hpp"

namespace drod {

RodState step_semi_implicit(const RodState &state, const Mat3X &forces,
                            const MaterialParams &params, const StepConfig &cfg) {
    if (!forces.allFinite())
        throw SimError(ErrorCode::InvalidArgument, "non-finite forces");
    if (forces.rows() != state.n())
        throw SimError(ErrorCode::InvalidArgument, "forces row count mismatch");

    const Eigen::Index n = state.n();
    RodState out = state;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 &m = params.masses[static_cast<size_t>(i)];
        if (!(m.minCoeff() > 0.0))
            throw SimError(ErrorCode::InvalidArgument,
                           "singular mass at vertex " + std::to_string(i));
        out.velocities.row(i) =
            state.velocities.row(i) +
            cfg.dt * forces.row(i).cwiseQuotient(m.transpose());
    }
    out.positions = state.positions + cfg.dt * out.velocities;
    out.time = state.time + cfg.dt;
    return out;
}

RodState step_deform(const RodState &state, const GripperInput &input,
                     const MaterialParams &params, const ResidualNet *net,
                     const StepConfig &cfg, const VecX *theta_warm_start,
                     StepTrace *trace) {
    const Eigen::Index n = state.n();

    RodState bounded = apply_boundary(state, input, params, cfg.dt);
    ThetaSolve theta = solve_theta_star(bounded, input, params, theta_warm_start);
    const Mat3X force = grad_potential_x(bounded, input, theta, params);

    const bool use_net = net != nullptr && cfg.residual_enabled;
    NetOutput net_out;
    NetTape net_tape;
    if (use_net) {
        net_out = net_forward_tape(*net, bounded, params, net_tape);
    } else {
        net_out.force = Mat3X::Zero(n, 3);
        net_out.velocity = Mat3X::Zero(n, 3);
    }

    RodState next = bounded;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 &m = params.masses[static_cast<size_t>(i)];
        const Vec3 accel =
            -(force.row(i) + net_out.force.row(i)).transpose().cwiseQuotient(m) +
            params.gravity;
        next.velocities.row(i) = bounded.velocities.row(i) + cfg.dt * accel.transpose();
    }
    next.positions =
        bounded.positions + cfg.dt * (next.velocities + net_out.velocity);

    // Held vertices follow the poses exactly.
    for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(1), n - 2, n - 1})
        next.positions.row(i) = bounded.positions.row(i);

    auto [projected, report] = detail::project(
        next, params, cfg, true, trace ? &trace->proj_log : nullptr);

    projected.velocities = (projected.positions - state.positions) / cfg.dt;
    projected.time = state.time + cfg.dt;

    if (trace) {
        trace->bounded = std::move(bounded);
        trace->theta = theta;
        trace->elastic_force = force;
        trace->net_used = use_net;
        trace->net_out = std::move(net_out);
        trace->net_tape = std::move(net_tape);
        trace->report = report;
    }
    return projected;
}

Trajectory rollout(const RodState &state0, const std::vector<GripperInput> &inputs,
                   const MaterialParams &params, const ResidualNet *net,
                   const StepConfig &cfg, std::vector<StepTrace> *traces,
                   std::vector<ProjectionReport> *reports) {
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.states.reserve(inputs.size() + 1);
    traj.states.push_back(state0);
    traj.inputs = inputs;
    if (traces) traces->clear();
    if (reports) reports->clear();

    VecX warm;
    for (size_t t = 0; t < inputs.size(); ++t) {
        try {
            StepTrace local;
            RodState next =
                step_deform(traj.states.back(), inputs[t], params, net, cfg,
                            warm.size() ? &warm : nullptr, &local);
            warm = local.theta.theta_star;
            if (reports) reports->push_back(local.report);
            if (traces) traces->push_back(std::move(local));
            traj.states.push_back(std::move(next));
        } catch (const SimError &err) {
            traj.inputs.resize(traj.states.size() - 1);
            throw RolloutError("step " + std::to_string(t) + ": " + err.what(),
                               std::move(traj));
        }
    }
    return traj;
}

double kinetic_energy(const RodState &state, const MaterialParams &params) {
    double e = 0.0;
    for (Eigen::Index i = 0; i < state.n(); ++i) {
        const Vec3 v = state.velocities.row(i);
        e += 0.5 * v.dot(params.masses[static_cast<size_t>(i)].cwiseProduct(v));
    }
    return e;
}

} // namespace drod
