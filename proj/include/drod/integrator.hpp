#ifndef DROD_INTEGRATOR_HPP
#define DROD_INTEGRATOR_HPP

#include <optional>
#include <vector>

#include "drod/constraints.hpp"
#include "drod/energy.hpp"
#include "drod/residual_net.hpp"
#include "drod/step_config.hpp"
#include "drod/types.hpp"

// Semi-implicit Euler prediction and the full corrected one-step update:
// boundary placement, twist equilibrium, velocity/position updates with the
// optional learned residuals, inextensibility projection, and the final
// velocity-from-positions update.

namespace drod {

// Plain semi-implicit Euler: V' = V + dt M^-1 forces, X' = X + dt V'.
// `forces` are net applied forces in newtons. No boundary handling here; the
// caller re-applies poses afterwards.
RodState step_semi_implicit(const RodState &state, const Mat3X &forces,
                            const MaterialParams &params, const StepConfig &cfg);

// Everything one step computed, kept so reverse accumulation can replay it.
struct StepTrace {
    RodState bounded;     // state after apply_boundary
    ThetaSolve theta;
    Mat3X elastic_force;  // dP/dX at (bounded, theta*)
    bool net_used = false;
    NetOutput net_out;
    NetTape net_tape;
    std::vector<detail::PairUpdate> proj_log;
    ProjectionReport report;
};

RodState step_deform(const RodState &state, const GripperInput &input,
                     const MaterialParams &params, const ResidualNet *net,
                     const StepConfig &cfg, const VecX *theta_warm_start = nullptr,
                     StepTrace *trace = nullptr);

class RolloutError : public SimError {
  public:
    RolloutError(const std::string &what, Trajectory partial)
        : SimError(ErrorCode::NonConvergence, what), partial(std::move(partial)) {}
    Trajectory partial;
};

// Applies step_deform per input with theta warm-started across steps.
// Deterministic: identical inputs give bit-identical trajectories. A failing
// step aborts with the partial trajectory attached.
Trajectory rollout(const RodState &state0, const std::vector<GripperInput> &inputs,
                   const MaterialParams &params, const ResidualNet *net,
                   const StepConfig &cfg,
                   std::vector<StepTrace> *traces = nullptr,
                   std::vector<ProjectionReport> *reports = nullptr);

// 0.5 * sum_i v_i^T M_i v_i.
double kinetic_energy(const RodState &state, const MaterialParams &params);

} // namespace drod

#endif
