#ifndef DROD_SCENARIO_HPP
#define DROD_SCENARIO_HPP

#include <cstdint>
#include <vector>

#include "drod/integrator.hpp"
#include "drod/types.hpp"

// Canned manipulation scenarios shared by the CLI and the test rigs: a
// hanging rod between two anchors with guaranteed slack, damped settling to
// an equilibrium, and smooth gripper schedules (swing + twist) that keep the
// anchor span feasible.

namespace drod {

// Rod shaped as a symmetric arc dipping in the x-z plane between anchors a
// chord of span_fraction * total length apart. Every edge has exact rest
// length, so the state is feasible by construction.
RodState hanging_arc_state(const MaterialParams &params, double span_fraction,
                           const Vec3 &origin = Vec3::Zero());

// Gripper poses consistent with a state's held edges (minimal rotations from
// the rest edges), with an optional extra right-gripper twist about its edge.
GripperInput pose_from_state(const RodState &state, const MaterialParams &params,
                             double right_twist = 0.0);

// Steps with static grippers and per-step velocity damping until the fastest
// vertex drops below speed_tol. Returns the settled state (velocities kept).
RodState settle_state(const RodState &state, const GripperInput &input,
                      const MaterialParams &params, const ResidualNet *net,
                      const StepConfig &cfg, double damping = 0.95,
                      int max_steps = 5000, double speed_tol = 1e-5);

struct SwingSpec {
    int steps = 500;
    double frequency_hz = 0.5;   // of the swing cycle
    double amplitude_y = 0.02;   // m
    double amplitude_z = 0.03;   // m
    double twist_amplitude = 0.5; // rad, right gripper about its edge
    std::uint64_t seed = 0;      // phase jitter
};

// Smooth periodic right-gripper motion around `base`; the left gripper holds
// still. Amplitudes are applied as offsets of the right anchor.
std::vector<GripperInput> swing_inputs(const GripperInput &base,
                                       const RodState &state,
                                       const MaterialParams &params,
                                       const StepConfig &cfg, const SwingSpec &spec);

} // namespace drod

#endif
