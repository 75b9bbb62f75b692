#include "drod/scenario.hpp"

#include <cmath>
#include <random>

namespace drod {

RodState hanging_arc_state(const MaterialParams &params, double span_fraction,
                           const Vec3 &origin) {
    if (!(span_fraction > 0.0) || span_fraction >= 1.0)
        throw SimError(ErrorCode::InvalidArgument,
                       "span fraction must be in (0, 1)");
    const Eigen::Index n = params.n();
    const VecX rest = params.rest_edge_lengths();
    const double total = rest.sum();
    const double span = span_fraction * total;

    // Symmetric arc: edge i tilts by phi * (1 - 2 (i + 1/2) / (n-1)) from the
    // chord; bisect phi so the chord closes at the requested span.
    auto chord_of = [&](double phi) {
        double x = 0.0;
        for (Eigen::Index i = 0; i + 1 < n; ++i) {
            const double f = (static_cast<double>(i) + 0.5) / static_cast<double>(n - 1);
            x += rest[i] * std::cos(phi * (1.0 - 2.0 * f));
        }
        return x;
    };
    double lo = 0.0, hi = M_PI / 2;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (chord_of(mid) > span ? lo : hi) = mid;
    }
    const double phi = 0.5 * (lo + hi);

    RodState s;
    s.positions.resize(n, 3);
    s.velocities = Mat3X::Zero(n, 3);
    s.positions.row(0) = origin;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double f = (static_cast<double>(i) + 0.5) / static_cast<double>(n - 1);
        const double a = phi * (1.0 - 2.0 * f);
        const Vec3 dir(std::cos(a), 0.0, -std::sin(a));
        s.positions.row(i + 1) = s.positions.row(i) + (rest[i] * dir).transpose();
    }
    return s;
}

GripperInput pose_from_state(const RodState &state, const MaterialParams &params,
                             double right_twist) {
    const Eigen::Index n = state.n();
    const Vec3 e0 = state.positions.row(1) - state.positions.row(0);
    const Vec3 el = state.positions.row(n - 1) - state.positions.row(n - 2);

    GripperInput u;
    u.left.position = state.positions.row(0);
    u.right.position = state.positions.row(n - 1);
    const Eigen::Matrix3d rl = Eigen::Quaterniond::FromTwoVectors(
                                   params.rest_edges.row(0).normalized(),
                                   e0.normalized())
                                   .toRotationMatrix();
    Eigen::Matrix3d rr = Eigen::Quaterniond::FromTwoVectors(
                             params.rest_edges.row(n - 2).normalized(),
                             el.normalized())
                             .toRotationMatrix();
    if (right_twist != 0.0)
        rr = Eigen::AngleAxisd(right_twist, el.normalized()).toRotationMatrix() * rr;
    const Eigen::AngleAxisd al(rl), ar(rr);
    u.left.axis_angle = al.angle() * al.axis();
    u.right.axis_angle = ar.angle() * ar.axis();
    return u;
}

RodState settle_state(const RodState &state, const GripperInput &input,
                      const MaterialParams &params, const ResidualNet *net,
                      const StepConfig &cfg, double damping, int max_steps,
                      double speed_tol) {
    RodState s = state;
    VecX warm;
    for (int k = 0; k < max_steps; ++k) {
        StepTrace tr;
        s = step_deform(s, input, params, net, cfg, warm.size() ? &warm : nullptr,
                        &tr);
        warm = tr.theta.theta_star;
        s.velocities *= damping;
        if (s.velocities.rowwise().norm().maxCoeff() < speed_tol) return s;
    }
    return s;
}

std::vector<GripperInput> swing_inputs(const GripperInput &base,
                                       const RodState &state,
                                       const MaterialParams &params,
                                       const StepConfig &cfg, const SwingSpec &spec) {
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
    const double phase_y = ph(rng), phase_z = ph(rng), phase_t = ph(rng);

    const Eigen::Index n = state.n();
    const Vec3 el = state.positions.row(n - 1) - state.positions.row(n - 2);
    const Eigen::Matrix3d rr_base = axis_angle_matrix(base.right.axis_angle);

    std::vector<GripperInput> inputs;
    inputs.reserve(static_cast<size_t>(spec.steps));
    for (int t = 0; t < spec.steps; ++t) {
        const double w = 2.0 * M_PI * spec.frequency_hz * (t + 1) * cfg.dt;
        GripperInput u = base;
        u.right.position.y() += spec.amplitude_y * std::sin(w + phase_y) -
                                spec.amplitude_y * std::sin(phase_y);
        u.right.position.z() += spec.amplitude_z * std::sin(w + phase_z) -
                                spec.amplitude_z * std::sin(phase_z);
        const double twist = spec.twist_amplitude *
                             (std::sin(w + phase_t) - std::sin(phase_t));
        const Eigen::Matrix3d rr =
            Eigen::AngleAxisd(twist, el.normalized()).toRotationMatrix() * rr_base;
        const Eigen::AngleAxisd ar(rr);
        u.right.axis_angle = ar.angle() * ar.axis();
        inputs.push_back(u);
    }
    return inputs;
}

} // namespace drod
