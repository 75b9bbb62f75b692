#ifndef DROD_TESTS_HELPERS_HPP
#define DROD_TESTS_HELPERS_HPP

#include <random>

#include "drod/energy.hpp"
#include "drod/integrator.hpp"
#include "drod/scenario.hpp"
#include "drod/types.hpp"

namespace drod::test {

inline UniformRodSpec small_spec(Eigen::Index n = 5) {
    UniformRodSpec spec;
    spec.n = n;
    spec.length = 0.1 * static_cast<double>(n - 1);
    spec.total_mass = 0.004 * static_cast<double>(n);
    spec.bend = 2e-3;
    spec.twist = 2e-3;
    return spec;
}

inline MaterialParams small_params(Eigen::Index n = 5) {
    return make_uniform_params(small_spec(n));
}

// Smoothly bent configuration built by walking exact rest-length edges along
// a slowly rotating direction, so every distance constraint is satisfied and
// the shape has nonzero curvature. `amplitude` is the direction deviation
// scale (dimensionless; ~0.3 gives a gentle arc).
inline RodState bent_state(const MaterialParams &params, double amplitude,
                           unsigned seed = 0) {
    const Eigen::Index n = params.n();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 6.28);
    const double p1 = phase(rng), p2 = phase(rng);
    const VecX rest = params.rest_edge_lengths();

    RodState s;
    s.positions.resize(n, 3);
    s.velocities = Mat3X::Zero(n, 3);
    s.positions.row(0).setZero();
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        const Vec3 dir = Vec3(1.0, amplitude * std::sin(2.4 * f + p1),
                              amplitude * std::sin(1.7 * f + p2))
                             .normalized();
        s.positions.row(i + 1) = s.positions.row(i) + (rest[i] * dir).transpose();
    }
    return s;
}

// Gripper poses consistent with the state's held edges.
inline GripperInput input_for(const RodState &state, const MaterialParams &params,
                              double right_twist = 0.0) {
    return pose_from_state(state, params, right_twist);
}

// Zero-sum length perturbations: slides each free vertex along its local
// tangent, stretching one adjacent edge and compressing the other, so the
// total chain length is preserved to first order and tight projections stay
// reachable.
inline void slide_noise(RodState &state, double sigma, unsigned seed) {
    const Eigen::Index n = state.n();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, sigma);
    for (Eigen::Index i = 2; i <= n - 3; ++i) {
        const Vec3 t =
            (state.positions.row(i + 1) - state.positions.row(i - 1)).normalized();
        state.positions.row(i) += (g(rng) * t).transpose();
    }
}

// Random net whose final decoder layer is also populated (fresh nets zero it
// so they start as pure physics).
inline ResidualNet live_net(Eigen::Index n, std::uint64_t seed,
                            const MaterialParams &params, double out_scale = 0.05) {
    ResidualNet net = make_residual_net(n, seed, params);
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::uniform_real_distribution<double> dist(-out_scale, out_scale);
    for (Eigen::Index j = 0; j < net.decoder_w2.cols(); ++j)
        for (Eigen::Index i = 0; i < net.decoder_w2.rows(); ++i)
            net.decoder_w2(i, j) = dist(rng);
    return net;
}

// Heterogeneous isotropic masses, seeded.
inline void randomize_masses(MaterialParams &params, unsigned seed,
                             double lo = 0.5, double hi = 3.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> scale(lo, hi);
    for (Vec3 &m : params.masses) m *= scale(rng);
}

inline double rel_err(const VecX &a, const VecX &b) {
    return (a - b).cwiseAbs().maxCoeff() / std::max(b.cwiseAbs().maxCoeff(), 1e-12);
}

inline VecX flatten(const Mat3X &m) {
    VecX v(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (int c = 0; c < 3; ++c) v[3 * i + c] = m(i, c);
    return v;
}

inline Mat3X unflatten(const VecX &v) {
    Mat3X m(v.size() / 3, 3);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (int c = 0; c < 3; ++c) m(i, c) = v[3 * i + c];
    return m;
}

} // namespace drod::test

#endif
