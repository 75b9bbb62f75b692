#ifndef DROD_RESIDUAL_NET_HPP
#define DROD_RESIDUAL_NET_HPP

#include <cstdint>

#include "drod/types.hpp"

// Learned integration correction: a small graph-convolution network over the
// rod's chain graph (feature width 32, neighbor aggregation by summation)
// followed by a flatten + two-layer MLP decoder with a ReLU in the middle.
// Two output heads share the backbone: a force-space correction and a
// velocity-space correction, both n x 3 with held vertices zeroed.
//
// The decoder flattens all node features, so a net is built for one vertex
// count and only accepts states with that n.

namespace drod {

struct ResidualNet {
    Eigen::Index n = 0;
    static constexpr int kFeat = 6;    // node input features (x - centroid, v)
    static constexpr int kWidth = 32;  // message-passing width
    static constexpr int kHidden = 64; // decoder hidden width
    static constexpr int kAlphaFeat = 3;

    Eigen::MatrixXd gcn1;           // 32 x 6
    Eigen::MatrixXd material_embed; // 32 x 3, adds the per-node alpha summary
    Eigen::MatrixXd gcn2;           // 32 x 32
    Eigen::MatrixXd decoder_w1;     // 64 x 32n
    Eigen::MatrixXd decoder_w2;     // 6n x 64
    VecX gcn1_b, gcn2_b, decoder_b1, decoder_b2;

    // Fixed feature normalization, set when the net is created and stored in
    // checkpoints. Gradients never flow through these.
    Eigen::Matrix<double, 6, 1> feature_scale = Eigen::Matrix<double, 6, 1>::Ones();
    Vec3 alpha_scale = Vec3::Ones();

    Eigen::Index parameter_count() const;
    void to_vector(VecX &v) const;
    void from_vector(const VecX &v);
    void set_zero();
};

// Zero-initialized net: the corrected step coincides with pure physics.
ResidualNet zero_residual_net(Eigen::Index n);

// Random init, uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer with the
// final decoder layer zeroed; normalization scales taken from `params` and
// a characteristic length so features are O(1).
ResidualNet make_residual_net(Eigen::Index n, std::uint64_t seed,
                              const MaterialParams &params);

struct NetOutput {
    Mat3X force;    // N
    Mat3X velocity; // m/s
};

NetOutput net_forward(const ResidualNet &net, const RodState &state,
                      const MaterialParams &params);

// Recorded intermediates of one forward pass, enough to run the exact
// reverse sweep.
struct NetTape {
    Eigen::MatrixXd node_feat;   // 6 x n, normalized
    Eigen::MatrixXd alpha_feat;  // 3 x n, normalized
    Eigen::MatrixXd agg0;        // 6 x n, summed input features
    Eigen::MatrixXd pre1, act1;  // 32 x n
    Eigen::MatrixXd agg1;        // 32 x n
    Eigen::MatrixXd pre2, act2;  // 32 x n
    VecX dec_pre1, dec_act1;     // 64
};

NetOutput net_forward_tape(const ResidualNet &net, const RodState &state,
                           const MaterialParams &params, NetTape &tape);

// Adjoints of one forward pass. Parameter gradients reuse the net layout.
struct NetBackward {
    ResidualNet param_grad;
    Mat3X d_positions;  // n x 3
    Mat3X d_velocities; // n x 3
    VecX d_mass;        // n, per-vertex isotropic mass
    VecX d_bend_trace;  // n-2, trace of B at each interior vertex
    VecX d_twist;       // n-2
};

NetBackward net_backward(const ResidualNet &net, const NetTape &tape,
                         const Mat3X &d_force, const Mat3X &d_velocity);

} // namespace drod

#endif
