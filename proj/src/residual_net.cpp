#include "drod/residual_net.hpp"

#include <random>

namespace drod {

namespace {

// Interior index supplying the alpha summary of vertex i (ends borrow from
// their nearest interior vertex).
inline Eigen::Index alpha_src(Eigen::Index i, Eigen::Index n) {
    return std::clamp<Eigen::Index>(i - 1, 0, n - 3);
}

// Chain-graph aggregation with self loop: out col i = sum of cols {i-1,i,i+1}.
Eigen::MatrixXd neighbor_sum(const Eigen::MatrixXd &m) {
    Eigen::MatrixXd out = m;
    const Eigen::Index n = m.cols();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (i > 0) out.col(i) += m.col(i - 1);
        if (i + 1 < n) out.col(i) += m.col(i + 1);
    }
    return out;
}

void check_n(const ResidualNet &net, const RodState &state) {
    if (state.n() != net.n)
        throw SimError(ErrorCode::InvalidArgument,
                       "net built for n=" + std::to_string(net.n) +
                           " but state has n=" + std::to_string(state.n()));
}

} // namespace

Eigen::Index ResidualNet::parameter_count() const {
    return gcn1.size() + material_embed.size() + gcn2.size() + decoder_w1.size() +
           decoder_w2.size() + gcn1_b.size() + gcn2_b.size() + decoder_b1.size() +
           decoder_b2.size();
}

void ResidualNet::to_vector(VecX &v) const {
    v.resize(parameter_count());
    Eigen::Index at = 0;
    auto put = [&](const Eigen::MatrixXd &m) {
        v.segment(at, m.size()) = Eigen::Map<const VecX>(m.data(), m.size());
        at += m.size();
    };
    put(gcn1); put(material_embed); put(gcn2); put(decoder_w1); put(decoder_w2);
    put(gcn1_b); put(gcn2_b); put(decoder_b1); put(decoder_b2);
}

void ResidualNet::from_vector(const VecX &v) {
    Eigen::Index at = 0;
    auto get = [&](Eigen::MatrixXd &m) {
        m = Eigen::Map<const Eigen::MatrixXd>(v.data() + at, m.rows(), m.cols());
        at += m.size();
    };
    auto getv = [&](VecX &b) {
        b = v.segment(at, b.size());
        at += b.size();
    };
    get(gcn1); get(material_embed); get(gcn2); get(decoder_w1); get(decoder_w2);
    getv(gcn1_b); getv(gcn2_b); getv(decoder_b1); getv(decoder_b2);
}

void ResidualNet::set_zero() {
    gcn1.setZero(); material_embed.setZero(); gcn2.setZero();
    decoder_w1.setZero(); decoder_w2.setZero();
    gcn1_b.setZero(); gcn2_b.setZero(); decoder_b1.setZero(); decoder_b2.setZero();
}

ResidualNet zero_residual_net(Eigen::Index n) {
    ResidualNet net;
    net.n = n;
    net.gcn1.setZero(ResidualNet::kWidth, ResidualNet::kFeat);
    net.material_embed.setZero(ResidualNet::kWidth, ResidualNet::kAlphaFeat);
    net.gcn2.setZero(ResidualNet::kWidth, ResidualNet::kWidth);
    net.decoder_w1.setZero(ResidualNet::kHidden, ResidualNet::kWidth * n);
    net.decoder_w2.setZero(6 * n, ResidualNet::kHidden);
    net.gcn1_b.setZero(ResidualNet::kWidth);
    net.gcn2_b.setZero(ResidualNet::kWidth);
    net.decoder_b1.setZero(ResidualNet::kHidden);
    net.decoder_b2.setZero(6 * n);
    return net;
}

ResidualNet make_residual_net(Eigen::Index n, std::uint64_t seed,
                              const MaterialParams &params) {
    ResidualNet net = zero_residual_net(n);
    std::mt19937_64 rng(seed);
    auto fill = [&rng](Eigen::MatrixXd &m, double fan_in) {
        const double a = 1.0 / std::sqrt(fan_in);
        std::uniform_real_distribution<double> dist(-a, a);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
    };
    fill(net.gcn1, ResidualNet::kFeat);
    fill(net.material_embed, ResidualNet::kAlphaFeat);
    fill(net.gcn2, ResidualNet::kWidth);
    fill(net.decoder_w1, static_cast<double>(ResidualNet::kWidth * n));
    // decoder_w2 / decoder_b2 stay zero: training starts from pure physics.

    const double length = params.rest_edges.rowwise().norm().sum();
    net.feature_scale.head<3>().setConstant(std::max(0.5 * length, 1e-6));
    net.feature_scale.tail<3>().setConstant(1.0);

    double mass = 0.0, trb = 0.0, beta = 0.0;
    for (const Vec3 &m : params.masses) mass += m.maxCoeff();
    mass /= static_cast<double>(params.masses.size());
    for (const Mat2 &b : params.bend_modulus) trb += b.trace();
    trb /= static_cast<double>(params.bend_modulus.size());
    beta = params.twist_modulus.mean();
    net.alpha_scale = Vec3(std::max(mass, 1e-12), std::max(trb, 1e-12),
                           std::max(beta, 1e-12));
    return net;
}

NetOutput net_forward_tape(const ResidualNet &net, const RodState &state,
                           const MaterialParams &params, NetTape &tape) {
    check_n(net, state);
    const Eigen::Index n = net.n;

    const Vec3 centroid = state.positions.colwise().mean();
    tape.node_feat.resize(6, n);
    tape.alpha_feat.resize(3, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        tape.node_feat.block<3, 1>(0, i) =
            (state.positions.row(i).transpose() - centroid)
                .cwiseQuotient(net.feature_scale.head<3>());
        tape.node_feat.block<3, 1>(3, i) =
            state.velocities.row(i).transpose().cwiseQuotient(
                net.feature_scale.tail<3>());
        const Eigen::Index k = alpha_src(i, n);
        tape.alpha_feat(0, i) =
            params.masses[static_cast<size_t>(i)].maxCoeff() / net.alpha_scale[0];
        tape.alpha_feat(1, i) =
            params.bend_modulus[static_cast<size_t>(k)].trace() / net.alpha_scale[1];
        tape.alpha_feat(2, i) = params.twist_modulus[k] / net.alpha_scale[2];
    }

    tape.agg0 = neighbor_sum(tape.node_feat);
    tape.pre1 = (net.gcn1 * tape.agg0 + net.material_embed * tape.alpha_feat)
                    .colwise() +
                net.gcn1_b;
    tape.act1 = tape.pre1.cwiseMax(0.0);

    tape.agg1 = neighbor_sum(tape.act1);
    tape.pre2 = (net.gcn2 * tape.agg1).colwise() + net.gcn2_b;
    tape.act2 = tape.pre2.cwiseMax(0.0);

    const Eigen::Map<const VecX> z(tape.act2.data(), tape.act2.size());
    tape.dec_pre1 = net.decoder_w1 * z + net.decoder_b1;
    tape.dec_act1 = tape.dec_pre1.cwiseMax(0.0);
    const VecX out = net.decoder_w2 * tape.dec_act1 + net.decoder_b2;

    NetOutput result;
    result.force.setZero(n, 3);
    result.velocity.setZero(n, 3);
    for (Eigen::Index i = 2; i <= n - 3; ++i) {
        result.force.row(i) = out.segment(3 * i, 3).transpose();
        result.velocity.row(i) = out.segment(3 * n + 3 * i, 3).transpose();
    }
    return result;
}

NetOutput net_forward(const ResidualNet &net, const RodState &state,
                      const MaterialParams &params) {
    NetTape tape;
    return net_forward_tape(net, state, params, tape);
}

NetBackward net_backward(const ResidualNet &net, const NetTape &tape,
                         const Mat3X &d_force, const Mat3X &d_velocity) {
    const Eigen::Index n = net.n;
    NetBackward out;
    out.param_grad = zero_residual_net(n);
    out.param_grad.feature_scale = net.feature_scale;
    out.param_grad.alpha_scale = net.alpha_scale;

    VecX d_out = VecX::Zero(6 * n);
    for (Eigen::Index i = 2; i <= n - 3; ++i) {
        d_out.segment(3 * i, 3) = d_force.row(i).transpose();
        d_out.segment(3 * n + 3 * i, 3) = d_velocity.row(i).transpose();
    }

    out.param_grad.decoder_w2 = d_out * tape.dec_act1.transpose();
    out.param_grad.decoder_b2 = d_out;
    VecX d_dec_act1 = net.decoder_w2.transpose() * d_out;
    VecX d_dec_pre1 =
        d_dec_act1.cwiseProduct((tape.dec_pre1.array() > 0.0).cast<double>().matrix());

    const Eigen::Map<const VecX> z(tape.act2.data(), tape.act2.size());
    out.param_grad.decoder_w1 = d_dec_pre1 * z.transpose();
    out.param_grad.decoder_b1 = d_dec_pre1;
    const VecX d_z = net.decoder_w1.transpose() * d_dec_pre1;

    Eigen::MatrixXd d_act2 =
        Eigen::Map<const Eigen::MatrixXd>(d_z.data(), ResidualNet::kWidth, n);
    Eigen::MatrixXd d_pre2 =
        d_act2.cwiseProduct((tape.pre2.array() > 0.0).cast<double>().matrix());
    out.param_grad.gcn2 = d_pre2 * tape.agg1.transpose();
    out.param_grad.gcn2_b = d_pre2.rowwise().sum();
    Eigen::MatrixXd d_agg1 = net.gcn2.transpose() * d_pre2;

    Eigen::MatrixXd d_act1 = neighbor_sum(d_agg1);
    Eigen::MatrixXd d_pre1 =
        d_act1.cwiseProduct((tape.pre1.array() > 0.0).cast<double>().matrix());
    out.param_grad.gcn1 = d_pre1 * tape.agg0.transpose();
    out.param_grad.material_embed = d_pre1 * tape.alpha_feat.transpose();
    out.param_grad.gcn1_b = d_pre1.rowwise().sum();
    Eigen::MatrixXd d_agg0 = net.gcn1.transpose() * d_pre1;
    Eigen::MatrixXd d_alpha_feat = net.material_embed.transpose() * d_pre1;

    Eigen::MatrixXd d_node_feat = neighbor_sum(d_agg0);

    out.d_positions.setZero(n, 3);
    out.d_velocities.setZero(n, 3);
    out.d_mass = VecX::Zero(n);
    out.d_bend_trace = VecX::Zero(n - 2);
    out.d_twist = VecX::Zero(n - 2);

    // Positions pass through centering: dx_i = g_i - mean(g).
    Mat3X g(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        g.row(i) = d_node_feat.block<3, 1>(0, i)
                       .cwiseQuotient(net.feature_scale.head<3>())
                       .transpose();
    const Eigen::RowVector3d mean_g = g.colwise().mean();
    for (Eigen::Index i = 0; i < n; ++i) {
        out.d_positions.row(i) = g.row(i) - mean_g;
        out.d_velocities.row(i) = d_node_feat.block<3, 1>(3, i)
                                      .cwiseQuotient(net.feature_scale.tail<3>())
                                      .transpose();
        const Eigen::Index k = alpha_src(i, n);
        out.d_mass[i] += d_alpha_feat(0, i) / net.alpha_scale[0];
        out.d_bend_trace[k] += d_alpha_feat(1, i) / net.alpha_scale[1];
        out.d_twist[k] += d_alpha_feat(2, i) / net.alpha_scale[2];
    }
    return out;
}

} // namespace drod
