#include "drod/types.hpp"

#include <cmath>
#include <sstream>

namespace drod {

namespace {

// Unit vector orthogonal to t, chosen deterministically.
Vec3 any_perpendicular(const Vec3 &t) {
    Vec3 trial = std::abs(t.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    Vec3 p = trial - trial.dot(t) * t;
    return p.normalized();
}

// Minimal rotation taking unit a to unit b, applied to v.
Vec3 rotate_min(const Vec3 &v, const Vec3 &a, const Vec3 &b) {
    const double c = a.dot(b);
    if (c < -1.0 + 1e-9)
        throw SimError(ErrorCode::AntipodalTangent,
                       "rest edge direction flips by ~180 degrees");
    const Vec3 axb = a.cross(b);
    return c * v + axb.cross(v) + axb.dot(v) / (1.0 + c) * axb;
}

} // namespace

Eigen::Matrix3d axis_angle_matrix(const Vec3 &axis_angle) {
    const double angle = axis_angle.norm();
    if (angle >= M_PI + 1e-9)
        throw SimError(ErrorCode::InvalidArgument,
                       "axis-angle magnitude must stay below pi");
    if (angle < 1e-12) {
        Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
        r(0, 1) = -axis_angle.z(); r(0, 2) = axis_angle.y();
        r(1, 0) = axis_angle.z();  r(1, 2) = -axis_angle.x();
        r(2, 0) = -axis_angle.y(); r(2, 1) = axis_angle.x();
        return r;
    }
    return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

MaterialParams make_uniform_params(const UniformRodSpec &spec) {
    if (spec.n < 5)
        throw SimError(ErrorCode::InvalidArgument, "rod needs n >= 5 vertices");
    const Eigen::Index n = spec.n;
    MaterialParams p;
    const double m = spec.total_mass / static_cast<double>(n);
    p.masses.assign(n, Vec3::Constant(m));
    p.bend_modulus.assign(n - 2, spec.bend * Mat2::Identity());
    p.twist_modulus = VecX::Constant(n - 2, spec.twist);
    const Vec3 step = spec.axis.normalized() * (spec.length / double(n - 1));
    p.rest_edges.resize(n - 1, 3);
    for (Eigen::Index i = 0; i < n - 1; ++i) p.rest_edges.row(i) = step;
    p.rest_curvatures.assign(n - 2, Vec2::Zero());
    p.voronoi_lengths = VecX::Constant(n - 2, 2.0 * step.norm());
    p.gravity = spec.gravity;

    // Rest Bishop chain; transports are identities for a straight rest shape
    // but the loop keeps hand-built curved rests consistent.
    p.rest_bishop1.resize(n - 1, 3);
    Vec3 w1 = any_perpendicular(step.normalized());
    p.rest_bishop1.row(0) = w1;
    for (Eigen::Index i = 1; i < n - 1; ++i) {
        const Vec3 ta = p.rest_edges.row(i - 1).normalized();
        const Vec3 tb = p.rest_edges.row(i).normalized();
        w1 = rotate_min(w1, ta, tb);
        p.rest_bishop1.row(i) = w1;
    }
    return p;
}

RodState make_rest_state(const MaterialParams &params, const Vec3 &origin) {
    const Eigen::Index n = params.n();
    RodState s;
    s.positions.resize(n, 3);
    s.velocities = Mat3X::Zero(n, 3);
    Vec3 x = origin;
    s.positions.row(0) = x;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        x += params.rest_edges.row(i).transpose();
        s.positions.row(i + 1) = x;
    }
    return s;
}

GripperInput rest_input(const RodState &state) {
    GripperInput u;
    u.left.position = state.positions.row(0);
    u.right.position = state.positions.row(state.n() - 1);
    return u;
}

Mat3X edges(const RodState &state) {
    const Eigen::Index n = state.n();
    Mat3X e(n - 1, 3);
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        e.row(i) = state.positions.row(i + 1) - state.positions.row(i);
    return e;
}

RodState apply_boundary(const RodState &state, const GripperInput &input,
                        const MaterialParams &params, double dt) {
    if (!input.left.position.allFinite() || !input.left.axis_angle.allFinite() ||
        !input.right.position.allFinite() || !input.right.axis_angle.allFinite())
        throw SimError(ErrorCode::InvalidArgument, "non-finite gripper pose");
    if (dt <= 0.0)
        throw SimError(ErrorCode::InvalidArgument, "apply_boundary needs dt > 0");

    const Eigen::Index n = state.n();
    RodState out = state;

    const Eigen::Matrix3d rl = axis_angle_matrix(input.left.axis_angle);
    const Eigen::Matrix3d rr = axis_angle_matrix(input.right.axis_angle);
    const Vec3 e_first = rl * params.rest_edges.row(0).transpose();
    const Vec3 e_last = rr * params.rest_edges.row(n - 2).transpose();

    out.positions.row(0) = input.left.position;
    out.positions.row(1) = input.left.position + e_first;
    out.positions.row(n - 1) = input.right.position;
    out.positions.row(n - 2) = input.right.position - e_last;

    for (Eigen::Index i : {Eigen::Index(0), Eigen::Index(1), n - 2, n - 1})
        out.velocities.row(i) =
            (out.positions.row(i) - state.positions.row(i)) / dt;
    return out;
}

std::vector<std::string> validate(const MaterialParams &params,
                                  const RodState &state) {
    std::vector<std::string> v;
    auto add = [&v](const std::string &msg) { v.push_back(msg); };

    const Eigen::Index n = state.n();
    if (n < 5) add("state has n < 5 vertices");
    if (state.velocities.rows() != n)
        add("positions/velocities row count mismatch");
    if (!state.positions.allFinite() || !state.velocities.allFinite())
        add("state has non-finite entries");

    const Eigen::Index np = params.n();
    if (np != n)
        add("params sized for n=" + std::to_string(np) + " but state has n=" +
            std::to_string(n));

    for (size_t i = 0; i < params.masses.size(); ++i)
        if (!(params.masses[i].minCoeff() > 0.0))
            add("mass diagonal not positive-definite at vertex " +
                std::to_string(i));
    for (size_t k = 0; k < params.bend_modulus.size(); ++k) {
        const Mat2 &b = params.bend_modulus[k];
        if (std::abs(b(0, 1) - b(1, 0)) > 1e-12 * (1.0 + b.norm()))
            add("bend modulus not symmetric at interior vertex " +
                std::to_string(k + 1));
        Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (b + b.transpose()));
        if (!(es.eigenvalues().minCoeff() > 0.0))
            add("bend modulus not positive-definite at interior vertex " +
                std::to_string(k + 1));
    }
    for (Eigen::Index k = 0; k < params.twist_modulus.size(); ++k)
        if (!(params.twist_modulus[k] > 0.0))
            add("twist modulus beta not positive at interior vertex " +
                std::to_string(k + 1));

    const Eigen::Index ne = params.rest_edges.rows();
    if (np > 0 && ne != np - 1) add("rest_edges row count is not n-1");
    for (Eigen::Index i = 0; i < ne; ++i)
        if (!(params.rest_edges.row(i).norm() > 0.0))
            add("rest edge " + std::to_string(i) + " has zero length");
    if (params.voronoi_lengths.size() == ne - 1 && ne >= 2) {
        for (Eigen::Index k = 0; k + 1 < ne; ++k) {
            const double want = params.rest_edges.row(k).norm() +
                                params.rest_edges.row(k + 1).norm();
            if (std::abs(params.voronoi_lengths[k] - want) > 1e-12 * want)
                add("voronoi length inconsistent with rest edges at interior "
                    "vertex " + std::to_string(k + 1));
        }
    } else if (np > 0) {
        add("voronoi_lengths size is not n-2");
    }
    return v;
}

} // namespace drod
