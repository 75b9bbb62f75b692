#include "drod/frames.hpp"

#include <cmath>

#include "drod/der_potential.hpp"

namespace drod {

namespace {

der::V3T<double> to_v3(const Vec3 &v) { return {v.x(), v.y(), v.z()}; }
Vec3 from_v3(const der::V3T<double> &v) { return {v.x, v.y, v.z}; }

std::vector<der::V3T<double>> to_v3_rows(const Mat3X &m) {
    std::vector<der::V3T<double>> out(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out[static_cast<size_t>(i)] = {m(i, 0), m(i, 1), m(i, 2)};
    return out;
}

} // namespace

Vec3 parallel_transport(const Vec3 &v, const Vec3 &t_from, const Vec3 &t_to) {
    if (std::abs(t_from.norm() - 1.0) > 1e-9 || std::abs(t_to.norm() - 1.0) > 1e-9)
        throw SimError(ErrorCode::InvalidArgument,
                       "parallel_transport expects unit tangents");
    return from_v3(der::transport(to_v3(v), to_v3(t_from), to_v3(t_to)));
}

Vec3 curvature_binormal(const Vec3 &e_prev, const Vec3 &e_cur) {
    const double a = e_prev.norm();
    const double b = e_cur.norm();
    if (!(a > 0.0) || !(b > 0.0))
        throw SimError(ErrorCode::DegenerateSegment,
                       "curvature_binormal needs nonzero edges");
    const double den = a * b + e_prev.dot(e_cur);
    if (den < 1e-12 * a * b)
        throw SimError(ErrorCode::DegenerateTurn,
                       "curvature binormal undefined for antiparallel edges");
    return 2.0 * e_prev.cross(e_cur) / den;
}

FrameSet bishop_frames(const RodState &state, const Vec3 &w1_ref) {
    const auto x = to_v3_rows(state.positions);
    const auto f = der::compute_frames(x, w1_ref);

    const Eigen::Index ne = state.n() - 1;
    FrameSet out;
    out.tangents.resize(ne, 3);
    out.bishop1.resize(ne, 3);
    out.bishop2.resize(ne, 3);
    for (Eigen::Index i = 0; i < ne; ++i) {
        out.tangents.row(i) = from_v3(f.tangent[static_cast<size_t>(i)]);
        out.bishop1.row(i) = from_v3(f.w1[static_cast<size_t>(i)]);
        out.bishop2.row(i) = from_v3(f.w2[static_cast<size_t>(i)]);
    }
    out.theta = VecX::Zero(ne);
    out.material1 = out.bishop1;
    out.material2 = out.bishop2;
    return out;
}

void set_twist(FrameSet &frames, const VecX &theta) {
    const Eigen::Index ne = frames.tangents.rows();
    if (theta.size() != ne)
        throw SimError(ErrorCode::InvalidArgument, "theta size mismatch");
    frames.theta = theta;
    for (Eigen::Index i = 0; i < ne; ++i) {
        const double c = std::cos(theta[i]);
        const double s = std::sin(theta[i]);
        const Vec3 w1 = frames.bishop1.row(i);
        const Vec3 w2 = frames.bishop2.row(i);
        frames.material1.row(i) = c * w1 + s * w2;
        frames.material2.row(i) = -s * w1 + c * w2;
    }
}

CurvatureSet material_curvatures(const FrameSet &frames, const RodState &state) {
    const Mat3X e = edges(state);
    const Eigen::Index ni = state.n() - 2;
    CurvatureSet out;
    out.kb.resize(ni, 3);
    out.omega.resize(static_cast<size_t>(ni));
    for (Eigen::Index k = 0; k < ni; ++k) {
        const Vec3 kb = curvature_binormal(e.row(k), e.row(k + 1));
        out.kb.row(k) = kb;
        for (int j = 0; j < 2; ++j) {
            const Eigen::Index edge = k + j;
            const Vec3 m1 = frames.material1.row(edge);
            const Vec3 m2 = frames.material2.row(edge);
            out.omega[static_cast<size_t>(k)][static_cast<size_t>(j)] =
                Vec2(kb.dot(m2), -kb.dot(m1));
        }
    }
    return out;
}

Vec3 time_parallel_reference(const FrameSet &prev_frames, const RodState &new_state) {
    const Vec3 t_old = prev_frames.tangents.row(0);
    const Vec3 e_new = new_state.positions.row(1) - new_state.positions.row(0);
    const double len = e_new.norm();
    if (!(len > 0.0))
        throw SimError(ErrorCode::DegenerateSegment, "zero-length first edge");
    return parallel_transport(prev_frames.bishop1.row(0), t_old, e_new / len);
}

} // namespace drod
