#ifndef DROD_DER_POTENTIAL_HPP
#define DROD_DER_POTENTIAL_HPP

#include <array>
#include <cmath>
#include <vector>

#include "drod/errors.hpp"
#include "drod/tape.hpp"
#include "drod/types.hpp"

// Discrete-elastic-rod geometry and elastic potential, templated on the
// scalar so the identical code path serves plain evaluation, tape recording,
// and tape-over-dual recording. Rest quantities and gripper material axes
// enter as plain doubles; positions, twists and moduli enter as the generic
// scalar R.

namespace drod::der {

template <class R>
struct V3T {
    R x, y, z;
};

template <class R>
inline V3T<R> operator+(const V3T<R> &a, const V3T<R> &b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <class R>
inline V3T<R> operator-(const V3T<R> &a, const V3T<R> &b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <class R, class C>
inline V3T<R> operator*(const C &c, const V3T<R> &a) {
    return {c * a.x, c * a.y, c * a.z};
}
template <class R>
inline R dot(const V3T<R> &a, const V3T<R> &b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <class R>
inline R dot(const V3T<R> &a, const Vec3 &b) {
    return a.x * b.x() + a.y * b.y() + a.z * b.z();
}
template <class R>
inline V3T<R> cross(const V3T<R> &a, const V3T<R> &b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <class R>
inline V3T<R> cross(const V3T<R> &a, const Vec3 &b) {
    return {a.y * b.z() - a.z * b.y(), a.z * b.x() - a.x * b.z(),
            a.x * b.y() - a.y * b.x()};
}
template <class R>
inline R norm(const V3T<R> &a) {
    using std::sqrt;
    using drod::ad::sqrt;
    return sqrt(dot(a, a));
}

// Adapted-frame geometry of one configuration: edges, tangents, the twist-free
// (Bishop) frame chain, curvature binormals, and the Bishop-frame curvature
// coordinates at each interior vertex.
template <class R>
struct FramesT {
    std::vector<V3T<R>> edge;     // n-1
    std::vector<R> edge_len;      // n-1
    std::vector<V3T<R>> tangent;  // n-1
    std::vector<V3T<R>> w1, w2;   // n-1
    std::vector<V3T<R>> kb;       // n-2, interior vertices 1..n-2
    // omega0[k][j]: curvature of interior vertex k+1 against the Bishop frame
    // of edge k+j (j=0: trailing edge, j=1: leading edge).
    std::vector<std::array<std::array<R, 2>, 2>> omega0;
};

// Minimal rotation taking unit vector `a` to unit vector `b`, applied to v.
// Algebraic Rodrigues form; no trig calls.
template <class R>
inline V3T<R> transport(const V3T<R> &v, const V3T<R> &a, const V3T<R> &b) {
    const R c = dot(a, b);
    if (drod::ad::value_of(c) < -1.0 + 1e-9)
        throw SimError(ErrorCode::AntipodalTangent,
                       "parallel transport between antipodal tangents");
    const V3T<R> axb = cross(a, b);
    return c * v + cross(axb, v) + (dot(axb, v) / (1.0 + c)) * axb;
}

template <class R>
FramesT<R> compute_frames(const std::vector<V3T<R>> &x, const Vec3 &w1_ref) {
    const size_t n = x.size();
    FramesT<R> f;
    f.edge.reserve(n - 1);
    f.edge_len.reserve(n - 1);
    f.tangent.reserve(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        V3T<R> e = x[i + 1] - x[i];
        R len = norm(e);
        if (!(drod::ad::value_of(len) > 0.0))
            throw SimError(ErrorCode::DegenerateSegment,
                           "zero-length edge " + std::to_string(i));
        f.tangent.push_back((1.0 / len) * e);
        f.edge.push_back(e);
        f.edge_len.push_back(len);
    }

    // First Bishop axis: reference projected into the plane normal to t^0.
    f.w1.reserve(n - 1);
    f.w2.reserve(n - 1);
    {
        const V3T<R> &t0 = f.tangent[0];
        R a = dot(t0, w1_ref);
        V3T<R> p{w1_ref.x() - a * t0.x, w1_ref.y() - a * t0.y,
                 w1_ref.z() - a * t0.z};
        R plen = norm(p);
        if (!(drod::ad::value_of(plen) > 1e-9))
            throw SimError(ErrorCode::InvalidArgument,
                           "twist reference parallel to first tangent");
        f.w1.push_back((1.0 / plen) * p);
    }
    for (size_t i = 1; i + 1 < n; ++i)
        f.w1.push_back(transport(f.w1[i - 1], f.tangent[i - 1], f.tangent[i]));
    for (size_t i = 0; i + 1 < n; ++i)
        f.w2.push_back(cross(f.tangent[i], f.w1[i]));

    // Curvature binormal and Bishop-frame curvature coordinates at interior
    // vertices: kb = 2 e_{i-1} x e_i / (|e_{i-1}||e_i| + e_{i-1}.e_i).
    f.kb.reserve(n - 2);
    f.omega0.reserve(n - 2);
    for (size_t i = 1; i + 1 < n; ++i) {
        const V3T<R> &ep = f.edge[i - 1];
        const V3T<R> &ec = f.edge[i];
        R den = f.edge_len[i - 1] * f.edge_len[i] + dot(ep, ec);
        const double den_scale =
            drod::ad::value_of(f.edge_len[i - 1]) * drod::ad::value_of(f.edge_len[i]);
        if (drod::ad::value_of(den) < 1e-12 * den_scale)
            throw SimError(ErrorCode::DegenerateTurn,
                           "antiparallel edges at vertex " + std::to_string(i));
        V3T<R> kb = (2.0 / den) * cross(ep, ec);
        std::array<std::array<R, 2>, 2> om;
        for (int j = 0; j < 2; ++j) {
            const size_t e = i - 1 + static_cast<size_t>(j);
            om[j] = {dot(kb, f.w2[e]), -dot(kb, f.w1[e])};
        }
        f.kb.push_back(kb);
        f.omega0.push_back(om);
    }
    return f;
}

// Twist of the last edge's gripper-imposed material axis relative to the
// Bishop frame. The left clamp is identically zero because the reference is
// anchored to the left gripper axis itself.
template <class R>
inline R boundary_theta_right(const FramesT<R> &f, const Vec3 &m_right) {
    using std::atan2;
    using drod::ad::atan2;
    const size_t e = f.tangent.size() - 1;
    R s = dot(cross(f.w1[e], m_right), f.tangent[e]);
    R c = dot(f.w1[e], m_right);
    return atan2(s, c);
}

// Rest data and gripper axes for one potential evaluation.
struct PotentialConstants {
    Eigen::Index n = 0;
    VecX voronoi;                // n-2
    std::vector<Vec2> omega_bar; // n-2
    Vec3 m_left = Vec3::UnitY();  // material axis imposed on edge 0
    Vec3 m_right = Vec3::UnitY(); // material axis imposed on edge n-2
};

PotentialConstants make_potential_constants(const MaterialParams &params,
                                            const GripperInput &input);

// Per-interior-vertex moduli as generic scalars.
template <class R>
struct ModuliT {
    std::vector<std::array<R, 3>> bend; // b11, b12, b22
    std::vector<R> twist;               // beta
};

template <class R>
struct PotentialValue {
    R total;
    std::vector<R> bend;  // n-2 per-vertex bending energies
    std::vector<R> twist; // n-2 per-vertex twisting energies
};

// P = sum over interior vertices of bending + twisting energy. `theta` is the
// full per-edge twist vector (clamped entries included).
template <class R>
PotentialValue<R> potential_energy(const FramesT<R> &f, const std::vector<R> &theta,
                                   const ModuliT<R> &alpha,
                                   const PotentialConstants &k) {
    using std::sin;
    using std::cos;
    using drod::ad::sin;
    using drod::ad::cos;

    const size_t ni = f.kb.size();
    PotentialValue<R> out;
    out.bend.reserve(ni);
    out.twist.reserve(ni);

    std::vector<R> ct, st;
    ct.reserve(theta.size());
    st.reserve(theta.size());
    for (const R &th : theta) {
        ct.push_back(cos(th));
        st.push_back(sin(th));
    }

    for (size_t kk = 0; kk < ni; ++kk) {
        const double lbar = k.voronoi[static_cast<Eigen::Index>(kk)];
        const Vec2 &ob = k.omega_bar[kk];
        const std::array<R, 3> &b = alpha.bend[kk];

        // omega^i_j = Rot(-theta_j) * omega0^i_j, quadratic form against B.
        auto quad = [&](int j) -> R {
            const size_t e = kk + static_cast<size_t>(j);
            const R &p = f.omega0[kk][j][0];
            const R &q = f.omega0[kk][j][1];
            R d1 = ct[e] * p + st[e] * q - ob.x();
            R d2 = ct[e] * q - st[e] * p - ob.y();
            return b[0] * d1 * d1 + 2.0 * (b[1] * d1 * d2) + b[2] * d2 * d2;
        };
        R eb = (0.5 / lbar) * (quad(0) + quad(1));

        const size_t e = kk + 1; // leading edge of vertex kk+1
        R twist_diff = theta[e] - theta[e - 1];
        R et = (1.0 / lbar) * (alpha.twist[kk] * twist_diff * twist_diff);

        out.bend.push_back(eb);
        out.twist.push_back(et);
        out.total = (kk == 0) ? eb + et : out.total + eb + et;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tape construction. One taped potential evaluation exposes P as a function
// of vertex positions, free edge twists, and the per-vertex moduli; the
// boundary twist of the last edge is recorded on the tape (it depends on the
// whole transport chain). With S = Dual, seeds select the direction of a
// Hessian-vector product.

// Dual parts for tape inputs; any empty member means zero seed.
struct PotentialSeeds {
    Mat3X x;                                  // n x 3
    VecX theta_free;                          // n-3
    std::vector<std::array<double, 3>> bend;  // n-2
    VecX twist;                               // n-2
};

template <class S>
struct TapedPotential {
    ad::Tape<S> tape;
    std::vector<int> x_idx;          // 3n leaves, row-major
    std::vector<int> theta_free_idx; // edges 1..n-3
    std::vector<int> bend_idx;       // 3 per interior vertex (b11,b12,b22)
    std::vector<int> twist_idx;      // per interior vertex
    int total_idx = -1;
};

template <class S>
inline S seeded(double v, double d);
template <>
inline double seeded<double>(double v, double) { return v; }
template <>
inline ad::Dual seeded<ad::Dual>(double v, double d) { return {v, d}; }

template <class S>
void build_taped_potential(const RodState &state, const VecX &theta_full,
                           const MaterialParams &params,
                           const PotentialConstants &constants,
                           const PotentialSeeds *seeds, TapedPotential<S> &out) {
    using RevS = ad::Rev<S>;
    const Eigen::Index n = state.n();
    const Eigen::Index ne = n - 1;

    auto &tp = out.tape;
    tp.clear();
    tp.reserve(static_cast<size_t>(220 * n));
    out.x_idx.clear();
    out.theta_free_idx.clear();
    out.bend_idx.clear();
    out.twist_idx.clear();

    std::vector<V3T<RevS>> x(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        RevS c[3];
        for (int k = 0; k < 3; ++k) {
            const double seed = seeds && seeds->x.size() ? seeds->x(i, k) : 0.0;
            c[k] = ad::make_input(tp, seeded<S>(state.positions(i, k), seed));
            out.x_idx.push_back(c[k].idx);
        }
        x[static_cast<size_t>(i)] = {c[0], c[1], c[2]};
    }

    ModuliT<RevS> alpha;
    alpha.bend.resize(static_cast<size_t>(n - 2));
    alpha.twist.reserve(static_cast<size_t>(n - 2));
    for (Eigen::Index k = 0; k < n - 2; ++k) {
        const Mat2 &b = params.bend_modulus[static_cast<size_t>(k)];
        const double bs[3] = {b(0, 0), b(0, 1), b(1, 1)};
        for (int c = 0; c < 3; ++c) {
            const double seed =
                seeds && !seeds->bend.empty() ? seeds->bend[static_cast<size_t>(k)][static_cast<size_t>(c)] : 0.0;
            RevS v = ad::make_input(tp, seeded<S>(bs[c], seed));
            alpha.bend[static_cast<size_t>(k)][static_cast<size_t>(c)] = v;
            out.bend_idx.push_back(v.idx);
        }
        const double tseed = seeds && seeds->twist.size() ? seeds->twist[k] : 0.0;
        RevS tw = ad::make_input(tp, seeded<S>(params.twist_modulus[k], tseed));
        alpha.twist.push_back(tw);
        out.twist_idx.push_back(tw.idx);
    }

    const auto frames = compute_frames(x, constants.m_left);

    std::vector<RevS> theta;
    theta.reserve(static_cast<size_t>(ne));
    theta.push_back(ad::make_const(tp, 0.0)); // left clamp, zero by anchoring
    for (Eigen::Index e = 1; e <= ne - 2; ++e) {
        const double seed =
            seeds && seeds->theta_free.size() ? seeds->theta_free[e - 1] : 0.0;
        RevS v = ad::make_input(tp, seeded<S>(theta_full[e], seed));
        theta.push_back(v);
        out.theta_free_idx.push_back(v.idx);
    }
    theta.push_back(boundary_theta_right(frames, constants.m_right));

    const auto pv = potential_energy(frames, theta, alpha, constants);
    out.total_idx = pv.total.idx;
}

} // namespace drod::der

#endif
