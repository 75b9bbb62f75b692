#include "drod/energy.hpp"

#include <cmath>

#include "drod/der_potential.hpp"

namespace drod {

namespace der {

PotentialConstants make_potential_constants(const MaterialParams &params,
                                            const GripperInput &input) {
    PotentialConstants k;
    k.n = params.n();
    k.voronoi = params.voronoi_lengths;
    k.omega_bar = params.rest_curvatures;
    const Eigen::Matrix3d rl = axis_angle_matrix(input.left.axis_angle);
    const Eigen::Matrix3d rr = axis_angle_matrix(input.right.axis_angle);
    k.m_left = rl * params.rest_bishop1.row(0).transpose();
    k.m_right = rr * params.rest_bishop1.row(k.n - 2).transpose();
    return k;
}

} // namespace der

VecX bending_energy(const CurvatureSet &omega, const MaterialParams &params) {
    const Eigen::Index ni = static_cast<Eigen::Index>(omega.omega.size());
    VecX out(ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
        const Mat2 &b = params.bend_modulus[static_cast<size_t>(k)];
        const Vec2 &obar = params.rest_curvatures[static_cast<size_t>(k)];
        double acc = 0.0;
        for (int j = 0; j < 2; ++j) {
            const Vec2 d = omega.omega[static_cast<size_t>(k)][static_cast<size_t>(j)] - obar;
            acc += d.dot(b * d);
        }
        out[k] = acc / (2.0 * params.voronoi_lengths[k]);
    }
    return out;
}

VecX twisting_energy(const VecX &theta, const MaterialParams &params) {
    const Eigen::Index ni = params.twist_modulus.size();
    VecX out(ni);
    for (Eigen::Index k = 0; k < ni; ++k) {
        const double a = theta[k + 1] - theta[k];
        out[k] = params.twist_modulus[k] * a * a / params.voronoi_lengths[k];
    }
    return out;
}

EnergyReport total_potential(const RodState &state, const GripperInput &input,
                             const VecX &theta, const MaterialParams &params) {
    const der::PotentialConstants k = der::make_potential_constants(params, input);
    FrameSet frames = bishop_frames(state, k.m_left);
    set_twist(frames, theta);
    const CurvatureSet curv = material_curvatures(frames, state);

    EnergyReport rep;
    rep.bend = bending_energy(curv, params);
    rep.twist = twisting_energy(theta, params);
    rep.total = rep.bend.sum() + rep.twist.sum();
    return rep;
}

namespace detail {

ThetaProblem make_theta_problem(const RodState &state, const GripperInput &input,
                                const MaterialParams &params) {
    const der::PotentialConstants k = der::make_potential_constants(params, input);
    const FrameSet frames = bishop_frames(state, k.m_left);
    const CurvatureSet curv = material_curvatures(frames, state);

    ThetaProblem p;
    p.ne = state.n() - 1;
    p.om0 = curv.omega;
    p.bend = params.bend_modulus;
    p.beta = params.twist_modulus;
    p.lbar = params.voronoi_lengths;
    p.obar = params.rest_curvatures;

    const Vec3 w1 = frames.bishop1.row(p.ne - 1);
    const Vec3 t = frames.tangents.row(p.ne - 1);
    p.theta_right = std::atan2(w1.cross(k.m_right).dot(t), w1.dot(k.m_right));
    return p;
}

namespace {

inline Vec2 rotated_omega(const Vec2 &om0, double c, double s) {
    return Vec2(c * om0.x() + s * om0.y(), c * om0.y() - s * om0.x());
}

} // namespace

double ThetaProblem::energy(const VecX &theta) const {
    double total = 0.0;
    for (Eigen::Index k = 0; k + 2 <= ne; ++k) {
        const Mat2 &b = bend[static_cast<size_t>(k)];
        double acc = 0.0;
        for (int j = 0; j < 2; ++j) {
            const Eigen::Index e = k + j;
            const Vec2 w = rotated_omega(om0[static_cast<size_t>(k)][static_cast<size_t>(j)],
                                         std::cos(theta[e]), std::sin(theta[e]));
            const Vec2 d = w - obar[static_cast<size_t>(k)];
            acc += d.dot(b * d);
        }
        const double a = theta[k + 1] - theta[k];
        total += acc / (2.0 * lbar[k]) + beta[k] * a * a / lbar[k];
    }
    return total;
}

void ThetaProblem::gradient(const VecX &theta, VecX &g) const {
    g = VecX::Zero(ne);
    for (Eigen::Index k = 0; k + 2 <= ne; ++k) {
        const Mat2 &b = bend[static_cast<size_t>(k)];
        for (int j = 0; j < 2; ++j) {
            const Eigen::Index e = k + j;
            const Vec2 w = rotated_omega(om0[static_cast<size_t>(k)][static_cast<size_t>(j)],
                                         std::cos(theta[e]), std::sin(theta[e]));
            const Vec2 d = w - obar[static_cast<size_t>(k)];
            const Vec2 jw(w.y(), -w.x()); // d(omega)/d(theta_e)
            g[e] += d.dot(b * jw) / lbar[k];
        }
        const double a = theta[k + 1] - theta[k];
        const double ga = 2.0 * beta[k] * a / lbar[k];
        g[k + 1] += ga;
        g[k] -= ga;
    }
}

void ThetaProblem::hessian(const VecX &theta, VecX &diag, VecX &off) const {
    diag = VecX::Zero(ne);
    off = VecX::Zero(ne - 1); // off[e] couples theta_e and theta_{e+1}
    for (Eigen::Index k = 0; k + 2 <= ne; ++k) {
        const Mat2 &b = bend[static_cast<size_t>(k)];
        for (int j = 0; j < 2; ++j) {
            const Eigen::Index e = k + j;
            const Vec2 w = rotated_omega(om0[static_cast<size_t>(k)][static_cast<size_t>(j)],
                                         std::cos(theta[e]), std::sin(theta[e]));
            const Vec2 d = w - obar[static_cast<size_t>(k)];
            const Vec2 jw(w.y(), -w.x());
            diag[e] += (jw.dot(b * jw) - d.dot(b * w)) / lbar[k];
        }
        const double h = 2.0 * beta[k] / lbar[k];
        diag[k] += h;
        diag[k + 1] += h;
        off[k] -= h;
    }
}

bool tridiag_solve(const VecX &diag, const VecX &off, double damping,
                   const VecX &rhs, VecX &x) {
    // LDL^T factorization of the symmetric tridiagonal system.
    const Eigen::Index m = diag.size();
    VecX d(m), l(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index i = 0; i < m; ++i) {
        double di = diag[i] + damping;
        if (i > 0) di -= l[i - 1] * l[i - 1] * d[i - 1];
        if (!(di > 0.0)) return false;
        d[i] = di;
        if (i + 1 < m) l[i] = off[i] / di;
    }
    x = rhs;
    for (Eigen::Index i = 1; i < m; ++i) x[i] -= l[i - 1] * x[i - 1];
    for (Eigen::Index i = 0; i < m; ++i) x[i] /= d[i];
    for (Eigen::Index i = m - 2; i >= 0; --i) x[i] -= l[i] * x[i + 1];
    return true;
}

} // namespace detail

ThetaSolve solve_theta_star(const RodState &state, const GripperInput &input,
                            const MaterialParams &params, const VecX *warm_start) {
    const detail::ThetaProblem prob = detail::make_theta_problem(state, input, params);
    const Eigen::Index ne = prob.ne;
    const Eigen::Index nfree = ne - 2;

    VecX theta = VecX::Zero(ne);
    if (warm_start && warm_start->size() == ne)
        theta = *warm_start;
    theta[0] = 0.0;
    theta[ne - 1] = prob.theta_right;

    constexpr double kTol = 1e-8;
    constexpr int kMaxIter = 50;

    VecX g, hd, ho;
    VecX gf(nfree), step(nfree);
    double energy = prob.energy(theta);

    ThetaSolve out;
    out.theta_star = theta;
    out.iterations = 0;

    for (int iter = 0; iter <= kMaxIter; ++iter) {
        prob.gradient(theta, g);
        gf = g.segment(1, nfree);
        const double stat = nfree > 0 ? gf.cwiseAbs().maxCoeff() : 0.0;
        if (stat <= kTol) {
            prob.hessian(theta, hd, ho);
            out.theta_star = theta;
            out.stationarity = stat;
            out.iterations = iter;
            out.hess_diag = hd.segment(1, nfree);
            out.hess_off = nfree > 1 ? VecX(ho.segment(1, nfree - 1)) : VecX();
            return out;
        }
        if (iter == kMaxIter) break;

        prob.hessian(theta, hd, ho);
        const VecX hdf = hd.segment(1, nfree);
        const VecX hof = nfree > 1 ? VecX(ho.segment(1, nfree - 1)) : VecX();

        // Damped Newton direction with an Armijo backtracking line search.
        double damping = 0.0;
        bool stepped = false;
        const double scale = hdf.cwiseAbs().maxCoeff();
        for (int attempt = 0; attempt < 30 && !stepped; ++attempt) {
            if (detail::tridiag_solve(hdf, hof, damping, -gf, step)) {
                double alpha = 1.0;
                const double slope = gf.dot(step);
                if (slope < 0.0) {
                    for (int ls = 0; ls < 40; ++ls) {
                        VecX trial = theta;
                        trial.segment(1, nfree) += alpha * step;
                        const double e_trial = prob.energy(trial);
                        if (e_trial <= energy + 1e-4 * alpha * slope) {
                            theta = trial;
                            energy = e_trial;
                            stepped = true;
                            break;
                        }
                        alpha *= 0.5;
                    }
                }
            }
            if (!stepped)
                damping = damping == 0.0 ? 1e-8 * std::max(scale, 1.0) : 10.0 * damping;
        }
        if (!stepped) break;
    }

    prob.gradient(theta, g);
    ThetaSolve best;
    best.theta_star = theta;
    best.stationarity = nfree > 0 ? g.segment(1, nfree).cwiseAbs().maxCoeff() : 0.0;
    best.iterations = kMaxIter;
    throw ThetaSolveError("twist equilibrium did not reach stationarity " +
                              std::to_string(best.stationarity) + " <= 1e-8",
                          best);
}

Mat3X grad_potential_x(const RodState &state, const GripperInput &input,
                       const ThetaSolve &theta_star, const MaterialParams &params) {
    const der::PotentialConstants constants = der::make_potential_constants(params, input);
    der::TapedPotential<double> tp;
    der::build_taped_potential<double>(state, theta_star.theta_star, params,
                                       constants, nullptr, tp);
    std::vector<double> adj;
    tp.tape.backward(tp.total_idx, adj);

    const Eigen::Index n = state.n();
    Mat3X g(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c)
            g(i, c) = adj[static_cast<size_t>(tp.x_idx[static_cast<size_t>(3 * i + c)])];
    return g;
}

} // namespace drod
