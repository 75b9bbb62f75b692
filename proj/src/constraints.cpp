#include "drod/constraints.hpp"

#include <cmath>

namespace drod {

double constraint_value(const Vec3 &xi, const Vec3 &xj, double rest_len) {
    return std::abs((xi - xj).norm() - rest_len);
}

std::pair<Vec3, Vec3> correction_pair(const Vec3 &xi, const Vec3 &xj,
                                      double rest_len) {
    const Vec3 diff = xj - xi;
    const double len = diff.norm();
    if (len < 1e-12)
        throw SimError(ErrorCode::DegenerateSegment,
                       "coincident vertices in distance constraint");
    const Vec3 d = diff / len;
    const double s = len - rest_len;
    return {s * d, -s * d};
}

std::pair<double, double> beta_weights(const Vec3 &mass_i, const Vec3 &mass_j) {
    const double mi = mass_i.maxCoeff();
    const double mj = mass_j.maxCoeff();
    return {mj / (mi + mj), mi / (mi + mj)};
}

namespace detail {

std::pair<RodState, ProjectionReport>
project(const RodState &state, const MaterialParams &params, const StepConfig &cfg,
        bool mass_weighted, std::vector<PairUpdate> *log) {
    const Eigen::Index n = state.n();
    const VecX rest = params.rest_edge_lengths();

    RodState out = state;
    ProjectionReport rep;
    rep.corrections = Mat3X::Zero(n, 3);

    const Vec3 center = state.positions.colwise().mean();
    Vec3 lin_sum = Vec3::Zero();
    Vec3 ang_sum = Vec3::Zero();

    // Free vertices are 2..n-3; {0, 1, n-2, n-1} are gripper-held.
    auto is_free = [n](Eigen::Index v) { return v >= 2 && v <= n - 3; };

    auto max_c = [&]() {
        double m = 0.0;
        for (Eigen::Index e = 0; e < n - 1; ++e)
            m = std::max(m, constraint_value(out.positions.row(e),
                                             out.positions.row(e + 1), rest[e]));
        return m;
    };

    double violation = max_c();
    int sweeps = 0;
    while (violation > cfg.projection_epsilon && sweeps < cfg.max_projection_iters) {
        for (Eigen::Index e = 1; e <= n - 3; ++e) {
            const Eigen::Index i = e, j = e + 1;
            const Vec3 xi = out.positions.row(i);
            const Vec3 xj = out.positions.row(j);
            auto [dxi, dxj] = correction_pair(xi, xj, rest[e]);

            double bi, bj;
            const bool fi = is_free(i), fj = is_free(j);
            if (fi && fj) {
                if (mass_weighted)
                    std::tie(bi, bj) = beta_weights(params.masses[static_cast<size_t>(i)],
                                                    params.masses[static_cast<size_t>(j)]);
                else
                    bi = bj = 0.5;
            } else if (fi) {
                bi = 1.0;
                bj = 0.0;
            } else {
                bi = 0.0;
                bj = 1.0;
            }

            if (log)
                log->push_back({static_cast<int>(e), xi, xj, bi, bj,
                                params.masses[static_cast<size_t>(i)].maxCoeff(),
                                params.masses[static_cast<size_t>(j)].maxCoeff(),
                                rest[e]});

            const Vec3 di = bi * dxi;
            const Vec3 dj = bj * dxj;
            out.positions.row(i) += di;
            out.positions.row(j) += dj;
            rep.corrections.row(i) += di;
            rep.corrections.row(j) += dj;

            if (fi && fj) {
                const Vec3 pi = params.masses[static_cast<size_t>(i)].cwiseProduct(di);
                const Vec3 pj = params.masses[static_cast<size_t>(j)].cwiseProduct(dj);
                lin_sum += pi + pj;
                ang_sum += (xi - center).cross(pi) + (xj - center).cross(pj);
            }
        }
        ++sweeps;
        violation = max_c();
    }

    rep.iterations = sweeps;
    rep.max_violation = violation;
    rep.linear_residual = lin_sum.norm();
    rep.angular_residual = ang_sum.norm();
    rep.positions = out.positions;

    if (violation > cfg.projection_epsilon)
        throw ProjectionError("inextensibility projection stalled at |C| = " +
                                  std::to_string(violation),
                              rep);
    return {std::move(out), std::move(rep)};
}

} // namespace detail

std::pair<RodState, ProjectionReport>
enforce_inextensibility(const RodState &state, const MaterialParams &params,
                        const StepConfig &cfg) {
    return detail::project(state, params, cfg, true, nullptr);
}

std::pair<RodState, ProjectionReport>
enforce_naive(const RodState &state, const MaterialParams &params,
              const StepConfig &cfg) {
    return detail::project(state, params, cfg, false, nullptr);
}

std::pair<Vec3, Vec3> momentum_residuals(const ProjectionReport &report,
                                         const MaterialParams &params,
                                         const Vec3 &center) {
    const Eigen::Index n = report.corrections.rows();
    Vec3 lin = Vec3::Zero();
    Vec3 ang = Vec3::Zero();
    for (Eigen::Index i = 2; i <= n - 3; ++i) {
        const Vec3 p = params.masses[static_cast<size_t>(i)].cwiseProduct(
            report.corrections.row(i).transpose());
        const Vec3 r = report.positions.row(i).transpose() - center;
        lin += p;
        ang += r.cross(p);
    }
    return {lin, ang};
}

} // namespace drod
