#include "drod/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace drod {

Vec3 Camera::to_camera(const Vec3 &world) const {
    const Eigen::Matrix3d r = axis_angle_matrix(axis_angle);
    return r.transpose() * (world - position);
}

Vec3 Camera::project(const Vec3 &world) const {
    const Vec3 pc = to_camera(world);
    return Vec3(fx * pc.x() / pc.z() + cx, fy * pc.y() / pc.z() + cy, pc.z());
}

double point_to_polyline(const Vec3 &p, const Mat3X &vertices) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i + 1 < vertices.rows(); ++i) {
        const Vec3 a = vertices.row(i);
        const Vec3 b = vertices.row(i + 1);
        const Vec3 ab = b - a;
        const double len2 = ab.squaredNorm();
        double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, (p - (a + t * ab)).norm());
    }
    return best;
}

PointCloud filter_cloud(const PointCloud &cloud, const RodState &prediction,
                        double radius) {
    if (!(radius > 0.0))
        throw SimError(ErrorCode::InvalidArgument, "filter radius must be > 0");
    std::vector<Eigen::Index> keep;
    for (Eigen::Index m = 0; m < cloud.size(); ++m)
        if (point_to_polyline(cloud.points.row(m), prediction.positions) <= radius)
            keep.push_back(m);

    PointCloud out;
    out.frame_time = cloud.frame_time;
    out.points.resize(static_cast<Eigen::Index>(keep.size()), 3);
    if (cloud.depth.size()) out.depth.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t k = 0; k < keep.size(); ++k) {
        out.points.row(static_cast<Eigen::Index>(k)) = cloud.points.row(keep[k]);
        if (cloud.depth.size()) out.depth[static_cast<Eigen::Index>(k)] = cloud.depth[keep[k]];
    }
    return out;
}

OcclusionVerdict detect_unoccluded(const RodState &prediction,
                                   const PointCloud &cloud, const Camera &camera,
                                   double depth_tol, double pixel_window) {
    const Eigen::Index n = prediction.n();
    OcclusionVerdict verdict;
    verdict.unoccluded.assign(static_cast<size_t>(n), false);

    // Cache cloud projections.
    Mat3X proj(cloud.size(), 3);
    for (Eigen::Index m = 0; m < cloud.size(); ++m) {
        proj.row(m) = camera.project(cloud.points.row(m));
        if (cloud.depth.size()) proj(m, 2) = cloud.depth[m];
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 pc = camera.to_camera(prediction.positions.row(i));
        if (!(pc.z() > 0.0)) {
            verdict.diagnostics.push_back("vertex " + std::to_string(i) +
                                          " behind camera");
            continue;
        }
        const Vec3 uvz = camera.project(prediction.positions.row(i));
        for (Eigen::Index m = 0; m < cloud.size(); ++m) {
            if (proj(m, 2) <= 0.0) continue;
            if (std::abs(proj(m, 0) - uvz.x()) <= pixel_window &&
                std::abs(proj(m, 1) - uvz.y()) <= pixel_window &&
                std::abs(proj(m, 2) - uvz.z()) <= depth_tol) {
                verdict.unoccluded[static_cast<size_t>(i)] = true;
                break;
            }
        }
    }
    verdict.count = static_cast<Eigen::Index>(
        std::count(verdict.unoccluded.begin(), verdict.unoccluded.end(), true));
    return verdict;
}

std::vector<int> dbscan(const Mat3X &points, double eps, int min_pts) {
    if (!(eps > 0.0) || min_pts < 1)
        throw SimError(ErrorCode::InvalidArgument, "bad dbscan parameters");
    const Eigen::Index m = points.rows();
    const double eps2 = eps * eps;

    auto neighbors = [&](Eigen::Index p) {
        std::vector<Eigen::Index> out;
        for (Eigen::Index q = 0; q < m; ++q)
            if ((points.row(p) - points.row(q)).squaredNorm() <= eps2)
                out.push_back(q);
        return out;
    };

    std::vector<int> label(static_cast<size_t>(m), -2); // -2 unvisited, -1 noise
    int cluster = 0;
    for (Eigen::Index p = 0; p < m; ++p) {
        if (label[static_cast<size_t>(p)] != -2) continue;
        auto nb = neighbors(p);
        if (static_cast<int>(nb.size()) < min_pts) {
            label[static_cast<size_t>(p)] = -1;
            continue;
        }
        label[static_cast<size_t>(p)] = cluster;
        std::deque<Eigen::Index> queue(nb.begin(), nb.end());
        while (!queue.empty()) {
            const Eigen::Index q = queue.front();
            queue.pop_front();
            int &lq = label[static_cast<size_t>(q)];
            if (lq == -1) lq = cluster; // border point
            if (lq != -2) continue;
            lq = cluster;
            auto nq = neighbors(q);
            if (static_cast<int>(nq.size()) >= min_pts)
                queue.insert(queue.end(), nq.begin(), nq.end());
        }
        ++cluster;
    }
    return label;
}

Association associate(const RodState &prediction, const OcclusionVerdict &verdict,
                      const Mat3X &points, const std::vector<int> &labels,
                      int group_count) {
    const Eigen::Index n = prediction.n();
    Association assoc;
    assoc.group_of_vertex.assign(static_cast<size_t>(n), -1);
    assoc.vertices_per_group.assign(static_cast<size_t>(group_count), 0);
    if (group_count == 0) return assoc;

    for (Eigen::Index i = 0; i < n; ++i) {
        if (!verdict.unoccluded[static_cast<size_t>(i)]) continue;
        const Vec3 x = prediction.positions.row(i);
        double best = std::numeric_limits<double>::infinity();
        int best_group = -1;
        for (Eigen::Index mpt = 0; mpt < points.rows(); ++mpt) {
            const int g = labels[static_cast<size_t>(mpt)];
            if (g < 0) continue;
            const double d = (points.row(mpt).transpose() - x).norm();
            if (d < best || (d == best && g < best_group)) {
                best = d;
                best_group = g;
            }
        }
        assoc.group_of_vertex[static_cast<size_t>(i)] = best_group;
        if (best_group >= 0) ++assoc.vertices_per_group[static_cast<size_t>(best_group)];
    }
    return assoc;
}

GmmResult gmm_em(const Mat3X &points, int j, const Mat3X &init_means, double tol,
                 int max_iters, double sigma_floor) {
    const Eigen::Index m = points.rows();
    if (m < j || j < 1)
        throw SimError(ErrorCode::InvalidArgument,
                       "gmm needs at least j points and j >= 1");
    if (init_means.rows() != j)
        throw SimError(ErrorCode::InvalidArgument, "gmm init mean count mismatch");

    GmmResult res;
    res.means = init_means;
    res.responsibilities.resize(m, j);
    VecX weights = VecX::Constant(j, 1.0 / j);
    const Vec3 data_mean = points.colwise().mean();

    // Start the shared variance at the scale of each point's nearest init
    // mean. A data-wide variance would wash out the responsibilities and
    // lose the anchoring of means to their initializing vertices.
    double sigma2 = 0.0;
    for (Eigen::Index p = 0; p < m; ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < j; ++k)
            best = std::min(best, (points.row(p) - res.means.row(k)).squaredNorm());
        sigma2 += best;
    }
    sigma2 = std::max(sigma2 / (3.0 * static_cast<double>(m)), sigma_floor);

    int consecutive_failures = 0;
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < max_iters; ++iter) {
        // E-step with log-sum-exp.
        double ll = 0.0;
        const double log_norm = -1.5 * std::log(2.0 * M_PI * sigma2);
        for (Eigen::Index p = 0; p < m; ++p) {
            VecX logp(j);
            for (int k = 0; k < j; ++k) {
                const double d2 =
                    (points.row(p) - res.means.row(k)).squaredNorm();
                logp[k] = std::log(std::max(weights[k], 1e-300)) + log_norm -
                          0.5 * d2 / sigma2;
            }
            const double mx = logp.maxCoeff();
            const double lse = mx + std::log((logp.array() - mx).exp().sum());
            ll += lse;
            res.responsibilities.row(p) = (logp.array() - lse).exp();
        }

        res.log_likelihood = ll;
        res.loglik_history.push_back(ll);
        if (iter > 0 && ll - prev_ll < tol && ll >= prev_ll) break;
        prev_ll = ll;

        // M-step: means, weights, shared isotropic variance (floored).
        bool reinitialized = false;
        double sum_sq = 0.0;
        for (int k = 0; k < j; ++k) {
            const double nk = res.responsibilities.col(k).sum();
            if (nk < 1e-12) {
                Eigen::Index far = 0;
                double best = -1.0;
                for (Eigen::Index p = 0; p < m; ++p) {
                    const double d = (points.row(p).transpose() - data_mean).norm();
                    if (d > best) {
                        best = d;
                        far = p;
                    }
                }
                res.means.row(k) = points.row(far);
                weights[k] = 1.0 / m;
                ++consecutive_failures;
                if (consecutive_failures >= 2)
                    throw SimError(ErrorCode::DegenerateMixture,
                                   "mixture component starved twice in a row");
                reinitialized = true;
                continue;
            }
            res.means.row(k) =
                (res.responsibilities.col(k).transpose() * points) / nk;
            weights[k] = nk / static_cast<double>(m);
            for (Eigen::Index p = 0; p < m; ++p)
                sum_sq += res.responsibilities(p, k) *
                          (points.row(p) - res.means.row(k)).squaredNorm();
        }
        if (reinitialized) {
            // Fresh start for the monotonicity record.
            res.loglik_history.clear();
            prev_ll = -std::numeric_limits<double>::infinity();
        } else {
            consecutive_failures = 0;
            sigma2 = std::max(sum_sq / (3.0 * static_cast<double>(m)), sigma_floor);
        }
    }
    return res;
}

RodState estimate_state(const RodState &prediction, const PointCloud &cloud,
                        const Camera &camera, const TrackerConfig &cfg,
                        EstimateInfo *info) {
    const Eigen::Index n = prediction.n();
    if (info) *info = EstimateInfo{};

    const PointCloud filtered = filter_cloud(cloud, prediction, cfg.filter_radius);
    if (filtered.size() == 0) {
        if (info) info->no_measurement = true;
        return prediction;
    }

    const OcclusionVerdict verdict = detect_unoccluded(
        prediction, filtered, camera, cfg.depth_tol, cfg.pixel_window);
    if (info) info->verdict = verdict;
    if (verdict.count == 0) {
        if (info) info->no_measurement = true;
        return prediction;
    }

    // Cluster at the sensor's natural scale: a few nearest-neighbor spacings,
    // so occlusion gaps split groups but the rod itself never fragments. If
    // that still exceeds the n~+1 budget, widen eps by bisection and finally
    // merge the smallest clusters into their nearest neighbor.
    const int target = static_cast<int>(verdict.count) + 1;
    auto count_clusters = [](const std::vector<int> &lab) {
        int c = 0;
        for (int l : lab) c = std::max(c, l + 1);
        return c;
    };

    VecX nn(filtered.size());
    for (Eigen::Index p = 0; p < filtered.size(); ++p) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index q = 0; q < filtered.size(); ++q)
            if (q != p)
                best = std::min(best,
                                (filtered.points.row(p) - filtered.points.row(q))
                                    .squaredNorm());
        nn[p] = std::sqrt(best);
    }
    std::vector<double> nn_sorted(nn.data(), nn.data() + nn.size());
    std::nth_element(nn_sorted.begin(), nn_sorted.begin() + nn_sorted.size() / 2,
                     nn_sorted.end());
    const double eps0 = std::max(3.0 * nn_sorted[nn_sorted.size() / 2], 1e-6);

    std::vector<int> labels = dbscan(filtered.points, eps0, cfg.dbscan_min_pts);
    int clusters = count_clusters(labels);
    if (clusters > target) {
        double lo = eps0;
        Vec3 mn = filtered.points.colwise().minCoeff();
        Vec3 mx = filtered.points.colwise().maxCoeff();
        double hi = std::max((mx - mn).norm(), 2.0 * eps0);
        for (int it = 0; it < 24; ++it) {
            const double mid = 0.5 * (lo + hi);
            std::vector<int> trial = dbscan(filtered.points, mid, cfg.dbscan_min_pts);
            const int c = count_clusters(trial);
            if (c <= target && c > 0) {
                hi = mid;
                labels = std::move(trial);
                clusters = c;
            } else {
                lo = mid;
            }
        }
    }

    // Merge smallest clusters into the nearest other cluster while over
    // budget.
    while (clusters > target) {
        std::vector<int> sizes(static_cast<size_t>(clusters), 0);
        for (int l : labels)
            if (l >= 0) ++sizes[static_cast<size_t>(l)];
        int smallest = static_cast<int>(std::min_element(sizes.begin(), sizes.end()) -
                                        sizes.begin());
        // Nearest other cluster by closest point pair.
        double best = std::numeric_limits<double>::infinity();
        int best_other = -1;
        for (Eigen::Index p = 0; p < filtered.size(); ++p) {
            if (labels[static_cast<size_t>(p)] != smallest) continue;
            for (Eigen::Index q = 0; q < filtered.size(); ++q) {
                const int lq = labels[static_cast<size_t>(q)];
                if (lq < 0 || lq == smallest) continue;
                const double d = (filtered.points.row(p) - filtered.points.row(q)).squaredNorm();
                if (d < best) {
                    best = d;
                    best_other = lq;
                }
            }
        }
        if (best_other < 0) break;
        for (int &l : labels) {
            if (l == smallest) l = best_other;
            if (l == clusters - 1) l = smallest; // keep labels dense
        }
        --clusters;
    }
    if (info) info->groups_used = clusters;

    const Association assoc =
        associate(prediction, verdict, filtered.points, labels, clusters);

    RodState out = prediction;
    for (int g = 0; g < clusters; ++g) {
        const int jg = assoc.vertices_per_group[static_cast<size_t>(g)];
        if (jg == 0) continue;

        std::vector<Eigen::Index> group_points;
        for (Eigen::Index p = 0; p < filtered.size(); ++p)
            if (labels[static_cast<size_t>(p)] == g) group_points.push_back(p);
        if (static_cast<int>(group_points.size()) < jg) continue; // too sparse

        Mat3X pts(static_cast<Eigen::Index>(group_points.size()), 3);
        for (size_t k = 0; k < group_points.size(); ++k)
            pts.row(static_cast<Eigen::Index>(k)) = filtered.points.row(group_points[k]);

        std::vector<Eigen::Index> member_vertices;
        for (Eigen::Index i = 0; i < n; ++i)
            if (assoc.group_of_vertex[static_cast<size_t>(i)] == g)
                member_vertices.push_back(i);

        Mat3X init(static_cast<Eigen::Index>(member_vertices.size()), 3);
        for (size_t k = 0; k < member_vertices.size(); ++k)
            init.row(static_cast<Eigen::Index>(k)) =
                prediction.positions.row(member_vertices[k]);

        const GmmResult gmm = gmm_em(pts, jg, init, cfg.gmm_tol, cfg.gmm_max_iters,
                                     cfg.gmm_sigma_floor);
        // Every observed vertex of the group anchors a mixture so the means
        // tile the group's points, but held vertices keep their predicted
        // (pose-determined) positions.
        for (size_t k = 0; k < member_vertices.size(); ++k) {
            const Eigen::Index i = member_vertices[k];
            const bool held = i <= 1 || i >= n - 2;
            if (!held)
                out.positions.row(i) = gmm.means.row(static_cast<Eigen::Index>(k));
        }
    }

    // Correct velocities against the previous estimate implied by the
    // prediction's own finite-difference velocities.
    out.velocities =
        prediction.velocities +
        (out.positions - prediction.positions) / cfg.step.dt;
    return out;
}

RodState initial_state(const PointCloud &first_cloud, const GripperInput &input,
                       const MaterialParams &params, const ResidualNet *net,
                       const TrackerConfig &cfg) {
    const Eigen::Index n = params.n();
    const Vec3 left = input.left.position;
    const Vec3 right = input.right.position;
    const Vec3 chord = right - left;
    const double chord_len = chord.norm();
    if (!(chord_len > 0.0))
        throw SimError(ErrorCode::InvalidArgument, "coincident gripper endpoints");
    const Vec3 axis = chord / chord_len;

    // Average observed points near each vertex fraction along the chord.
    Mat3X guess(n, 3);
    std::vector<bool> filled(static_cast<size_t>(n), false);
    guess.row(0) = left;
    guess.row(n - 1) = right;
    filled[0] = filled[static_cast<size_t>(n - 1)] = true;
    const double window = 0.5 / static_cast<double>(n - 1);
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double f = static_cast<double>(i) / static_cast<double>(n - 1);
        Vec3 acc = Vec3::Zero();
        int count = 0;
        for (Eigen::Index p = 0; p < first_cloud.size(); ++p) {
            const Vec3 pt = first_cloud.points.row(p);
            const double s = (pt - left).dot(axis) / chord_len;
            if (std::abs(s - f) <= window) {
                acc += pt;
                ++count;
            }
        }
        if (count > 0) {
            guess.row(i) = acc / count;
            filled[static_cast<size_t>(i)] = true;
        }
    }
    // Fill occluded stretches by linear interpolation between known anchors.
    Eigen::Index prev_known = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
        if (!filled[static_cast<size_t>(i)]) continue;
        for (Eigen::Index k = prev_known + 1; k < i; ++k) {
            const double t = static_cast<double>(k - prev_known) /
                             static_cast<double>(i - prev_known);
            guess.row(k) = (1.0 - t) * guess.row(prev_known) + t * guess.row(i);
        }
        prev_known = i;
    }

    RodState state;
    state.positions = guess;
    state.velocities = Mat3X::Zero(n, 3);
    state.time = first_cloud.frame_time;
    state = apply_boundary(state, input, params, cfg.step.dt);
    state.velocities.setZero();

    // Forward simulate with static grippers (and damping) until static.
    VecX warm;
    for (int step = 0; step < cfg.settle_max_steps; ++step) {
        StepTrace tr;
        state = step_deform(state, input, params, net, cfg.step,
                            warm.size() ? &warm : nullptr, &tr);
        warm = tr.theta.theta_star;
        state.velocities *= cfg.settle_damping;
        const double vmax = state.velocities.rowwise().norm().maxCoeff();
        if (vmax < cfg.settle_speed) {
            state.velocities.setZero();
            state.time = first_cloud.frame_time;
            return state;
        }
    }
    throw NonStaticError("rod did not settle within the step budget", state);
}

Trajectory track(const std::vector<PointCloud> &clouds,
                 const std::vector<GripperInput> &inputs, const RodState &state0,
                 const MaterialParams &params, const ResidualNet *net,
                 const Camera &camera, const TrackerConfig &cfg) {
    // Measurement schedule: cloud timestamps snapped to simulation steps.
    std::map<long, size_t> schedule;
    for (size_t c = 0; c < clouds.size(); ++c) {
        const double steps =
            (clouds[c].frame_time - state0.time) / cfg.step.dt;
        const long k = std::lround(steps);
        if (std::abs(steps - static_cast<double>(k)) > 1e-6)
            throw SimError(ErrorCode::InvalidArgument,
                           "cloud timestamp is not aligned to a simulation step");
        if (k >= 1 && k <= static_cast<long>(inputs.size())) schedule[k] = c;
    }

    Trajectory traj;
    traj.dt = cfg.step.dt;
    traj.states.push_back(state0);
    traj.inputs = inputs;

    VecX warm;
    RodState state = state0;
    // Velocity corrections difference against the previous estimate across
    // the whole measurement gap; differencing against the one-step
    // prediction would turn the accumulated correction into a single-step
    // velocity kick and pump energy into the rod.
    RodState prev_estimate = state0;
    for (size_t t = 0; t < inputs.size(); ++t) {
        try {
            StepTrace tr;
            state = step_deform(state, inputs[t], params, net, cfg.step,
                                warm.size() ? &warm : nullptr, &tr);
            warm = tr.theta.theta_star;
            const auto hit = schedule.find(static_cast<long>(t) + 1);
            if (hit != schedule.end()) {
                state = estimate_state(state, clouds[hit->second], camera, cfg);
                const double gap = state.time - prev_estimate.time;
                if (gap > 0.0)
                    state.velocities =
                        (state.positions - prev_estimate.positions) / gap;
                prev_estimate = state;
            }
            traj.states.push_back(state);
        } catch (const SimError &err) {
            traj.inputs.resize(traj.states.size() - 1);
            throw RolloutError("tracking frame " + std::to_string(t) + ": " +
                                   err.what(),
                               std::move(traj));
        }
    }
    return traj;
}

} // namespace drod
