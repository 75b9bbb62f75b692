#include "drod/sensor_sim.hpp"

#include <cmath>
#include <random>

namespace drod {

namespace {

// Does the camera-frame segment from the origin to p pass through the box
// strictly before reaching p?
bool ray_blocked(const Vec3 &p_cam, const CameraBox &box) {
    double t_enter = 0.0, t_exit = 1.0;
    for (int c = 0; c < 3; ++c) {
        const double d = p_cam[c];
        if (std::abs(d) < 1e-15) {
            if (p_cam[c] < box.min[c] || p_cam[c] > box.max[c]) return false;
            continue;
        }
        double t0 = box.min[c] / d;
        double t1 = box.max[c] / d;
        if (t0 > t1) std::swap(t0, t1);
        t_enter = std::max(t_enter, t0);
        t_exit = std::min(t_exit, t1);
    }
    return t_enter <= t_exit && t_enter < 1.0;
}

bool occluded_from(const Vec3 &world, const Camera &cam,
                   const std::vector<CameraBox> &boxes) {
    const Vec3 pc = cam.to_camera(world);
    for (const CameraBox &b : boxes)
        if (ray_blocked(pc, b)) return true;
    return false;
}

} // namespace

RenderResult render_cloud(const RodState &state, const SceneSpec &spec) {
    if (spec.samples_per_segment < 1 || spec.noise_sigma < 0.0)
        throw SimError(ErrorCode::InvalidArgument, "bad scene spec");

    const Eigen::Index n = state.n();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise_sigma / std::sqrt(2.0));

    RenderResult out;
    out.cloud.frame_time = state.time;
    out.vertex_occluded.resize(static_cast<size_t>(n));

    bool any_in_front = false;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (spec.camera.to_camera(state.positions.row(i)).z() > 0.0)
            any_in_front = true;
        out.vertex_occluded[static_cast<size_t>(i)] =
            occluded_from(state.positions.row(i), spec.camera, spec.occluders);
    }
    if (!any_in_front)
        throw SimError(ErrorCode::InvalidArgument, "rod is entirely behind the camera");

    std::vector<Vec3> pts;
    auto emit = [&](Vec3 p) {
        if (spec.noise_sigma > 0.0)
            p += Vec3(gauss(rng), gauss(rng), gauss(rng));
        if (spec.camera.to_camera(p).z() <= 0.0) return;
        if (occluded_from(p, spec.camera, spec.occluders)) return;
        pts.push_back(p);
    };
    if (spec.marker_points > 0) {
        pts.reserve(static_cast<size_t>(n * spec.marker_points));
        for (Eigen::Index i = 0; i < n; ++i)
            for (int s = 0; s < spec.marker_points; ++s)
                emit(state.positions.row(i));
    } else {
        pts.reserve(static_cast<size_t>((n - 1) * spec.samples_per_segment));
        for (Eigen::Index e = 0; e + 1 < n; ++e) {
            const Vec3 a = state.positions.row(e);
            const Vec3 b = state.positions.row(e + 1);
            for (int s = 0; s < spec.samples_per_segment; ++s) {
                const double t = (s + 0.5) / spec.samples_per_segment;
                emit((1.0 - t) * a + t * b);
            }
        }
    }

    out.cloud.points.resize(static_cast<Eigen::Index>(pts.size()), 3);
    out.cloud.depth.resize(static_cast<Eigen::Index>(pts.size()));
    for (size_t k = 0; k < pts.size(); ++k) {
        out.cloud.points.row(static_cast<Eigen::Index>(k)) = pts[k];
        out.cloud.depth[static_cast<Eigen::Index>(k)] =
            spec.camera.to_camera(pts[k]).z();
    }
    return out;
}

} // namespace drod
