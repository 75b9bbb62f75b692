#ifndef DROD_SENSOR_SIM_HPP
#define DROD_SENSOR_SIM_HPP

#include <cstdint>
#include <vector>

#include "drod/tracking.hpp"
#include "drod/types.hpp"

// Synthetic depth-sensor frames rendered from ground-truth rod states: points
// sampled along segments, Gaussian noise, and axis-aligned occluder boxes in
// the camera frame that drop points (and mark vertices) whose view ray passes
// through them.

namespace drod {

struct CameraBox {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
};

struct SceneSpec {
    Camera camera;
    int samples_per_segment = 20;
    // Calibrated so the RMS point-to-polyline distance of a noisy render
    // equals noise_sigma (per-axis deviation is noise_sigma / sqrt(2)).
    double noise_sigma = 0.0;
    // When positive, renders marker-style blobs of this many points at each
    // vertex instead of sweeping the segments, mimicking motion-capture
    // observability of the vertices themselves.
    int marker_points = 0;
    std::vector<CameraBox> occluders; // camera frame
    std::uint64_t seed = 0;
};

struct RenderResult {
    PointCloud cloud;
    std::vector<bool> vertex_occluded; // ground truth per vertex
};

RenderResult render_cloud(const RodState &state, const SceneSpec &spec);

} // namespace drod

#endif
