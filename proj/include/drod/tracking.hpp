#ifndef DROD_TRACKING_HPP
#define DROD_TRACKING_HPP

#include <string>
#include <vector>

#include "drod/integrator.hpp"
#include "drod/types.hpp"

// Occlusion-robust state estimation: filter the cloud around the model
// prediction, find unoccluded vertices by depth matching, cluster, associate,
// fit per-group mixtures, and snap observed vertices to their mixture means.
// Occluded vertices keep their predicted positions.

namespace drod {

struct PointCloud {
    Mat3X points;     // M x 3, world frame
    VecX depth;       // optional camera-axis depths; empty or size M
    double frame_time = 0.0;

    Eigen::Index size() const { return points.rows(); }
};

// Pinhole camera. axis_angle rotates camera axes into the world; the camera
// looks along its +z axis.
struct Camera {
    double fx = 600.0, fy = 600.0, cx = 360.0, cy = 540.0;
    Vec3 position = Vec3::Zero();
    Vec3 axis_angle = Vec3::Zero();

    // (u, v, depth) of a world point; depth is the camera-frame z.
    Vec3 project(const Vec3 &world) const;
    Vec3 to_camera(const Vec3 &world) const;
};

struct OcclusionVerdict {
    std::vector<bool> unoccluded; // n
    Eigen::Index count = 0;       // number of true entries
    std::vector<std::string> diagnostics;
};

struct GmmResult {
    Mat3X means;                      // j x 3
    Eigen::MatrixXd responsibilities; // points x j, rows sum to 1
    double log_likelihood = 0.0;
    std::vector<double> loglik_history; // cleared on mean reinitialization
};

struct TrackerConfig {
    double filter_radius = 0.05; // m
    double depth_tol = 0.02;     // m
    double pixel_window = 8.0;   // px
    int dbscan_min_pts = 4;
    double gmm_tol = 1e-8;
    int gmm_max_iters = 100;
    double gmm_sigma_floor = 1e-6; // (1 mm)^2
    StepConfig step;
    double settle_speed = 1e-4; // m/s, initial-state rest threshold
    int settle_max_steps = 10000;
    double settle_damping = 0.99; // per-step velocity factor while settling
};

// Distance from a point to the closest predicted segment.
double point_to_polyline(const Vec3 &p, const Mat3X &vertices);

// Keeps points within `radius` (closed ball) of the predicted polyline.
PointCloud filter_cloud(const PointCloud &cloud, const RodState &prediction,
                        double radius);

// A vertex is unoccluded iff some cloud point projects within pixel_window of
// the vertex projection and the depths agree within depth_tol. Vertices
// behind the camera are excluded with a diagnostic.
OcclusionVerdict detect_unoccluded(const RodState &prediction,
                                   const PointCloud &cloud, const Camera &camera,
                                   double depth_tol, double pixel_window);

// Density clustering; labels are 0..k-1 with -1 for noise. Deterministic
// under fixed point order. A point's eps-neighborhood includes itself.
std::vector<int> dbscan(const Mat3X &points, double eps, int min_pts);

struct Association {
    std::vector<int> group_of_vertex; // n, -1 for occluded/unassigned
    std::vector<int> vertices_per_group;
};

// Each unoccluded vertex joins the group whose nearest point is closest to
// the predicted vertex; ties pick the lower group index.
Association associate(const RodState &prediction, const OcclusionVerdict &verdict,
                      const Mat3X &points, const std::vector<int> &labels,
                      int group_count);

// Isotropic shared-variance EM initialized at `init_means`. Iterates until
// the log-likelihood gain drops below tol. An empty mixture is reinitialized
// at the point farthest from the data mean; two consecutive failures raise a
// degenerate-mixture error.
GmmResult gmm_em(const Mat3X &points, int j, const Mat3X &init_means,
                 double tol = 1e-8, int max_iters = 100,
                 double sigma_floor = 1e-6);

struct EstimateInfo {
    bool no_measurement = false;
    OcclusionVerdict verdict;
    int groups_used = 0;
};

// Full per-frame pipeline. An empty filtered cloud returns the prediction
// unchanged with the no-measurement flag set.
RodState estimate_state(const RodState &prediction, const PointCloud &cloud,
                        const Camera &camera, const TrackerConfig &cfg,
                        EstimateInfo *info = nullptr);

class NonStaticError : public SimError {
  public:
    NonStaticError(const std::string &what, RodState last)
        : SimError(ErrorCode::NonStatic, what), last_state(std::move(last)) {}
    RodState last_state;
};

// Builds an initial guess from the observed points between the gripper
// endpoints and forward-simulates (with velocity damping) until the rod is
// static; returns the settled state with zero velocities.
RodState initial_state(const PointCloud &first_cloud, const GripperInput &input,
                       const MaterialParams &params, const ResidualNet *net,
                       const TrackerConfig &cfg);

// Predicts with step_deform between measurements and corrects with
// estimate_state whenever a cloud's timestamp lands on a simulation step.
// An empty cloud list reduces to a pure rollout.
Trajectory track(const std::vector<PointCloud> &clouds,
                 const std::vector<GripperInput> &inputs, const RodState &state0,
                 const MaterialParams &params, const ResidualNet *net,
                 const Camera &camera, const TrackerConfig &cfg);

} // namespace drod

#endif
