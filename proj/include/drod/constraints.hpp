#ifndef DROD_CONSTRAINTS_HPP
#define DROD_CONSTRAINTS_HPP

#include <utility>
#include <vector>

#include "drod/step_config.hpp"
#include "drod/types.hpp"

// Inextensibility enforcement: Gauss-Seidel sweeps of mass-weighted distance
// corrections. Held vertices act as infinitely massive (weight zero), so
// sweeps touch the pairs next to the boundary but never move held vertices.

namespace drod {

struct ProjectionReport {
    int iterations = 0;        // sweeps executed
    double max_violation = 0.0; // max |C| after the last sweep, meters
    // Eq-style momentum sums accumulated over corrections applied by pairs
    // whose two vertices are both free (boundary-adjacent pairs exchange
    // momentum with the gripper by construction).
    double linear_residual = 0.0;  // kg*m
    double angular_residual = 0.0; // kg*m^2, torque about the pre-projection centroid
    Mat3X corrections;             // n x 3, accumulated vertex displacements
    Mat3X positions;               // n x 3, post-projection positions
};

class ProjectionError : public SimError {
  public:
    ProjectionError(const std::string &what, ProjectionReport rep)
        : SimError(ErrorCode::NonConvergence, what), report(std::move(rep)) {}
    ProjectionReport report;
};

// C = | ||xi - xj|| - rest_len |.
double constraint_value(const Vec3 &xi, const Vec3 &xj, double rest_len);

// Signed equal-and-opposite correction along the segment: with
// d = (xj - xi)/||xj - xi|| and s = ||xi - xj|| - rest_len,
// dxi = s*d and dxj = -s*d.
std::pair<Vec3, Vec3> correction_pair(const Vec3 &xi, const Vec3 &xj,
                                      double rest_len);

// beta_i = ||Mj|| / (||Mi|| + ||Mj||) and vice versa; spectral norm of a
// diagonal mass is its largest diagonal entry.
std::pair<double, double> beta_weights(const Vec3 &mass_i, const Vec3 &mass_j);

std::pair<RodState, ProjectionReport>
enforce_inextensibility(const RodState &state, const MaterialParams &params,
                        const StepConfig &cfg);

// Ablation variant: beta = 1/2 on free pairs regardless of mass. Boundary
// handling is identical.
std::pair<RodState, ProjectionReport>
enforce_naive(const RodState &state, const MaterialParams &params,
              const StepConfig &cfg);

// Eq. (11) sums over the free vertices: sum_i M^i dx^i and
// sum_i r^i x (M^i dx^i) with r^i about `center`.
std::pair<Vec3, Vec3> momentum_residuals(const ProjectionReport &report,
                                         const MaterialParams &params,
                                         const Vec3 &center);

namespace detail {

// One applied pair update, recorded for reverse-mode replay. Positions are
// the values *before* the update.
struct PairUpdate {
    int pair = 0; // vertices (pair, pair+1)
    Vec3 xi, xj;
    double beta_i = 0.0, beta_j = 0.0;
    double mass_i = 0.0, mass_j = 0.0; // largest diagonal entries
    double rest = 0.0;
};

std::pair<RodState, ProjectionReport>
project(const RodState &state, const MaterialParams &params, const StepConfig &cfg,
        bool mass_weighted, std::vector<PairUpdate> *log);

} // namespace detail

} // namespace drod

#endif
