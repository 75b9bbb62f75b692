#ifndef DROD_TYPES_HPP
#define DROD_TYPES_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "drod/errors.hpp"

// Core rod containers shared by every other module.
//
// Index conventions (0-based throughout the code base):
//   vertices  0 .. n-1;  vertices {0, 1, n-2, n-1} are gripper-held.
//   edge i joins vertices i and i+1;  edges 0 .. n-2;  edges 0 and n-2 held.
//   interior vertices (curvature stencils) 1 .. n-2, stored in arrays of
//   length n-2 indexed by k = vertex-1.
//   free vertices (movable by dynamics/projection) 2 .. n-3.
//   edge twists theta: one per edge; theta[0] and theta[n-2] are clamped by
//   the grippers.

namespace drod {

using Mat3X = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using VecX = Eigen::VectorXd;

// Vertex positions and velocities of one rod at one instant.
struct RodState {
    Mat3X positions;  // n x 3, meters
    Mat3X velocities; // n x 3, m/s
    double time = 0.0;

    Eigen::Index n() const { return positions.rows(); }
};

// Pose of one end effector: position plus axis-angle rotation applied to the
// rest edge it holds. Axis-angle magnitude must stay below pi.
struct GripperPose {
    Vec3 position = Vec3::Zero();
    Vec3 axis_angle = Vec3::Zero();
};

struct GripperInput {
    GripperPose left;
    GripperPose right;
};

// Per-rod material description. Masses are kept as diagonal matrices (their
// diagonals) so the projection weighting generalizes beyond scalar masses.
// Interior arrays are indexed by k = vertex-1 (vertices 1..n-2).
struct MaterialParams {
    std::vector<Vec3> masses;          // n diagonals, kg
    std::vector<Mat2> bend_modulus;    // n-2, SPD 2x2
    VecX twist_modulus;                // n-2, > 0
    Mat3X rest_edges;                  // (n-1) x 3, meters
    std::vector<Vec2> rest_curvatures; // n-2
    VecX voronoi_lengths;              // n-2, |e_{i-1}| + |e_i|
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);

    // Rest Bishop frame, derived from rest_edges at construction. Axis 0 of
    // edge 0 anchors the runtime twist reference; the held edges' entries
    // define the gripper-imposed material directions.
    Mat3X rest_bishop1; // (n-1) x 3

    Eigen::Index n() const { return static_cast<Eigen::Index>(masses.size()); }

    VecX rest_edge_lengths() const {
        return rest_edges.rowwise().norm();
    }
};

// Time-indexed states plus the inputs applied between them.
struct Trajectory {
    std::vector<RodState> states;
    std::vector<GripperInput> inputs; // size states.size() - 1
    double dt = 0.0;
};

// Builds a straight rod of `n` vertices spanning `length` along `axis`
// starting at `origin`, with total mass spread uniformly and uniform
// isotropic moduli. The workhorse constructor for tests and the CLI.
struct UniformRodSpec {
    Eigen::Index n = 13;
    double length = 1.0;
    double total_mass = 0.035;  // kg
    double bend = 2e-3;         // N*m^2, B = bend * I
    double twist = 2e-3;        // N*m^2
    Vec3 origin = Vec3::Zero();
    Vec3 axis = Vec3(1, 0, 0);
    Vec3 gravity = Vec3(0.0, 0.0, -9.81);
};

MaterialParams make_uniform_params(const UniformRodSpec &spec);
RodState make_rest_state(const MaterialParams &params, const Vec3 &origin);

// Gripper input whose poses reproduce the rest placement of `state`'s held
// edges (identity rotation, positions at the current end vertices).
GripperInput rest_input(const RodState &state);

// Edge vectors e^i = x^{i+1} - x^i.
Mat3X edges(const RodState &state);

// Rodrigues rotation matrix for an axis-angle vector.
Eigen::Matrix3d axis_angle_matrix(const Vec3 &axis_angle);

// Rigidly places the held vertices from the gripper poses; interior vertices
// are untouched. Boundary velocities are set from the position change over
// dt. Throws on non-finite poses.
RodState apply_boundary(const RodState &state, const GripperInput &input,
                        const MaterialParams &params, double dt);

// Invariant diagnostics; empty when the pair is consistent. Never throws.
std::vector<std::string> validate(const MaterialParams &params,
                                  const RodState &state);

} // namespace drod

#endif
