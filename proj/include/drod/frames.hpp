#ifndef DROD_FRAMES_HPP
#define DROD_FRAMES_HPP

#include <array>
#include <vector>

#include "drod/types.hpp"

// Discrete differential geometry of the rod: tangents, parallel transport,
// Bishop frames, curvature binormals, and material-frame curvatures.

namespace drod {

struct FrameSet {
    Mat3X tangents;  // (n-1) x 3, unit
    Mat3X bishop1;   // (n-1) x 3
    Mat3X bishop2;   // (n-1) x 3
    VecX theta;      // n-1, rad
    Mat3X material1; // (n-1) x 3
    Mat3X material2; // (n-1) x 3
};

struct CurvatureSet {
    Mat3X kb; // (n-2) x 3, interior vertices 1..n-2
    // omega[k][j]: curvature of interior vertex k+1 projected on the material
    // frame of edge k+j (j=0 trailing, j=1 leading).
    std::vector<std::array<Vec2, 2>> omega;
};

// Minimal rotation taking t_from to t_to, applied to v. Throws on antipodal
// tangents (dot < -1 + 1e-9).
Vec3 parallel_transport(const Vec3 &v, const Vec3 &t_from, const Vec3 &t_to);

// kb = 2 (e_prev x e_cur) / (|e_prev||e_cur| + e_prev . e_cur).
Vec3 curvature_binormal(const Vec3 &e_prev, const Vec3 &e_cur);

// Twist-free frame chain seeded by w1_ref (projected onto the plane normal to
// the first tangent and renormalized). theta is zeroed and the material
// frames coincide with the Bishop frames.
FrameSet bishop_frames(const RodState &state, const Vec3 &w1_ref);

// Stores theta and rotates the material frames about the tangents.
void set_twist(FrameSet &frames, const VecX &theta);

// omega^i_j = (kb_i . m2_j, -kb_i . m1_j) for the two edges at each interior
// vertex, measured against `frames`' material frames.
CurvatureSet material_curvatures(const FrameSet &frames, const RodState &state);

// Transports the first Bishop axis from the previous first tangent to the new
// one, keeping twist continuous across steps.
Vec3 time_parallel_reference(const FrameSet &prev_frames, const RodState &new_state);

} // namespace drod

#endif
