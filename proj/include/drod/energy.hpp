#ifndef DROD_ENERGY_HPP
#define DROD_ENERGY_HPP

#include "drod/frames.hpp"
#include "drod/types.hpp"

// Elastic potential P(X, u, theta, alpha), the inner twist equilibrium, and
// the restoring-force gradient. Gravity is not part of P; the integrator adds
// it as an external force.

namespace drod {

struct EnergyReport {
    double total = 0.0; // joules
    VecX bend;          // per interior vertex
    VecX twist;         // per interior vertex
};

struct ThetaSolve {
    VecX theta_star;           // full per-edge twist, clamps included
    double stationarity = 0.0; // max |dP/dtheta| over free edges
    int iterations = 0;
    // Free-edge tridiagonal Hessian at the solution, kept for implicit
    // differentiation.
    VecX hess_diag;
    VecX hess_off;
};

class ThetaSolveError : public SimError {
  public:
    ThetaSolveError(const std::string &what, ThetaSolve best)
        : SimError(ErrorCode::NonConvergence, what), best_iterate(std::move(best)) {}
    ThetaSolve best_iterate;
};

// E_bend^i = 1/(2 lbar_i) sum_j (omega^i_j - obar_i)^T B_i (omega^i_j - obar_i).
VecX bending_energy(const CurvatureSet &omega, const MaterialParams &params);

// E_twist^i = beta_i (theta_i - theta_{i-1})^2 / lbar_i.
VecX twisting_energy(const VecX &theta, const MaterialParams &params);

EnergyReport total_potential(const RodState &state, const GripperInput &input,
                             const VecX &theta, const MaterialParams &params);

// Damped Newton on the free twists with the boundary twists clamped to the
// gripper-imposed material orientation. Deterministic given the warm start.
ThetaSolve solve_theta_star(const RodState &state, const GripperInput &input,
                            const MaterialParams &params,
                            const VecX *warm_start = nullptr);

// dP/dX at (X, theta*). Free twists are held fixed (envelope theorem); the
// clamped boundary twist is differentiated through the transport chain.
Mat3X grad_potential_x(const RodState &state, const GripperInput &input,
                       const ThetaSolve &theta_star, const MaterialParams &params);

namespace detail {

// Twist subproblem with the centerline frozen: analytic gradient and
// tridiagonal Hessian of P over all edge twists.
struct ThetaProblem {
    Eigen::Index ne = 0;
    std::vector<std::array<Vec2, 2>> om0; // Bishop-frame curvatures
    std::vector<Mat2> bend;
    VecX beta;
    VecX lbar;
    std::vector<Vec2> obar;
    double theta_right = 0.0; // right clamp (left clamp is zero)

    double energy(const VecX &theta) const;
    void gradient(const VecX &theta, VecX &g) const;
    void hessian(const VecX &theta, VecX &diag, VecX &off) const;
};

ThetaProblem make_theta_problem(const RodState &state, const GripperInput &input,
                                const MaterialParams &params);

// Solves (T + damping I) x = rhs for a symmetric tridiagonal T given by
// diag/off. Returns false if a pivot is not strictly positive.
bool tridiag_solve(const VecX &diag, const VecX &off, double damping,
                   const VecX &rhs, VecX &x);

} // namespace detail

} // namespace drod

#endif
