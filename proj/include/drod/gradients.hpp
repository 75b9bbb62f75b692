#ifndef DROD_GRADIENTS_HPP
#define DROD_GRADIENTS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drod/der_potential.hpp"
#include "drod/integrator.hpp"
#include "drod/types.hpp"

// End-to-end differentiation: multi-step loss, implicit differentiation of
// the twist equilibrium, and reverse accumulation of the rollout loss through
// projection sweeps, integration, the residual net, and the inner solve.

namespace drod {

enum class LossNorm { L1, L2 };

struct TrainConfig {
    int horizon = 100;
    double learning_rate = 1e-4;
    LossNorm loss_norm = LossNorm::L1;
    int max_epochs = 500;
    std::uint64_t seed = 0;
    bool train_masses = false;
    bool train_bend = true;
    bool train_twist = true;
    bool train_net = true;
};

// Gradients for the material components and the net.
//
// d_bend[k] packs the three parameters of the symmetric modulus: (0,0) and
// (1,1) are the diagonal derivatives and both off-diagonal entries hold the
// derivative with respect to the single symmetric off-diagonal parameter.
struct GradientBundle {
    VecX d_mass;              // n, per-vertex isotropic scalar
    std::vector<Mat2> d_bend; // n-2
    VecX d_twist;             // n-2
    VecX d_net;               // flattened net parameters (empty without a net)
    double loss_value = 0.0;  // meters
    std::string diagnostic;   // set when the gradient norm explodes
};

// Mean over steps and vertices of the per-vertex norm of the position error,
// over states 2..T (the shared initial state contributes nothing).
double loss_multistep(const Trajectory &pred, const Trajectory &truth,
                      LossNorm norm);

struct AlphaAdjoint {
    VecX mass;
    std::vector<Mat2> bend;
    VecX twist;
    void set_zero(Eigen::Index n);
};

// Sensitivity of the free twist equilibrium through the implicit function
// theorem; the free-edge Hessian factorization comes from the inner solve.
class ThetaSensitivity {
  public:
    ThetaSensitivity(const RodState &state, const GripperInput &input,
                     const MaterialParams &params, const ThetaSolve &solve);

    // (d2P/dtheta2)^{-1} rhs over free edges. Throws IllConditioned when the
    // factorization breaks down.
    VecX solve_free(const VecX &rhs) const;

    // Directional derivative of the free theta* under input perturbations.
    VecX directional(const der::PotentialSeeds &seeds) const;

    // Reverse form: x_bar += (dtheta*/dX)^T theta_bar and likewise for alpha.
    void accumulate(const VecX &theta_bar, Mat3X &x_bar,
                    AlphaAdjoint &alpha_bar) const;

  private:
    RodState state_;
    MaterialParams params_;
    ThetaSolve solve_;
    der::PotentialConstants constants_;
};

inline ThetaSensitivity implicit_grad_theta(const RodState &state,
                                            const GripperInput &input,
                                            const MaterialParams &params,
                                            const ThetaSolve &solve) {
    return ThetaSensitivity(state, input, params, solve);
}

GradientBundle grad_rollout(const RodState &state0,
                            const std::vector<GripperInput> &inputs,
                            const Trajectory &truth, const MaterialParams &params,
                            const ResidualNet *net, const StepConfig &cfg,
                            const TrainConfig &tcfg);

// Central differences with per-coordinate steps h * max(1, |x0_k|). The
// independent oracle checked against every analytic gradient here.
VecX finite_difference_oracle(const std::function<double(const VecX &)> &f,
                              const VecX &x0, double h);

} // namespace drod

#endif
