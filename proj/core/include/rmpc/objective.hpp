#pragma once

#include "rmpc/dynamics.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/utility.hpp"

#include <vector>

namespace rmpc {

/// Abort threshold for rollouts; beyond this the trajectory has left any
/// physically meaningful region.
inline constexpr double kDivergenceLimit = 1e6;

/// Everything recorded while unrolling the objective: step i holds the
/// pre-step state, the control produced by the (N-i+1)-cycle policy
/// evaluation, the dynamics Jacobians at (x_{i-1}, u_{i-1}) and the
/// utility partials at (x_i, r_i, u_{i-1}).
struct RolloutStep {
  Vec x_prev;
  Vec u;
  double r = 0.0;
  double l = 0.0;
  PolicyTrace trace;
  Mat a_jac;
  Mat b_jac;
  Vec dl_dx;
  Vec dl_du;
};

struct RolloutTape {
  std::vector<RolloutStep> steps;
  Vec x_final;
};

struct ObjectiveValue {
  double total = 0.0;
  std::vector<double> per_step;
};

/// Unrolls V(x0, r_{1:N}, N; theta): at step i the policy runs N-i+1
/// cycles from a fresh zero hidden state on (x_{i-1}, r_{i:N}), the model
/// advances, and l(x_i, r_i, u_{i-1}) accumulates. Throws DivergenceError
/// when a state entry leaves [-1e6, 1e6] or turns non-finite.
ObjectiveValue rollout(const Vec& x0, const Eigen::Ref<const Vec>& window, const Vec& params,
                       const Policy& policy, const DynamicsModel& model, const Utility& utility,
                       RolloutTape* tape = nullptr);

/// Exact dV/dtheta through the coupled policy-dynamics rollout. Walks the
/// tape in reverse, feeding each step's policy backward with the total
/// cost sensitivity of its control; equivalent to the forward phi/psi
/// recursion (phi_i = A_i phi_{i-1} + B_i psi_i, psi_i = dpi/dx phi_{i-1}
/// + dpi/dtheta) without materializing the Jacobian matrices.
Vec gradient(const RolloutTape& tape, const Vec& params, const Policy& policy);

struct BatchSample {
  Vec x0;
  Vec window;
};

struct BatchResult {
  double j = 0.0;
  Vec grad;
  std::vector<double> per_sample;
};

/// Monte-Carlo objective J = mean_s V_s and its gradient, reduced in
/// sample-index order. `batched` routes through the gemm implementation
/// (identical up to rounding; the trainer turns it on).
BatchResult batch_objective_and_gradient(const std::vector<BatchSample>& samples,
                                         const Vec& params, const Policy& policy,
                                         const DynamicsModel& model, const Utility& utility,
                                         bool batched = false);

}  // namespace rmpc
