#pragma once

#include "rmpc/dynamics.hpp"
#include "rmpc/objective.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/utility.hpp"

#include <functional>
#include <vector>

namespace rmpc {

struct ShootingConfig {
  int max_iterations = 400;
  double tolerance = 1e-8; // projected-gradient sup norm
  int multistarts = 8;
  int lbfgs_memory = 10;
  std::uint64_t seed = 12345;
};

struct MpcSolution {
  Mat controls; // m x N, column i = u_i
  double cost = 0.0;
  int iterations = 0;
  bool converged = false;

  Vec first_control() const { return controls.col(0); }
  int horizon() const { return static_cast<int>(controls.cols()); }
};

/// Direct single shooting for min_u sum l(x_i, r_i, u_{i-1}) subject to
/// the dynamics and the control box. Gradient comes from the same adjoint
/// machinery the training objective uses; the box is handled by
/// projection inside the line search. Best of `multistarts` starts (the
/// zero sequence plus uniform draws inside the box); ties go to the
/// lowest start index. Throws EvalError if every start hits non-finite
/// simulation.
MpcSolution solve_shooting(const Vec& x0, const Eigen::Ref<const Vec>& window,
                           const DynamicsModel& model, const Utility& utility,
                           const ControlBounds& bounds, const ShootingConfig& cfg);

/// Exact finite-horizon tracking LQR via the backward Riccati recursion
/// with affine reference terms. Bounds are ignored; the result is only an
/// oracle where they would stay inactive. Control weights must be
/// strictly positive.
MpcSolution lqr_exact(const Vec& x0, const Eigen::Ref<const Vec>& window, const LinearModel& model,
                      const QuadraticTrackingUtility& utility);

using FirstControlOracle =
    std::function<Vec(const Vec& x0, const Eigen::Ref<const Vec>& window)>;

/// e_N ingredients for one horizon. mean is the normalized error
/// E[|u*_0 - pi^N|] / (u*_max - u*_min); gaps and the u* extrema are kept
/// so callers can re-normalize with a pooled denominator.
struct PolicyErrorStats {
  double mean = 0.0;
  double ci95 = 0.0;
  double denom = 0.0;
  double u_star_min = 0.0;
  double u_star_max = 0.0;
  std::vector<double> abs_gaps;
};

/// Mean normalized first-control gap between the policy at `horizon`
/// cycles and the oracle's `horizon`-step solution over the evaluation
/// set. Throws EvalError when the optimal-control range degenerates.
PolicyErrorStats policy_error(const Vec& params, const Policy& policy,
                              const FirstControlOracle& oracle,
                              const std::vector<BatchSample>& eval_set, int horizon);

}  // namespace rmpc
