#pragma once

// Test-only oracles, kept independent of the implementation paths they
// check.

#include "rmpc/dynamics.hpp"
#include "rmpc/objective.hpp"
#include "rmpc/policy.hpp"
#include "rmpc/utility.hpp"

#include <cmath>
#include <functional>

namespace rmpc::testing {

/// Central finite differences of a scalar function over a flat vector.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& at,
                       double h = 1e-6) {
  Vec g(at.size());
  Vec x = at;
  for (Eigen::Index i = 0; i < at.size(); ++i) {
    const double step = std::max(h, h * std::abs(at[i]));
    x[i] = at[i] + step;
    const double fp = f(x);
    x[i] = at[i] - step;
    const double fm = f(x);
    x[i] = at[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

inline double max_rel_error(const Vec& got, const Vec& want) {
  const double scale = std::max(1e-12, want.cwiseAbs().maxCoeff());
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

/// Dense transliteration of the forward gradient recursion for scalar
/// controls: phi_0 = 0; psi_i = (dpi/dx) phi_{i-1} + dpi/dtheta;
/// phi_i = A_i phi_{i-1} + B_i psi_i; dV/dtheta = sum_i dl/dx phi_i +
/// dl/du psi_i. Materializes phi (n x P) and psi (1 x P) outright, so it
/// is only usable for tiny nets; the production path must match it.
inline Vec dense_phi_psi_gradient(const RolloutTape& tape, const Vec& params,
                                  const Policy& policy) {
  const Eigen::Index p_count = policy.param_count();
  const int n = policy.state_dim();
  Mat phi = Mat::Zero(n, p_count);
  Vec grad = Vec::Zero(p_count);
  Vec ones = Vec::Ones(1);

  for (const RolloutStep& step : tape.steps) {
    Vec dpi_dtheta = Vec::Zero(p_count);
    Vec dpi_dx(n);
    policy.backward(params, step.trace, ones, dpi_dtheta, dpi_dx);
    Eigen::RowVectorXd psi = dpi_dx.transpose() * phi + dpi_dtheta.transpose();
    phi = step.a_jac * phi + step.b_jac * psi;
    grad += (step.dl_dx.transpose() * phi + step.dl_du[0] * psi).transpose();
  }
  return grad;
}

/// Cost of an uncontrolled linear rollout with l = x'x (r = 0):
/// sum_i |A^i x0|^2.
inline double uncontrolled_quadratic_cost(const Mat& a, const Vec& x0, int n_steps) {
  double total = 0.0;
  Vec x = x0;
  for (int i = 0; i < n_steps; ++i) {
    x = a * x;
    total += x.squaredNorm();
  }
  return total;
}

/// Cost of replaying a control sequence through the model (the N-step
/// cost definition, evaluated directly).
inline double replay_cost(const Vec& x0, const Eigen::Ref<const Vec>& window, const Mat& controls,
                          const DynamicsModel& model, const Utility& utility) {
  Vec x = x0;
  double total = 0.0;
  for (int i = 0; i < controls.cols(); ++i) {
    x = model.step(x, controls.col(i));
    total += utility.value(x, window[i], controls.col(i));
  }
  return total;
}

}  // namespace rmpc::testing
