#include "rmpc/objective.hpp"

#include <cassert>
#include <cmath>

namespace rmpc {

namespace {

bool state_ok(const Vec& x) {
  return x.allFinite() && x.cwiseAbs().maxCoeff() <= kDivergenceLimit;
}

}  // namespace

ObjectiveValue rollout(const Vec& x0, const Eigen::Ref<const Vec>& window, const Vec& params,
                       const Policy& policy, const DynamicsModel& model, const Utility& utility,
                       RolloutTape* tape) {
  const int n_steps = static_cast<int>(window.size());
  assert(n_steps >= 1);
  assert(x0.size() == model.state_dim());

  ObjectiveValue value;
  value.per_step.reserve(n_steps);
  if (tape) {
    tape->steps.clear();
    tape->steps.resize(n_steps);
  }

  Vec x = x0;
  for (int i = 1; i <= n_steps; ++i) {
    RolloutStep local;
    RolloutStep& step = tape ? tape->steps[i - 1] : local;

    // u_{i-1} = pi^{N-i+1}(x_{i-1}, r_{i:N}); tail window starts at r_i.
    const auto tail = window.segment(i - 1, n_steps - i + 1);
    step.u = policy.forward(params, x, tail, tape ? &step.trace : nullptr);
    step.x_prev = x;
    step.r = window[i - 1];

    Vec x_next = model.step(x, step.u);
    if (!state_ok(x_next)) throw DivergenceError(i, x_next);

    step.l = utility.value(x_next, step.r, step.u);
    if (!std::isfinite(step.l)) throw DivergenceError(i, x_next);
    if (tape) {
      model.jacobians(x, step.u, step.a_jac, step.b_jac);
      utility.partials(x_next, step.r, step.u, step.dl_dx, step.dl_du);
    }

    value.total += step.l;
    value.per_step.push_back(step.l);
    x = std::move(x_next);
  }
  if (tape) tape->x_final = x;
  return value;
}

Vec gradient(const RolloutTape& tape, const Vec& params, const Policy& policy) {
  const int n_steps = static_cast<int>(tape.steps.size());
  assert(n_steps >= 1);

  Vec grad = Vec::Zero(policy.param_count());
  Vec grad_x0(policy.state_dim());

  // a = dV/dx_i over the tail; starts at dl_N/dx_N.
  Vec a = tape.steps[n_steps - 1].dl_dx;
  for (int i = n_steps; i >= 1; --i) {
    const RolloutStep& step = tape.steps[i - 1];
    // Total sensitivity of the step's control: directly through l_i and
    // through x_i = f(x_{i-1}, u_{i-1}).
    Vec g = step.dl_du + step.b_jac.transpose() * a;
    policy.backward(params, step.trace, g, grad, grad_x0);
    if (i > 1) {
      a = step.a_jac.transpose() * a + grad_x0 + tape.steps[i - 2].dl_dx;
    }
  }
  return grad;
}

BatchResult batch_objective_per_sample(const std::vector<BatchSample>& samples, const Vec& params,
                                       const Policy& policy, const DynamicsModel& model,
                                       const Utility& utility) {
  BatchResult out;
  out.grad = Vec::Zero(policy.param_count());
  out.per_sample.reserve(samples.size());

  RolloutTape tape;
  for (std::size_t s = 0; s < samples.size(); ++s) {
    ObjectiveValue v;
    try {
      v = rollout(samples[s].x0, samples[s].window, params, policy, model, utility, &tape);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.step, e.state, static_cast<int>(s));
    }
    out.grad += gradient(tape, params, policy);
    out.j += v.total;
    out.per_sample.push_back(v.total);
  }
  const double inv = 1.0 / static_cast<double>(samples.size());
  out.j *= inv;
  out.grad *= inv;
  return out;
}

// defined in objective_batch.cpp
BatchResult batch_objective_gemm(const std::vector<BatchSample>& samples, const Vec& params,
                                 const Policy& policy, const DynamicsModel& model,
                                 const Utility& utility);

BatchResult batch_objective_and_gradient(const std::vector<BatchSample>& samples,
                                         const Vec& params, const Policy& policy,
                                         const DynamicsModel& model, const Utility& utility,
                                         bool batched) {
  assert(!samples.empty());
  if (batched) return batch_objective_gemm(samples, params, policy, model, utility);
  return batch_objective_per_sample(samples, params, policy, model, utility);
}

}  // namespace rmpc
