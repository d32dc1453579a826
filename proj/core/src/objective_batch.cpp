#include "rmpc/objective.hpp"
#include "rmpc/policy_batch.hpp"

#include <cassert>
#include <cmath>
#include <vector>

namespace rmpc {

// Lockstep variant of batch_objective_per_sample: every sample is at the
// same rollout step with the same cycle count, so the policy work becomes
// matrix-matrix products over the batch. Dynamics, Jacobians and utility
// stay per sample (they are tiny next to the network).
BatchResult batch_objective_gemm(const std::vector<BatchSample>& samples, const Vec& params,
                                 const Policy& policy, const DynamicsModel& model,
                                 const Utility& utility) {
  const int bsz = static_cast<int>(samples.size());
  const int n = model.state_dim();
  const int m = model.input_dim();
  const int n_steps = static_cast<int>(samples[0].window.size());

  Mat x(n, bsz);
  Mat window(n_steps, bsz);
  for (int s = 0; s < bsz; ++s) {
    assert(samples[s].window.size() == n_steps);
    x.col(s) = samples[s].x0;
    window.col(s) = samples[s].window;
  }

  BatchPolicy batch(policy);

  struct StepData {
    BatchPolicy::Trace trace;
    Mat u;             // m x B
    Mat dl_dx, dl_du;  // n x B, m x B
    std::vector<Mat> a_jac, b_jac;
  };
  std::vector<StepData> steps(n_steps);
  std::vector<double> v(bsz, 0.0);

  Vec dl_dx_s(n), dl_du_s(m);
  for (int i = 1; i <= n_steps; ++i) {
    StepData& sd = steps[i - 1];
    sd.u = batch.forward(params, x, window.middleRows(i - 1, n_steps - i + 1), sd.trace);
    sd.dl_dx.resize(n, bsz);
    sd.dl_du.resize(m, bsz);
    sd.a_jac.resize(bsz);
    sd.b_jac.resize(bsz);
    for (int s = 0; s < bsz; ++s) {
      const Vec u_s = sd.u.col(s);
      Vec x_next = model.step(x.col(s), u_s);
      if (!x_next.allFinite() || x_next.cwiseAbs().maxCoeff() > kDivergenceLimit)
        throw DivergenceError(i, x_next, s);
      const double r = window(i - 1, s);
      const double l = utility.value(x_next, r, u_s);
      if (!std::isfinite(l)) throw DivergenceError(i, x_next, s);
      v[s] += l;
      model.jacobians(x.col(s), u_s, sd.a_jac[s], sd.b_jac[s]);
      utility.partials(x_next, r, u_s, dl_dx_s, dl_du_s);
      sd.dl_dx.col(s) = dl_dx_s;
      sd.dl_du.col(s) = dl_du_s;
      x.col(s) = x_next;
    }
  }

  BatchResult out;
  out.grad = Vec::Zero(policy.param_count());
  out.per_sample = v;
  for (int s = 0; s < bsz; ++s) out.j += v[s];

  Mat adj = steps[n_steps - 1].dl_dx; // dV/dx_i per sample
  Mat g(m, bsz), dx0(n, bsz);
  for (int i = n_steps; i >= 1; --i) {
    const StepData& sd = steps[i - 1];
    for (int s = 0; s < bsz; ++s)
      g.col(s) = sd.dl_du.col(s) + sd.b_jac[s].transpose() * adj.col(s);
    batch.backward(params, sd.trace, g, out.grad, dx0);
    if (i > 1) {
      for (int s = 0; s < bsz; ++s)
        adj.col(s) = sd.a_jac[s].transpose() * adj.col(s) + dx0.col(s) +
                     steps[i - 2].dl_dx.col(s);
    }
  }

  const double inv = 1.0 / static_cast<double>(bsz);
  out.j *= inv;
  out.grad *= inv;
  return out;
}

}  // namespace rmpc
